"""Closed-form activity accounting.

Users accrue activity from the service transactions they have made. Each
transaction contributes a weight that decays as the transaction ages and
grows, with saturation, in the transaction's worth. A user's total
activity is 1 plus the sum of per-transaction contributions, so an
account with no history sits at the floor of 1.

The two ingredient curves:

* the time factor ``(T / (p + T)) ** r`` equals 1 for a brand-new
  transaction and decays toward 0 as the elapsed period ``p`` grows;
* the worth factor ``chi * w / (w + L / chi)`` equals 0 for a worthless
  transaction and saturates toward the cap ``chi`` as worth grows.

Elapsed periods are measured in block heights, never wall-clock time, so
every node derives identical activity values from chain state alone.
All functions here are pure and side-effect free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

__all__ = [
    "ActivityParams",
    "ServiceRecord",
    "time_factor",
    "worth_factor",
    "tx_activity",
    "total_activity",
]


@dataclass(frozen=True)
class ActivityParams:
    """Constants shaping the activity curves. All must be strictly positive.

    time_scale: blocks over which the time factor halves (at decay_exponent 1).
    decay_exponent: sharpness of the time decay.
    worth_cap: supremum of the worth factor; caps per-transaction activity.
    worth_scale: worth units over which the worth factor ramps up.
    activity_scale: overall multiplier on per-transaction activity.
    """

    time_scale: float = 1000.0
    decay_exponent: float = 1.0
    worth_cap: float = 10.0
    worth_scale: float = 100.0
    activity_scale: float = 1.0

    def __post_init__(self) -> None:
        for name in (
            "time_scale",
            "decay_exponent",
            "worth_cap",
            "worth_scale",
            "activity_scale",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"activity.{name} must be strictly positive, got {value!r}")

    @property
    def max_tx_activity(self) -> float:
        """Supremum of a single transaction's activity (approached, never attained)."""
        return self.activity_scale * self.worth_cap


@dataclass(frozen=True)
class ServiceRecord:
    """A service transaction as remembered by the chain.

    Holds the transaction's worth, the height of the block that included
    it, and the account whose activity it feeds.
    """

    worth: float
    inclusion_height: int
    owner: str

    def __post_init__(self) -> None:
        if not (math.isfinite(self.worth) and self.worth >= 0):
            raise ValueError(f"service record worth must be >= 0, got {self.worth!r}")
        if self.inclusion_height < 0:
            raise ValueError(
                f"inclusion_height must be >= 0, got {self.inclusion_height!r}"
            )


def time_factor(elapsed: float, params: ActivityParams) -> float:
    """Decay weight of a transaction that is ``elapsed`` blocks old.

    Equals 1 at elapsed 0, is strictly decreasing, and tends to 0 as the
    transaction ages. Rejects negative elapsed periods.
    """
    if elapsed < 0:
        raise ValueError(f"elapsed period must be >= 0, got {elapsed!r}")
    t = params.time_scale
    return (t / (elapsed + t)) ** params.decay_exponent


def worth_factor(worth: float, params: ActivityParams) -> float:
    """Saturating weight of a transaction of the given worth.

    Equals 0 at worth 0, is strictly increasing, and approaches (but
    never reaches) ``params.worth_cap``. Rejects negative worth.
    """
    if worth < 0:
        raise ValueError(f"worth must be >= 0, got {worth!r}")
    chi = params.worth_cap
    return -params.worth_scale / (worth + params.worth_scale / chi) + chi


def tx_activity(elapsed: float, worth: float, params: ActivityParams) -> float:
    """Activity contributed by one service transaction of age ``elapsed``
    and worth ``worth``: the scaled product of the time and worth factors.
    Bounded above by ``params.max_tx_activity``.
    """
    return params.activity_scale * time_factor(elapsed, params) * worth_factor(worth, params)


def total_activity(
    history: Iterable[ServiceRecord],
    current_height: int,
    params: ActivityParams,
) -> float:
    """Total activity of an account, evaluated at ``current_height``.

    Base value 1 plus the contribution of every record in ``history``,
    each aged by ``current_height - inclusion_height``. Rejects records
    from the future (inclusion height beyond the evaluation height).
    """
    contributions = []
    for record in history:
        if record.inclusion_height > current_height:
            raise ValueError(
                f"record at height {record.inclusion_height} is in the future "
                f"of evaluation height {current_height}"
            )
        contributions.append(
            tx_activity(current_height - record.inclusion_height, record.worth, params)
        )
    return 1.0 + math.fsum(contributions)
