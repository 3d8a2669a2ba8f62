"""Fee schedules: entrance fee, base service fee, and net upload fee.

Three closed forms govern what a user pays:

* entrance fee, charged once per identity with its first service
  transaction, grows with the square root of chain height, so joining
  late (or joining many times under fake identities) costs more;
* base service fee is linear in the transaction's worth, normalised by
  the per-block worth cap;
* upload fee multiplies the base fee by the payer's own total activity,
  so the more activity an account has accumulated, the more it pays to
  accumulate further.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["FeeSchedule", "entrance_fee", "base_service_fee", "upload_fee"]


@dataclass(frozen=True)
class FeeSchedule:
    """Protocol fee constants.

    entrance_base: currency multiplier on sqrt(height) for the one-time
        entrance fee.
    service_base: currency charged for a service transaction at the
        per-block worth cap.
    max_block_worth: cap on summed service-transaction worth per block;
        also the normaliser of the base service fee.
    upload_base: dimensionless multiplier applied on top of the base fee
        and the payer's activity.
    stake_lock_blocks: blocks a staked upload fee stays locked; the
        entrance fee stays locked four times as long.
    block_reward: currency created per block, paid to the miner.
    """

    entrance_base: float = 10.0
    service_base: float = 1.0
    max_block_worth: float = 1000.0
    upload_base: float = 2.0
    stake_lock_blocks: int = 100
    block_reward: float = 50.0

    def __post_init__(self) -> None:
        for name in ("entrance_base", "service_base", "max_block_worth", "upload_base"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"fees.{name} must be strictly positive, got {value!r}")
        if self.stake_lock_blocks < 1:
            raise ValueError(
                f"fees.stake_lock_blocks must be >= 1, got {self.stake_lock_blocks!r}"
            )
        if not (math.isfinite(self.block_reward) and self.block_reward >= 0):
            raise ValueError(f"fees.block_reward must be >= 0, got {self.block_reward!r}")

    @property
    def entrance_lock_blocks(self) -> int:
        """Lock period of a staked entrance fee (4x the service lock)."""
        return 4 * self.stake_lock_blocks


def entrance_fee(height: int, sched: FeeSchedule) -> float:
    """One-time fee for an identity entering at chain height ``height``.

    ``entrance_base * sqrt(height)``; weakly increasing in height, zero
    at genesis. Rejects negative heights.
    """
    if height < 0:
        raise ValueError(f"height must be >= 0, got {height!r}")
    return sched.entrance_base * math.sqrt(height)


def base_service_fee(worth: float, sched: FeeSchedule) -> float:
    """Base fee for a service transaction of the given worth.

    Linear from 0 at zero worth to ``service_base`` at the per-block
    worth cap. Worth above the cap is rejected outright: such a
    transaction can never fit a block.
    """
    if worth < 0:
        raise ValueError(f"worth must be >= 0, got {worth!r}")
    if worth > sched.max_block_worth:
        raise ValueError(
            f"worth {worth!r} exceeds per-block cap {sched.max_block_worth!r}"
        )
    return sched.service_base * worth / sched.max_block_worth


def upload_fee(worth: float, psi: float, sched: FeeSchedule) -> float:
    """Net fee payable for a service transaction by a user with total
    activity ``psi``: ``upload_base * base_service_fee(worth) * psi``.

    Strictly increasing in both arguments (for positive worth), so
    accumulating activity makes further accumulation more expensive.
    ``psi`` below the activity floor of 1 is rejected.
    """
    if not psi >= 1.0:
        raise ValueError(f"activity must be >= 1 (the floor value), got {psi!r}")
    return sched.upload_base * base_service_fee(worth, sched) * psi
