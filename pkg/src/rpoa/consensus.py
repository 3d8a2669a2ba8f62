"""Mining inequality, difficulty retargeting, header validation, fork choice.

A header is minable when its hash, read as a big-endian unsigned
integer, is at most

    floor(2**(hash_bits - 1) * eta * psi)

clamped to the hash space. ``psi`` is the miner's total activity, so
active users face an easier puzzle, linearly. ``eta`` is the difficulty
factor: it starts at 1 (making 2**(hash_bits-1) the network's low
starter threshold) and is steered so the observed mean block interval
tracks the target.

Retargeting detail: the raw window ratio mean(intervals) / target says
in which direction and by how much the threshold is off, but applying
the full ratio on every block would count each deviation once per
window it appears in and oscillate. The tracker therefore multiplies
eta by the window ratio raised to 1/window each block, which converges
to the target interval for any hash rate and activity level and stays
there.

The threshold product is evaluated in exact rational arithmetic before
flooring, so two machines can never disagree on the integer threshold.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .activity import ActivityParams, total_activity
from .ledger import ChainState
from .models import BlockHeader, header_hash

__all__ = [
    "ChainParams",
    "DifficultyState",
    "HeaderError",
    "difficulty_factor",
    "mining_threshold",
    "check_pow",
    "validate_header",
    "mine_header",
    "cumulative_work",
    "Tip",
    "fork_choice",
]

TIMESTAMP_MEDIAN_WINDOW = 11


@dataclass(frozen=True)
class ChainParams:
    """Consensus constants: hash width in bits, target seconds between
    blocks, and the retarget window in blocks."""

    hash_bits: int = 256
    target_interval: float = 10.0
    retarget_window: int = 20

    def __post_init__(self) -> None:
        if self.hash_bits < 64 or self.hash_bits % 8 != 0 or self.hash_bits > 256:
            raise ValueError(
                f"chain.hash_bits must be a multiple of 8 in [64, 256], got {self.hash_bits!r}"
            )
        if not (math.isfinite(self.target_interval) and self.target_interval > 0):
            raise ValueError(
                f"chain.target_interval must be > 0, got {self.target_interval!r}"
            )
        if self.retarget_window < 1:
            raise ValueError(
                f"chain.retarget_window must be >= 1, got {self.retarget_window!r}"
            )

    @property
    def max_threshold(self) -> int:
        """All-ones value of the hash space; thresholds clamp here."""
        return (1 << self.hash_bits) - 1

    @property
    def digest_size(self) -> int:
        return self.hash_bits // 8

    @property
    def base_threshold(self) -> int:
        """Starter threshold at eta 1 and the activity floor of 1."""
        return 1 << (self.hash_bits - 1)


class HeaderError(Exception):
    """Header rejected; ``code`` names the failed check."""

    LINKAGE = "linkage"
    HEIGHT = "height"
    TIMESTAMP = "timestamp"
    PSI_MISMATCH = "psi-mismatch"
    POW = "pow"

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def difficulty_factor(recent_intervals: Sequence[float], target_interval: float) -> float:
    """Ratio of the observed mean inter-block time to the target.

    Above 1 means blocks arrive too slowly (the threshold should rise,
    easing the puzzle); below 1 the opposite. With no intervals yet the
    bootstrap convention is 1.
    """
    if not (math.isfinite(target_interval) and target_interval > 0):
        raise ValueError(f"target interval must be > 0, got {target_interval!r}")
    if not recent_intervals:
        return 1.0
    return statistics.fmean(recent_intervals) / target_interval


@dataclass
class DifficultyState:
    """Rolling retarget tracker.

    ``recent_intervals`` holds the last ``retarget_window`` inter-block
    times; ``eta`` is the accumulated difficulty factor applied to the
    mining threshold. Until a full window of intervals exists, eta stays
    at the bootstrap value of 1.
    """

    recent_intervals: list[float] = field(default_factory=list)
    eta: float = 1.0

    def copy(self) -> "DifficultyState":
        return DifficultyState(recent_intervals=list(self.recent_intervals), eta=self.eta)

    def observe(self, interval: float, params: ChainParams) -> None:
        """Record one inter-block time and retarget.

        Intervals are floored at one millisecond (the timestamp
        resolution) so a degenerate burst cannot zero the window mean.
        """
        window = params.retarget_window
        self.recent_intervals.append(max(interval, 0.001))
        if len(self.recent_intervals) > window:
            del self.recent_intervals[: len(self.recent_intervals) - window]
        if len(self.recent_intervals) == window:
            ratio = difficulty_factor(self.recent_intervals, params.target_interval)
            self.eta *= ratio ** (1.0 / window)


def mining_threshold(eta: float, psi: float, params: ChainParams) -> int:
    """Integer threshold the header hash must not exceed.

    floor(base_threshold * eta * psi), clamped to the hash space. The
    product is computed exactly (floats are rationals) before flooring,
    so the result is bit-reproducible.
    """
    if not (math.isfinite(eta) and eta > 0):
        raise ValueError(f"eta must be > 0, got {eta!r}")
    if not (math.isfinite(psi) and psi >= 1.0):
        raise ValueError(f"activity must be >= 1, got {psi!r}")
    exact = Fraction(params.base_threshold) * Fraction(eta) * Fraction(psi)
    return min(math.floor(exact), params.max_threshold)


def check_pow(header_digest: bytes, threshold: int) -> bool:
    """True when the digest, as a big-endian unsigned integer, is at or
    below the threshold (the inequality is inclusive)."""
    return int.from_bytes(header_digest, "big") <= threshold


def validate_header(
    parent_state: ChainState,
    parent_diff: DifficultyState,
    header: BlockHeader,
    params: ChainParams,
    activity: ActivityParams,
    *,
    parent_hash: bytes,
    recent_timestamps: Sequence[float],
) -> None:
    """Full header check against the parent chain, raising HeaderError
    with a distinct code on the first failed rule.

    ``recent_timestamps`` are the timestamps of the last blocks up to
    and including the parent; the new timestamp must exceed the median
    of the last 11 (or fewer, early on). The miner's activity is
    recomputed from parent chain state at the new height and must match
    the header's claim exactly; the threshold then derives from the
    recomputed value, never the claim.
    """
    if header.parent_hash != parent_hash:
        raise HeaderError(HeaderError.LINKAGE, "parent hash does not match chain tip")
    if header.height != parent_state.height + 1:
        raise HeaderError(
            HeaderError.HEIGHT,
            f"height {header.height} does not follow parent height {parent_state.height}",
        )
    if recent_timestamps:
        floor_ts = statistics.median(recent_timestamps[-TIMESTAMP_MEDIAN_WINDOW:])
        if not header.timestamp > floor_ts:
            raise HeaderError(
                HeaderError.TIMESTAMP,
                f"timestamp {header.timestamp} not above recent median {floor_ts}",
            )
    miner_acct = parent_state.accounts.get(header.miner)
    history = miner_acct.service_history if miner_acct is not None else []
    psi = total_activity(history, header.height, activity)
    if psi != header.psi_claimed:
        raise HeaderError(
            HeaderError.PSI_MISMATCH,
            f"claimed activity {header.psi_claimed!r}, chain state gives {psi!r}",
        )
    threshold = mining_threshold(parent_diff.eta, psi, params)
    if not check_pow(header_hash(header, params.hash_bits), threshold):
        raise HeaderError(HeaderError.POW, "header hash exceeds the mining threshold")


def mine_header(
    template: BlockHeader,
    threshold: int,
    params: ChainParams,
    *,
    max_tries: int = 1 << 24,
    start_nonce: int = 0,
) -> BlockHeader | None:
    """Search nonces until the header hash satisfies the threshold.

    Returns the solved header, or None when ``max_tries`` nonces were
    exhausted. Deterministic: nonces are tried in ascending order.
    """
    for nonce in range(start_nonce, start_nonce + max_tries):
        candidate = BlockHeader(
            parent_hash=template.parent_hash,
            body_hash=template.body_hash,
            height=template.height,
            timestamp=template.timestamp,
            miner=template.miner,
            psi_claimed=template.psi_claimed,
            nonce=nonce,
        )
        if check_pow(header_hash(candidate, params.hash_bits), threshold):
            return candidate
    return None


def expected_hashes(threshold: int, params: ChainParams) -> float:
    """Expected number of hash evaluations to solve one block at the
    given threshold: the fork-choice weight of that block."""
    return (1 << params.hash_bits) / max(threshold, 1)


def cumulative_work(
    chain: Sequence[tuple[BlockHeader, int]],
    params: ChainParams,
) -> float:
    """Total expected hashes over a well-linked run of (header,
    threshold) pairs. Raises ValueError on broken linkage."""
    work = 0.0
    previous: BlockHeader | None = None
    for header, threshold in chain:
        if previous is not None:
            if header.parent_hash != header_hash(previous, params.hash_bits):
                raise ValueError(f"broken linkage at height {header.height}")
            if header.height != previous.height + 1:
                raise ValueError(f"non-consecutive height {header.height}")
        work += expected_hashes(threshold, params)
        previous = header
    return work


class Tip(NamedTuple):
    """A candidate chain head: its hash and total expected work."""

    hash: bytes
    work: float


def fork_choice(tips: Iterable[Tip]) -> Tip:
    """The canonical tip: maximal cumulative work, ties broken by the
    lexicographically smaller hash. Deterministic across runs."""
    best: Tip | None = None
    for tip in tips:
        if best is None or tip.work > best.work or (tip.work == best.work and tip.hash < best.hash):
            best = tip
    if best is None:
        raise ValueError("fork choice over an empty tip set")
    return best
