"""Account-based chain state and its transition rules.

Balances, staked entries, and per-account service history live here.
Applying a transaction or block is a pure function: the input state is
never touched and a failing block leaves nothing behind, which makes
atomicity trivial.

Currency amounts are held as exact dyadic rationals (every float is one)
rather than floats. Fee formulas still produce doubles, but once a value
enters the ledger all arithmetic is exact, so conservation checks hold
to the last bit no matter how many blocks have been applied.

Fee and staking rules applied by a service transaction:

* first service transaction of an identity additionally pays the
  entrance fee for the current height, staked for 4x the normal lock;
* the upload fee (activity-scaled) is staked for the normal lock;
* the miner wage is paid to the including miner immediately;
* staked entries return to their owner once their release height is
  reached (boundary inclusive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple

from .activity import ActivityParams, ServiceRecord, total_activity
from .fees import FeeSchedule, entrance_fee, upload_fee
from .models import SERVICE, TRANSFER, Block, Transaction

__all__ = [
    "LedgerError",
    "UnknownSender",
    "BadNonce",
    "InsufficientBalance",
    "WorthCapExceeded",
    "StakeEntry",
    "AccountState",
    "ChainState",
    "new_state",
    "quote_service_fees",
    "apply_transaction",
    "release_matured_stakes",
    "apply_block",
]


class LedgerError(Exception):
    """A transaction or block that cannot be applied."""


class UnknownSender(LedgerError):
    pass


class BadNonce(LedgerError):
    pass


class InsufficientBalance(LedgerError):
    pass


class WorthCapExceeded(LedgerError):
    pass


class StakeEntry(NamedTuple):
    amount: Fraction
    release_height: int


@dataclass
class AccountState:
    """Balance, outstanding stakes, service history, and entry flag of
    one account. ``next_nonce`` is the sequence number the account's
    next transaction must carry."""

    balance: Fraction = Fraction(0)
    next_nonce: int = 0
    entered: bool = False
    stakes: list[StakeEntry] = field(default_factory=list)
    service_history: list[ServiceRecord] = field(default_factory=list)

    def copy(self) -> "AccountState":
        return AccountState(
            balance=self.balance,
            next_nonce=self.next_nonce,
            entered=self.entered,
            stakes=list(self.stakes),
            service_history=list(self.service_history),
        )

    def staked_total(self) -> Fraction:
        return sum((entry.amount for entry in self.stakes), Fraction(0))


@dataclass
class ChainState:
    """All accounts plus chain height and the staked-total accumulator.

    ``total_staked`` is maintained incrementally and always equals the
    exact sum of every outstanding stake entry.
    """

    accounts: dict[str, AccountState] = field(default_factory=dict)
    height: int = 0
    total_staked: Fraction = Fraction(0)

    def copy(self) -> "ChainState":
        return ChainState(
            accounts={name: acct.copy() for name, acct in self.accounts.items()},
            height=self.height,
            total_staked=self.total_staked,
        )

    def total_balance(self) -> Fraction:
        return sum((acct.balance for acct in self.accounts.values()), Fraction(0))

    def account(self, name: str) -> AccountState:
        """Existing account, or a raise for unknown names."""
        try:
            return self.accounts[name]
        except KeyError:
            raise UnknownSender(f"unknown sender {name!r}") from None

    def _credit(self, name: str, amount: Fraction) -> None:
        acct = self.accounts.get(name)
        if acct is None:
            acct = AccountState()
            self.accounts[name] = acct
        acct.balance += amount


def new_state(initial_balances: Mapping[str, float] | None = None) -> ChainState:
    """Genesis state at height 0 with the given funded accounts."""
    state = ChainState()
    for name, balance in (initial_balances or {}).items():
        if not (math.isfinite(balance) and balance >= 0):
            raise ValueError(f"initial balance for {name!r} must be >= 0, got {balance!r}")
        state.accounts[name] = AccountState(balance=Fraction(balance))
    return state


def quote_service_fees(
    state: ChainState,
    sender: str,
    worth: float,
    height: int,
    activity: ActivityParams,
    fees: FeeSchedule,
) -> tuple[Fraction, Fraction, float]:
    """Fees a service transaction would pay right now.

    Returns (entrance, upload, psi): the entrance-fee component (zero if
    the sender has already entered), the activity-scaled upload fee, and
    the sender's total activity at the evaluation height. Both fee
    components are exact rationals of the float closed forms.
    """
    acct = state.account(sender)
    psi = total_activity(acct.service_history, height, activity)
    entrance = Fraction(0)
    if not acct.entered:
        entrance = Fraction(entrance_fee(height, fees))
    upload = Fraction(upload_fee(worth, psi, fees))
    return entrance, upload, psi


def _stake(state: ChainState, acct: AccountState, amount: Fraction, release_height: int) -> None:
    if amount == 0:
        return  # zero-amount stakes are never created
    acct.stakes.append(StakeEntry(amount, release_height))
    state.total_staked += amount


def _apply_tx(
    state: ChainState,
    tx: Transaction,
    miner: str,
    height: int,
    activity: ActivityParams,
    fees: FeeSchedule,
) -> None:
    """Apply one transaction by mutating ``state`` in place."""
    sender = state.account(tx.sender)
    if tx.nonce != sender.next_nonce:
        raise BadNonce(
            f"{tx.sender!r} expected nonce {sender.next_nonce}, got {tx.nonce}"
        )
    wage = Fraction(tx.miner_wage)

    if tx.kind == TRANSFER:
        amount = Fraction(tx.amount)
        if sender.balance < amount + wage:
            raise InsufficientBalance(
                f"{tx.sender!r} balance {float(sender.balance)!r} cannot cover "
                f"transfer {tx.amount!r} plus wage {tx.miner_wage!r}"
            )
        sender.balance -= amount + wage
        sender.next_nonce += 1
        state._credit(tx.receiver, amount)
    else:
        if tx.worth > fees.max_block_worth:
            raise WorthCapExceeded(
                f"worth {tx.worth!r} exceeds per-block cap {fees.max_block_worth!r}"
            )
        entrance, upload, _ = quote_service_fees(
            state, tx.sender, tx.worth, height, activity, fees
        )
        total = entrance + upload + wage
        if sender.balance < total:
            raise InsufficientBalance(
                f"{tx.sender!r} balance {float(sender.balance)!r} cannot cover "
                f"service fees {float(total)!r}"
            )
        sender.balance -= total
        sender.next_nonce += 1
        sender.entered = True
        _stake(state, sender, entrance, height + fees.entrance_lock_blocks)
        _stake(state, sender, upload, height + fees.stake_lock_blocks)
        sender.service_history.append(
            ServiceRecord(worth=tx.worth, inclusion_height=height, owner=tx.sender)
        )

    if wage:
        state._credit(miner, wage)


def apply_transaction(
    state: ChainState,
    tx: Transaction,
    miner: str,
    height: int,
    activity: ActivityParams,
    fees: FeeSchedule,
) -> ChainState:
    """New state with ``tx`` applied at ``height``; ``state`` is untouched."""
    result = state.copy()
    _apply_tx(result, tx, miner, height, activity, fees)
    return result


def _release(state: ChainState, height: int) -> None:
    for acct in state.accounts.values():
        if not acct.stakes:
            continue
        kept: list[StakeEntry] = []
        for entry in acct.stakes:
            if entry.release_height <= height:
                acct.balance += entry.amount
                state.total_staked -= entry.amount
            else:
                kept.append(entry)
        acct.stakes = kept


def release_matured_stakes(state: ChainState, height: int) -> ChainState:
    """New state with every stake due at ``height`` or earlier credited
    back to its owner."""
    if height < state.height:
        raise ValueError(f"release height {height} is behind state height {state.height}")
    result = state.copy()
    _release(result, height)
    return result


def apply_block(
    state: ChainState,
    block: Block,
    activity: ActivityParams,
    fees: FeeSchedule,
) -> ChainState:
    """New state with the whole block applied, or a LedgerError.

    Transactions apply in order at the block's height, then matured
    stakes release, then the block reward goes to the miner and the
    height advances. Any failure rejects the entire block; the input
    state is never modified.
    """
    height = state.height + 1
    if block.header.height != height:
        raise LedgerError(
            f"block height {block.header.height} does not follow state height {state.height}"
        )
    block_worth = math.fsum(
        tx.worth for tx in block.transactions if tx.kind == SERVICE
    )
    if block_worth > fees.max_block_worth:
        raise WorthCapExceeded(
            f"block service worth {block_worth!r} exceeds cap {fees.max_block_worth!r}"
        )

    result = state.copy()
    for tx in block.transactions:
        _apply_tx(result, tx, block.header.miner, height, activity, fees)
    _release(result, height)
    if fees.block_reward:
        result._credit(block.header.miner, Fraction(fees.block_reward))
    result.height = height
    return result
