"""Deliberately broken mechanisms used as negative controls.

Each class violates exactly one property the checkers are supposed to catch;
none of them should ever be used outside tests and the oracle-check suite.
"""

from __future__ import annotations

import numpy as np

from .mechanisms import Mechanism
from .valuations import cursed_value_from_parts, value_from_own_and_stat

__all__ = [
    "RealizedPriceMechanism",
    "LoserSurchargeMechanism",
    "IntervalAllocationMechanism",
]


class RealizedPriceMechanism(Mechanism):
    """Charges the winner the cursed value at the *reported* profile instead of
    at the critical bid; underbidding then lowers the price, breaking
    incentive compatibility."""

    def _winner_payments(self, bids, view, t, ctx):
        v_rep = value_from_own_and_stat(ctx.model, bids, view.stat[:, None])
        mu_rep = ctx.interim.expected_value(bids)
        return cursed_value_from_parts(v_rep, mu_rep, self.chi)


class LoserSurchargeMechanism(Mechanism):
    """Adds a flat 0.01 charge to every loser, violating participation
    rationality for losing bidders."""

    def _compensations(self, view, t, ctx):
        return super()._compensations(view, t, ctx) + 0.01


class IntervalAllocationMechanism(Mechanism):
    """Wins only on a bounded bid interval above the critical bid, so the
    allocation is not monotone in the own report."""

    def __init__(self, rule, chi, payment_policy="compensated", window: float = 0.1):
        super().__init__(rule, chi, payment_policy)
        self.window = window

    def _win(self, bids, t, ctx):
        t_col = t[:, None]
        width = self.window * ctx.s_bar
        return (np.asarray(bids) > t_col) & (np.asarray(bids) < t_col + width)
