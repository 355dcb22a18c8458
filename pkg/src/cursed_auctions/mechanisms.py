"""Threshold auction rules, compensated payments, masking, and auction execution.

Every deterministic anonymous incentive-compatible mechanism here is a
threshold mechanism: fixing the others' reports, bidder i wins exactly when
their report strictly exceeds a critical bid t(others) in [max(others), s_bar],
where t = s_bar encodes "never allocate".  Ties at the top never win.

Payments follow the binding identity for cursed bidders.  Writing v for the
true value at the critical bid and m for the interim expectation there, the
winner pays min{v, (1-chi) v + chi m} and every agent additionally receives
the participation compensation min{0, v - ((1-chi) v + chi m)} (zero when the
rule never allocates at those others).  The "zero-transfer" policy drops the
compensation and charges the winner the full cursed value at the threshold;
it is individually rational only in the bidders' own (cursed) estimation.

Masking raises a threshold to the first point where the winner no longer
overestimates the item (true value at the threshold >= interim expectation),
and never allocates if no such point exists below s_bar.  The masked
generalized Vickrey auction applies this to the efficient rule
t(others) = max(others); its compensations vanish identically, which makes it
budget balanced profile by profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .signals import SignalSpace
from .valuations import (
    InterimCache,
    QuadSpec,
    ValuationModel,
    _max_excluding_self,
    cursed_value_from_parts,
    make_interim_cache,
    others_stat,
    profile_stats,
    single_crossing_holds,
    value_from_own_and_stat,
    value_scale,
)

__all__ = [
    "OptSpec",
    "AuctionContext",
    "make_context",
    "OthersView",
    "ThresholdRule",
    "GVARule",
    "RevenueOptimalRule",
    "MaskedRule",
    "ConstantOffsetRule",
    "TabulatedGridRule",
    "Mechanism",
    "Outcome",
    "BatchOutcome",
    "critical_bid",
    "compensation",
    "run",
    "run_batch",
    "agent_outcomes_for_bids",
    "revenue_optimal_rule",
    "mask",
    "masked_gva",
    "threshold_revenue",
    "winner_price_via_identity",
    "ModelUnsupportedError",
    "rule_from_config",
]

_SCAN_POINTS = 512
_BISECT_ITERS = 40
_ROW_CHUNK_FLOATS = 4_000_000


class ModelUnsupportedError(ValueError):
    """Raised when a mechanism's preconditions reject the valuation model."""


@dataclass(frozen=True)
class OptSpec:
    """Grid size and local refinement budget for threshold optimization."""

    grid_size: int = 2048
    refine_iters: int = 60

    def __post_init__(self):
        if self.grid_size < 3 or self.refine_iters < 0:
            raise ValueError("need grid_size >= 3 and refine_iters >= 0")


@dataclass
class AuctionContext:
    """Environment shared by rules and mechanisms: signals, valuations, interim cache."""

    space: SignalSpace
    model: ValuationModel
    interim: InterimCache

    @property
    def s_bar(self) -> float:
        return self.space.s_bar

    def scale(self) -> float:
        return value_scale(self.model, self.space)


def make_context(space: SignalSpace, model: ValuationModel, quad: QuadSpec = QuadSpec()) -> AuctionContext:
    return AuctionContext(space=space, model=model, interim=make_interim_cache(space, model, quad))


class OthersView:
    """Others' reports for one agent, reduced to what rules actually consume.

    Exposes the others' maximum and the model's sufficient statistic; the full
    rows are materialized lazily (only the tabulated oracle-exchange rule
    needs them).
    """

    __slots__ = ("max", "stat", "_rows")

    def __init__(self, max_others: np.ndarray, stat: np.ndarray, rows: Optional[np.ndarray] = None):
        self.max = np.asarray(max_others, dtype=float)
        self.stat = np.asarray(stat, dtype=float)
        self._rows = rows

    @staticmethod
    def from_others(others: np.ndarray, model: ValuationModel) -> "OthersView":
        others = np.atleast_2d(np.asarray(others, dtype=float))
        return OthersView(others.max(axis=1), others_stat(model, others), rows=others)

    @property
    def rows(self) -> np.ndarray:
        if self._rows is None:
            raise ValueError("this rule needs explicit others rows; build the view from_others")
        return self._rows

    def __len__(self) -> int:
        return len(self.max)


class ThresholdRule:
    """Map from others' reports to the critical bid in [max(others), s_bar]."""

    kind = "abstract"

    def critical_bids(self, view: OthersView, ctx: AuctionContext) -> np.ndarray:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


class GVARule(ThresholdRule):
    """Generalized Vickrey auction rule: the critical bid is the others' maximum."""

    kind = "gva"

    def critical_bids(self, view, ctx):
        return view.max.copy()

    def to_config(self):
        return {"kind": "gva"}


@dataclass
class ConstantOffsetRule(ThresholdRule):
    """max(others) + c, capped at s_bar.  A deliberately suboptimal control rule."""

    offset: float

    kind = "constant_offset"

    def __post_init__(self):
        if self.offset < 0:
            raise ValueError("offset must be non-negative")

    def critical_bids(self, view, ctx):
        return np.minimum(view.max + self.offset, ctx.s_bar)

    def to_config(self):
        return {"kind": "constant_offset", "offset": self.offset}


@dataclass
class TabulatedGridRule(ThresholdRule):
    """Thresholds looked up from a table keyed by the sorted others multiset.

    Exchange format with the brute-force oracle on discrete grids.
    """

    entries: dict

    kind = "tabulated"

    def critical_bids(self, view, ctx):
        rows = view.rows
        out = np.empty(len(rows))
        for k, row in enumerate(rows):
            key = tuple(np.round(np.sort(row), 12))
            out[k] = self.entries[key]
        return out

    def to_config(self):
        return {
            "kind": "tabulated",
            "entries": [{"others": list(k), "t": v} for k, v in sorted(self.entries.items())],
        }

    @staticmethod
    def from_pairs(pairs) -> "TabulatedGridRule":
        return TabulatedGridRule(
            entries={tuple(np.round(np.sort(o), 12)): float(t) for o, t in pairs}
        )


@dataclass
class RevenueOptimalRule(ThresholdRule):
    """Per-query maximizer of the seller's threshold revenue.

    With others fixed, a threshold t < s_bar earns
    min{v, v_chi}(t) - v_chi(t) * F(t) in expectation over the bidder's own
    signal and t = s_bar earns 0; the rule grid-scans [max(others), s_bar],
    refines the best bracket by golden section, and tie-breaks to the smallest
    maximizing threshold.
    """

    chi: float
    opt_spec: OptSpec = field(default_factory=OptSpec)

    kind = "revenue_optimal"

    def critical_bids(self, view, ctx):
        return _optimize_thresholds(view, ctx, self.chi, self.opt_spec)

    def to_config(self):
        return {
            "kind": "revenue_optimal",
            "chi": self.chi,
            "grid_size": self.opt_spec.grid_size,
            "refine_iters": self.opt_spec.refine_iters,
        }


@dataclass
class MaskedRule(ThresholdRule):
    """Base rule lifted to the first threshold where winning is curse-free.

    Scans d(t) = v(t, others) - interim(t) from the base threshold to s_bar and
    returns the first sign change refined by bisection (the upper bracket end,
    so d >= 0 holds at the returned threshold); s_bar when d < 0 throughout.
    """

    base: ThresholdRule

    kind = "masked"

    def critical_bids(self, view, ctx):
        base_t = self.base.critical_bids(view, ctx)
        return _mask_thresholds(base_t, view, ctx)

    def to_config(self):
        return {"kind": "masked", "base": self.base.to_config()}


def rule_from_config(cfg: dict) -> ThresholdRule:
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    if kind == "gva":
        out = GVARule()
    elif kind == "constant_offset":
        out = ConstantOffsetRule(offset=float(cfg.pop("offset")))
    elif kind == "revenue_optimal":
        out = RevenueOptimalRule(
            chi=float(cfg.pop("chi")),
            opt_spec=OptSpec(
                grid_size=int(cfg.pop("grid_size", 2048)),
                refine_iters=int(cfg.pop("refine_iters", 60)),
            ),
        )
    elif kind == "masked":
        out = MaskedRule(base=rule_from_config(cfg.pop("base")))
    elif kind == "tabulated":
        out = TabulatedGridRule.from_pairs(
            (e["others"], e["t"]) for e in cfg.pop("entries")
        )
    else:
        raise ValueError(f"unknown rule kind {kind!r}")
    if cfg:
        raise ValueError(f"unknown rule keys: {sorted(cfg)}")
    return out


# ---------------------------------------------------------------------------
# Threshold computations.
# ---------------------------------------------------------------------------


def threshold_revenue(t, view: OthersView, ctx: AuctionContext, chi: float):
    """Expected per-bidder revenue of threshold t against fixed others.

    min{v, v_chi}(t, others) - v_chi(t, others) * F(t); broadcasts t against
    the view. The t = s_bar convention (exact zero) is applied by callers.
    """
    v = value_from_own_and_stat(ctx.model, t, view.stat)
    mu = ctx.interim.expected_value(t)
    vchi = cursed_value_from_parts(v, mu, chi)
    return np.minimum(v, vchi) - vchi * ctx.space.marginal.cdf(t)


def _optimize_thresholds(view, ctx, chi, opt_spec):
    s_bar = ctx.s_bar
    n_rows = len(view)
    out = np.empty(n_rows)
    tie_tol = 1e-12 * max(ctx.scale(), 1.0)
    frac = np.linspace(0.0, 1.0, opt_spec.grid_size)
    chunk = max(1, _ROW_CHUNK_FLOATS // opt_spec.grid_size)
    for start in range(0, n_rows, chunk):
        stop = min(start + chunk, n_rows)
        sub = OthersView(view.max[start:stop], view.stat[start:stop])
        lo = sub.max
        span = s_bar - lo
        t_grid = lo[None, :] + frac[:, None] * span[None, :]
        r = threshold_revenue(t_grid, sub, ctx, chi)
        r[-1, :] = 0.0  # t = s_bar never allocates and earns exactly zero
        k = np.argmax(r, axis=0)
        rows = np.arange(stop - start)
        r_grid_best = r[k, rows]
        t_grid_best = t_grid[k, rows]
        # golden-section refinement on the bracket around the best grid point
        b_lo = t_grid[np.maximum(k - 1, 0), rows]
        b_hi = t_grid[np.minimum(k + 1, opt_spec.grid_size - 1), rows]
        t_ref, r_ref = _golden_max(
            lambda t: threshold_revenue(t, sub, ctx, chi), b_lo, b_hi, opt_spec.refine_iters
        )
        best = np.maximum.reduce([r_grid_best, r_ref, np.zeros_like(r_ref)])
        # smallest maximizing threshold; s_bar only when nothing interior matches
        t_best = np.full(stop - start, s_bar)
        for t_cand, r_cand in ((t_ref, r_ref), (t_grid_best, r_grid_best)):
            take = (r_cand >= best - tie_tol) & (t_cand <= t_best)
            t_best = np.where(take, t_cand, t_best)
        out[start:stop] = np.where(span <= 0.0, s_bar, t_best)
    return out


def _golden_max(f, lo, hi, iters):
    """Vectorized golden-section maximization on per-row brackets [lo, hi].

    One function evaluation per iteration; ties prefer the left (smaller)
    interior point. Returns (argmax estimate, value there) per row.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc = f(c)
    fd = f(d)
    for _ in range(iters):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c_new = np.where(left, hi - invphi * (hi - lo), d)
        d_new = np.where(left, c, lo + invphi * (hi - lo))
        f_eval = f(np.where(left, c_new, d_new))
        fc, fd = np.where(left, f_eval, fd), np.where(left, fc, f_eval)
        c, d = c_new, d_new
    take_c = fc >= fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)


def _mask_thresholds(base_t, view, ctx):
    from .valuations import WeightedSum  # local: avoids widening the module surface

    s_bar = ctx.s_bar
    model = ctx.model

    def curse_gap(t, stat):
        return value_from_own_and_stat(model, t, stat) - ctx.interim.expected_value(t)

    # Rows already curse-free at the base threshold keep it exactly (the scan's
    # first grid point is the base, so this matches the generic path).
    gap_base = curse_gap(base_t, view.stat)
    quick = np.where(gap_base >= 0.0, base_t, s_bar)
    quick = np.where(base_t >= s_bar, s_bar, quick)
    if isinstance(model, WeightedSum):
        # the gap is constant in t for weighted sums: allocate at the base or never
        return quick
    todo = np.where((gap_base < 0.0) & (base_t < s_bar))[0]
    if todo.size == 0:
        return quick
    scan_view = OthersView(view.max[todo], view.stat[todo])
    quick[todo] = _mask_thresholds_scan(base_t[todo], scan_view, ctx, curse_gap)
    return quick


def _mask_thresholds_scan(base_t, view, ctx, curse_gap):
    s_bar = ctx.s_bar
    n_rows = len(view)
    out = np.empty(n_rows)
    frac = np.linspace(0.0, 1.0, _SCAN_POINTS)
    chunk = max(1, _ROW_CHUNK_FLOATS // _SCAN_POINTS)

    for start in range(0, n_rows, chunk):
        stop = min(start + chunk, n_rows)
        base = base_t[start:stop]
        stat = view.stat[start:stop]
        span = np.maximum(s_bar - base, 0.0)
        t_grid = base[None, :] + frac[:, None] * span[None, :]
        gaps = curse_gap(t_grid, stat)
        ok = gaps >= 0.0
        any_ok = ok.any(axis=0)
        first = np.argmax(ok, axis=0)
        res = np.full(stop - start, s_bar)
        # first admissible point is the base threshold itself: keep it exactly
        at_base = any_ok & (first == 0)
        res[at_base] = base[at_base]
        # admissible only where the gap touches zero at s_bar: the infimum is s_bar
        touches_end = any_ok & (first == _SCAN_POINTS - 1) & (gaps[-1, :] <= 0.0)
        inner = any_ok & (first > 0) & ~touches_end
        if inner.any():
            rows = np.where(inner)[0]
            lo = t_grid[first[rows] - 1, rows]
            hi = t_grid[first[rows], rows]
            st = stat[rows]
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                pos = curse_gap(mid, st) >= 0.0
                hi = np.where(pos, mid, hi)
                lo = np.where(pos, lo, mid)
            res[rows] = hi  # upper end: the returned threshold is curse-free
        out[start:stop] = np.where(base >= s_bar, s_bar, res)
    return out


# ---------------------------------------------------------------------------
# Mechanisms.
# ---------------------------------------------------------------------------


class Mechanism:
    """A threshold rule plus a cursedness level and a payment policy.

    payment_policy "compensated" implements the binding individually rational
    payments (winner pays min{v, v_chi} at the threshold, every agent receives
    the non-positive participation constant); "zero-transfer" charges the
    winner the full cursed value at the threshold and pays no compensation.
    """

    def __init__(self, rule: ThresholdRule, chi: float, payment_policy: str = "compensated"):
        if not (0.0 <= chi <= 1.0):
            raise ValueError(f"chi must lie in [0, 1], got {chi}")
        if payment_policy not in ("compensated", "zero-transfer"):
            raise ValueError(f"unknown payment policy {payment_policy!r}")
        self.rule = rule
        self.chi = chi
        self.payment_policy = payment_policy
        self.expect_zero_compensation = False

    def to_config(self) -> dict:
        return {
            "rule": self.rule.to_config(),
            "chi": self.chi,
            "payment_policy": self.payment_policy,
        }

    # --- overridable pieces (negative controls subclass these) ---
    # Contract: bids has shape (N, G) -- G own-report candidates per row of
    # others; view arrays and t have shape (N,).  _win and _winner_payments
    # return (N, G); _compensations returns (N,).

    def _win(self, bids, t, ctx):
        return np.asarray(bids) > t[:, None]

    def _threshold_parts(self, view, t, ctx):
        v_t = value_from_own_and_stat(ctx.model, t, view.stat)
        mu_t = ctx.interim.expected_value(t)
        return v_t, mu_t

    def _compensations(self, view, t, ctx):
        if self.payment_policy == "zero-transfer":
            return np.zeros_like(t)
        v_t, mu_t = self._threshold_parts(view, t, ctx)
        comp = -self.chi * np.maximum(0.0, mu_t - v_t)
        comp = np.where(t >= ctx.s_bar, 0.0, comp) + 0.0  # +0.0 normalizes -0.0
        if self.expect_zero_compensation and np.any(comp != 0.0):
            raise AssertionError("masked mechanism produced a nonzero compensation")
        return comp

    def _winner_payments(self, bids, view, t, ctx):
        v_t, mu_t = self._threshold_parts(view, t, ctx)
        if self.payment_policy == "zero-transfer":
            pay = cursed_value_from_parts(v_t, mu_t, self.chi)
        else:
            pay = v_t + self.chi * np.minimum(0.0, mu_t - v_t)
        return np.broadcast_to(pay[:, None], np.shape(bids))


@dataclass
class Outcome:
    """Result of one auction: at most one winner, payments for everyone."""

    winner: Optional[int]
    payments: np.ndarray
    thresholds: np.ndarray
    compensations: np.ndarray
    threshold_used: float
    welfare: float
    revenue: float


@dataclass
class BatchOutcome:
    """Vectorized outcomes for a batch of profiles."""

    winner: np.ndarray  # (N,) agent index, -1 when no winner
    win: np.ndarray  # (N, n) bool
    payments: np.ndarray  # (N, n)
    thresholds: np.ndarray  # (N, n)
    compensations: np.ndarray  # (N, n)
    welfare: np.ndarray  # (N,)
    revenue: np.ndarray  # (N,)


def run_batch(mech: Mechanism, profiles: np.ndarray, ctx: AuctionContext) -> BatchOutcome:
    """Execute the auction on every row of ``profiles`` (shape (N, n))."""
    profiles = np.atleast_2d(np.asarray(profiles, dtype=float))
    N, n = profiles.shape
    win = np.zeros((N, n), dtype=bool)
    payments = np.empty((N, n))
    thresholds = np.empty((N, n))
    comps = np.empty((N, n))
    welfare = np.zeros(N)

    chunk = max(1, _ROW_CHUNK_FLOATS // max(n, 1))
    for start in range(0, N, chunk):
        stop = min(start + chunk, N)
        rows = profiles[start:stop]
        stats = profile_stats(ctx.model, rows)
        maxo = _max_excluding_self(rows)
        for i in range(n):
            if _needs_rows(mech.rule):
                view = OthersView(maxo[:, i], stats[:, i], rows=np.delete(rows, i, axis=1))
            else:
                view = OthersView(maxo[:, i], stats[:, i])
            t = mech.rule.critical_bids(view, ctx)
            w = mech._win(rows[:, i][:, None], t, ctx)[:, 0]
            comp = mech._compensations(view, t, ctx)
            pay_w = mech._winner_payments(rows[:, i][:, None], view, t, ctx)[:, 0]
            win[start:stop, i] = w
            thresholds[start:stop, i] = t
            comps[start:stop, i] = comp
            payments[start:stop, i] = np.where(w, pay_w, comp)
            if w.any():
                v_true = value_from_own_and_stat(ctx.model, rows[w, i], stats[w, i])
                welfare[start:stop][w] = v_true

    n_winners = win.sum(axis=1)
    if np.any(n_winners > 1):
        raise AssertionError("feasibility violated: more than one winner on a profile")
    winner = np.where(n_winners == 1, np.argmax(win, axis=1), -1)
    revenue = payments.sum(axis=1)
    return BatchOutcome(winner, win, payments, thresholds, comps, welfare, revenue)


def _needs_rows(rule: ThresholdRule) -> bool:
    if isinstance(rule, TabulatedGridRule):
        return True
    if isinstance(rule, MaskedRule):
        return _needs_rows(rule.base)
    return False


def run(mech: Mechanism, profile: np.ndarray, ctx: AuctionContext) -> Outcome:
    """Execute one auction; the winner (if any) holds the unique strict maximum."""
    batch = run_batch(mech, np.asarray(profile, dtype=float)[None, :], ctx)
    winner = int(batch.winner[0]) if batch.winner[0] >= 0 else None
    top = int(np.argmax(profile))
    return Outcome(
        winner=winner,
        payments=batch.payments[0],
        thresholds=batch.thresholds[0],
        compensations=batch.compensations[0],
        threshold_used=float(batch.thresholds[0, top]),
        welfare=float(batch.welfare[0]),
        revenue=float(batch.revenue[0]),
    )


def agent_outcomes_for_bids(
    mech: Mechanism, i: int, profiles: np.ndarray, bids: np.ndarray, ctx: AuctionContext
):
    """Allocation and payment of agent i for a grid of own reports.

    ``bids`` has shape (N, G) (or (G,), shared across rows); everyone else
    reports truthfully, so agent i's critical bid, compensation, and
    threshold-based price are fixed per row while the win indicator and any
    report-dependent (broken) pricing vary across the grid.
    Returns (win (N, G), payments (N, G), thresholds (N,), compensations (N,)).
    """
    profiles = np.atleast_2d(np.asarray(profiles, dtype=float))
    others = np.delete(profiles, i, axis=1)
    view = OthersView.from_others(others, ctx.model)
    t = mech.rule.critical_bids(view, ctx)
    comp = mech._compensations(view, t, ctx)
    bids = np.asarray(bids, dtype=float)
    if bids.ndim == 1:
        bids = np.broadcast_to(bids[None, :], (len(profiles), len(bids)))
    w = mech._win(bids, t, ctx)
    pay_w = mech._winner_payments(bids, view, t, ctx)
    payments = np.where(w, pay_w, comp[:, None])
    return w, payments, t, comp


def critical_bid(rule: ThresholdRule, others: np.ndarray, ctx: AuctionContext) -> float:
    """Critical bid against one others-profile; always in [max(others), s_bar]."""
    view = OthersView.from_others(np.asarray(others, dtype=float)[None, :], ctx.model)
    return float(rule.critical_bids(view, ctx)[0])


def compensation(mech: Mechanism, others: np.ndarray, ctx: AuctionContext) -> float:
    """The non-positive participation constant paid to an agent at these others."""
    view = OthersView.from_others(np.asarray(others, dtype=float)[None, :], ctx.model)
    t = mech.rule.critical_bids(view, ctx)
    return float(mech._compensations(view, t, ctx)[0])


def winner_price_via_identity(mech: Mechanism, others: np.ndarray, ctx: AuctionContext) -> float:
    """Winner price recomputed through the payment identity (cursed value at the
    threshold plus the participation constant); must agree with the direct
    min-rule price."""
    view = OthersView.from_others(np.asarray(others, dtype=float)[None, :], ctx.model)
    t = mech.rule.critical_bids(view, ctx)
    v_t = value_from_own_and_stat(ctx.model, t, view.stat)
    mu_t = ctx.interim.expected_value(t)
    vchi_t = cursed_value_from_parts(v_t, mu_t, mech.chi)
    comp = mech._compensations(view, t, ctx)
    return float((vchi_t + comp)[0])


def revenue_optimal_rule(ctx: AuctionContext, chi: float, opt_spec: OptSpec = OptSpec()) -> RevenueOptimalRule:
    """The revenue-maximizing deterministic anonymous threshold rule."""
    if not (0.0 <= chi <= 1.0):
        raise ValueError(f"chi must lie in [0, 1], got {chi}")
    return RevenueOptimalRule(chi=chi, opt_spec=opt_spec)


def mask(rule: ThresholdRule, ctx: AuctionContext) -> MaskedRule:
    """Lift a rule to its curse-free masking (see MaskedRule)."""
    if ctx.interim is None:
        raise ValueError("masking needs an interim cache in the context")
    return MaskedRule(base=rule)


def masked_gva(ctx: AuctionContext, chi: float) -> Mechanism:
    """Masked generalized Vickrey auction: the welfare-optimal budget-balanced mechanism.

    At chi = 0 the mask is vacuous (no compensation is ever owed), so the
    plain efficient rule is used; for chi > 0 compensations are provably zero
    and asserted at run time.
    """
    if not single_crossing_holds(ctx.model, ctx.space):
        raise ModelUnsupportedError("model fails single crossing; efficient rule undefined")
    if chi == 0.0:
        mech = Mechanism(GVARule(), 0.0, "compensated")
    else:
        mech = Mechanism(MaskedRule(GVARule()), chi, "compensated")
        mech.expect_zero_compensation = True
    return mech
