"""Symmetric interdependent valuation families and the cursed-value transform.

A valuation maps a full signal profile to the item's worth for bidder i.
Three symmetric families are implemented:

* ``WeightedSum(beta)``:   v_i(s) = s_i + beta * sum_{j != i} s_j
* ``MaxSignal()``:         v_i(s) = max_j s_j
* ``ConcaveSum(l, g, h)``: v_i(s) = l(g(s_i) + sum_{j != i} h(s_j)),
  with g, h strictly increasing and l concave increasing, all drawn from a
  closed catalogue of scalar maps so configurations stay serializable.

A bidder who neglects the correlation between opponents' reports and
opponents' signals values the item at the convex combination

    cursed_value = (1 - chi) * v_i(s) + chi * E[v_i(s_i, others drawn fresh)],

where chi in [0, 1] measures how strongly the bidder ignores that link.  The
interim expectation E[v_i(s_i, ...)] depends only on the bidder's own signal
under i.i.d. signals; ``InterimCache`` precomputes it (closed form where one
exists, deterministic quadrature or inner Monte Carlo otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .reports import CheckReport
from .signals import (
    DiscreteGridIID,
    RandomStream,
    SignalSpace,
    UnsupportedMarginalError,
    sample_profiles,
)

__all__ = [
    "ScalarMap",
    "identity_map",
    "affine_map",
    "power_map",
    "log1p_scaled_map",
    "WeightedSum",
    "MaxSignal",
    "ConcaveSum",
    "ValuationModel",
    "QuadSpec",
    "InterimCache",
    "make_interim_cache",
    "value",
    "others_stat",
    "value_from_own_and_stat",
    "interim_value",
    "cursed_value",
    "cursed_value_from_parts",
    "cursed_virtual_value",
    "check_single_crossing",
    "check_cursedness_monotonicity",
    "value_scale",
    "model_from_config",
]

_MAX_EXACT_ENUM = 300_000


@dataclass(frozen=True)
class ScalarMap:
    """One scalar map from the closed catalogue {identity, affine, power, log1p_scaled}."""

    kind: str
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        if self.kind == "identity":
            if self.params:
                raise ValueError("identity takes no parameters")
        elif self.kind == "affine":
            a, _b = self.params
            if a <= 0:
                raise ValueError("affine slope must be positive")
        elif self.kind == "power":
            (p,) = self.params
            if p <= 0:
                raise ValueError("power exponent must be positive")
        elif self.kind == "log1p_scaled":
            (scale,) = self.params
            if scale <= 0:
                raise ValueError("log1p scale must be positive")
        else:
            raise ValueError(f"unknown scalar map {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x
        if self.kind == "affine":
            a, b = self.params
            return a * x + b
        if self.kind == "power":
            (p,) = self.params
            return np.power(x, p)
        (scale,) = self.params
        return scale * np.log1p(x)

    @property
    def is_concave(self) -> bool:
        if self.kind in ("identity", "affine", "log1p_scaled"):
            return True
        return self.params[0] <= 1.0

    def to_config(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}


def identity_map() -> ScalarMap:
    return ScalarMap("identity")


def affine_map(a: float, b: float = 0.0) -> ScalarMap:
    return ScalarMap("affine", (a, b))


def power_map(p: float) -> ScalarMap:
    return ScalarMap("power", (p,))


def log1p_scaled_map(scale: float = 1.0) -> ScalarMap:
    return ScalarMap("log1p_scaled", (scale,))


@dataclass(frozen=True)
class WeightedSum:
    """v_i(s) = s_i + beta * sum of the others; beta in (0, 1] is the supported class.

    Larger beta is accepted so tests can inject models that violate single
    crossing; the single-crossing checker flags them.
    """

    beta: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    def to_config(self) -> dict:
        return {"family": "weighted_sum", "beta": self.beta}


@dataclass(frozen=True)
class MaxSignal:
    """v_i(s) = max_j s_j (pure common value)."""

    def to_config(self) -> dict:
        return {"family": "max_signal"}


@dataclass(frozen=True)
class ConcaveSum:
    """v_i(s) = l(g(s_i) + sum_{j != i} h(s_j)) with concave increasing l."""

    l: ScalarMap
    g: ScalarMap
    h: ScalarMap

    def __post_init__(self):
        if not self.l.is_concave:
            raise ValueError("outer map l must be concave")

    def to_config(self) -> dict:
        return {
            "family": "concave_sum",
            "l": self.l.to_config(),
            "g": self.g.to_config(),
            "h": self.h.to_config(),
        }


ValuationModel = Union[WeightedSum, MaxSignal, ConcaveSum]


def model_from_config(cfg: dict) -> ValuationModel:
    cfg = dict(cfg)
    family = cfg.pop("family")
    if family == "weighted_sum":
        out = WeightedSum(beta=float(cfg.pop("beta", 1.0)))
    elif family == "max_signal":
        out = MaxSignal()
    elif family == "concave_sum":
        out = ConcaveSum(
            l=_map_from_config(cfg.pop("l")),
            g=_map_from_config(cfg.pop("g")),
            h=_map_from_config(cfg.pop("h")),
        )
    else:
        raise ValueError(f"unknown valuation family {family!r}")
    if cfg:
        raise ValueError(f"unknown model keys: {sorted(cfg)}")
    return out


def _map_from_config(cfg: dict) -> ScalarMap:
    cfg = dict(cfg)
    out = ScalarMap(kind=cfg.pop("kind"), params=tuple(cfg.pop("params", ())))
    if cfg:
        raise ValueError(f"unknown scalar map keys: {sorted(cfg)}")
    return out


# ---------------------------------------------------------------------------
# Evaluation helpers.  The mechanisms module evaluates v(t, s_{-i}) for many
# candidate own-signals t against fixed others, so the others enter only
# through a per-model sufficient statistic.
# ---------------------------------------------------------------------------


def others_stat(model: ValuationModel, others: np.ndarray) -> np.ndarray:
    """Reduce others' signals (last axis) to the statistic v needs."""
    others = np.asarray(others, dtype=float)
    if isinstance(model, WeightedSum):
        return others.sum(axis=-1)
    if isinstance(model, MaxSignal):
        return others.max(axis=-1)
    return model.h(others).sum(axis=-1)


def value_from_own_and_stat(model: ValuationModel, own, stat):
    """v_i given the bidder's own signal and the others' statistic (broadcasts)."""
    own = np.asarray(own, dtype=float)
    stat = np.asarray(stat, dtype=float)
    if isinstance(model, WeightedSum):
        return own + model.beta * stat
    if isinstance(model, MaxSignal):
        return np.maximum(own, stat)
    return model.l(model.g(own) + stat)


def profile_stats(model: ValuationModel, profiles: np.ndarray) -> np.ndarray:
    """others_stat for every agent at once, shape like ``profiles``.

    Avoids materializing per-agent others matrices: for each row, column i
    holds the statistic of the row with entry i removed.
    """
    profiles = np.asarray(profiles, dtype=float)
    if isinstance(model, WeightedSum):
        return profiles.sum(axis=-1, keepdims=True) - profiles
    if isinstance(model, MaxSignal):
        return _max_excluding_self(profiles)
    h_vals = model.h(profiles)
    return h_vals.sum(axis=-1, keepdims=True) - h_vals


def _max_excluding_self(rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(rows)
    top = rows.max(axis=1)
    second = np.partition(rows, rows.shape[1] - 2, axis=1)[:, -2]
    at_top = rows == top[:, None]
    unique_top = at_top.sum(axis=1) == 1
    # only the holder of a unique maximum sees the second-highest signal
    return np.where(at_top & unique_top[:, None], second[:, None], top[:, None])


def value(model: ValuationModel, profile: np.ndarray, i: int):
    """v_i at one profile (shape (n,)) or a batch (shape (N, n))."""
    profile = np.asarray(profile, dtype=float)
    own = profile[..., i]
    others = np.delete(profile, i, axis=-1)
    return value_from_own_and_stat(model, own, others_stat(model, others))


def value_scale(model: ValuationModel, space: SignalSpace) -> float:
    """v at the all-s_bar profile; the natural scale for tolerances."""
    top = np.full(space.n, space.s_bar)
    return float(value(model, top, 0))


# ---------------------------------------------------------------------------
# Interim expectation over others' signals.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadSpec:
    """Resolution of the generic interim-expectation path."""

    grid_points: int = 512
    inner_samples: int = 100_000
    seed: int = 0


@dataclass
class InterimCache:
    """Precomputed s -> E[v(s, fresh others)] for one (space, model) pair.

    Closed forms are used for WeightedSum (any marginal) and MaxSignal; the
    concave-sum family falls back to exact enumeration on small discrete grids
    and otherwise to a fixed-seed inner Monte Carlo tabulated on a dense grid
    with linear interpolation.
    """

    space: SignalSpace
    model: ValuationModel
    quad: QuadSpec
    _mode: str
    _grid_s: Optional[np.ndarray] = None
    _grid_mu: Optional[np.ndarray] = None
    _atoms: Optional[np.ndarray] = None
    _atom_pmf: Optional[np.ndarray] = None
    _stat_samples: Optional[np.ndarray] = None

    def expected_value(self, s):
        """E over fresh others of v(s, others); vectorized in s."""
        s = np.asarray(s, dtype=float)
        model, space = self.model, self.space
        if self._mode == "weighted_sum":
            return s + model.beta * (space.n - 1) * space.mean_signal()
        if self._mode == "max_atoms":
            # exact sum over the distribution of the others' maximum
            return (self._atom_pmf * np.maximum(s[..., None], self._atoms)).sum(axis=-1)
        if self._mode == "max_tail":
            return s + np.interp(s, self._grid_s, self._grid_mu)
        if self._mode == "enum":
            return _chunked_mean_over_stats(model, s, self._stat_samples, None)
        return np.interp(s, self._grid_s, self._grid_mu)

    def export_grid(self) -> tuple:
        """(s grid, mu values) pairs for inspection/CSV export."""
        s = np.linspace(0.0, self.space.s_bar, self.quad.grid_points)
        return s, self.expected_value(s)


def make_interim_cache(
    space: SignalSpace, model: ValuationModel, quad: QuadSpec = QuadSpec()
) -> InterimCache:
    marginal = space.marginal
    k = space.n - 1
    if isinstance(model, WeightedSum):
        return InterimCache(space, model, quad, _mode="weighted_sum")

    if isinstance(model, MaxSignal):
        if isinstance(marginal, DiscreteGridIID):
            atoms = marginal.atoms()
            cdf_atoms = np.arange(1, len(atoms) + 1, dtype=float) / len(atoms)
            cdf_max = cdf_atoms**k
            pmf = np.diff(np.concatenate(([0.0], cdf_max)))
            return InterimCache(space, model, quad, _mode="max_atoms", _atoms=atoms, _atom_pmf=pmf)
        # E[max(s, M)] = s + integral_s^{s_bar} (1 - F(t)^k) dt, tabulated from the top
        fine = np.linspace(0.0, space.s_bar, 8 * quad.grid_points + 1)
        surv = 1.0 - marginal.cdf(fine) ** k
        tail = _reverse_cumtrapz(surv, fine)
        return InterimCache(space, model, quad, _mode="max_tail", _grid_s=fine, _grid_mu=tail)

    # concave-sum
    if isinstance(marginal, DiscreteGridIID) and len(marginal.points) ** k <= _MAX_EXACT_ENUM:
        atoms = model.h(marginal.atoms())
        sums = np.zeros(1)
        for _ in range(k):
            sums = (sums[:, None] + atoms[None, :]).ravel()
        return InterimCache(space, model, quad, _mode="enum", _stat_samples=sums)

    gen = RandomStream(quad.seed).generator()
    u = gen.random((quad.inner_samples, k))
    stats = model.h(marginal.quantile(u)).sum(axis=1)
    grid_s = np.linspace(0.0, space.s_bar, quad.grid_points)
    grid_mu = _chunked_mean_over_stats(model, grid_s, stats, None)
    return InterimCache(space, model, quad, _mode="mc_grid", _grid_s=grid_s, _grid_mu=grid_mu)


def _chunked_mean_over_stats(model: ConcaveSum, s: np.ndarray, stats: np.ndarray, _unused):
    s_flat = np.atleast_1d(s).ravel()
    out = np.empty_like(s_flat)
    chunk = max(1, int(2_000_000 // max(len(stats), 1)))
    g_vals = model.g(s_flat)
    for start in range(0, len(s_flat), chunk):
        stop = min(start + chunk, len(s_flat))
        out[start:stop] = model.l(g_vals[start:stop, None] + stats[None, :]).mean(axis=1)
    return out.reshape(np.shape(s))


def _reverse_cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """integral_x^{x_max} y dt on the grid, by trapezoids accumulated from the top."""
    seg = 0.5 * (y[1:] + y[:-1]) * np.diff(x)
    tail = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
    return tail


def interim_value(cache: InterimCache, s_own):
    """E[v(s_own, fresh others)]; the belief of a fully cursed bidder."""
    return cache.expected_value(s_own)


def cursed_value(cache: InterimCache, chi: float, profile: np.ndarray, i: int):
    """(1 - chi) * v_i(s) + chi * interim value at s_i; chi outside [0, 1] is an error."""
    _check_chi(chi)
    profile = np.asarray(profile, dtype=float)
    v = value(cache.model, profile, i)
    mu = cache.expected_value(profile[..., i])
    return cursed_value_from_parts(v, mu, chi)


def cursed_value_from_parts(v, mu, chi: float):
    """Convex combination written as v + chi*(mu - v) so chi=0 is exact."""
    return v + chi * (np.asarray(mu) - np.asarray(v))


def _check_chi(chi: float):
    if not (0.0 <= chi <= 1.0):
        raise ValueError(f"chi must lie in [0, 1], got {chi}")


def cursed_virtual_value(cache: InterimCache, chi: float, s_own: float, others: np.ndarray):
    """Cursed value minus its own-signal slope times the inverse hazard rate.

    Needs a marginal with a density; derivative is analytic for WeightedSum
    and a central finite difference (one-sided at the support edges) otherwise.
    """
    _check_chi(chi)
    space, model = cache.space, cache.model
    if not space.marginal.has_density:
        raise UnsupportedMarginalError("cursed virtual value needs a density")
    others = np.asarray(others, dtype=float)
    stat = others_stat(model, others)

    def vchi(t):
        return cursed_value_from_parts(
            value_from_own_and_stat(model, t, stat), cache.expected_value(t), chi
        )

    if isinstance(model, WeightedSum):
        deriv = 1.0  # both v and the interim expectation have unit slope in s_i
    else:
        h = 1e-5 * space.s_bar
        lo = max(0.0, s_own - h)
        hi = min(space.s_bar, s_own + h)
        deriv = (vchi(hi) - vchi(lo)) / (hi - lo)
    f = space.marginal.pdf(s_own)
    F = space.marginal.cdf(s_own)
    return vchi(s_own) - deriv * (1.0 - F) / f


# ---------------------------------------------------------------------------
# Structural predicates.
# ---------------------------------------------------------------------------


def check_single_crossing(
    model: ValuationModel,
    space: SignalSpace,
    sample_count: int = 10_000,
    stream: RandomStream = RandomStream(7),
) -> CheckReport:
    """Sampled check that the higher-signal bidder has the weakly higher value."""
    tol = 1e-12 * max(value_scale(model, space), 1.0)
    profiles = sample_profiles(space, stream, sample_count)
    vals = np.stack([value(model, profiles, i) for i in range(space.n)], axis=1)
    worst = 0.0
    witnesses = []
    for i in range(space.n):
        for j in range(space.n):
            if i == j:
                continue
            mask = profiles[:, i] >= profiles[:, j]
            gap = np.where(mask, vals[:, j] - vals[:, i], -np.inf)
            k = int(np.argmax(gap))
            if gap[k] > worst:
                worst = float(gap[k])
                witnesses = [{"profile": profiles[k].tolist(), "pair": [i, j], "margin": worst}]
    return CheckReport(
        name="single_crossing",
        max_violation=max(0.0, worst),
        tolerance=tol,
        samples_checked=sample_count,
        witnesses=witnesses,
    )


def single_crossing_holds(model: ValuationModel, space: SignalSpace) -> bool:
    """Analytic where available, sampled otherwise."""
    if isinstance(model, WeightedSum):
        return model.beta <= 1.0
    if isinstance(model, MaxSignal):
        return True
    # l increasing => single crossing iff g - h is non-decreasing
    grid = np.linspace(0.0, space.s_bar, 4097)
    diff = model.g(grid) - model.h(grid)
    return bool(np.all(np.diff(diff) >= -1e-12))


def check_cursedness_monotonicity(
    cache: InterimCache,
    chi: float,
    sample_count: int = 10_000,
    stream: RandomStream = RandomStream(11),
) -> CheckReport:
    """If overestimation occurs at some winning own-signal, it must persist when
    the others' signals shrink coordinate-wise (any winning own-signal).

    WeightedSum and MaxSignal hold analytically; concave-sum instances are
    decided empirically on sampled profiles and shrunken others.
    """
    if chi <= 0:
        raise ValueError("cursedness monotonicity is only meaningful for chi > 0")
    model, space = cache.model, cache.space
    if isinstance(model, (WeightedSum, MaxSignal)):
        return CheckReport(
            name="cursedness_monotonicity",
            max_violation=0.0,
            tolerance=0.0,
            samples_checked=0,
            note="analytic",
        )

    tol = 1e-12 * max(value_scale(model, space), 1.0)
    gen = stream.generator()
    profiles = sample_profiles(space, stream.child(1), sample_count)
    s_bar = space.s_bar
    own_grid = np.linspace(0.0, s_bar, 33)
    worst = 0.0
    witnesses = []
    checked = 0
    for row in profiles:
        others = row[1:]
        checked += 1
        if not _overestimates_somewhere(cache, others, own_grid, s_bar):
            continue
        for _ in range(8):
            shrunk = others * gen.random(others.shape)
            lo = shrunk.max()
            wins = own_grid[own_grid > lo]
            if wins.size == 0:
                continue
            stat = others_stat(model, shrunk)
            d = value_from_own_and_stat(model, wins, stat) - cache.expected_value(wins)
            k = int(np.argmax(d))
            if d[k] > worst:
                worst = float(d[k])
                witnesses = [
                    {
                        "others": others.tolist(),
                        "shrunk": shrunk.tolist(),
                        "own": float(wins[k]),
                        "margin": worst,
                    }
                ]
    return CheckReport(
        name="cursedness_monotonicity",
        max_violation=max(0.0, worst),
        tolerance=tol,
        samples_checked=checked,
        witnesses=witnesses,
    )


def _overestimates_somewhere(cache, others, own_grid, s_bar) -> bool:
    lo = others.max()
    wins = own_grid[(own_grid > lo) & (own_grid < s_bar)]
    if wins.size == 0:
        return False
    stat = others_stat(cache.model, others)
    d = value_from_own_and_stat(cache.model, wins, stat) - cache.expected_value(wins)
    return bool(np.any(d < 0))
