"""Monte Carlo estimation of auction metrics, cursedness sweeps, and the
two-bidder wallet-game demonstration.

Estimates are deterministic in (seed, sample count): profiles are drawn in
fixed-size chunks from counter-based streams and reduced in chunk order, so
the result does not depend on how many workers processed the chunks.
Cursedness sweeps reuse the identical draws for every chi (common random
numbers); with a fixed rule this turns the pointwise payment monotonicity in
chi into an exact, assertion-grade comparison of the sweep means.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .mechanisms import AuctionContext, Mechanism, run_batch
from .signals import GenericIID, RandomStream, SignalSpace, UniformIID, sample_profiles
from .valuations import (
    ConcaveSum,
    WeightedSum,
    cursed_value_from_parts,
    profile_stats,
    single_crossing_holds,
    value_from_own_and_stat,
)

__all__ = [
    "EstimateReport",
    "METRICS",
    "estimate",
    "estimate_many",
    "optimal_welfare",
    "chi_sweep",
    "event_probability",
    "wallet_report",
    "write_outcomes_csv",
    "write_estimates_csv",
    "write_interim_grid_csv",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1

METRICS = (
    "revenue",
    "welfare",
    "transfers_out",
    "allocation_prob",
    "virtual_surplus",
    "compensation_out",
)


@dataclass(frozen=True)
class EstimateReport:
    """A Monte Carlo mean with its standard error and 95% normal interval."""

    metric: str
    mean: float
    standard_error: float
    sample_count: int
    seed: int
    confidence_interval_95: tuple

    @staticmethod
    def from_moments(metric: str, total: float, total_sq: float, count: int, seed: int) -> "EstimateReport":
        mean = total / count if count else 0.0
        if count > 1:
            var = max(0.0, (total_sq - count * mean * mean) / (count - 1))
            se = math.sqrt(var / count)
        else:
            se = 0.0
        return EstimateReport(
            metric=metric,
            mean=mean,
            standard_error=se,
            sample_count=count,
            seed=seed,
            confidence_interval_95=(mean - 1.96 * se, mean + 1.96 * se),
        )

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "mean": self.mean,
            "standard_error": self.standard_error,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "ci95_low": self.confidence_interval_95[0],
            "ci95_high": self.confidence_interval_95[1],
        }


def _metric_values(metric: str, mech: Mechanism, profiles: np.ndarray, ctx: AuctionContext) -> np.ndarray:
    batch = run_batch(mech, profiles, ctx)
    return _metric_from_batch(metric, batch, profiles, ctx, mech)


def _metric_from_batch(metric: str, batch, profiles: np.ndarray, ctx: AuctionContext, mech: Mechanism) -> np.ndarray:
    if metric == "revenue":
        return batch.revenue
    if metric == "welfare":
        return batch.welfare
    if metric == "transfers_out":
        return np.maximum(0.0, -batch.payments).sum(axis=1)
    if metric == "allocation_prob":
        return (batch.winner >= 0).astype(float)
    if metric == "compensation_out":
        return -batch.compensations.sum(axis=1)
    if metric == "virtual_surplus":
        return _winner_virtual_values(mech.chi, profiles, batch, ctx)
    raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")


def _winner_virtual_values(chi: float, profiles: np.ndarray, batch, ctx: AuctionContext) -> np.ndarray:
    """Sum over agents of allocation times the cursed virtual value (only the
    winner contributes)."""
    out = np.zeros(len(profiles))
    won = batch.winner >= 0
    if not won.any():
        return out
    rows = np.where(won)[0]
    cols = batch.winner[rows]
    own = profiles[rows, cols]
    stat = profile_stats(ctx.model, profiles[rows])[np.arange(len(rows)), cols]

    def vchi(s):
        v = value_from_own_and_stat(ctx.model, s, stat)
        return cursed_value_from_parts(v, ctx.interim.expected_value(s), chi)

    if isinstance(ctx.model, WeightedSum):
        deriv = np.ones_like(own)
    else:
        h = 1e-5 * ctx.s_bar
        lo = np.maximum(0.0, own - h)
        hi = np.minimum(ctx.s_bar, own + h)
        deriv = (vchi(hi) - vchi(lo)) / (hi - lo)
    f = ctx.space.marginal.pdf(own)
    F = ctx.space.marginal.cdf(own)
    out[rows] = vchi(own) - deriv * (1.0 - F) / f
    return out


def _chunked_mean(
    ctx: AuctionContext,
    values_fn: Callable[[np.ndarray], np.ndarray],
    metric: str,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> EstimateReport:
    chunk_rows = max(1, 2_000_000 // max(ctx.space.n, 1))
    spans = [(c, min(chunk_rows, n_samples - c * chunk_rows)) for c in range((n_samples + chunk_rows - 1) // chunk_rows)]

    def one(span):
        c, rows = span
        profiles = sample_profiles(ctx.space, RandomStream(seed, c), rows)
        vals = values_fn(profiles)
        return float(vals.sum()), float((vals * vals).sum())

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, spans))
    else:
        parts = [one(s) for s in spans]
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    return EstimateReport.from_moments(metric, total, total_sq, n_samples, seed)


def estimate(
    mech: Mechanism,
    ctx: AuctionContext,
    metric: str,
    n_samples: int,
    seed: int,
    workers: int = 1,
) -> EstimateReport:
    """Monte Carlo mean of a per-auction metric over i.i.d. signal profiles."""
    if n_samples < 0:
        raise ValueError("n_samples must be non-negative")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    return _chunked_mean(ctx, lambda p: _metric_values(metric, mech, p, ctx), metric, n_samples, seed, workers)


def estimate_many(
    mech: Mechanism,
    ctx: AuctionContext,
    metrics: Sequence[str],
    n_samples: int,
    seed: int,
) -> dict:
    """Like :func:`estimate` for several metrics sharing one execution pass.

    Identical draws and results to calling ``estimate`` per metric with the
    same seed; one run of the mechanism per chunk instead of one per metric.
    """
    metrics = list(metrics)
    bad = [m for m in metrics if m not in METRICS]
    if bad:
        raise ValueError(f"unknown metrics {bad}; choose from {METRICS}")
    chunk_rows = max(1, 2_000_000 // max(ctx.space.n, 1))
    sums = {m: 0.0 for m in metrics}
    sqs = {m: 0.0 for m in metrics}
    done = 0
    chunk = 0
    while done < n_samples:
        rows = min(chunk_rows, n_samples - done)
        profiles = sample_profiles(ctx.space, RandomStream(seed, chunk), rows)
        batch = run_batch(mech, profiles, ctx)
        for m in metrics:
            vals = _metric_from_batch(m, batch, profiles, ctx, mech)
            sums[m] += float(vals.sum())
            sqs[m] += float((vals * vals).sum())
        done += rows
        chunk += 1
    return {
        m: EstimateReport.from_moments(m, sums[m], sqs[m], n_samples, seed) for m in metrics
    }


def optimal_welfare(ctx: AuctionContext, n_samples: int, seed: int, workers: int = 1) -> EstimateReport:
    """Welfare of always giving the item to the highest signal (the efficient
    benchmark; requires single crossing so the highest signal has the highest value)."""
    if not single_crossing_holds(ctx.model, ctx.space):
        raise ValueError("optimal welfare benchmark needs the single-crossing condition")

    def values_fn(profiles):
        top = np.argmax(profiles, axis=1)
        rows = np.arange(len(profiles))
        stat = profile_stats(ctx.model, profiles)[rows, top]
        return value_from_own_and_stat(ctx.model, profiles[rows, top], stat)

    return _chunked_mean(ctx, values_fn, "optimal_welfare", n_samples, seed, workers)


def chi_sweep(
    mechanism_factory: Callable[[float], Mechanism],
    ctx: AuctionContext,
    chi_grid: Sequence[float],
    metric: str,
    n_samples: int,
    seed: int,
) -> list:
    """Estimate a metric for each chi on identical profile draws (common random
    numbers).  Returns [(chi, EstimateReport), ...] in grid order."""
    chis = list(chi_grid)
    mechs = [mechanism_factory(c) for c in chis]
    chunk_rows = max(1, 2_000_000 // max(ctx.space.n, 1))
    sums = [0.0] * len(chis)
    sqs = [0.0] * len(chis)
    done = 0
    chunk = 0
    while done < n_samples:
        rows = min(chunk_rows, n_samples - done)
        profiles = sample_profiles(ctx.space, RandomStream(seed, chunk), rows)
        for k, mech in enumerate(mechs):
            vals = _metric_values(metric, mech, profiles, ctx)
            sums[k] += float(vals.sum())
            sqs[k] += float((vals * vals).sum())
        done += rows
        chunk += 1
    return [
        (c, EstimateReport.from_moments(metric, sums[k], sqs[k], n_samples, seed))
        for k, c in enumerate(chis)
    ]


def _h_map_and_moments(ctx: AuctionContext):
    """(h, E[h(signal)], sup h) for the additive part of the valuation."""
    model = ctx.model
    marginal = ctx.space.marginal
    if isinstance(model, WeightedSum):
        h = lambda s: model.beta * np.asarray(s, dtype=float)
        lam = model.beta * marginal.mean()
    elif isinstance(model, ConcaveSum):
        h = model.h
        if hasattr(marginal, "atoms"):
            lam = float(np.mean(h(marginal.atoms())))
        else:
            lam, _err = integrate.quad(lambda u: float(h(marginal.quantile(u))), 0.0, 1.0, limit=200)
    else:
        raise ValueError("event probability needs an additive-others valuation family")
    return h, float(lam), float(h(ctx.s_bar))


def event_probability(ctx: AuctionContext, n: int, n_samples: int, seed: int) -> EstimateReport:
    """P[mean of h(signals) >= E[h] + sup(h)/n] for n agents.

    This is the event under which the masked efficient auction provably
    allocates for additive-others valuations; its probability tends to 1/2.
    """
    h, lam, b = _h_map_and_moments(ctx)
    cutoff = lam + b / n
    wide = SignalSpace(n, ctx.space.marginal) if n != ctx.space.n else ctx.space
    chunk_rows = max(1, 4_000_000 // n)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = 0
    while done < n_samples:
        rows = min(chunk_rows, n_samples - done)
        profiles = sample_profiles(wide, RandomStream(seed, chunk), rows)
        hit = (h(profiles).mean(axis=1) >= cutoff).astype(float)
        total += float(hit.sum())
        total_sq += float(hit.sum())  # indicator: squares equal values
        done += rows
        chunk += 1
    return EstimateReport.from_moments("event_probability", total, total_sq, n_samples, seed)


_WALLET_SUPPORTS = {
    "U[0,100]": (UniformIID(100.0), 30.0),
    "U[1,4]": (GenericIID("affine", (1.0, 4.0)), 2.5),
}


def wallet_report(
    support: str = "U[0,100]",
    chi: float = 1.0,
    probe_signal: Optional[float] = None,
    mc_draws: int = 1_000_000,
    seed: int = 2024,
) -> dict:
    """Second-price wallet game for two bidders with v = s_1 + s_2.

    Reports (a) the chi-cursed truthful bid function b(s) = (2 - chi) s +
    chi * E[s] (the symmetric cursed value at an opponent tie), (b) the Monte
    Carlo expected utility of the probe bidder conditioned on winning when
    BOTH bidders play the fully cursed bid s + E[s], and (c) the masked
    efficient auction's allocation condition: sell only when the losing
    signal is at least E[s].
    """
    if support not in _WALLET_SUPPORTS:
        raise ValueError(f"support must be one of {sorted(_WALLET_SUPPORTS)}")
    if not (0.0 <= chi <= 1.0):
        raise ValueError("chi must lie in [0, 1]")
    marginal, default_probe = _WALLET_SUPPORTS[support]
    mean = marginal.mean()
    probe = default_probe if probe_signal is None else float(probe_signal)

    gen = RandomStream(seed).generator()
    rival = np.asarray(marginal.quantile(gen.random(mc_draws)))
    naive_probe_bid = probe + mean
    rival_bids = rival + mean
    wins = naive_probe_bid > rival_bids
    utilities = (probe + rival[wins]) - rival_bids[wins]
    n_wins = int(wins.sum())
    mc_mean = float(utilities.mean()) if n_wins else float("nan")
    mc_se = float(utilities.std(ddof=1) / math.sqrt(n_wins)) if n_wins > 1 else 0.0

    return {
        "support": support,
        "chi": chi,
        "bid_slope": 2.0 - chi,
        "bid_intercept": chi * mean,
        "probe_signal": probe,
        "bid_at_probe": (2.0 - chi) * probe + chi * mean,
        "naive_bid_at_probe": naive_probe_bid,
        "mc_draws": mc_draws,
        "mc_wins": n_wins,
        "expected_winner_utility": mc_mean,
        "winner_utility_se": mc_se,
        "masked_allocation_cutoff": mean,
        "seed": seed,
    }


# ---------------------------------------------------------------------------
# CSV emission (schema v1: header always present, fixed column order).
# ---------------------------------------------------------------------------


def write_outcomes_csv(path, profiles: np.ndarray, batch) -> None:
    profiles = np.atleast_2d(profiles)
    n = profiles.shape[1] if profiles.size else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [f"s_{i + 1}" for i in range(n)]
            + ["winner", "threshold"]
            + [f"payment_{i + 1}" for i in range(n)]
            + ["revenue", "welfare"]
        )
        for r in range(len(profiles)):
            winner = int(batch.winner[r])
            top = int(np.argmax(profiles[r]))
            w.writerow(
                [f"{x:.12g}" for x in profiles[r]]
                + [winner if winner >= 0 else "", f"{batch.thresholds[r, top]:.12g}"]
                + [f"{x:.12g}" for x in batch.payments[r]]
                + [f"{batch.revenue[r]:.12g}", f"{batch.welfare[r]:.12g}"]
            )


def write_estimates_csv(path, rows: Sequence[dict]) -> None:
    keys = ["metric", "chi", "n", "mean", "standard_error", "sample_count", "seed"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def write_interim_grid_csv(path, cache) -> None:
    """Dump the interim-expectation table (signal, expected value) for inspection."""
    s, mu = cache.export_grid()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["signal", "interim_value"])
        for a, b in zip(s, mu):
            w.writerow([f"{a:.12g}", f"{b:.12g}"])
