"""I.i.d. signal environments: support, marginal CDF/quantile, reproducible sampling.

Every bidder draws a private signal from a common marginal on [0, s_bar].
Three marginal families are supported:

* ``UniformIID`` -- the uniform distribution on [0, s_bar];
* ``DiscreteGridIID`` -- uniform mass on a finite sorted grid (used by the
  brute-force oracle);
* ``GenericIID`` -- a marginal described by its quantile map, drawn from a
  small closed catalogue (affine => uniform on [low, high], power).

Sampling is counter-based: a ``RandomStream`` is a (seed, stream_index) pair
mapped onto independent Philox streams, so identical inputs always reproduce
identical draws and chunked/parallel consumers cannot collide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "RandomStream",
    "UniformIID",
    "DiscreteGridIID",
    "GenericIID",
    "Marginal",
    "SignalSpace",
    "sample_profile",
    "sample_profiles",
    "cdf",
    "quantile",
    "marginal_from_config",
]

# Profiles per internal sampling chunk; chunk c of a stream uses Philox jump
# index stream_index * _STREAM_STRIDE + c, so distinct stream indices never
# share a chunk stream.
_CHUNK = 1 << 16
_STREAM_STRIDE = 1 << 20

# Boundary overshoot up to this size is clamped instead of rejected, to absorb
# float noise from quantile/CDF round trips.
_EDGE_SLACK = 1e-12


@dataclass(frozen=True)
class RandomStream:
    """Counter-based random stream id; (seed, stream_index) fully determines draws."""

    seed: int
    stream_index: int = 0

    def child(self, offset: int) -> "RandomStream":
        return RandomStream(self.seed, self.stream_index + offset)

    def generator(self, chunk: int = 0) -> np.random.Generator:
        jumps = self.stream_index * _STREAM_STRIDE + chunk
        return np.random.Generator(np.random.Philox(key=self.seed).jumped(jumps))


@dataclass(frozen=True)
class UniformIID:
    """Uniform marginal on [0, s_bar]."""

    s_bar: float = 1.0

    def __post_init__(self):
        if self.s_bar <= 0:
            raise ValueError(f"s_bar must be positive, got {self.s_bar}")

    @property
    def has_density(self) -> bool:
        return True

    def cdf(self, t):
        return np.clip(np.asarray(t, dtype=float) / self.s_bar, 0.0, 1.0)

    def quantile(self, p):
        p = _check_prob(p)
        return p * self.s_bar

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0.0) & (t <= self.s_bar)
        return np.where(inside, 1.0 / self.s_bar, 0.0)

    def mean(self) -> float:
        return 0.5 * self.s_bar

    def to_config(self) -> dict:
        return {"type": "uniform", "s_bar": self.s_bar}


@dataclass(frozen=True)
class DiscreteGridIID:
    """Uniform mass on a finite sorted grid of points in [0, s_bar]."""

    points: tuple

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) == 0:
            raise ValueError("grid must contain at least one point")
        if any(b < a for a, b in zip(pts, pts[1:])):
            raise ValueError("grid points must be sorted ascending")
        if pts[0] < 0:
            raise ValueError("grid points must be non-negative")
        object.__setattr__(self, "points", pts)

    @property
    def s_bar(self) -> float:
        return self.points[-1] if self.points[-1] > 0 else 1.0

    @property
    def has_density(self) -> bool:
        return False

    def atoms(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        counts = np.searchsorted(self.atoms(), t + _EDGE_SLACK, side="left")
        return counts / len(self.points)

    def quantile(self, p):
        p = _check_prob(p)
        m = len(self.points)
        # smallest grid point whose CDF reaches p
        idx = np.minimum(np.ceil(p * m - _EDGE_SLACK).astype(int), m) - 1
        idx = np.maximum(idx, 0)
        return self.atoms()[idx]

    def pdf(self, t):
        raise UnsupportedMarginalError("discrete grid marginals have no density")

    def mean(self) -> float:
        return float(np.mean(self.atoms()))

    def to_config(self) -> dict:
        return {"type": "grid", "points": list(self.points)}


@dataclass(frozen=True)
class GenericIID:
    """Marginal given by a monotone quantile map from the closed catalogue.

    kind "affine": quantile(u) = low + (high - low) * u, i.e. uniform on
    [low, high] (support upper bound s_bar = high).
    kind "power": quantile(u) = s_bar * u**exponent.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        if self.kind == "affine":
            low, high = self.params
            if not (0 <= low < high):
                raise ValueError("affine quantile needs 0 <= low < high")
        elif self.kind == "power":
            exponent, s_bar = self.params
            if exponent <= 0 or s_bar <= 0:
                raise ValueError("power quantile needs exponent > 0 and s_bar > 0")
        else:
            raise ValueError(f"unknown quantile kind {self.kind!r}")

    @property
    def s_bar(self) -> float:
        return self.params[1]

    @property
    def has_density(self) -> bool:
        return True

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "affine":
            low, high = self.params
            return np.clip((t - low) / (high - low), 0.0, 1.0)
        exponent, s_bar = self.params
        return np.clip(np.power(np.clip(t / s_bar, 0.0, 1.0), 1.0 / exponent), 0.0, 1.0)

    def quantile(self, p):
        p = _check_prob(p)
        if self.kind == "affine":
            low, high = self.params
            return low + (high - low) * p
        exponent, s_bar = self.params
        return s_bar * np.power(p, exponent)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "affine":
            low, high = self.params
            inside = (t >= low) & (t <= high)
            return np.where(inside, 1.0 / (high - low), 0.0)
        exponent, s_bar = self.params
        u = np.clip(t / s_bar, _EDGE_SLACK, 1.0)
        return np.power(u, 1.0 / exponent - 1.0) / (exponent * s_bar)

    def mean(self) -> float:
        if self.kind == "affine":
            low, high = self.params
            return 0.5 * (low + high)
        exponent, s_bar = self.params
        return s_bar / (exponent + 1.0)

    def to_config(self) -> dict:
        return {"type": "quantile", "kind": self.kind, "params": list(self.params)}


Marginal = Union[UniformIID, DiscreteGridIID, GenericIID]


class UnsupportedMarginalError(ValueError):
    """Raised when an operation needs a density the marginal does not have."""


@dataclass(frozen=True)
class SignalSpace:
    """n bidders with i.i.d. signals from a common marginal on [0, s_bar]."""

    n: int
    marginal: Marginal

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least two bidders, got n={self.n}")

    @property
    def s_bar(self) -> float:
        return self.marginal.s_bar

    def mean_signal(self) -> float:
        return self.marginal.mean()

    def to_config(self) -> dict:
        return {"n": self.n, "marginal": self.marginal.to_config()}

    @staticmethod
    def from_config(cfg: dict) -> "SignalSpace":
        cfg = dict(cfg)
        n = cfg.pop("n")
        marginal = marginal_from_config(cfg.pop("marginal"))
        if cfg:
            raise ValueError(f"unknown space keys: {sorted(cfg)}")
        return SignalSpace(n=int(n), marginal=marginal)


def marginal_from_config(cfg: dict) -> Marginal:
    cfg = dict(cfg)
    kind = cfg.pop("type")
    if kind == "uniform":
        out = UniformIID(s_bar=float(cfg.pop("s_bar", 1.0)))
    elif kind == "grid":
        out = DiscreteGridIID(points=tuple(cfg.pop("points")))
    elif kind == "quantile":
        out = GenericIID(kind=cfg.pop("kind"), params=tuple(cfg.pop("params")))
    else:
        raise ValueError(f"unknown marginal type {kind!r}")
    if cfg:
        raise ValueError(f"unknown marginal keys: {sorted(cfg)}")
    return out


def sample_profiles(space: SignalSpace, stream: RandomStream, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. signal profiles, shape (count, n).

    Row blocks of size 2**16 come from consecutive Philox sub-streams, so the
    result depends only on (seed, stream_index, count) and prefixes agree
    across different counts.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    out = np.empty((count, space.n), dtype=float)
    for chunk, start in enumerate(range(0, count, _CHUNK)):
        stop = min(start + _CHUNK, count)
        gen = stream.generator(chunk)
        u = gen.random((stop - start, space.n))
        out[start:stop] = space.marginal.quantile(u)
    return out


def sample_profile(space: SignalSpace, stream: RandomStream) -> np.ndarray:
    """Draw one signal profile, shape (n,); deterministic in (seed, stream_index)."""
    return sample_profiles(space, stream, 1)[0]


def cdf(space: SignalSpace, t):
    """P[signal <= t] under the marginal; clamped to [0, 1] outside the support."""
    return space.marginal.cdf(t)


def quantile(space: SignalSpace, p):
    """Smallest t with cdf(t) >= p; p outside [0, 1] is a domain error."""
    return space.marginal.quantile(p)


def _check_prob(p):
    p = np.asarray(p, dtype=float)
    if np.any(p < -_EDGE_SLACK) or np.any(p > 1.0 + _EDGE_SLACK):
        raise ValueError("probability out of [0, 1]")
    return np.clip(p, 0.0, 1.0)
