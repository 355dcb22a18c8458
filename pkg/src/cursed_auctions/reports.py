"""Machine-readable results for property checks and comparisons."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["CheckReport"]


@dataclass
class CheckReport:
    """Outcome of a sampled or exact property check.

    ``passed`` is always ``max_violation <= tolerance``; witnesses carry up to
    a handful of concrete violating inputs (profile, deviation bid if any,
    margin) for debugging failed checks.
    """

    name: str
    max_violation: float
    tolerance: float
    samples_checked: int
    witnesses: list = field(default_factory=list)
    note: str = ""

    def __post_init__(self):
        self.max_violation = float(self.max_violation) + 0.0  # normalize -0.0

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "max_violation": float(self.max_violation),
            "tolerance": float(self.tolerance),
            "samples_checked": int(self.samples_checked),
            "witnesses": [_jsonify(w) for w in self.witnesses],
            "note": self.note,
        }


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, (int, float, str, bool)) or obj is None:
        return obj
    return repr(obj)
