"""Structured results of verification checks.

Every check in the package returns a CheckReport rather than a bare bool so
that sweeps, the CLI and the tests all see the same thing: what was run, what
was measured, against which tolerance, and where the worst point sits.
"""
from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any


def _jsonable(value):
    """Coerce numpy scalars/arrays and other odds and ends to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, (int, str, bool)) or value is None:
        return value
    return repr(value)


@dataclass
class CheckReport:
    """Outcome of a single verification.

    Parameters
    ----------
    name : str
        Stable identifier of the check, e.g. ``"equivalence.spectral_vs_singular"``.
    inputs : dict
        Echo of the parameters the check ran with.
    measured : dict
        Named measured quantities (violations, residuals, ratios).
    tolerance : float
        The tolerance the headline violation is compared against.
    passed : bool
        True iff the measured violation is within tolerance.
    witness : dict or None
        Worst-point coordinates and values.  Populated whenever the check
        fails, and also on passes that sit within a factor 10 of failing,
        so near-misses stay diagnosable.
    wall_time_s : float
        Wall-clock duration of the check.
    """

    name: str
    inputs: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    tolerance: float = 0.0
    passed: bool = False
    witness: Any = None
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return _jsonable(dataclasses.asdict(self))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} (tol={self.tolerance:g})"


def finish_report(name, inputs, measured, tolerance, violation, witness,
                  t_start) -> CheckReport:
    """Assemble a CheckReport from a finished check.

    ``violation`` is the headline nonnegative number compared against
    ``tolerance``; the witness is kept when failing or within 10x of the
    tolerance.
    """
    passed = bool(violation <= tolerance)
    keep_witness = (not passed) or (violation * 10.0 >= tolerance)
    measured = dict(measured)
    measured.setdefault("violation", float(violation))
    return CheckReport(
        name=name,
        inputs=_jsonable(inputs),
        measured=_jsonable(measured),
        tolerance=float(tolerance),
        passed=passed,
        witness=_jsonable(witness) if keep_witness else None,
        wall_time_s=time.perf_counter() - t_start,
    )
