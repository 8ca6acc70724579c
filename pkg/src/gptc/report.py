"""Structured outcome of a postulate or construction check."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _plain(x):
    """Convert numpy containers and scalars into JSON-ready values."""
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()] if x.ndim else _plain(x.item())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if x != x or x in (float("inf"), float("-inf")):
            return repr(x)
        return 0.0 if x == 0 else x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [_plain(x.real), _plain(x.imag)]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


@dataclass
class CheckReport:
    id: str
    residual: float
    tolerance: float
    witness: Any = None
    notes: str = ""
    seed: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tolerance)

    def to_record(self) -> str:
        record = {
            "id": self.id,
            "pass": self.passed,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "witness": self.witness,
            "seed": self.seed,
            "notes": self.notes,
            "details": self.details,
        }
        return json.dumps(_plain(record), sort_keys=True)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"{status} {self.id}: residual {self.residual:.3e} (tol {self.tolerance:.1e})"
        return line + (f" - {self.notes}" if self.notes else "")
