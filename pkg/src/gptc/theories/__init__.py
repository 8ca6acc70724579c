"""Model theories: classical, quantum, and table-driven."""
from __future__ import annotations

import re

from ..errors import UnsupportedTheory
from .base import MaximalSet, Theory
from .classical import ClassicalTheory
from .quantum import (
    QuantumFrame,
    QuantumOperation,
    QuantumTheory,
    oracle_probability,
    quantum_frame,
    random_circuit,
)
from .tabular import TabularTheory, bundled_tables, load_tabular_theory


def classical_theory(N: int = 2) -> ClassicalTheory:
    return ClassicalTheory(N)


def quantum_theory(N: int = 2) -> QuantumTheory:
    return QuantumTheory(N)


def theory_from_selector(selector: str) -> Theory:
    """``classical:N``, ``quantum:N`` or ``tabular:<path or bundled name>``."""
    m = re.fullmatch(r"(classical|quantum):(\d+)", selector.strip())
    if m:
        cls = ClassicalTheory if m.group(1) == "classical" else QuantumTheory
        return cls(int(m.group(2)))
    if selector.startswith("tabular:"):
        return load_tabular_theory(selector[len("tabular:"):])
    raise UnsupportedTheory(
        f"unknown theory selector {selector!r}; use classical:N, quantum:N or tabular:FILE")


__all__ = [
    "ClassicalTheory", "MaximalSet", "QuantumFrame", "QuantumOperation", "QuantumTheory",
    "TabularTheory", "Theory", "bundled_tables", "classical_theory", "load_tabular_theory",
    "oracle_probability", "quantum_frame", "quantum_theory", "random_circuit",
    "theory_from_selector",
]
