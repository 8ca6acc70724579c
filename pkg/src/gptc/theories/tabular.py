"""Theories given by finite tables of states, effects and transformations.

A table file is JSON with these keys::

    name            string
    types           [{"label": "a", "N": 2, "K": 3}, ...]
    states          {type: {state name: [K numbers]}}
    effects         {type: {effect name: [K numbers]}}
    transforms      {type: {name: [[K x K numbers]]}}        (optional)
    maximal_sets    {type: [{"states": [names], "effects": [names]}, ...]}
    pure_states     {type: [names]}     (default: states used in maximal sets)
    unit_effect     {type: name or [K numbers]}
    composites      [{"a": label, "b": label, "label": str, "N": int, "K": int,
                      "product_states": [[K_ab x K_a*K_b]],
                      "product_effects": [[K_a*K_b x K_ab]]}]       (optional)

``product_states`` sends ``kron(s_a, s_b)`` to the composite state vector and
``kron(e_a, e_b) @ product_effects`` is the composite covector of a product
effect.  The loader checks shapes, ``K >= N``, maximal-set duality, effect
bounds on every listed state, and that some type has ``N > 1``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import SpecInvalid, UnknownReference, UnsupportedTheory
from ..ir import SystemType
from ..linalg import orthonormal_span
from ..tensor import GptTensor
from .base import DUALITY_TOLERANCE, MaximalSet, Theory, _next_label
from .resolve import resolve_common

BOUND_TOLERANCE = 1e-9
DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def _vec(x, K, where):
    try:
        v = np.array(x, dtype=float)
    except (TypeError, ValueError):
        raise SpecInvalid(f"{where}: not a list of numbers") from None
    if v.shape != (K,):
        raise SpecInvalid(f"{where}: expected {K} numbers, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise SpecInvalid(f"{where}: entries must be finite")
    return v


class _Table:
    def __init__(self, t: SystemType):
        self.type = t
        self.states: dict[str, np.ndarray] = {}
        self.effects: dict[str, np.ndarray] = {}
        self.transforms: dict[str, np.ndarray] = {}
        self.msets: list[MaximalSet] = []
        self.pure: list[str] = []
        self.unit: np.ndarray | None = None


class TabularTheory(Theory):
    finite = True
    exhaustive = True

    def __init__(self, spec: dict, source: str | None = None):
        super().__init__()
        if not isinstance(spec, dict):
            raise SpecInvalid("a theory table must be a JSON object")
        self.name = f"tabular:{spec.get('name', source or 'unnamed')}"
        self.source = source
        self.tables: dict[str, _Table] = {}
        self._aliases: dict[str, str] = {}
        self._composites: dict[tuple[str, str], dict] = {}
        self._load(spec)

    # -- loading -------------------------------------------------------------------

    def _load(self, spec):
        types = spec.get("types")
        if not types:
            raise SpecInvalid("types: at least one system type is required")
        for entry in types:
            try:
                label, N, K = entry["label"], int(entry["N"]), int(entry["K"])
            except (KeyError, TypeError, ValueError):
                raise SpecInvalid(f"types: malformed entry {entry!r}") from None
            if N < 1 or K < 1:
                raise SpecInvalid(f"type {label}: N and K must be positive")
            if K < N:
                raise SpecInvalid(f"type {label}: K >= N violated (K={K}, N={N})")
            self.tables[label] = _Table(SystemType(label, N, K))
        if not any(tb.type.N > 1 for tb in self.tables.values()):
            raise SpecInvalid("Assumption 2 violated: no type with N > 1")

        for label, tb in self.tables.items():
            K = tb.type.K
            for name, x in spec.get("states", {}).get(label, {}).items():
                tb.states[name] = _vec(x, K, f"state {label}:{name}")
            for name, x in spec.get("effects", {}).get(label, {}).items():
                tb.effects[name] = _vec(x, K, f"effect {label}:{name}")
            for name, x in spec.get("transforms", {}).get(label, {}).items():
                m = np.array(x, dtype=float)
                if m.shape != (K, K):
                    raise SpecInvalid(f"transform {label}:{name}: expected {K}x{K}")
                tb.transforms[name] = m
            unit = spec.get("unit_effect", {}).get(label)
            if unit is None:
                raise SpecInvalid(f"unit_effect: missing for type {label}")
            tb.unit = tb.effects[unit] if isinstance(unit, str) and unit in tb.effects \
                else _vec(unit, K, f"unit_effect {label}")
            for k, ms in enumerate(spec.get("maximal_sets", {}).get(label, [])):
                tb.msets.append(self._maximal_set(tb, ms, k))
            pure = spec.get("pure_states", {}).get(label)
            if pure is None:
                pure = sorted({n for ms in spec.get("maximal_sets", {}).get(label, [])
                               for n in ms["states"]})
            for n in pure:
                if n not in tb.states:
                    raise SpecInvalid(f"pure_states {label}: unknown state {n!r}")
            tb.pure = list(pure)
            self._check_bounds(tb)

        for entry in spec.get("composites", []):
            self._load_composite(entry)

    def _maximal_set(self, tb, ms, k):
        try:
            s = np.array([tb.states[n] for n in ms["states"]])
            e = np.array([tb.effects[n] for n in ms["effects"]])
        except KeyError as exc:
            raise SpecInvalid(f"maximal set {tb.type.label}[{k}]: unknown name {exc}") from None
        if len(s) != tb.type.N or len(e) != tb.type.N:
            raise SpecInvalid(f"maximal set {tb.type.label}[{k}]: needs N={tb.type.N} entries")
        mset = MaximalSet(tb.type, s, e, f"{tb.type.label}[{k}]")
        r = mset.duality_residual()
        if r > DUALITY_TOLERANCE:
            raise SpecInvalid(f"maximal set {tb.type.label}[{k}]: duality violated by {r:.3g}")
        if np.max(np.abs(e.sum(axis=0) - tb.unit)) > DUALITY_TOLERANCE:
            raise SpecInvalid(f"maximal set {tb.type.label}[{k}]: effects do not sum to the unit")
        return mset

    def _check_bounds(self, tb):
        if not tb.states:
            return
        S = np.array(list(tb.states.values()))
        for name, e in list(tb.effects.items()) + [("unit", tb.unit)]:
            p = S @ e
            if p.min() < -BOUND_TOLERANCE or p.max() > 1 + BOUND_TOLERANCE:
                raise SpecInvalid(
                    f"effect bounds violated: {tb.type.label}:{name} gives "
                    f"probabilities in [{p.min():.3g}, {p.max():.3g}]")

    def _load_composite(self, entry):
        try:
            a, b = self.tables[entry["a"]].type, self.tables[entry["b"]].type
            N, K = int(entry["N"]), int(entry["K"])
        except (KeyError, TypeError, ValueError):
            raise SpecInvalid(f"composites: malformed entry {entry!r}") from None
        if K < N:
            raise SpecInvalid(f"composite {entry['a']}{entry['b']}: K >= N violated")
        ps = np.array(entry["product_states"], dtype=float)
        pe = np.array(entry["product_effects"], dtype=float)
        if ps.shape != (K, a.K * b.K) or pe.shape != (a.K * b.K, K):
            raise SpecInvalid(f"composite {a.label}{b.label}: product map shapes are wrong")
        self._composites[(a.label, b.label)] = {
            "label": entry.get("label", a.label + b.label), "N": N, "K": K,
            "product_states": ps, "product_effects": pe}

    # -- types ----------------------------------------------------------------------

    def _base(self, label: str) -> str:
        return self._aliases.get(label, label)

    def table(self, t: SystemType) -> _Table:
        try:
            return self.tables[self._base(t.label)]
        except KeyError:
            raise UnknownReference(f"{self.name} has no type {t.label!r}") from None

    @property
    def default_N(self):
        return next(iter(self.tables.values())).type.N

    def k_of(self, N: int) -> int:
        for tb in self.tables.values():
            if tb.type.N == N:
                return tb.type.K
        raise UnsupportedTheory(f"{self.name} has no type with N={N}")

    def system(self, label: str = "a", N: int | None = None) -> SystemType:
        base = self._base(label)
        if base in self.tables and (N is None or self.tables[base].type.N == N):
            return self._as(label, self.tables[base].type)
        for tb in self.tables.values():
            if N is None or tb.type.N == N:
                self._aliases[label] = tb.type.label
                return self._as(label, tb.type)
        raise UnsupportedTheory(f"{self.name} has no type with N={N}")

    @staticmethod
    def _as(label, t):
        return t if t.label == label else SystemType(label, t.N, t.K)

    def ancilla(self, t: SystemType) -> SystemType:
        base = self._base(t.label)

        def same(ch):
            return ch != t.label and self._base(ch) == base

        label = _next_label(set(self.tables) | set(self._aliases) | {t.label}, same)
        self._aliases[label] = self._base(t.label)
        return SystemType(label, t.N, t.K)

    def types_table(self):
        return [(tb.type.N, tb.type.K) for tb in self.tables.values()]

    def _composite_entry(self, a, b):
        entry = self._composites.get((self._base(a.label), self._base(b.label)))
        if entry is None:
            raise UnsupportedTheory(f"{self.name} declares no composite of {a.label} and {b.label}")
        return entry

    def composite(self, a, b):
        entry = self._composite_entry(a, b)
        return SystemType(a.label + b.label, entry["N"], entry["K"], parts=(a, b))

    def product_state(self, a, sa, b, sb):
        return self._composite_entry(a, b)["product_states"] @ np.kron(sa, sb)

    def product_effect(self, a, ea, b, eb):
        return np.kron(ea, eb) @ self._composite_entry(a, b)["product_effects"]

    # -- states and effects --------------------------------------------------------

    def unit_effect(self, t):
        return self.table(t).unit

    def _retarget(self, mset: MaximalSet, t: SystemType) -> MaximalSet:
        if mset.system == t and mset.system.label == t.label:
            return mset
        return MaximalSet(t, mset.states, mset.effects, mset.label)

    def maximal_sets(self, t):
        return [self._retarget(m, t) for m in self.table(t).msets]

    def canonical_maximal_set(self, t):
        sets = self.maximal_sets(t)
        if not sets:
            raise UnsupportedTheory(f"{self.name} lists no maximal set for {t.label}")
        return sets[0]

    def pure_states(self, t):
        tb = self.table(t)
        return np.array([tb.states[n] for n in tb.pure]) if tb.pure else np.zeros((0, t.K))

    def pure_state_names(self, t):
        return list(self.table(t).pure)

    def maximal_effects(self, t):
        tb = self.table(t)
        seen, rows = set(), []
        for ms in tb.msets:
            for e in ms.effects:
                key = tuple(np.round(e, 12))
                if key not in seen:
                    seen.add(key)
                    rows.append(e)
        return np.array(rows) if rows else np.zeros((0, t.K))

    def is_pure(self, t, state) -> bool:
        s = np.asarray(state, dtype=float)
        norm = float(self.unit_effect(t) @ s)
        if norm <= 1e-12:
            return False
        pure = self.pure_states(t)
        return bool(len(pure) and np.min(np.max(np.abs(pure - s / norm), axis=1)) < 1e-8)

    def spanning_states(self, t):
        return np.array(list(self.table(t).states.values()))

    def reversible_group(self, t):
        mats = list(self.table(t).transforms.values())
        eye = np.eye(t.K)
        group = [(eye, eye)]
        for T in mats:
            if np.allclose(T, eye):
                continue
            for T2 in mats:
                if np.allclose(T @ T2, eye, atol=1e-10):
                    group.append((T, T2))
                    break
        return group

    def face_basis(self, mset, subset):
        h = mset.hyperplane(subset)
        pure = self.pure_states(mset.system)
        inside = pure[np.abs(pure @ h) < DUALITY_TOLERANCE]
        chosen = []
        for s in inside:
            trial = np.array(chosen + [s])
            if np.linalg.matrix_rank(trial, tol=1e-8) == len(trial):
                chosen.append(s)
        return np.array(chosen).T if chosen else np.zeros((mset.system.K, 0))

    def face_span(self, mset, subset):
        return orthonormal_span(self.face_basis(mset, subset))

    def resolve(self, ref, inputs, outputs):
        inputs, outputs = tuple(inputs), tuple(outputs)
        found = resolve_common(self, ref, inputs, outputs)
        if found is not None:
            return found
        kind, _, name = ref.partition(":")
        ports = inputs + outputs
        if len(ports) == 1 or (kind == "transform" and len(inputs) == 1 == len(outputs)):
            tb = self.table(ports[0])
            source = {"prep": tb.states, "state": tb.states, "effect": tb.effects,
                      "transform": tb.transforms, "channel": tb.transforms}.get(kind, {})
            if name in source:
                return GptTensor(source[name], outputs, inputs)
        raise UnknownReference(f"{self.name} does not know {ref!r}")


def load_tabular_theory(spec) -> TabularTheory:
    """Load from a dict, a JSON string, a path, or a bundled table name."""
    if isinstance(spec, dict):
        return TabularTheory(spec)
    text = str(spec)
    if text.lstrip().startswith("{"):
        try:
            return TabularTheory(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SpecInvalid(f"inline table is not valid JSON ({exc})") from None
    path = Path(text)
    if not path.exists():
        for name in (path.name, path.name + ".thy"):
            if (DATA_DIR / name).exists():
                path = DATA_DIR / name
                break
    if not path.exists():
        raise SpecInvalid(f"no table file {text!r}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecInvalid(f"{path}: not valid JSON ({exc})") from None
    return TabularTheory(data, source=path.stem)


def bundled_tables() -> list[str]:
    return sorted(p.name for p in DATA_DIR.glob("*.thy"))
