"""Common machinery for model theories."""
from __future__ import annotations

import itertools
import string
from dataclasses import dataclass, field

import numpy as np

from ..errors import AncillaUnavailable, ConstructionUnavailable, UnsupportedTheory
from ..ir import SystemType
from ..linalg import numerical_rank
from ..tensor import GptTensor

DUALITY_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class MaximalSet:
    """``N`` distinguishable states (rows) and the effects that tell them apart.

    ``basis`` optionally carries Hilbert-space vectors (as columns) for
    theories that have them; it is never needed for probability evaluation.
    """

    system: SystemType
    states: np.ndarray
    effects: np.ndarray
    label: str = ""
    basis: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        s = np.array(self.states, dtype=float)
        e = np.array(self.effects, dtype=float)
        if s.shape != e.shape or s.ndim != 2:
            raise ValueError(f"states {s.shape} and effects {e.shape} must both be N x K")
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "effects", e)

    @property
    def N(self) -> int:
        return self.states.shape[0]

    def gram(self) -> np.ndarray:
        """``G[m, n] = B[m] . A[n]``."""
        return self.effects @ self.states.T

    def duality_residual(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.N))))

    def state(self, n: int, system: SystemType | None = None) -> GptTensor:
        return GptTensor.state(self.states[n], system or self.system)

    def effect(self, n: int, system: SystemType | None = None) -> GptTensor:
        return GptTensor.effect(self.effects[n], system or self.system)

    def hyperplane(self, subset) -> np.ndarray:
        """Sum of the effects outside ``subset``; vanishes on the face of ``subset``."""
        rest = [m for m in range(self.N) if m not in set(subset)]
        return self.effects[rest].sum(axis=0) if rest else np.zeros(self.states.shape[1])


def _next_label(used: set[str], reusable=lambda ch: False) -> str:
    for ch in string.ascii_lowercase + string.ascii_uppercase:
        if ch not in used or reusable(ch):
            return ch
    raise AncillaUnavailable("ran out of single-letter type labels")


class Theory:
    """Abstract model theory.

    Subclasses supply the per-type frame data.  Methods that only make sense
    for one family raise :class:`UnsupportedTheory` by default.
    """

    name = "theory"
    finite = False
    exhaustive = False  # P1 enumerates the tables instead of sampling

    def __init__(self):
        self._types: dict[str, SystemType] = {}

    # -- types ---------------------------------------------------------------

    def k_of(self, N: int) -> int:
        raise NotImplementedError

    def system(self, label: str = "a", N: int | None = None) -> SystemType:
        if label in self._types and (N is None or self._types[label].N == N):
            return self._types[label]
        if N is None:
            N = self.default_N
        t = SystemType(label, N, self.k_of(N))
        self._types[label] = t
        return t

    def bind(self, t: SystemType) -> SystemType:
        """Concrete type for an abstract (possibly N-less) type letter."""
        if t.parts:
            return self.composite(*(self.bind(p) for p in t.parts))
        return self.system(t.label, t.N)

    def composite(self, a: SystemType, b: SystemType) -> SystemType:
        return SystemType(a.label + b.label, a.N * b.N, a.K * b.K, parts=(a, b))

    def ancilla(self, t: SystemType) -> SystemType:
        """First other label that is free or already carries the same ``N``."""
        def same_n(ch):
            return ch != t.label and ch in self._types and self._types[ch].N == t.N
        return self.system(_next_label(set(self._types) | {t.label}, same_n), t.N)

    def types_table(self) -> list[tuple[int, int]]:
        return [(N, self.k_of(N)) for N in range(1, 5)]

    # -- states and effects ------------------------------------------------------

    def unit_effect(self, t: SystemType) -> np.ndarray:
        raise NotImplementedError

    def canonical_maximal_set(self, t: SystemType) -> MaximalSet:
        raise NotImplementedError

    def random_maximal_set(self, t: SystemType, rng: np.random.Generator) -> MaximalSet:
        sets = self.maximal_sets(t)
        if sets is None:
            raise NotImplementedError
        return sets[int(rng.integers(len(sets)))]

    def maximal_sets(self, t: SystemType) -> list[MaximalSet] | None:
        """Every maximal set when there are finitely many, else ``None``."""
        return None

    def pure_states(self, t: SystemType) -> np.ndarray | None:
        return None

    def maximal_effects(self, t: SystemType) -> np.ndarray | None:
        return None

    def sample_pure_state(self, t: SystemType, rng: np.random.Generator) -> np.ndarray:
        pure = self.pure_states(t)
        if pure is None or not len(pure):
            raise UnsupportedTheory(f"{self.name} has no pure-state sampler for {t.label}")
        return pure[int(rng.integers(len(pure)))]

    def sample_maximal_effect(self, t: SystemType, rng: np.random.Generator) -> np.ndarray:
        effects = self.maximal_effects(t)
        if effects is None or not len(effects):
            raise UnsupportedTheory(f"{self.name} has no maximal effects for {t.label}")
        return effects[int(rng.integers(len(effects)))]

    def effect_distance(self, t: SystemType, e1, e2) -> float:
        """Largest probability difference over the pure states."""
        pure = self.pure_states(t)
        return float(np.max(np.abs(pure @ (np.asarray(e1) - np.asarray(e2)))))

    def state_distance(self, t: SystemType, s1, s2) -> float:
        effects = self.maximal_effects(t)
        return float(np.max(np.abs(effects @ (np.asarray(s1) - np.asarray(s2)))))

    def maximal_effects_near(self, t, state, eps, rng, count=8) -> np.ndarray:
        """Maximal effects giving probability at least ``1 - eps`` on ``state``."""
        effects = self.maximal_effects(t)
        return effects[effects @ state >= 1 - eps]

    def pure_states_near(self, t, effect, eps, rng, count=8) -> np.ndarray:
        pure = self.pure_states(t)
        return pure[pure @ effect >= 1 - eps]

    def matching_maximal_effect(self, t, state) -> np.ndarray | None:
        effects = self.maximal_effects(t)
        probs = effects @ state
        k = int(np.argmax(probs))
        return effects[k] if probs[k] >= 1 - DUALITY_TOLERANCE else None

    def matching_pure_state(self, t, effect) -> np.ndarray | None:
        pure = self.pure_states(t)
        probs = pure @ effect
        k = int(np.argmax(probs))
        return pure[k] if probs[k] >= 1 - DUALITY_TOLERANCE else None

    def is_pure(self, t: SystemType, state) -> bool:
        raise NotImplementedError

    def spanning_states(self, t: SystemType) -> np.ndarray:
        """Normalized states (rows) spanning the state space."""
        pure = self.pure_states(t)
        if pure is None:
            raise NotImplementedError
        return pure

    # -- transformations ---------------------------------------------------------

    def reversible_group(self, t: SystemType) -> list[tuple[np.ndarray, np.ndarray]] | None:
        """All reversible transformations as ``(T, T_inv)`` pairs, if finite."""
        return None

    def permutation_transform(self, mset: MaximalSet, perm) -> tuple[np.ndarray, np.ndarray]:
        """Reversible ``T`` with ``T A[n] = A[perm[n]]`` and its inverse."""
        group = self.reversible_group(mset.system)
        if group is None:
            raise NotImplementedError
        target = mset.states[list(perm)]
        for T, T_inv in group:
            if np.allclose((T @ mset.states.T).T, target, atol=DUALITY_TOLERANCE):
                return T, T_inv
        raise ConstructionUnavailable(f"no reversible transformation realises {tuple(perm)}")

    def compound_witness(self, mset: MaximalSet, perm):
        """Non-identity reversible ``R1, R2`` with ``R2 R1`` acting as ``perm``."""
        group = self.reversible_group(mset.system)
        if group is None:
            raise NotImplementedError
        eye = np.eye(mset.system.K)
        target = mset.states[list(perm)]
        candidates = [T for T, _ in group if np.linalg.norm(T - eye) > 1e-6]
        for R1, R2 in itertools.product(candidates, repeat=2):
            if np.allclose((R2 @ R1 @ mset.states.T).T, target, atol=DUALITY_TOLERANCE):
                return R1, R2
        return None

    def product_state(self, a, sa, b, sb) -> np.ndarray:
        return np.kron(sa, sb)

    def product_effect(self, a, ea, b, eb) -> np.ndarray:
        return np.kron(ea, eb)

    def product_maximal_set(self, ma: MaximalSet, mb: MaximalSet) -> MaximalSet:
        """Index ``n * N_b + m`` holds ``A[n] B[m]``."""
        a, b = ma.system, mb.system
        ab = self.composite(a, b)
        states = [self.product_state(a, x, b, y) for x in ma.states for y in mb.states]
        effects = [self.product_effect(a, x, b, y) for x in ma.effects for y in mb.effects]
        basis = None
        if ma.basis is not None and mb.basis is not None:
            basis = np.kron(ma.basis, mb.basis)
        return MaximalSet(ab, np.array(states), np.array(effects),
                          f"{ma.label}*{mb.label}", basis)

    def product_effect_rank(self, a: SystemType, b: SystemType) -> int:
        """Rank of all fiducial product effects inside the composite effect space."""
        ab = self.composite(a, b)
        rows = [self.product_effect(a, x, b, y) for x in np.eye(a.K) for y in np.eye(b.K)]
        return numerical_rank(np.array(rows).reshape(-1, ab.K))

    # -- faces ---------------------------------------------------------------------

    def face_basis(self, mset: MaximalSet, subset) -> np.ndarray:
        """States (columns) spanning the face of ``subset``."""
        raise NotImplementedError

    def smallest_face_dim(self, t: SystemType, states) -> int:
        raise UnsupportedTheory(f"{self.name} cannot compute smallest faces")

    def direct_filter(self, mset: MaximalSet, subset) -> np.ndarray:
        raise UnsupportedTheory(f"{self.name} has no direct filter")

    def sample_face_state(self, mset: MaximalSet, subset, rng) -> np.ndarray:
        raise UnsupportedTheory(f"{self.name} cannot sample face states")

    # -- random operations -----------------------------------------------------------

    def random_operation(self, inputs, outputs, rng) -> GptTensor:
        raise UnsupportedTheory(f"{self.name} has no random operation sampler")

    def teleportation_ingredients(self):
        raise ConstructionUnavailable(
            f"{self.name} has no entangled state, entangled effect, or equatorial state")

    def resolve(self, ref: str, inputs, outputs) -> GptTensor:
        raise UnsupportedTheory(f"{self.name} cannot resolve named objects")
