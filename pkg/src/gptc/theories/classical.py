"""Classical probability theory: states are probability vectors, K = N."""
from __future__ import annotations

import itertools
import re

import numpy as np

from ..errors import NotAState, UnknownReference
from ..ir import SystemType
from ..linalg import permutation_matrix
from ..tensor import GptTensor
from .base import MaximalSet, Theory
from .resolve import resolve_common

MAX_GROUP_N = 5
PURITY_TOLERANCE = 1e-8


class ClassicalTheory(Theory):
    finite = True

    def __init__(self, N: int = 2):
        super().__init__()
        if N < 1:
            raise ValueError("N must be at least 1")
        self.default_N = N
        self.name = f"classical:{N}"

    def k_of(self, N: int) -> int:
        return N

    def unit_effect(self, t: SystemType) -> np.ndarray:
        return np.ones(t.K)

    def canonical_maximal_set(self, t: SystemType) -> MaximalSet:
        return MaximalSet(t, np.eye(t.K), np.eye(t.K), "basis")

    def maximal_sets(self, t):
        return [self.canonical_maximal_set(t)]

    def pure_states(self, t):
        return np.eye(t.K)

    def maximal_effects(self, t):
        return np.eye(t.K)

    def state_distance(self, t, s1, s2) -> float:
        return 0.5 * float(np.sum(np.abs(np.asarray(s1) - np.asarray(s2))))

    def is_pure(self, t, state) -> bool:
        p = np.asarray(state, dtype=float)
        if p.min() < -PURITY_TOLERANCE:
            raise NotAState(f"negative probability {p.min():g}")
        total = p.sum()
        if total <= PURITY_TOLERANCE:
            return False
        return bool(np.sum(p > PURITY_TOLERANCE * total) == 1)

    def spanning_states(self, t):
        return np.eye(t.K)

    def reversible_group(self, t):
        if t.K > MAX_GROUP_N:
            return None
        group = []
        for perm in itertools.permutations(range(t.K)):
            P = permutation_matrix(perm)
            group.append((P, P.T))
        return group

    def permutation_transform(self, mset, perm):
        # the maximal set of a classical system is the basis up to ordering
        order = [int(np.argmax(s)) for s in mset.states]
        sigma = [0] * len(order)
        for n, p in enumerate(perm):
            sigma[order[n]] = order[p]
        P = permutation_matrix(sigma)
        return P, P.T

    def face_basis(self, mset, subset):
        return mset.states[sorted(subset)].T

    def smallest_face_dim(self, t, states) -> int:
        states = np.atleast_2d(np.asarray(states))
        return int(np.sum(np.max(np.abs(states), axis=0) > 1e-9))

    def direct_filter(self, mset, subset):
        return sum((np.outer(mset.states[n], mset.effects[n]) for n in subset),
                   np.zeros((mset.system.K, mset.system.K)))

    def sample_face_state(self, mset, subset, rng):
        w = rng.dirichlet(np.ones(len(subset)))
        return w @ mset.states[sorted(subset)]

    def random_operation(self, inputs, outputs, rng) -> GptTensor:
        k_in = int(np.prod([t.K for t in inputs]))
        k_out = int(np.prod([t.K for t in outputs]))
        if not outputs:
            return GptTensor(rng.uniform(size=k_in), (), tuple(inputs))
        m = rng.dirichlet(np.ones(k_out), size=k_in).T
        return GptTensor(m, tuple(outputs), tuple(inputs))

    def resolve(self, ref, inputs, outputs):
        found = resolve_common(self, ref, inputs, outputs)
        if found is not None:
            return found
        m = re.fullmatch(r"(prep|effect):(?:basis(?:\[\w*\])?:)?(\d+)", ref)
        if m and len(inputs + outputs) == 1:
            t = (inputs + outputs)[0]
            n = int(m.group(2))
            if n >= t.K:
                raise UnknownReference(f"{ref}: index out of range for N={t.N}")
            vec = np.eye(t.K)[n]
            return GptTensor(vec, tuple(outputs), tuple(inputs))
        m = re.fullmatch(r"channel:perm:([\d,\s]+)", ref)
        if m and len(inputs) == 1 and len(outputs) == 1:
            perm = [int(x) for x in m.group(1).split(",")]
            if sorted(perm) != list(range(inputs[0].K)):
                raise UnknownReference(f"{ref}: not a permutation of 0..{inputs[0].K - 1}")
            return GptTensor(permutation_matrix(perm), tuple(outputs), tuple(inputs))
        raise UnknownReference(f"{self.name} does not know {ref!r}")
