import itertools

import numpy as np
import pytest

from gptc.errors import NotAState, UnknownReference
from gptc.notation import parse
from gptc.tensor import GptTensor, circuit_probability
from gptc.theories import classical_theory


def test_k_equals_n():
    assert classical_theory(3).types_table() == [(1, 1), (2, 2), (3, 3), (4, 4)]


def test_reversible_group_is_symmetric_group():
    c = classical_theory(3)
    group = c.reversible_group(c.system("a"))
    assert len(group) == 6
    for T, T_inv in group:
        assert np.allclose(T @ T_inv, np.eye(3))
        assert sorted(T.sum(axis=0)) == [1, 1, 1]


def test_group_not_enumerated_past_budget():
    c = classical_theory(6)
    assert c.reversible_group(c.system("a")) is None


def test_permutation_transform_without_group():
    c = classical_theory(6)
    a = c.system("a")
    mset = c.canonical_maximal_set(a)
    perm = (5, 0, 1, 2, 3, 4)
    T, T_inv = c.permutation_transform(mset, perm)
    assert np.allclose((T @ mset.states.T).T, mset.states[list(perm)])
    assert np.allclose(T_inv @ T, np.eye(6))


def test_is_pure():
    c = classical_theory(3)
    a = c.system("a")
    assert c.is_pure(a, [0, 1, 0]) and not c.is_pure(a, [0.5, 0.5, 0])
    with pytest.raises(NotAState):
        c.is_pure(a, [1.5, -0.5, 0])


def test_distances_and_faces():
    c = classical_theory(4)
    a = c.system("a")
    assert c.state_distance(a, [1, 0, 0, 0], [0, 1, 0, 0]) == pytest.approx(1.0)
    assert c.smallest_face_dim(a, np.array([[0.5, 0.5, 0, 0], [0.2, 0.8, 0, 0]])) == 2
    F = c.direct_filter(c.canonical_maximal_set(a), (0, 2))
    assert np.allclose(F @ [0.1, 0.2, 0.3, 0.4], [0.1, 0, 0.3, 0])


def test_die_and_coin_probabilities_are_exact():
    c = classical_theory(6)
    d, k = c.system("d", 6), c.system("k", 2)
    f = parse("D^{d1} K^{k2} E_{d1 k2}").retype({"d": d, "k": k})
    dk = c.composite(d, k)
    assert (dk.N, dk.K) == (12, 12)
    prep = {"D": c.resolve("prep:3", (), (d,)), "K": c.resolve("prep:1", (), (k,))}
    for n, m in itertools.product(range(6), range(2)):
        e = np.zeros((6, 2))
        e[n, m] = 1
        binding = {**prep, "E": GptTensor(e, (), (d, k))}
        assert circuit_probability(f, binding) == (1.0 if (n, m) == (3, 1) else 0.0)
    unit = {**prep, "E": c.resolve("effect:unit", (d, k), ())}
    assert circuit_probability(f, unit) == pytest.approx(1.0)


def test_resolve():
    c = classical_theory(2)
    a = c.system("a")
    flip = c.resolve("channel:perm:1,0", (a,), (a,))
    assert np.allclose(flip.matrix @ [1, 0], [0, 1])
    with pytest.raises(UnknownReference):
        c.resolve("channel:perm:0,0", (a,), (a,))
    with pytest.raises(UnknownReference):
        c.resolve("prep:7", (), (a,))
