import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gptc.errors import NegativeWeight, ShapeMismatch, UnboundOperation
from gptc.ir import SystemType
from gptc.notation import parse
from gptc.tensor import (
    GptTensor,
    circuit_probability,
    clamp_probability,
    contraction_schedule,
    convex_mix,
    fragment_tensor,
    greedy_schedule,
    is_null,
    is_physical_probability,
    naive_schedule,
    schedule_peak,
)

a = SystemType("a", 2, 3)
CIRCUIT_H = "A^{a1a2b3} B^{a4c7} C_{a1}^{d5} D_{b3a4}^{c6} E_{d5a2c6c7}"


def test_tensor_validation():
    with pytest.raises(ShapeMismatch):
        GptTensor.state([1, 2], a)
    with pytest.raises(ShapeMismatch):
        GptTensor.state([1, 2], SystemType("x", 2))
    with pytest.raises(ValueError):
        GptTensor.state([1, np.nan, 0], a)
    t = GptTensor.state([0.5, 0.25, 0.25], a)
    with pytest.raises(ValueError):
        t.data[0] = 1.0


def test_chain_matches_matrix_algebra():
    rng = np.random.default_rng(0)
    s, T1, T2, e = rng.random(3), rng.random((3, 3)), rng.random((3, 3)), rng.random(3)
    f = parse("S^{a1} T_{a1}^{a2} U_{a2}^{a3} E_{a3}").retype({"a": a})
    binding = {"S": GptTensor.state(s, a), "T": GptTensor.transformation(T1, (a,), (a,)),
               "U": GptTensor.transformation(T2, (a,), (a,)), "E": GptTensor.effect(e, a)}
    assert circuit_probability(f, binding) == pytest.approx(e @ T2 @ T1 @ s, rel=1e-12)


def test_open_fragment_tensor():
    rng = np.random.default_rng(1)
    T1, T2 = rng.random((3, 3)), rng.random((3, 3))
    f = parse("T_{a1}^{a2} U_{a2}^{a3}").retype({"a": a})
    binding = {"T": GptTensor.transformation(T1, (a,), (a,)),
               "U": GptTensor.transformation(T2, (a,), (a,))}
    out = fragment_tensor(f, binding)
    assert np.allclose(out.matrix, T2 @ T1)


def test_identity_insertion_is_neutral():
    rng = np.random.default_rng(2)
    s, e = rng.random(3), rng.random(3)
    base = parse("S^{a1} E_{a1}").retype({"a": a})
    extended = parse("S^{a1} I_{a1}^{a2} E_{a2}").retype({"a": a})
    b = {"S": GptTensor.state(s, a), "E": GptTensor.effect(e, a), "I": GptTensor.identity(a)}
    assert circuit_probability(base, b) == pytest.approx(circuit_probability(extended, b))


def _random_binding(fragment, rng):
    binding = {}
    for i, op in enumerate(fragment.ops):
        shape = [t.K for t in op.outputs + op.inputs]
        binding[i] = GptTensor(rng.random(shape), op.outputs, op.inputs)
    return binding


def test_schedules_agree_and_greedy_is_not_worse():
    f = parse(CIRCUIT_H).retype({l: SystemType(l, 2, 4) for l in "abcd"})
    rng = np.random.default_rng(3)
    binding = _random_binding(f, rng)
    sizes = {w: 4 for w in f.wires}
    naive, greedy = naive_schedule(f), greedy_schedule(f, sizes)
    assert sorted(naive) == sorted(greedy) == sorted(f.wires)
    p1 = circuit_probability(f, binding, naive)
    p2 = circuit_probability(f, binding, greedy)
    assert p1 == pytest.approx(p2, rel=1e-10)
    best = contraction_schedule(f, sizes)
    assert schedule_peak(f, best, sizes) <= schedule_peak(f, naive, sizes)


def test_unbound_operations_listed():
    f = parse("S^{a1} E_{a1}").retype({"a": a})
    with pytest.raises(UnboundOperation) as exc:
        circuit_probability(f, {"S": GptTensor.state([1, 0, 0], a)})
    assert exc.value.missing == ("E",)


def test_wrong_arity_binding():
    f = parse("S^{a1} E_{a1}").retype({"a": a})
    with pytest.raises(ShapeMismatch):
        circuit_probability(f, {"S": GptTensor.effect([1, 0, 0], a),
                                "E": GptTensor.effect([1, 0, 0], a)})


def test_probability_helpers():
    assert clamp_probability(-1e-12) == 0.0 and clamp_probability(1 + 1e-12) == 1.0
    assert is_physical_probability(1 + 1e-10) and not is_physical_probability(1.1)
    assert is_null(np.zeros(3)) and not is_null([0, 1e-6, 0])


def test_convex_mix():
    mixed = convex_mix([[1, 0], [0, 1]], [0.25, 0.5])
    assert np.allclose(mixed, [0.25, 0.5])
    with pytest.raises(NegativeWeight):
        convex_mix([[1, 0], [0, 1]], [-0.1, 0.5])
    with pytest.raises(ValueError):
        convex_mix([[1, 0], [0, 1]], [0.7, 0.5])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_contraction_is_multilinear(seed):
    rng = np.random.default_rng(seed)
    f = parse("S^{a1} T_{a1}^{a2} E_{a2}").retype({"a": a})
    b = _random_binding(f, rng)
    s2 = GptTensor.state(rng.random(3), a)
    lam = float(rng.random())
    mixed = dict(b)
    mixed[0] = GptTensor.state(lam * b[0].vector + (1 - lam) * s2.vector, a)
    other = dict(b)
    other[0] = s2
    lhs = circuit_probability(f, mixed)
    rhs = lam * circuit_probability(f, b) + (1 - lam) * circuit_probability(f, other)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)
