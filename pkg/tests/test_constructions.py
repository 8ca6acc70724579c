import numpy as np
import pytest

from gptc.constructions import (
    build_filter,
    build_reversible_between_pure,
    constructions_suite,
    run_teleportation_suite,
    substitute_system,
    swap_permutation,
)
from gptc.errors import BadOutcomeIndex, ConstructionUnavailable, NMismatch
from gptc.ir import SystemType
from gptc.notation import parse
from gptc.postulates import build_face
from gptc.tensor import circuit_probability
from gptc.theories import classical_theory, quantum_theory
from gptc.theories.quantum import QuantumOperation, gate


def test_swap_permutation_is_an_involution():
    for N in (2, 3, 4):
        perm = swap_permutation(N)
        assert sorted(perm) == list(range(N * N))
        assert all(perm[perm[k]] == k for k in range(N * N))


def test_reversible_z_to_x_is_hadamard():
    q = quantum_theory(2)
    a = q.system("a")
    T, report = build_reversible_between_pure(
        q, q.canonical_maximal_set(a), q.named_maximal_set(a, "x"))
    H = q.embed(QuantumOperation.unitary(gate("H", (2,)), (2,)), (a,), (a,)).matrix
    assert report.passed
    assert np.max(np.abs(T.matrix - H)) < 1e-12


@pytest.mark.parametrize("N", [2, 3])
def test_reversible_between_random_sets(N):
    q = quantum_theory(N)
    a = q.system("a")
    rng = np.random.default_rng(N)
    U, V = q.random_maximal_set(a, rng), q.random_maximal_set(a, rng)
    T, report = build_reversible_between_pure(q, U, V)
    assert report.passed, report.summary()
    assert np.allclose((T.matrix @ U.states.T).T, V.states, atol=1e-9)


def test_reversible_needs_equal_types():
    q2, q3 = quantum_theory(2), quantum_theory(3)
    U = q2.canonical_maximal_set(q2.system("a"))
    V = q3.canonical_maximal_set(q3.system("a"))
    with pytest.raises(NMismatch):
        build_reversible_between_pure(q2, U, V)


@pytest.mark.parametrize("make, N, subset", [
    (classical_theory, 3, (0, 2)), (quantum_theory, 3, (1, 2)), (quantum_theory, 4, (0, 1, 3)),
])
def test_filter_construction_matches_direct_filter(make, N, subset):
    th = make(N)
    mset = th.canonical_maximal_set(th.system("a"))
    face = build_face(th, mset, subset)
    F, report = build_filter(th, face)
    assert report.passed, report.summary()
    assert np.max(np.abs(F.matrix - th.direct_filter(mset, subset))) < 1e-9


def test_filter_rejects_outside_anchor():
    q = quantum_theory(3)
    face = build_face(q, q.canonical_maximal_set(q.system("a")), (0, 1))
    with pytest.raises(BadOutcomeIndex):
        build_filter(q, face, n1=2)


def test_substitution_preserves_probabilities():
    q = quantum_theory(2)
    a = q.system("a")
    circuit = parse("S^{a1} U_{a1}^{a2} E_{a2}").retype({"a": a})
    wire = next(w for w in circuit.wires if w.src == 0)
    binding = {"S": q.resolve("prep:z+", (), (a,)), "U": q.resolve("channel:unitary:H", (a,), (a,)),
               "E": q.resolve("effect:basis[z]:0", (a,), ())}
    sub, report = substitute_system(q, circuit, wire, SystemType("b"), binding, n_bindings=30)
    assert report.passed, report.summary()
    assert len(sub.circuit.ops) == len(circuit.ops) + 6
    assert {op.name for op in sub.circuit.ops} >= {"SubV", "SubP", "SubT"}
    full = {**{i: binding[op.name] for i, op in enumerate(circuit.ops)}, **sub.gadget_binding}
    assert circuit_probability(sub.circuit, full) == pytest.approx(0.5)


def test_substitution_requires_same_n():
    q = quantum_theory(2)
    a = q.system("a")
    circuit = parse("S^{a1} E_{a1}").retype({"a": a})
    (w,) = circuit.wires
    with pytest.raises(NMismatch):
        substitute_system(q, circuit, w, q.system("c", 3), n_bindings=1)


def test_teleportation_numbers():
    rep = run_teleportation_suite(quantum_theory(2))
    assert rep.transfer.shape == (4, 4)
    assert np.allclose(rep.transfer, np.eye(4) / 8, atol=1e-12)
    assert rep.fragment_residual < 1e-12
    assert rep.passed


def test_teleportation_unavailable_classically():
    with pytest.raises(ConstructionUnavailable):
        run_teleportation_suite(classical_theory(2))


@pytest.mark.parametrize("make, N", [(classical_theory, 2), (classical_theory, 3),
                                     (quantum_theory, 2), (quantum_theory, 3)])
def test_constructions_suite(make, N):
    reports = constructions_suite(make(N), seed=4)
    assert len(reports) == 3
    assert all(r.passed for r in reports), [r.summary() for r in reports if not r.passed]
