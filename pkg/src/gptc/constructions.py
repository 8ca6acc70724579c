"""Circuit gadgets built from permutations, maximal sets and an ancilla.

Every gadget is written in index notation, parsed, bound to theory tensors
and contracted, so the constructions exercise the same engine as user
circuits.  Each builder returns its result together with a
:class:`CheckReport`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AncillaUnavailable,
    BadOutcomeIndex,
    ConstructionUnavailable,
    NMismatch,
    NotAFilter,
    UnsupportedTheory,
)
from .ir import Fragment, Operation, SystemType, Wire
from .notation import parse
from .postulates import DEFAULT_SEED, InformationalFace, build_face, verify_filter
from .report import CheckReport
from .tensor import GptTensor, circuit_probability, fragment_tensor
from .theories.base import MaximalSet, Theory
from .theories.quantum import oracle_probability

TOLERANCE = 1e-9

REVERSIBLE_GADGET = "Wp^{b1} P_{a2 b1}^{a3 b4} Ue_{a3} Vp^{a5} Q_{a5 b4}^{a6 b7} We_{b7}"
FILTER_GADGET = "Vp^{b1} P_{a2 b1}^{a3 b4} Ue_{a3} Up^{a5} Pt_{a5 b4}^{a6 b7} T_{b7}"

TELEPORT_N = "B^{a1} P_{a2 a3}^{a4 a5} Me_{a1 a4} One_{a5}"
TELEPORT_TRANSFER = "B^{a1} P_{a2 a3}^{a4 a5} Me_{a1 a4} One_{a5} Mp^{a3 a6}"
TELEPORT_LOOP = "B^{a1} Mp^{a2 a3} P_{a3 a2}^{a4 a5} Me_{a1 a4} One_{a5}"
TELEPORT_FACTOR = 0.125
LOOP_BOUND = 0.5


def swap_permutation(N: int, keep=None) -> tuple[int, ...]:
    """``nm -> mn`` on product index ``n * N + m``; restricted to ``keep`` if given."""
    perm = []
    for n in range(N):
        for m in range(N):
            inside = keep is None or (n in keep and m in keep)
            perm.append(m * N + n if inside else n * N + m)
    return tuple(perm)


def _gadget(text: str, a: SystemType, b: SystemType) -> Fragment:
    return parse(text).retype({"a": a, "b": b})


def _pair_transform(theory: Theory, product: MaximalSet, perm, a, b):
    try:
        P, P_inv = theory.permutation_transform(product, perm)
    except NotImplementedError:
        raise ConstructionUnavailable(
            f"{theory.name} cannot build permutation transformations on {a.label}{b.label}"
        ) from None
    return (GptTensor.transformation(P, (a, b), (a, b)),
            GptTensor.transformation(P_inv, (a, b), (a, b)))


def _ancilla(theory: Theory, a: SystemType, b: SystemType | None) -> SystemType:
    b = b or theory.ancilla(a)
    if b.N != a.N:
        raise AncillaUnavailable(f"ancilla {b.label} has N={b.N}, need N={a.N}")
    return b


# -- reversible transformation between maximal sets -----------------------------

def _reversible_matrix(theory, U, V, b):
    a = U.system
    W = theory.canonical_maximal_set(b)
    swap = swap_permutation(a.N)
    P, _ = _pair_transform(theory, theory.product_maximal_set(U, W), swap, a, b)
    Q, _ = _pair_transform(theory, theory.product_maximal_set(V, W), swap, a, b)
    binding = {"Wp": W.state(0, b), "P": P, "Ue": U.effect(0, a), "Vp": V.state(0, a),
               "Q": Q, "We": W.effect(0, b)}
    return fragment_tensor(_gadget(REVERSIBLE_GADGET, a, b), binding)


def build_reversible_between_pure(theory: Theory, U: MaximalSet, V: MaximalSet,
                                  ancilla: SystemType | None = None):
    """Transformation taking ``U[n]`` to ``V[n]`` for every ``n``.

    The ancilla starts in ``W[0]``; a swap in the ``U x W`` product set moves
    the input onto the ancilla, the system is reset into ``V[0]``, and a swap
    in the ``V x W`` product set moves it back.
    """
    a = U.system
    if V.system.N != a.N or V.system.K != a.K:
        raise NMismatch("both maximal sets must live on the same type")
    b = _ancilla(theory, a, ancilla)
    T = _reversible_matrix(theory, U, V, b)
    R = _reversible_matrix(theory, V, U, b)
    eye = np.eye(a.K)
    inverse = float(max(np.max(np.abs(R.matrix @ T.matrix - eye)),
                        np.max(np.abs(T.matrix @ R.matrix - eye))))
    action = float(np.max(np.abs((T.matrix @ U.states.T).T - V.states)))
    residual = max(inverse, action)
    report = CheckReport(
        f"reversible:{theory.name}:{a.label}:{U.label}->{V.label}", residual, TOLERANCE,
        witness=None if residual < TOLERANCE else {"transform": T.matrix},
        details={"inverse_residual": inverse, "action_residual": action, "ancilla": b.label})
    return T, report


# -- filters ------------------------------------------------------------------------

def build_filter(theory: Theory, face: InformationalFace, n1: int | None = None,
                 ancilla: SystemType | None = None):
    """Filter for ``face`` from a partial swap, a post-selection and the unit effect."""
    U = face.mset
    a = U.system
    n1 = face.subset[0] if n1 is None else int(n1)
    if n1 not in face.subset:
        raise BadOutcomeIndex(f"n1 = {n1} is not in the outcome set {list(face.subset)}")
    b = _ancilla(theory, a, ancilla)
    V = theory.canonical_maximal_set(b)
    perm = swap_permutation(a.N, set(face.subset))
    P, P_inv = _pair_transform(theory, theory.product_maximal_set(U, V), perm, a, b)
    binding = {"Vp": V.state(n1, b), "P": P, "Ue": U.effect(n1, a), "Up": U.state(n1, a),
               "Pt": P_inv, "T": GptTensor.effect(theory.unit_effect(b), b)}
    F = fragment_tensor(_gadget(FILTER_GADGET, a, b), binding)

    details = {"n1": n1, "ancilla": b.label}
    try:
        details.update(verify_filter(theory, face, F))
        clause = 0.0
    except NotAFilter as exc:
        details["failed_clause"] = exc.clause
        clause = exc.residual
    M = F.matrix
    passed = M @ face.basis
    idem = float(np.max(np.abs(M @ passed - passed))) if passed.size else 0.0
    details["idempotence_residual"] = idem
    direct = 0.0
    try:
        direct = float(np.max(np.abs(M - theory.direct_filter(U, face.subset))))
        details["direct_residual"] = direct
    except UnsupportedTheory:
        pass
    residual = max(clause, idem, direct)
    report = CheckReport(
        f"filter:{theory.name}:{a.label}:{list(face.subset)}", residual, TOLERANCE,
        witness=None if residual < TOLERANCE else {"filter": M}, details=details)
    return F, report


# -- system substitution ----------------------------------------------------------

def _fresh(names, base):
    name, k = base, 1
    while name in names:
        k += 1
        name = f"{base}{k}"
    names.add(name)
    return name


@dataclass
class Substitution:
    circuit: Fragment
    gadget_binding: dict
    wire: Wire
    target: SystemType


def substitute_system(theory: Theory, circuit: Fragment, wire: Wire, target: SystemType,
                      binding=None, n_bindings: int = 100, seed: int = DEFAULT_SEED):
    """Route ``wire`` through a system of type ``target`` and back.

    Returns the new :class:`Substitution` and a report comparing circuit
    probabilities before and after on random bindings (and on ``binding``
    when one is given).
    """
    mapping = {t.label: theory.bind(t) for op in circuit.ops for t in op.inputs + op.outputs}
    circuit = circuit.retype(mapping)
    if wire not in circuit.wires:
        raise ValueError(f"{wire} is not a wire of the circuit")
    a = circuit.output_type(wire.producer)
    b = theory.bind(target)
    if b.N != a.N:
        raise NMismatch(f"cannot replace N={a.N} type {a.label} by N={b.N} type {b.label}")

    U, V = theory.canonical_maximal_set(a), theory.canonical_maximal_set(b)
    P, P_inv = _pair_transform(theory, theory.product_maximal_set(U, V),
                               swap_permutation(a.N), a, b)
    names = {op.name for op in circuit.ops}
    n = len(circuit.ops)
    new_ops = [
        Operation(_fresh(names, "SubV"), (), (b,)),
        Operation(_fresh(names, "SubP"), (a, b), (a, b)),
        Operation(_fresh(names, "SubU"), (a,), ()),
        Operation(_fresh(names, "SubUp"), (), (a,)),
        Operation(_fresh(names, "SubPt"), (a, b), (a, b)),
        Operation(_fresh(names, "SubT"), (b,), ()),
    ]
    vp, p, ue, up, pt, tt = range(n, n + 6)
    wires = (circuit.wires - {wire}) | {
        Wire(wire.src, wire.out, p, 0), Wire(vp, 0, p, 1), Wire(p, 0, ue, 0),
        Wire(p, 1, pt, 1), Wire(up, 0, pt, 0), Wire(pt, 0, wire.dst, wire.inp),
        Wire(pt, 1, tt, 0)}
    new = Fragment(circuit.ops + tuple(new_ops), wires)
    gadget = {vp: V.state(0, b), p: P, ue: U.effect(0, a), up: U.state(0, a), pt: P_inv,
              tt: GptTensor.effect(theory.unit_effect(b), b)}

    rng = np.random.default_rng(seed)
    trials = []
    if binding is not None:
        trials.append({i: binding.get(i, binding.get(op.name))
                       for i, op in enumerate(circuit.ops)})
    for _ in range(n_bindings):
        trials.append({i: theory.random_operation(op.inputs, op.outputs, rng)
                       for i, op in enumerate(circuit.ops)})
    worst, worst_pair = 0.0, None
    for trial in trials:
        before = circuit_probability(circuit, trial)
        after = circuit_probability(new, {**trial, **gadget})
        if abs(before - after) >= worst:
            worst, worst_pair = abs(before - after), (before, after)
    report = CheckReport(
        f"substitute:{theory.name}:{a.label}->{b.label}", worst, TOLERANCE, seed=seed,
        witness=None if worst < TOLERANCE else {"before": worst_pair[0], "after": worst_pair[1]},
        notes=f"{len(trials)} bindings", details={"max_difference": worst})
    return Substitution(new, gadget, wire, b), report


# -- teleportation ---------------------------------------------------------------

@dataclass
class TeleportationReport:
    factor: float
    identity_residual: float
    trace: float
    closed_loop: float
    k_bound: float
    K: int
    transfer: np.ndarray = field(repr=False, default=None)
    oracle_loop: float | None = None
    fragment_residual: float = 0.0

    @property
    def factor_residual(self) -> float:
        return abs(self.factor - TELEPORT_FACTOR)

    @property
    def trace_residual(self) -> float:
        return abs(self.trace - self.factor * self.K)

    def reports(self, theory_name: str = "quantum:2") -> list[CheckReport]:
        excess = max(0.0, self.closed_loop - LOOP_BOUND)
        saturation = abs(self.closed_loop - LOOP_BOUND)
        oracle = 0.0 if self.oracle_loop is None else abs(self.oracle_loop - self.closed_loop)
        tag = f"teleport:{theory_name}"
        return [
            CheckReport(f"{tag}:factor", max(self.factor_residual, self.identity_residual,
                                             self.fragment_residual), TOLERANCE,
                        details={"factor": self.factor, "identity_residual": self.identity_residual,
                                 "expected": TELEPORT_FACTOR}),
            CheckReport(f"{tag}:trace", abs(self.trace - TELEPORT_FACTOR * self.K), TOLERANCE,
                        details={"trace": self.trace, "K": self.K}),
            CheckReport(f"{tag}:closed-loop", max(excess, oracle), TOLERANCE,
                        details={"probability": self.closed_loop, "bound": LOOP_BOUND,
                                 "saturation_gap": saturation, "oracle": self.oracle_loop}),
            CheckReport(f"{tag}:k-bound", max(0.0, self.K - self.k_bound), TOLERANCE,
                        notes=f"K <= {self.k_bound:.12g}",
                        details={"k_bound": self.k_bound, "K": self.K}),
        ]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports())


def run_teleportation_suite(theory: Theory) -> TeleportationReport:
    """The gebit teleportation identities on a theory that provides the ingredients."""
    tensors, quantum = theory.teleportation_ingredients()
    t = tensors["B"].outputs[0]
    N = fragment_tensor(parse(TELEPORT_N).retype({"a": t}), tensors)
    M = tensors["Mp"]
    transfer = np.einsum("ij,jk->ik", N.data, M.data)
    via_fragment = fragment_tensor(parse(TELEPORT_TRANSFER).retype({"a": t}), tensors).matrix
    # fragment axes are (open output, open input): transpose to (a1, a3) order
    fragment_residual = float(np.max(np.abs(via_fragment.T - transfer)))
    K = t.K
    factor = float(np.trace(transfer)) / K
    identity_residual = float(np.max(np.abs(transfer - TELEPORT_FACTOR * np.eye(K))))
    trace = float(np.einsum("ij,ji->", N.data, M.data))
    loop = parse(TELEPORT_LOOP).retype({"a": t})
    closed = circuit_probability(loop, tensors)
    oracle = None
    if quantum is not None:
        oracle = oracle_probability(loop, quantum)
    k_bound = LOOP_BOUND / factor if factor > 0 else float("inf")
    return TeleportationReport(factor, identity_residual, trace, closed, k_bound, K,
                               transfer, oracle, fragment_residual)


# -- suite -----------------------------------------------------------------------

def constructions_suite(theory: Theory, seed: int = DEFAULT_SEED) -> list[CheckReport]:
    """Reversible map, filter and substitution on the theory's default type."""
    a = theory.system("a")
    rng = np.random.default_rng(seed)
    U = theory.canonical_maximal_set(a)
    if hasattr(theory, "named_maximal_set"):
        V = theory.named_maximal_set(a, "x")
    else:
        V = theory.random_maximal_set(a, rng)
    reports = [build_reversible_between_pure(theory, U, V)[1]]
    face = build_face(theory, U, range((a.N + 1) // 2))
    reports.append(build_filter(theory, face)[1])
    circuit = parse("A^{a1} B_{a1}").retype({"a": a})
    (w,) = circuit.wires
    reports.append(substitute_system(theory, circuit, w, theory.ancilla(a),
                                     n_bindings=20, seed=seed)[1])
    return reports
