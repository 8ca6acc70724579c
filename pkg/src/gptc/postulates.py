"""Checks of the five postulates, face machinery and the Wootters hierarchy.

Each ``check_*`` returns a :class:`CheckReport` whose ``residual`` is the
largest violation found, so ``passed`` is simply ``residual < tolerance``.
Integer-valued conditions (dimension counts, ranks) enter the residual as
their integer mismatch.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadOutcomeIndex,
    ConstructionUnavailable,
    EmptyOutcomeSet,
    EmptyTable,
    NotAFilter,
    NotInFace,
    UnsupportedTheory,
)
from .ir import SystemType
from .linalg import numerical_rank
from .report import CheckReport
from .tensor import GptTensor, is_null
from .theories.base import MaximalSet, Theory

DEFAULT_SEED = 1729
THEORY_TOLERANCE = 1e-9
FACE_TOLERANCE = 1e-9


def _matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, GptTensor) else np.asarray(x, dtype=float)


# -- faces ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InformationalFace:
    """States supported on ``subset`` of the outcomes of ``mset``."""

    mset: MaximalSet
    subset: tuple[int, ...]
    complement: tuple[int, ...]
    basis: np.ndarray
    hyperplane: np.ndarray

    @property
    def system(self) -> SystemType:
        return self.mset.system

    @property
    def dim(self) -> int:
        return numerical_rank(self.basis)

    def residual(self, states) -> float:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if not states.size:
            return 0.0
        return float(np.max(np.abs(states @ self.hyperplane)))


def build_face(theory: Theory, mset: MaximalSet, subset) -> InformationalFace:
    subset = tuple(sorted({int(n) for n in subset}))
    if not subset:
        raise EmptyOutcomeSet("the outcome subset of a face must be nonempty")
    if subset[0] < 0 or subset[-1] >= mset.N:
        raise BadOutcomeIndex(f"outcomes {subset} not within 0..{mset.N - 1}")
    complement = tuple(m for m in range(mset.N) if m not in subset)
    basis = theory.face_basis(mset, subset)
    return InformationalFace(mset, subset, complement, basis, mset.hyperplane(subset))


def is_non_flat(states, face: InformationalFace, tol: float = FACE_TOLERANCE) -> bool:
    """Whether ``states`` (rows) lie in ``face`` and span it."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    r = face.residual(states)
    if r >= tol:
        raise NotInFace(f"state off the face hyperplane by {r:.3g}")
    return numerical_rank(states) == face.dim


# -- P1 ---------------------------------------------------------------------------

def check_p1(theory: Theory, system: SystemType | None = None, n_samples: int = 500,
             seed: int = DEFAULT_SEED, eps: float = 1e-6, delta: float = 1e-2) -> CheckReport:
    """Pure states and maximal effects match one-to-one.

    Existence: each pure state gets probability one from some maximal effect.
    Rigidity: maximal effects within ``eps`` of probability one on the state
    lie within ``delta`` of the matching one, and the same with the roles of
    states and effects exchanged.  Tables are enumerated exhaustively.
    """
    rng = np.random.default_rng(seed)
    t = system or theory.system("a")
    if theory.exhaustive:
        states = list(theory.pure_states(t))
        effects = list(theory.maximal_effects(t))
        mode = "exhaustive"
    else:
        states = [theory.sample_pure_state(t, rng) for _ in range(n_samples)]
        effects = [theory.sample_maximal_effect(t, rng) for _ in range(n_samples)]
        mode = "sampled"
    if not states:
        raise UnsupportedTheory(f"{theory.name} lists no pure states for {t.label}")

    existence = rigidity = roundtrip = 0.0
    worst_distance = 0.0
    witness = None

    def note(w):
        nonlocal witness
        if witness is None:
            witness = w

    for s in states:
        e = theory.matching_maximal_effect(t, s)
        if e is None:
            effs = theory.maximal_effects(t)
            best = max((float(x @ s) for x in effs), default=0.0) if effs is not None else 0.0
            existence = max(existence, 1.0 - best)
            note({"kind": "no maximal effect gives probability one", "state": s})
            continue
        existence = max(existence, 1.0 - float(e @ s))
        for e2 in theory.maximal_effects_near(t, s, eps, rng):
            d = theory.effect_distance(t, e, e2)
            worst_distance = max(worst_distance, d)
            if d > delta:
                rigidity = max(rigidity, d - delta)
                note({"kind": "two maximal effects give probability one", "state": s,
                      "effects": [e, e2], "probabilities": [float(e @ s), float(e2 @ s)]})
        back = theory.matching_pure_state(t, e)
        err = 1.0 if back is None else theory.state_distance(t, back, s)
        if err > THEORY_TOLERANCE:
            note({"kind": "round trip state -> effect -> state moved", "state": s, "effect": e})
        roundtrip = max(roundtrip, err)

    for e in effects:
        s = theory.matching_pure_state(t, e)
        if s is None:
            existence = max(existence, 1.0)
            note({"kind": "no pure state gives probability one", "effect": e})
            continue
        existence = max(existence, 1.0 - float(e @ s))
        for s2 in theory.pure_states_near(t, e, eps, rng):
            d = theory.state_distance(t, s, s2)
            worst_distance = max(worst_distance, d)
            if d > delta:
                rigidity = max(rigidity, d - delta)
                note({"kind": "two pure states give probability one", "effect": e,
                      "states": [s, s2]})

    residual = max(existence, rigidity, roundtrip)
    return CheckReport(
        id=f"p1:{theory.name}:{t.label}", residual=residual, tolerance=THEORY_TOLERANCE,
        witness=witness if residual >= THEORY_TOLERANCE else None, seed=seed,
        notes=f"{mode}: {len(states)} pure states, {len(effects)} maximal effects",
        details={"existence": existence, "rigidity_excess": rigidity, "round_trip": roundtrip,
                 "max_near_distance": worst_distance, "eps": eps, "delta": delta})


# -- P2, P3 -------------------------------------------------------------------------

def check_p2(theory: Theory, a: SystemType | None = None,
             b: SystemType | None = None) -> CheckReport:
    """``N_ab = N_a N_b`` and products of maximal sets are maximal sets."""
    a = a or theory.system("a")
    b = b or theory.ancilla(a)
    ab = theory.composite(a, b)
    pm = theory.product_maximal_set(theory.canonical_maximal_set(a),
                                    theory.canonical_maximal_set(b))
    n_gap = abs(ab.N - a.N * b.N)
    duality = pm.duality_residual() if pm.N == ab.N else 1.0
    residual = max(float(n_gap), duality)
    return CheckReport(
        id=f"p2:{theory.name}:{a.label}{b.label}", residual=residual,
        tolerance=THEORY_TOLERANCE,
        witness=None if residual < THEORY_TOLERANCE else {"N_a": a.N, "N_b": b.N, "N_ab": ab.N},
        details={"N_a": a.N, "N_b": b.N, "N_ab": ab.N, "product_set_size": pm.N,
                 "duality_residual": duality})


def check_p3(theory: Theory, a: SystemType | None = None,
             b: SystemType | None = None) -> CheckReport:
    """``K_ab = K_a K_b`` and product effects span the composite effect space."""
    a = a or theory.system("a")
    b = b or theory.ancilla(a)
    ab = theory.composite(a, b)
    rank = theory.product_effect_rank(a, b)
    k_gap = abs(ab.K - a.K * b.K)
    rank_gap = ab.K - rank
    log_gap = abs(math.log(ab.N) - (math.log(a.N) + math.log(b.N)))
    residual = float(max(k_gap, rank_gap))
    return CheckReport(
        id=f"p3:{theory.name}:{a.label}{b.label}", residual=residual,
        tolerance=THEORY_TOLERANCE,
        witness=None if residual < THEORY_TOLERANCE else
        {"K_a": a.K, "K_b": b.K, "K_ab": ab.K, "product_effect_rank": rank},
        details={"K_a": a.K, "K_b": b.K, "K_ab": ab.K, "product_effect_rank": rank,
                 "log_additivity_gap": log_gap})


# -- P4 ------------------------------------------------------------------------------

def _action_residual(T, mset: MaximalSet, perm) -> float:
    moved = (T @ mset.states.T).T
    return float(np.max(np.abs(moved - mset.states[list(perm)])))


def _perm_label(perm) -> str:
    return "".join(str(p) for p in perm) if len(perm) <= 10 else ",".join(map(str, perm))


def check_p4prime(theory: Theory, system: SystemType | None = None, perm=None,
                  mset: MaximalSet | None = None) -> CheckReport:
    """A reversible transformation realises ``perm`` on a maximal set."""
    t = system or theory.system("a")
    mset = mset or theory.canonical_maximal_set(t)
    perm = tuple(range(1, mset.N)) + (0,) if perm is None else tuple(perm)
    if sorted(perm) != list(range(mset.N)):
        raise ValueError(f"{perm} is not a permutation of 0..{mset.N - 1}")
    rid = f"p4prime:{theory.name}:{t.label}:{_perm_label(perm)}"
    try:
        T, T_inv = theory.permutation_transform(mset, perm)
    except ConstructionUnavailable as exc:
        return CheckReport(rid, 1.0, 1e-10, witness={"permutation": perm}, notes=str(exc))
    eye = np.eye(t.K)
    inverse = float(max(np.max(np.abs(T @ T_inv - eye)), np.max(np.abs(T_inv @ T - eye))))
    action = _action_residual(T, mset, perm)
    residual = max(inverse, action)
    return CheckReport(
        rid, residual, 1e-10, witness=None if residual < 1e-10 else {"permutation": perm},
        details={"inverse_residual": inverse, "action_residual": action,
                 "identity_distance": float(np.linalg.norm(T - eye))})


def check_p4_compound(theory: Theory, system: SystemType | None = None, perm=None,
                      mset: MaximalSet | None = None) -> CheckReport:
    """``perm`` factors as ``R2 R1`` with both reversible and neither the identity."""
    t = system or theory.system("a")
    mset = mset or theory.canonical_maximal_set(t)
    perm = tuple(range(1, mset.N)) + (0,) if perm is None else tuple(perm)
    rid = f"p4:{theory.name}:{t.label}:{_perm_label(perm)}"
    group = theory.reversible_group(t)
    try:
        found = theory.compound_witness(mset, perm)
    except NotImplementedError:
        raise UnsupportedTheory(f"{theory.name} offers no compound search for N={t.N}") from None
    search = f"exhaustive over {len(group)} reversible transformations" if group is not None \
        else "constructive square-root witness"
    if found is None:
        return CheckReport(rid, 1.0, THEORY_TOLERANCE, witness={"permutation": perm},
                           notes=f"{search}: no factorisation into two non-identity steps",
                           details={"group_size": None if group is None else len(group)})
    R1, R2 = found
    eye = np.eye(t.K)
    action = _action_residual(R2 @ R1, mset, perm)
    d1, d2 = float(np.linalg.norm(R1 - eye)), float(np.linalg.norm(R2 - eye))
    inv = float(max(np.max(np.abs(R @ np.linalg.inv(R) - eye)) for R in (R1, R2)))
    details = {"action_residual": action, "identity_distances": [d1, d2],
               "inverse_residual": inv}
    try:
        T, _ = theory.permutation_transform(mset, perm)
        details["composition_residual"] = float(np.max(np.abs(R2 @ R1 - T)))
    except (ConstructionUnavailable, NotImplementedError):
        pass
    nontrivial = 0.0 if min(d1, d2) > 1e-6 else 1.0
    residual = max(action, nontrivial, details.get("composition_residual", 0.0))
    return CheckReport(rid, residual, THEORY_TOLERANCE,
                       witness={"R1": R1, "R2": R2}, notes=search, details=details)


# -- P5 ----------------------------------------------------------------------------

def verify_filter(theory: Theory, face: InformationalFace, filt,
                  tol: float = FACE_TOLERANCE) -> dict:
    """Raise :class:`NotAFilter` unless ``filt`` passes the face and blocks its complement."""
    F = _matrix(filt)
    passed = float(np.max(np.abs(F @ face.basis - face.basis))) if face.basis.size else 0.0
    if passed >= tol:
        raise NotAFilter("passes face states unchanged", passed)
    blocked = 0.0
    if face.complement:
        comp = build_face(theory, face.mset, face.complement)
        blocked = float(np.max(np.abs(F @ comp.basis)))
        if blocked >= tol:
            raise NotAFilter("blocks the complement face", blocked)
    return {"pass_residual": passed, "block_residual": blocked}


def _battery(theory, face, rng, n_sets):
    mset, subset = face.mset, face.subset
    t = face.system
    sets = [("face basis", face.basis.T, face)]
    for r in range(1, len(subset)):
        for sub in itertools.combinations(subset, r):
            sub_face = build_face(theory, mset, sub)
            sets.append((f"sub-face {list(sub)}", sub_face.basis.T, sub_face))
            if len(sets) >= n_sets // 2:
                break
    k = 0
    while len(sets) < n_sets:
        k += 1
        if k % 2:
            m = face.dim + 2
            states = np.array([theory.sample_face_state(mset, subset, rng) for _ in range(m)])
            sets.append((f"random over-complete #{k}", states, face))
        else:
            other = theory.random_maximal_set(t, rng)
            size = int(rng.integers(1, other.N + 1))
            sub = sorted(rng.choice(other.N, size=size, replace=False).tolist())
            other_face = build_face(theory, other, sub)
            sets.append((f"other face {list(sub)} #{k}", other_face.basis.T, other_face))
    return sets


def check_p5(theory: Theory, face: InformationalFace, filt, seed: int = DEFAULT_SEED,
             n_sets: int = 24, n_pure: int = 16) -> CheckReport:
    """Filters keep non-flat sets non-flat and keep pure face states pure."""
    rng = np.random.default_rng(seed)
    clauses = verify_filter(theory, face, filt)
    F = _matrix(filt)
    t = face.system
    rows, worst, witness = [], 0.0, None
    for label, states, home in _battery(theory, face, rng, n_sets):
        if not is_non_flat(states, home):
            raise RuntimeError(f"battery set {label} is not non-flat")
        out = states @ F.T
        rank_out = numerical_rank(out)
        need = theory.smallest_face_dim(t, out) if not is_null(out) else 0
        deficit = need - rank_out
        if home is face:
            deficit = max(deficit, numerical_rank(states) - rank_out)
        rows.append({"set": label, "size": len(states), "rank_out": rank_out, "face_dim": need})
        if deficit > worst:
            worst = float(deficit)
            witness = {"set": label, "rank_out": rank_out, "smallest_face_dim": need,
                       "states": states}

    mixing = 0.0
    pure_in = [s for s in face.basis.T if theory.is_pure(t, s)]
    pure_in += [theory.sample_face_state(face.mset, face.subset, rng) for _ in range(n_pure)]
    n_pure_checked = 0
    for s in pure_in:
        if not theory.is_pure(t, s):
            continue
        n_pure_checked += 1
        out = F @ s
        if is_null(out):
            continue
        if not theory.is_pure(t, out):
            mixing = 1.0
            if witness is None:
                witness = {"mixed_output_of": s}
    residual = max(worst, mixing)
    return CheckReport(
        id=f"p5:{theory.name}:{t.label}:{list(face.subset)}", residual=residual,
        tolerance=THEORY_TOLERANCE, witness=witness if residual >= THEORY_TOLERANCE else None,
        seed=seed, notes=f"{len(rows)} non-flat sets, {n_pure_checked} pure states",
        details={**clauses, "sets": rows, "face_dim": face.dim, "non_mixing": mixing == 0.0})


def flattening_map(theory, face: InformationalFace) -> np.ndarray:
    """A map meeting both filter clauses that still flattens some non-flat sets.

    Built for quantum theories: the direct filter plus a term that removes the
    coherence between the first face vector and the first complement vector,
    pulling a two-dimensional family of states onto a single ray.
    """
    if not face.complement or not hasattr(theory, "embed_linear_map"):
        raise UnsupportedTheory("the flattening counterexample needs a quantum face with "
                                "a nonempty complement")
    V = theory._basis(face.mset)
    i, j = face.subset[0], face.complement[0]
    P = theory.face_projector(face.mset, face.subset)
    vi, vj = V[:, i], V[:, j]
    proj_i = np.outer(vi, vi.conj())

    def phi(X):
        coherence = np.real(vi.conj() @ X @ vj)
        return P @ X @ P - coherence * proj_i

    return theory.embed_linear_map(phi, face.system).matrix


# -- Wootters hierarchy -----------------------------------------------------------

@dataclass
class WoottersResult:
    consistent: bool
    r: int | None
    witness: tuple | None = None
    reason: str = ""


def wootters_verify(table) -> WoottersResult:
    """Check ``K(N)`` is a function, increasing and multiplicative, then fit ``K = N**r``."""
    pairs = [(int(N), int(K)) for N, K in table]
    if not pairs:
        raise EmptyTable("need at least one (N, K) pair")
    k_of: dict[int, int] = {}
    for N, K in pairs:
        if N in k_of and k_of[N] != K:
            return WoottersResult(False, None, ((N, k_of[N]), (N, K)), "K is not a function of N")
        k_of[N] = K
    ns = sorted(k_of)
    for n1, n2 in zip(ns, ns[1:]):
        if k_of[n2] <= k_of[n1]:
            return WoottersResult(False, None, ((n1, k_of[n1]), (n2, k_of[n2])),
                                  "K does not increase with N")
    for n1, n2 in itertools.combinations_with_replacement(ns, 2):
        if n1 * n2 in k_of and k_of[n1 * n2] != k_of[n1] * k_of[n2]:
            return WoottersResult(False, None,
                                  ((n1, k_of[n1]), (n2, k_of[n2]), (n1 * n2, k_of[n1 * n2])),
                                  "K is not multiplicative")
    informative = [(N, K) for N, K in k_of.items() if N > 1]
    if not informative:
        if all(K == 1 for K in k_of.values()):
            return WoottersResult(True, None, None, "only N = 1 entries; every r fits")
        return WoottersResult(False, None, ((1, k_of[1]),), "N = 1 must have K = 1")
    N0, K0 = informative[0]
    r = round(math.log(K0) / math.log(N0))
    for N, K in sorted(k_of.items()):
        if r < 1 or N ** r != K:
            return WoottersResult(False, None, (N, K), f"no integer r with {N}**r = {K}")
    return WoottersResult(True, r, None, f"K = N**{r}")


def check_wootters(theory: Theory) -> CheckReport:
    table = theory.types_table()
    result = wootters_verify(table)
    return CheckReport(
        id=f"wootters:{theory.name}", residual=0.0 if result.consistent else 1.0,
        tolerance=0.5, witness=None if result.consistent else result.witness,
        notes=result.reason, details={"table": table, "r": result.r})


# -- deterministic effect -------------------------------------------------------

def deterministic_effect(theory: Theory, system: SystemType | None = None):
    """The unique covector giving one on a spanning set of normalized states."""
    t = system or theory.system("a")
    S = theory.spanning_states(t)
    rank = numerical_rank(S)
    u, *_ = np.linalg.lstsq(S, np.ones(len(S)), rcond=None)
    return u, rank


def check_deterministic_effect(theory: Theory, system: SystemType | None = None) -> CheckReport:
    t = system or theory.system("a")
    u, rank = deterministic_effect(theory, t)
    S = theory.spanning_states(t)
    fit = float(np.max(np.abs(S @ u - 1)))
    unit = float(np.max(np.abs(u - theory.unit_effect(t))))
    residual = max(fit, unit, float(t.K - rank))
    return CheckReport(f"unit:{theory.name}:{t.label}", residual, THEORY_TOLERANCE,
                       details={"rank": rank, "K": t.K, "fit": fit, "unit_gap": unit})
