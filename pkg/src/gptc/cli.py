"""Command-line front end: ``gptc parse``, ``gptc eval`` and ``gptc check``.

Exit codes: 0 success (or every outcome as expected), 1 a check failed,
2 usage, input or parse error, 3 internal numeric error.
"""
from __future__ import annotations

import argparse
import fnmatch
import json
import os
import sys
from pathlib import Path

import numpy as np

from .constructions import constructions_suite, run_teleportation_suite
from .errors import GptcError, NotationError, UnboundOperation, UnknownSuite
from .ir import classify
from .notation import parse_document, render
from .postulates import (
    DEFAULT_SEED,
    build_face,
    check_deterministic_effect,
    check_p1,
    check_p2,
    check_p3,
    check_p4_compound,
    check_p4prime,
    check_p5,
    check_wootters,
)
from .report import CheckReport
from .tensor import (
    circuit_probability,
    clamp_probability,
    contraction_schedule,
    is_physical_probability,
)
from .theories import theory_from_selector

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
SUITES = ("p1", "p2", "p3", "p4prime", "p4", "p5", "wootters", "teleport", "constructions")
DEFAULT_THEORY = "quantum:2"


def default_seed() -> int:
    env = os.environ.get("GPTC_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise GptcError(f"GPTC_SEED must be an integer, got {env!r}") from None


def _read(path: str) -> str:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise GptcError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise GptcError(f"{path}: not UTF-8 ({exc.reason})") from None


def _plural(n, word):
    return f"{n} {word}" + ("" if n == 1 else "s")


def describe(fragment) -> str:
    kind = classify(fragment).value
    parts = [kind, _plural(len(fragment.ops), "operation"), _plural(len(fragment.wires), "wire")]
    if fragment.open_inputs:
        parts.append(_plural(len(fragment.open_inputs), "open input"))
    if fragment.open_outputs:
        parts.append(_plural(len(fragment.open_outputs), "open output"))
    return ", ".join(parts)


# -- parse ---------------------------------------------------------------------

def cmd_parse(args) -> int:
    doc = parse_document(_read(args.file))
    print(render(doc.fragment, header=bool(doc.types) and any(
        t.N is not None for t in doc.types.values())))
    print(describe(doc.fragment))
    return EXIT_OK


# -- eval ------------------------------------------------------------------------

def read_binding_file(text: str) -> dict[str, str]:
    """``Name = ref`` lines; ``#`` starts a comment."""
    refs = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, eq, ref = line.partition("=")
        if not eq or not name.strip() or not ref.strip():
            raise GptcError(f"binding line {n}: expected 'Name = reference'")
        refs[name.strip()] = ref.strip()
    return refs


def bind_circuit(theory, doc, refs):
    mapping = {}
    for label, t in doc.types.items():
        mapping[label] = theory.system(label, t.N)
    fragment = doc.fragment.retype(mapping)
    missing = sorted({op.name for op in fragment.ops if op.name not in refs})
    if missing:
        raise UnboundOperation(missing)
    binding = {}
    for i, op in enumerate(fragment.ops):
        binding[i] = theory.resolve(refs[op.name], op.inputs, op.outputs)
    return fragment, binding


def _wire_name(doc, fragment, w):
    t = fragment.output_type(w.producer)
    return f"{t.label}{doc.wire_labels.get(w, '?')}"


def cmd_eval(args) -> int:
    theory = theory_from_selector(args.theory)
    doc = parse_document(_read(args.circuit))
    refs = read_binding_file(_read(args.bind))
    fragment, binding = bind_circuit(theory, doc, refs)
    sizes = {w: binding[w.src].outputs[w.out].K for w in fragment.wires}
    schedule = contraction_schedule(fragment, sizes)
    p = circuit_probability(fragment, binding, schedule)
    shown = clamp_probability(p) if is_physical_probability(p) else p
    if not is_physical_probability(p):
        print(f"warning: probability {p!r} lies outside [0, 1]; the binding is not physical",
              file=sys.stderr)
    names = [_wire_name(doc, fragment, w) for w in schedule]
    if args.format == "records":
        print(json.dumps({"theory": theory.name, "probability": shown, "raw": p,
                          "schedule": names}, sort_keys=True))
    else:
        print(f"{shown:.12f}")
        print("schedule: " + (" ".join(names) if names else "(no wires)"))
    return EXIT_OK


# -- check --------------------------------------------------------------------

def _error_report(rid: str, exc: Exception) -> CheckReport:
    return CheckReport(rid, 1.0, 1e-9, notes=f"{type(exc).__name__}: {exc}")


def _default_face_subset(N: int):
    return tuple(range((N + 1) // 2))


def run_suite(theory, suite: str, seed: int, samples: int) -> list[CheckReport]:
    a = theory.system("a")
    if suite == "p1":
        return [check_p1(theory, a, n_samples=samples, seed=seed),
                check_deterministic_effect(theory, a)]
    if suite == "p2":
        return [check_p2(theory, a, theory.ancilla(a))]
    if suite == "p3":
        return [check_p3(theory, a, theory.ancilla(a))]
    if suite in ("p4prime", "p4"):
        N = a.N
        perms = [tuple(range(1, N)) + (0,)]
        if suite == "p4prime" and N > 2:
            perms.append((1, 0) + tuple(range(2, N)))
        check = check_p4prime if suite == "p4prime" else check_p4_compound
        return [check(theory, a, p) for p in perms]
    if suite == "p5":
        mset = theory.canonical_maximal_set(a)
        subset = _default_face_subset(a.N)
        face = build_face(theory, mset, subset)
        return [check_p5(theory, face, theory.direct_filter(mset, subset), seed=seed)]
    if suite == "wootters":
        return [check_wootters(theory)]
    if suite == "teleport":
        return run_teleportation_suite(theory).reports(theory.name)
    if suite == "constructions":
        return constructions_suite(theory, seed=seed)
    raise UnknownSuite(f"unknown suite {suite!r}; choose from {', '.join(SUITES)} or all")


def read_manifest(text: str) -> list[tuple[str, bool]]:
    """``<id glob> pass|fail`` lines; later lines win."""
    rules = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2 or fields[1] not in ("pass", "fail"):
            raise GptcError(f"manifest line {n}: expected '<check id pattern> pass|fail'")
        rules.append((fields[0], fields[1] == "pass"))
    return rules


def expected_pass(rid: str, rules) -> bool:
    want = True
    for pattern, outcome in rules:
        if fnmatch.fnmatchcase(rid, pattern):
            want = outcome
    return want


def cmd_check(args) -> int:
    items = list(args.items)
    selector = args.theory
    if selector is None and items and ":" in items[0]:
        selector = items.pop(0)
    selector = selector or DEFAULT_THEORY
    suites = items or ["all"]
    for s in suites:
        if s != "all" and s not in SUITES:
            raise UnknownSuite(f"unknown suite {s!r}; choose from {', '.join(SUITES)} or all")
    if "all" in suites:
        suites = list(SUITES)
    seed = default_seed() if args.seed is None else args.seed
    rules = read_manifest(_read(args.expect)) if args.expect else []
    theory = theory_from_selector(selector)

    reports: list[CheckReport] = []
    for suite in dict.fromkeys(suites):
        try:
            reports.extend(run_suite(theory, suite, seed, args.samples))
        except (np.linalg.LinAlgError, FloatingPointError):
            raise
        except GptcError as exc:
            reports.append(_error_report(f"{suite}:{theory.name}", exc))
    reports.sort(key=lambda r: r.id)

    ok = True
    for r in reports:
        if r.seed is None:
            r.seed = seed
        want = expected_pass(r.id, rules)
        as_expected = r.passed == want
        ok &= as_expected
        if args.format == "records":
            print(r.to_record())
        else:
            tag = "" if not rules or r.passed else (" (expected)" if as_expected else "")
            print(r.summary() + tag)
    if args.format != "records":
        n_pass = sum(r.passed for r in reports)
        print(f"{n_pass} passed, {len(reports) - n_pass} failed, theory {theory.name}, seed {seed}")
    return EXIT_OK if ok else EXIT_FAIL


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gptc", description="Operational circuit toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="parse a circuit file and print its canonical form")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_parse)

    se = sub.add_parser("eval", help="evaluate a circuit probability")
    se.add_argument("circuit")
    se.add_argument("--theory", default=DEFAULT_THEORY,
                    help="classical:N, quantum:N or tabular:FILE (default quantum:2)")
    se.add_argument("--bind", required=True, help="binding file with 'Name = ref' lines")
    se.add_argument("--format", choices=("human", "records"), default="human")
    se.set_defaults(func=cmd_eval)

    sc = sub.add_parser("check", help="run postulate and construction suites")
    sc.add_argument("items", nargs="*", metavar="THEORY|SUITE",
                    help=f"optional theory selector followed by suites: {' '.join(SUITES)} all")
    sc.add_argument("--theory", default=None)
    sc.add_argument("--expect", help="manifest of '<id glob> pass|fail' lines")
    sc.add_argument("--seed", type=int, default=None,
                    help=f"random seed (default $GPTC_SEED or {DEFAULT_SEED})")
    sc.add_argument("--samples", type=int, default=500, help="P1 sample count")
    sc.add_argument("--format", choices=("human", "records"), default="human")
    sc.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GptcError as exc:
        where = getattr(args, "file", None) or getattr(args, "circuit", None)
        prefix = f"{where}: " if isinstance(exc, NotationError) and where else "error: "
        print(f"{prefix}{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
