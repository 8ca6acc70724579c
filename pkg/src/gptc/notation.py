"""Plain-text index notation for fragments and circuits.

A document is a sequence of operation terms such as::

    type a : N=2
    A_{a1 a2 b3}^{b4 c5} B_{a6 b4}^{d7 c8}

Subscript blocks list inputs and superscript blocks list outputs, each token
being a type letter followed by a positive integer.  An integer that occurs
once as a superscript and once as a subscript is a wire; an integer that
occurs once is an open port.  The LaTeX-flavoured forms ``a_1`` and
``b_{15}`` are accepted as tokens too, and separators between tokens are
optional because every token is self-delimiting.

``type`` lines declare ``N`` (and optionally ``K``) for a letter; undeclared
letters stay abstract until bound to a theory.  ``#`` starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import (
    CycleError,
    DuplicateIndexRole,
    NotationError,
    NotationSyntaxError,
    TypeLetterMismatch,
    WouldCreateCycle,
)
from .ir import Fragment, Operation, SystemType, Wire

_TYPE_DECL = re.compile(
    r"^\s*type\s+([A-Za-z])\s*:\s*N\s*=\s*(\d+)\s*(?:,\s*K\s*=\s*(\d+)\s*)?(?:#.*)?$")
_NAME = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_TOKEN = re.compile(r"([A-Za-z])(?:(\d+)|_(\d)|_\{\s*(\d+)\s*\})")


@dataclass
class _Occurrence:
    role: str  # "in" or "out"
    term: int
    port: int
    letter: str
    line: int
    column: int


@dataclass
class NotationDocument:
    """Parsed document: the fragment plus the integer labels used in the text."""

    fragment: Fragment
    types: dict[str, SystemType]
    wire_labels: dict[Wire, int] = field(default_factory=dict)
    input_labels: dict[tuple[int, int], int] = field(default_factory=dict)
    output_labels: dict[tuple[int, int], int] = field(default_factory=dict)


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.line_start = 0

    @property
    def column(self):
        return self.pos - self.line_start + 1

    def error(self, message, cls=NotationSyntaxError):
        return cls(message, self.line, self.column)

    def advance(self, n):
        chunk = self.text[self.pos:self.pos + n]
        newlines = chunk.count("\n")
        if newlines:
            self.line += newlines
            self.line_start = self.pos + chunk.rfind("\n") + 1
        self.pos += n

    def skip_space(self, commas=False):
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "#":
                end = self.text.find("\n", self.pos)
                self.advance((len(self.text) if end < 0 else end) - self.pos)
            elif ch.isspace() or (commas and ch == ","):
                self.advance(1)
            else:
                break

    def at_end(self):
        return self.pos >= len(self.text)

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def match(self, pattern):
        m = pattern.match(self.text, self.pos)
        if m:
            self.advance(m.end() - m.start())
        return m


def _strip_declarations(text: str):
    """Pull ``type`` lines out, blanking them so positions stay meaningful."""
    types: dict[str, tuple[int, int | None]] = {}
    lines = text.split("\n")
    for n, raw in enumerate(lines, start=1):
        if re.match(r"^\s*type\b", raw):
            m = _TYPE_DECL.match(raw)
            if not m:
                raise NotationSyntaxError(
                    "malformed type declaration, expected 'type x : N=<int>'", n, 1)
            letter, N, K = m.group(1), int(m.group(2)), m.group(3)
            decl = (N, None if K is None else int(K))
            if N < 1 or (decl[1] is not None and decl[1] < N):
                raise NotationSyntaxError(f"type {letter}: need N >= 1 and K >= N", n, 1)
            if letter in types and types[letter] != decl:
                raise NotationSyntaxError(f"type {letter} declared twice", n, 1)
            types[letter] = decl
            lines[n - 1] = " " * len(raw)
    return "\n".join(lines), types


def _read_block(sc: _Scanner, role: str, term: int, occurrences: list):
    if sc.peek() != "{":
        raise sc.error("expected '{' after '_' or '^'")
    sc.advance(1)
    port = 0
    while True:
        sc.skip_space(commas=True)
        if sc.at_end():
            raise sc.error("unterminated index block")
        if sc.peek() == "}":
            sc.advance(1)
            return port
        line, col = sc.line, sc.column
        m = sc.match(_TOKEN)
        if not m:
            raise sc.error(f"bad wire token starting with {sc.peek()!r}")
        number = int(next(g for g in m.groups()[1:] if g is not None))
        if number <= 0:
            raise NotationSyntaxError("wire integers must be positive", line, col)
        occurrences.append((number, _Occurrence(role, term, port, m.group(1), line, col)))
        port += 1


def parse_document(text: str | bytes) -> NotationDocument:
    """Parse a document into a fragment, keeping the source integer labels."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise NotationSyntaxError(f"input is not UTF-8: {exc.reason}", 1, 1) from None
    body, declared = _strip_declarations(text)
    sc = _Scanner(body)
    terms: list[tuple[str, int, int]] = []
    occurrences: list[tuple[int, _Occurrence]] = []

    while True:
        sc.skip_space()
        if sc.at_end():
            break
        line, col = sc.line, sc.column
        m = sc.match(_NAME)
        if not m:
            raise sc.error(f"expected an operation name, found {sc.peek()!r}")
        term = len(terms)
        seen = set()
        while sc.peek() in ("_", "^"):
            kind = sc.peek()
            if kind in seen:
                raise sc.error(f"second {'subscript' if kind == '_' else 'superscript'} block")
            seen.add(kind)
            sc.advance(1)
            _read_block(sc, "in" if kind == "_" else "out", term, occurrences)
        nxt = sc.peek()
        if nxt and not nxt.isspace() and nxt != "#" and not (seen and nxt.isalpha()):
            raise sc.error(f"unexpected character {nxt!r} after term {m.group(0)}")
        terms.append((m.group(0), line, col))

    if not terms:
        raise NotationSyntaxError("document contains no operation terms", sc.line, sc.column)

    types = {}

    def type_for(letter):
        if letter not in types:
            N, K = declared.get(letter, (None, None))
            types[letter] = SystemType(letter, N, K)
        return types[letter]

    ins: list[list] = [[] for _ in terms]
    outs: list[list] = [[] for _ in terms]
    by_number: dict[int, list[_Occurrence]] = {}
    for number, occ in occurrences:
        (ins if occ.role == "in" else outs)[occ.term].append(type_for(occ.letter))
        by_number.setdefault(number, []).append(occ)

    wires, wire_labels, in_labels, out_labels = [], {}, {}, {}
    for number, occs in sorted(by_number.items()):
        if len(occs) > 2:
            o = occs[2]
            raise DuplicateIndexRole(f"integer {number} appears {len(occs)} times",
                                     o.line, o.column)
        if len(occs) == 2:
            a, b = occs
            if a.role == b.role:
                raise DuplicateIndexRole(
                    f"integer {number} used twice as an {'input' if a.role == 'in' else 'output'}",
                    b.line, b.column)
            if a.letter != b.letter:
                raise TypeLetterMismatch(
                    f"integer {number} joins type {a.letter} to type {b.letter}",
                    b.line, b.column)
            out_occ, in_occ = (a, b) if a.role == "out" else (b, a)
            w = Wire(out_occ.term, out_occ.port, in_occ.term, in_occ.port)
            wires.append(w)
            wire_labels[w] = number
        else:
            (o,) = occs
            target = in_labels if o.role == "in" else out_labels
            target[(o.term, o.port)] = number

    ops = [Operation(name, tuple(ins[i]), tuple(outs[i])) for i, (name, _, _) in enumerate(terms)]
    try:
        fragment = Fragment(ops, wires)
    except WouldCreateCycle as exc:
        first = terms[exc.path[0]] if exc.path else terms[0]
        names = " -> ".join(ops[i].name for i in exc.path)
        raise CycleError(f"closed loop through {names}", exc.path, first[1], first[2]) from None
    return NotationDocument(fragment, types, wire_labels, in_labels, out_labels)


def parse(text: str | bytes) -> Fragment:
    return parse_document(text).fragment


def render(fragment: Fragment, header: bool = False) -> str:
    """Canonical text for a fragment.

    Operations appear in a topological order whose ties are broken by the
    isomorphism-invariant canonical ranking, and wire integers are handed out
    in order of first appearance, so isomorphic fragments render identically.
    """
    canon = fragment.canonical_order()
    rank = [0] * len(fragment.ops)
    for k, i in enumerate(canon):
        rank[i] = k
    order = fragment.topological_order(priority=rank)
    numbers: dict[Wire, int] = {}
    counter = 0
    terms = []
    for i in order:
        op = fragment.ops[i]
        subs, sups = [], []
        for p, t in enumerate(op.inputs):
            w = fragment.wire_at_input((i, p))
            if w is not None and w in numbers:
                n = numbers[w]
            else:
                counter += 1
                n = counter
                if w is not None:
                    numbers[w] = n
            subs.append(f"{t.label}{n}")
        for p, t in enumerate(op.outputs):
            w = fragment.wire_at_output((i, p))
            if w is not None and w in numbers:
                n = numbers[w]
            else:
                counter += 1
                n = counter
                if w is not None:
                    numbers[w] = n
            sups.append(f"{t.label}{n}")
        term = op.name
        if subs:
            term += "_{" + " ".join(subs) + "}"
        if sups:
            term += "^{" + " ".join(sups) + "}"
        terms.append(term)
    text = " ".join(terms)
    if header:
        seen = {}
        for op in fragment.ops:
            for t in op.inputs + op.outputs:
                if t.N is not None:
                    seen.setdefault(t.label, t)
        lines = [f"type {t.label} : N={t.N}" + (f", K={t.K}" if t.K is not None else "")
                 for _, t in sorted(seen.items())]
        text = "\n".join(lines + [text])
    return text


__all__ = ["NotationDocument", "NotationError", "parse", "parse_document", "render"]
