"""Line-oriented text format for ontologies and ontology streams.

    GCI <concept> SUB <concept>
    RI <role> SUB <role>
    CLASS <concept> (<individual>)
    ROLE <role> (<subject>, <object>)
    EQ <individual> <individual>
    NEQ <individual> <individual>
    SNAPSHOT <time>

Concepts are s-expressions: ``Top``, ``Bot``, a name, ``(and C D ...)``,
``(some r C)`` or ``(one a)``.  ``#`` starts a comment.  Assertions before
the first ``SNAPSHOT`` line form the static ABox; later ones attach to the
most recent snapshot.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .el import (
    GCI,
    RI,
    And,
    Atomic,
    BOTTOM,
    ClassAssertion,
    DifferentIndividuals,
    Named,
    Nominal,
    RoleAssertion,
    SameIndividual,
    Some,
    TOP,
)
from .errors import ParseError

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_TOKEN_RE = re.compile(r"\(|\)|,|[^\s(),#]+")
_RESERVED = {"Top", "Bot", "and", "some", "one"}


@dataclass
class Document:
    tbox: list = field(default_factory=list)
    abox: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # [(time, [axiom, ...]), ...]


@dataclass
class _Tok:
    text: str
    col: int


class _LineParser:
    def __init__(self, tokens: list, lineno: int, line_len: int):
        self.toks = tokens
        self.pos = 0
        self.lineno = lineno
        self.eol_col = line_len + 1

    def error(self, msg: str, tok: _Tok | None = None):
        if tok is None:
            tok = self.peek()
        if tok is None:
            raise ParseError(msg, self.lineno, self.eol_col)
        raise ParseError(msg, self.lineno, tok.col, tok.text)

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self, what: str) -> _Tok:
        tok = self.peek()
        if tok is None:
            self.error(f"expected {what}, got end of line")
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.next(repr(text))
        if tok.text != text:
            self.error(f"expected {text!r}", tok)

    def name(self, what: str = "name") -> str:
        tok = self.next(what)
        if not NAME_RE.match(tok.text) or tok.text in _RESERVED:
            self.error(f"invalid {what}", tok)
        return tok.text

    def concept(self):
        tok = self.next("concept")
        if tok.text == "Top":
            return TOP
        if tok.text == "Bot":
            return BOTTOM
        if tok.text == "(":
            head = self.next("'and', 'some' or 'one'")
            if head.text == "and":
                parts = [self.concept(), self.concept()]
                while self.peek() is not None and self.peek().text != ")":
                    parts.append(self.concept())
                self.expect(")")
                try:
                    return And(tuple(parts))
                except ValueError:
                    self.error("conjunction needs two distinct conjuncts", head)
            if head.text == "some":
                role = self.name("role")
                filler = self.concept()
                self.expect(")")
                return Some(role, filler)
            if head.text == "one":
                ind = self.name("individual")
                self.expect(")")
                return Nominal(ind)
            self.error("unknown constructor", head)
        if NAME_RE.match(tok.text) and tok.text not in _RESERVED:
            return Atomic(tok.text)
        self.error("expected concept", tok)

    def done(self) -> None:
        tok = self.peek()
        if tok is not None:
            self.error("unexpected trailing token", tok)


def _tokenize(line: str, lineno: int) -> list:
    body = line.split("#", 1)[0]
    toks = []
    pos = 0
    for m in _TOKEN_RE.finditer(body):
        gap = body[pos : m.start()]
        if gap.strip():
            bad = gap.strip()
            raise ParseError("unexpected character", lineno, pos + gap.index(bad[0]) + 1, bad)
        toks.append(_Tok(m.group(), m.start() + 1))
        pos = m.end()
    rest = body[pos:]
    if rest.strip():
        raise ParseError("unexpected character", lineno, pos + 1, rest.strip())
    return toks


def parse(text: str | bytes) -> Document:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc.reason}", 1, 1) from None
    doc = Document()
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = _tokenize(line, lineno)
        if not toks:
            continue
        p = _LineParser(toks, lineno, len(line))
        kw = p.next("keyword")
        if kw.text == "GCI":
            lhs = p.concept()
            p.expect("SUB")
            rhs = p.concept()
            axiom = GCI(lhs, rhs)
        elif kw.text == "RI":
            sub = p.name("role")
            p.expect("SUB")
            axiom = RI(sub, p.name("role"))
        elif kw.text == "CLASS":
            concept = p.concept()
            p.expect("(")
            ind = p.name("individual")
            p.expect(")")
            axiom = ClassAssertion(concept, Named(ind))
        elif kw.text == "ROLE":
            role = p.name("role")
            p.expect("(")
            subj = p.name("individual")
            p.expect(",")
            obj = p.name("individual")
            p.expect(")")
            axiom = RoleAssertion(role, Named(subj), Named(obj))
        elif kw.text in ("EQ", "NEQ"):
            a = p.name("individual")
            b = p.name("individual")
            axiom = SameIndividual(a, b) if kw.text == "EQ" else DifferentIndividuals(a, b)
        elif kw.text == "SNAPSHOT":
            tok = p.next("snapshot time")
            if not tok.text.isdigit() or not tok.text.isascii():
                p.error("snapshot time must be a nonnegative integer", tok)
            t = int(tok.text)
            if t != len(doc.snapshots):
                p.error(f"snapshot times must be consecutive from 0; expected {len(doc.snapshots)}", tok)
            p.done()
            current = []
            doc.snapshots.append((t, current))
            continue
        else:
            p.error("unknown keyword", kw)
        p.done()
        if isinstance(axiom, (GCI, RI)):
            if current is not None:
                p.error("TBox axiom inside a snapshot block", kw)
            doc.tbox.append(axiom)
        elif current is None:
            doc.abox.append(axiom)
        else:
            current.append(axiom)
    return doc


def axiom_to_text(ax) -> str:
    if isinstance(ax, GCI):
        return f"GCI {ax.lhs.to_text()} SUB {ax.rhs.to_text()}"
    if isinstance(ax, RI):
        return f"RI {ax.sub_role} SUB {ax.super_role}"
    if isinstance(ax, ClassAssertion):
        return f"CLASS {ax.concept.to_text()} ({ax.individual})"
    if isinstance(ax, RoleAssertion):
        return f"ROLE {ax.role} ({ax.subject}, {ax.object})"
    if isinstance(ax, SameIndividual):
        return f"EQ {ax.first} {ax.second}"
    if isinstance(ax, DifferentIndividuals):
        return f"NEQ {ax.first} {ax.second}"
    raise TypeError(f"not an axiom: {ax!r}")


def serialize(doc: Document) -> str:
    lines = [axiom_to_text(a) for a in doc.tbox]
    lines += [axiom_to_text(a) for a in doc.abox]
    for t, axioms in doc.snapshots:
        lines.append(f"SNAPSHOT {t}")
        lines += [axiom_to_text(a) for a in axioms]
    return "".join(line + "\n" for line in lines)
