"""Brane Calculus terms: AST, concrete syntax, structural congruence.

Two representations live here.  The AST (``Zero``/``Par``/``Prefix`` for
membranes, ``Void``/``Comp``/``Cell`` for systems) is what the parser
produces and the printer consumes.  The canonical form is a nested tuple
encoding that quotients out associativity, commutativity, the units and
the empty-cell axiom, so that two terms are congruent exactly when their
canonical forms are equal::

    prefix    = (kind, name, arg, cont)     # arg == () for phago/exo/coexo
    membrane  = ((prefix, count), ...)      # sorted, counts >= 1
    cell      = (membrane, system)
    system    = ((cell, count), ...)        # sorted, cell ((), ()) erased

Canonical forms are plain tuples, hashable and totally ordered, and are
used directly as species complexes and measure-table targets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

PHAGO = "phago"
COPHAGO = "cophago"
EXO = "exo"
COEXO = "coexo"
PINO = "pino"

ACTION_KINDS = (PHAGO, COPHAGO, EXO, COEXO, PINO)
ARG_KINDS = frozenset({COPHAGO, PINO})

CPrefix = tuple
CMem = tuple
CSys = tuple
CanonicalForm = tuple

EMPTY: tuple = ()


class BraneSyntaxError(ValueError):
    """Raised on malformed concrete syntax; carries a 1-based position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


class ArityError(BraneSyntaxError):
    pass


# --------------------------------------------------------------------------
# AST


class Membrane:
    __slots__ = ()


class System:
    __slots__ = ()


@dataclass(frozen=True)
class Zero(Membrane):
    pass


@dataclass(frozen=True)
class Par(Membrane):
    left: Membrane
    right: Membrane


@dataclass(frozen=True)
class Prefix(Membrane):
    action: str
    name: str
    arg: Optional[Membrane]
    cont: Membrane

    def __post_init__(self):
        if self.action not in ACTION_KINDS:
            raise ValueError(f"unknown action {self.action!r}")
        if not self.name:
            raise ValueError("action name must be nonempty")
        if (self.arg is not None) != (self.action in ARG_KINDS):
            raise ArityError(
                f"{self.action} {'requires' if self.action in ARG_KINDS else 'takes no'} argument"
            )


@dataclass(frozen=True)
class Void(System):
    pass


@dataclass(frozen=True)
class Comp(System):
    left: System
    right: System


@dataclass(frozen=True)
class Cell(System):
    membrane: Membrane
    content: System


Term = Union[Membrane, System]

ZERO = Zero()
VOID = Void()


def _balanced(items: list, node, unit):
    """Fold ``items`` into a balanced binary tree of ``node``.

    The left half always gets ``len // 2`` items, so the shape depends only
    on the list.  Runs of the same object share subtrees.
    """
    if not items:
        return unit
    runs: list[list] = []
    for it in items:
        if runs and runs[-1][0] is it:
            runs[-1][1] += 1
        else:
            runs.append([it, 1])
    memo: dict = {}

    def rep(item, k):
        if k == 1:
            return item
        key = (id(item), k)
        if key not in memo:
            h = k // 2
            memo[key] = node(rep(item, h), rep(item, k - h))
        return memo[key]

    def build(rs, total):
        if len(rs) == 1:
            return rep(rs[0][0], rs[0][1])
        half = total // 2
        left, right, acc = [], [], 0
        for item, k in rs:
            if acc >= half:
                right.append((item, k))
            elif acc + k <= half:
                left.append((item, k))
            else:
                left.append((item, half - acc))
                right.append((item, acc + k - half))
            acc += k
        return node(build(left, half), build(right, total - half))

    return build([tuple(r) for r in runs], len(items))


def compose(*systems: System) -> System:
    """Compose systems in a balanced tree; no arguments gives ``Void``."""
    return _balanced(list(systems), Comp, VOID)


def par(*membranes: Membrane) -> Membrane:
    return _balanced(list(membranes), Par, ZERO)


def replicate(system: System, n: int) -> System:
    return compose(*([system] * n))


def cell(membrane: Membrane, content: System = VOID) -> Cell:
    return Cell(membrane, content)


def components(P: System) -> list[System]:
    """Top-level composition operands, excluding ``Void``."""
    out: list[System] = []
    stack = [P]
    while stack:
        t = stack.pop()
        if isinstance(t, Comp):
            stack.append(t.right)
            stack.append(t.left)
        elif not isinstance(t, Void):
            out.append(t)
    return out


def guards(sigma: Membrane) -> list[Prefix]:
    """Top-level prefixed actions of a membrane, excluding ``Zero``."""
    out: list[Prefix] = []
    stack = [sigma]
    while stack:
        t = stack.pop()
        if isinstance(t, Par):
            stack.append(t.right)
            stack.append(t.left)
        elif isinstance(t, Prefix):
            out.append(t)
    return out


# --------------------------------------------------------------------------
# canonical forms


def ms_union(a: tuple, b: tuple) -> tuple:
    """Union of two counted multisets (sorted ``(element, count)`` tuples)."""
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for e, k in b:
        d[e] = d.get(e, 0) + k
    return tuple(sorted(d.items()))


def ms_add(a: tuple, e, k: int = 1) -> tuple:
    return ms_union(a, ((e, k),))


def ms_remove(a: tuple, e, k: int = 1) -> tuple:
    d = dict(a)
    left = d.get(e, 0) - k
    if left < 0:
        raise ValueError("multiset underflow")
    if left:
        d[e] = left
    else:
        del d[e]
    return tuple(sorted(d.items()))


def ms_size(a: tuple) -> int:
    return sum(k for _, k in a)


def ms_elements(a: tuple) -> Iterator:
    for e, k in a:
        for _ in range(k):
            yield e


def c_cell(membrane: CMem, content: CSys) -> CSys:
    """Canonical system consisting of one cell; the empty cell vanishes."""
    if not membrane and not content:
        return EMPTY
    return (((membrane, content), 1),)


def c_comp(*systems: CSys) -> CSys:
    out: CSys = EMPTY
    for s in systems:
        out = ms_union(out, s)
    return out


def c_par(*membranes: CMem) -> CMem:
    out: CMem = EMPTY
    for m in membranes:
        out = ms_union(out, m)
    return out


def canonicalize(term, memo: Optional[dict] = None) -> CanonicalForm:
    """Canonical form of a membrane or system; tuples are returned unchanged."""
    if isinstance(term, tuple):
        return term
    if memo is None:
        memo = {}
    return _canon(term, memo)


def _canon(t, memo: dict):
    key = id(t)
    hit = memo.get(key)
    if hit is not None and hit[0] is t:
        return hit[1]
    if isinstance(t, (Zero, Void)):
        out = EMPTY
    elif isinstance(t, Prefix):
        arg = _canon(t.arg, memo) if t.arg is not None else EMPTY
        out = (((t.action, t.name, arg, _canon(t.cont, memo)), 1),)
    elif isinstance(t, (Par, Comp)):
        out = ms_union(_canon(t.left, memo), _canon(t.right, memo))
    elif isinstance(t, Cell):
        out = c_cell(_canon(t.membrane, memo), _canon(t.content, memo))
    else:
        raise TypeError(f"not a Brane term: {t!r}")
    memo[key] = (t, out)
    return out


def congruent(a, b) -> bool:
    return canonicalize(a) == canonicalize(b)


def prefix_from_canonical(p: CPrefix) -> Prefix:
    kind, name, arg, cont = p
    return Prefix(
        kind,
        name,
        membrane_from_canonical(arg) if kind in ARG_KINDS else None,
        membrane_from_canonical(cont),
    )


def membrane_from_canonical(m: CMem) -> Membrane:
    items: list[Membrane] = []
    for p, k in m:
        items.extend([prefix_from_canonical(p)] * k)
    return par(*items)


def system_from_canonical(s: CSys) -> System:
    items: list[System] = []
    for (m, content), k in s:
        items.extend([Cell(membrane_from_canonical(m), system_from_canonical(content))] * k)
    return compose(*items)


# --------------------------------------------------------------------------
# normal forms


@dataclass(frozen=True)
class NormalEntry:
    count: int
    membrane: Membrane
    content: tuple  # of NormalEntry


NormalSystem = tuple


def to_normal_form(P: System) -> NormalSystem:
    """Group congruent sibling cells, recursively, counting multiplicities."""
    return _normal_from_canonical(canonicalize(P))


def _normal_from_canonical(s: CSys) -> NormalSystem:
    return tuple(
        NormalEntry(k, membrane_from_canonical(m), _normal_from_canonical(content))
        for (m, content), k in s
    )


def unfold(Q: NormalSystem) -> System:
    items: list[System] = []
    for e in Q:
        items.extend([Cell(e.membrane, unfold(e.content))] * e.count)
    return compose(*items)


# --------------------------------------------------------------------------
# printing


def format_membrane(sigma: Membrane) -> str:
    gs = guards(sigma)
    if not gs:
        return "0"
    return " | ".join(_format_guard(g) for g in gs)


def _format_guard(g: Prefix) -> str:
    head = f"{g.action}<{g.name}>"
    if g.arg is not None:
        head += f"({format_membrane(g.arg)})"
    cont = g.cont
    if isinstance(cont, Zero):
        return head
    if isinstance(cont, Prefix):
        return f"{head}.{_format_guard(cont)}"
    return f"{head}.({format_membrane(cont)})"


def format_system(P: System) -> str:
    items = components(P)
    if not items:
        return "void"
    chunks: list[str] = []
    i = 0
    while i < len(items):
        j = i + 1
        while j < len(items) and (items[j] is items[i] or items[j] == items[i]):
            j += 1
        text = _format_item(items[i])
        chunks.append(text if j - i == 1 else f"{j - i} * {text}")
        i = j
    return " o ".join(chunks)


def _format_item(c: System) -> str:
    if isinstance(c, Cell):
        return f"{format_membrane(c.membrane)}[{format_system(c.content)}]"
    raise TypeError(f"not a cell: {c!r}")


def format_term(t) -> str:
    if isinstance(t, Membrane):
        return format_membrane(t)
    return format_system(t)


def format_canonical_membrane(m: CMem) -> str:
    return format_membrane(membrane_from_canonical(m))


def format_canonical_system(s: CSys) -> str:
    return format_system(system_from_canonical(s))


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>\#[^\n]*)|(?P<int>[0-9]+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[<>()\[\].|*])"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # int | ident | punct | eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise BraneSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg: str, tok: Optional[_Tok] = None, cls=BraneSyntaxError):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise cls(f"{msg} (found {found!r})", tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind == "eof":
            self.fail(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind != "eof" and self.tok.text == text

    def system(self) -> System:
        if self.tok.kind == "ident" and self.tok.text == "void":
            self.i += 1
            return VOID
        items = self.item()
        while self.tok.kind == "ident" and self.tok.text == "o":
            self.i += 1
            items += self.item()
        return compose(*items)

    def item(self) -> list[System]:
        count = 1
        if self.tok.kind == "int" and self.peek().text == "*":
            count = int(self.tok.text)
            if count < 1:
                self.fail("replication count must be positive")
            self.i += 2
        sigma = self.membrane()
        self.expect("[")
        content = self.system()
        self.expect("]")
        return [Cell(sigma, content)] * count

    def membrane(self) -> Membrane:
        if self.tok.kind == "int":
            if self.tok.text != "0":
                self.fail("expected membrane")
            self.i += 1
            return ZERO
        gs = [self.guard()]
        while self.at("|"):
            self.i += 1
            gs.append(self.guard())
        return par(*gs)

    def guard(self) -> Prefix:
        start = self.tok
        if start.kind != "ident" or start.text not in ACTION_KINDS:
            self.fail("expected an action (phago, cophago, exo, coexo, pino)")
        action = start.text
        self.i += 1
        self.expect("<")
        if self.tok.kind != "ident":
            self.fail("expected action name")
        name = self.tok.text
        self.i += 1
        self.expect(">")
        arg = None
        if action in ARG_KINDS:
            if not self.at("("):
                self.fail(f"{action} requires an argument membrane", cls=ArityError)
            self.i += 1
            arg = self.membrane()
            self.expect(")")
        elif self.at("("):
            self.fail(f"{action} takes no argument membrane", cls=ArityError)
        cont: Membrane = ZERO
        if self.at("."):
            self.i += 1
            if self.at("("):
                self.i += 1
                cont = self.membrane()
                self.expect(")")
            elif self.tok.kind == "int" and self.tok.text == "0":
                # explicit empty continuation, as in "exo<n>.0"
                self.i += 1
            else:
                cont = self.guard()
        return Prefix(action, name, arg, cont)


def parse_system(text: str) -> System:
    p = _Parser(text)
    out = p.system()
    if p.tok.kind != "eof":
        p.fail("trailing input")
    return out


def parse_membrane(text: str) -> Membrane:
    p = _Parser(text)
    out = p.membrane()
    if p.tok.kind != "eof":
        p.fail("trailing input")
    return out


def system_depth(P: System) -> int:
    return max((1 + system_depth(c.content) for c in components(P)), default=0)


def iter_cells(P: System) -> Iterable[Cell]:
    for c in components(P):
        yield c
        yield from iter_cells(c.content)
