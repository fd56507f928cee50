"""Reference semantics for the Brane Calculus.

Two independent executable semantics:

* ``reduce_all`` searches every redex (phago, exo, pino, under any number
  of enclosing cells) directly on canonical forms.
* ``measure`` computes the rate-annotated transition family of a term by
  structural recursion, with each measure represented as a finite table
  ``{(label, targets): rate}`` over congruence classes (canonical forms).

The id entries of ``measure(P)`` are the stochastic one-step successors of
``P``; their support must coincide with ``reduce_all(P)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

from . import syntax as sx
from .rates import RateMap, format_rate
from .syntax import (
    ARG_KINDS,
    COEXO,
    COPHAGO,
    EXO,
    PHAGO,
    PINO,
    Cell,
    Comp,
    Par,
    Prefix,
    Void,
    Zero,
    c_cell,
    ms_remove,
    ms_union,
)

ID = "id"
PH = "ph"
PHPERP = "phperp"
EX = "ex"

SYSTEM_LABELS = (ID, PH, PHPERP, EX)

# sorts of target components, per label kind
ARITY = {
    ID: ("sys",),
    PH: ("sys", "sys"),
    PHPERP: ("mem", "mem", "sys", "sys"),
    EX: ("mem", "sys", "sys"),
    PHAGO: ("mem",),
    EXO: ("mem",),
    COEXO: ("mem",),
    COPHAGO: ("mem", "mem"),
    PINO: ("mem", "mem"),
}


class Label(NamedTuple):
    kind: str
    name: str = ""

    def __str__(self):
        return self.kind if self.kind == ID else f"{self.kind}({self.name})"


ID_LABEL = Label(ID)


class MeasureTable(dict):
    """Finite-support measure family: ``(Label, targets) -> rate``.

    Zero-rate entries are never stored.
    """

    def add(self, label: Label, targets: tuple, rate) -> None:
        if not rate:
            return
        key = (label, targets)
        total = self.get(key, 0) + rate
        if total:
            self[key] = total
        else:
            self.pop(key, None)

    def entries(self, kind: str):
        for (label, targets), rate in self.items():
            if label.kind == kind:
                yield label.name, targets, rate

    def id_rates(self) -> dict:
        return {t[0]: r for (lab, t), r in self.items() if lab.kind == ID}


OMEGA = MeasureTable()


@dataclass(frozen=True)
class Successor:
    target: tuple  # canonical system
    rate: object


def _c(term, memo=None):
    return sx.canonicalize(term, memo)


# --------------------------------------------------------------------------
# measure operators


def prefix_measure(action: Prefix, rates: RateMap, memo: Optional[dict] = None) -> MeasureTable:
    out = MeasureTable()
    if isinstance(action, Zero):
        return out
    if not isinstance(action, Prefix):
        raise TypeError("prefix_measure expects a prefixed membrane")
    cont = _c(action.cont, memo)
    if action.action in ARG_KINDS:
        out.add(Label(action.action, action.name), (cont, _c(action.arg, memo)), rates(action.name))
    else:
        out.add(Label(action.action, action.name), (cont,), rates(action.name))
    return out


def measure_par(mu1: MeasureTable, mu2: MeasureTable, sigma, tau, rates: RateMap = None,
                memo: Optional[dict] = None) -> MeasureTable:
    """Parallel composition: residuals of one side absorb the other membrane."""
    cs, ct = _c(sigma, memo), _c(tau, memo)
    out = MeasureTable()
    for mu, other in ((mu1, ct), (mu2, cs)):
        for (label, targets), r in mu.items():
            out.add(label, (ms_union(targets[0], other),) + targets[1:], r)
    return out


def measure_nest(mu: MeasureTable, nu: MeasureTable, sigma, P, rates: RateMap,
                 memo: Optional[dict] = None) -> MeasureTable:
    """The family of the cell ``sigma(|P|)`` from ``mu = measure(P)``, ``nu = measure(sigma)``."""
    cP = _c(P, memo)
    cs = _c(sigma, memo)
    out = MeasureTable()
    for (label, targets), r in nu.items():
        kind = label.kind
        if kind == PHAGO:
            out.add(Label(PH, label.name), (c_cell(targets[0], cP), ()), r)
        elif kind == COPHAGO:
            out.add(Label(PHPERP, label.name), (targets[0], targets[1], cP, ()), r)
        elif kind == EXO:
            out.add(Label(EX, label.name), (targets[0], cP, ()), r)
        elif kind == PINO:
            cont, arg = targets
            out.add(ID_LABEL, (c_cell(cont, ms_union(c_cell(arg, ()), cP)),), r)
    for (label, targets), r in mu.items():
        if label.kind == ID:
            out.add(ID_LABEL, (c_cell(cs, targets[0]),), r)
    for name, (x1, y1, y2), r1 in mu.entries(EX):
        for name2, (x2,), r2 in nu.entries(COEXO):
            if name2 == name:
                target = ms_union(c_cell(ms_union(x1, x2), y2), y1)
                out.add(ID_LABEL, (target,), r1 * r2 / rates(name))
    return out


def measure_comp(mu1: MeasureTable, mu2: MeasureTable, P, Q, rates: RateMap,
                 memo: Optional[dict] = None) -> MeasureTable:
    """The family of ``P o Q``: lifted entries plus phago synchronisations."""
    cP, cQ = _c(P, memo), _c(Q, memo)
    out = MeasureTable()
    for mu, other in ((mu1, cQ), (mu2, cP)):
        for (label, targets), r in mu.items():
            out.add(label, targets[:-1] + (ms_union(targets[-1], other),), r)
    for left, right in ((mu1, mu2), (mu2, mu1)):
        for name, (y1, y2), r1 in left.entries(PH):
            for name2, (x1, x2, z1, z2), r2 in right.entries(PHPERP):
                if name2 != name:
                    continue
                inner = ms_union(c_cell(x2, y1), z1)
                target = ms_union(ms_union(c_cell(x1, inner), y2), z2)
                out.add(ID_LABEL, (target,), r1 * r2 / rates(name))
    return out


class _Measurer:
    def __init__(self, rates: RateMap):
        self.rates = rates
        self.canon: dict = {}
        self.cache: dict = {}

    def __call__(self, t) -> MeasureTable:
        hit = self.cache.get(id(t))
        if hit is not None and hit[0] is t:
            return hit[1]
        if isinstance(t, (Zero, Void)):
            out = MeasureTable()
        elif isinstance(t, Prefix):
            out = prefix_measure(t, self.rates, self.canon)
        elif isinstance(t, Par):
            out = measure_par(self(t.left), self(t.right), t.left, t.right, self.rates, self.canon)
        elif isinstance(t, Cell):
            out = measure_nest(self(t.content), self(t.membrane), t.membrane, t.content,
                               self.rates, self.canon)
        elif isinstance(t, Comp):
            out = measure_comp(self(t.left), self(t.right), t.left, t.right, self.rates, self.canon)
        else:
            raise TypeError(f"not a Brane term: {t!r}")
        self.cache[id(t)] = (t, out)
        return out


def measure(term, rates: RateMap) -> MeasureTable:
    """Measure family of a membrane or system (AST or canonical form)."""
    if isinstance(term, tuple):
        raise TypeError("measure needs an AST; use system_from_canonical first")
    return _Measurer(rates)(term)


def id_successors(P, rates: RateMap) -> set:
    return {Successor(target, r) for target, r in measure(P, rates).id_rates().items() if r > 0}


# --------------------------------------------------------------------------
# reduction relation, by direct redex search


def _residual(mem: tuple, prefix: tuple) -> tuple:
    return ms_union(ms_remove(mem, prefix), prefix[3])


def _prefixes(mem: tuple, kind: str):
    for p, _ in mem:
        if p[0] == kind:
            yield p


def reduce_all(P) -> set:
    """All canonical systems reachable from ``P`` in one reduction step."""
    return _reductions(_c(P), {})


def _reductions(s: tuple, memo: dict) -> set:
    if s in memo:
        return memo[s]
    out: set = set()
    cells = [c for c, _ in s]
    for c in cells:
        mem, content = c
        rest = ms_remove(s, c)
        # red-loc
        for q in _reductions(content, memo):
            out.add(ms_union(rest, c_cell(mem, q)))
        # red-pino
        for p in _prefixes(mem, PINO):
            inner = ms_union(c_cell(p[2], ()), content)
            out.add(ms_union(rest, c_cell(_residual(mem, p), inner)))
        # red-exo: this cell is the coexo parent
        for q in _prefixes(mem, COEXO):
            for child, _ in content:
                cmem, cP = child
                for e in _prefixes(cmem, EXO):
                    if e[1] != q[1]:
                        continue
                    left = ms_remove(content, child)
                    merged = ms_union(_residual(mem, q), _residual(cmem, e))
                    out.add(ms_union(ms_union(rest, c_cell(merged, left)), cP))
        # red-phago: this cell is the cophago side
        for q in _prefixes(mem, COPHAGO):
            for other in cells:
                if other == c and dict(s)[c] < 2:
                    continue
                omem, oP = other
                for p in _prefixes(omem, PHAGO):
                    if p[1] != q[1]:
                        continue
                    left = ms_remove(rest, other)
                    engulfed = c_cell(q[2], c_cell(_residual(omem, p), oP))
                    new = c_cell(_residual(mem, q), ms_union(engulfed, content))
                    out.add(ms_union(left, new))
    memo[s] = out
    return out


# --------------------------------------------------------------------------
# printing


def format_target(sort: str, t: tuple) -> str:
    if sort == "mem":
        return sx.format_canonical_membrane(t)
    return sx.format_canonical_system(t)


def format_table(table: MeasureTable) -> str:
    lines = []
    for (label, targets), rate in sorted(table.items(), key=lambda kv: kv[0]):
        sorts = ARITY[label.kind]
        shown = ", ".join(format_target(s, t) for s, t in zip(sorts, targets))
        lines.append(f"{label} -> [{shown}] : {format_rate(rate)}")
    return "\n".join(lines) + ("\n" if lines else "")
