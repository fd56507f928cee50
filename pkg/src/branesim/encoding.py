"""Brane Calculus on the stochastic machine.

A species is a membrane's multiset of top-level actions (its complex)
together with the compartment it sits in and the compartment it encloses.
Complexes are canonical membranes, i.e. sorted ``(prefix, count)`` tuples,
so a complex is directly a ``syntax`` canonical form.
"""

from __future__ import annotations

from typing import Optional

from . import gsam
from . import syntax as sx
from .gsam import FRESH, ROOT, TWIN, Environment, MachineTerm, Population, Reaction, Species
from .rates import RateMap
from .syntax import COEXO, COPHAGO, EXO, PHAGO, PINO, ms_remove, ms_union


class DecodeError(gsam.MachineError):
    pass


def encode_membrane(sigma) -> tuple:
    """The complex of a membrane: its top-level actions, counted."""
    return sx.canonicalize(sigma)


def complex_membrane(c: tuple) -> sx.Membrane:
    return sx.membrane_from_canonical(c)


def format_complex(c: tuple) -> str:
    return sx.format_canonical_membrane(c)


def encode_species(env: Environment, x: str, Q) -> tuple:
    """Species for normal system ``Q`` located at ``x``; fresh inner names come from ``env``.

    ``Q`` may be a ``NormalSystem`` or a canonical system.  Returns the
    ordered list of ``(species, count)`` (parents before children) and the
    environment.
    """
    out: list = []
    stack = [(x, _canonical_entries(Q))]
    while stack:
        where, entries = stack.pop(0)
        for mem, content, count in entries:
            y = env.fresh()
            out.append((Species(mem, where, y), count))
            stack.append((y, _canonical_entries(content)))
    return out, env


def _canonical_entries(Q):
    if isinstance(Q, tuple) and (not Q or not isinstance(Q[0], sx.NormalEntry)):
        return [(mem, content, k) for (mem, content), k in Q]
    return [(sx.canonicalize(e.membrane), e.content, e.count) for e in Q]


def _residual(c: tuple, prefix: tuple) -> tuple:
    return ms_union(ms_remove(c, prefix), prefix[3])


def _of_kind(c: tuple, kind: str):
    for p, k in c:
        if p[0] == kind:
            yield p, k


class BraneReactions:
    """Reaction generator: pino (unary), exo and phago (binary)."""

    def __init__(self, rates: RateMap):
        self.rates = rates

    def __call__(self, env: Environment, I: Species, i: int, S: Population) -> list:
        acc: dict = {}

        def emit(kind, name, reactants, products, rename, rate):
            key = (kind, name, tuple(reactants), tuple(products), rename)
            acc[key] = acc.get(key, 0) + rate

        c, x, y = I.payload, I.outer, I.inner
        # pinocytosis
        for p, k in _of_kind(c, PINO):
            emit(PINO, p[1], [(I, 1)],
                 [(Species(_residual(c, p), x, y), 1), (Species(p[2], y, FRESH), 1)],
                 (), k * self.rates(p[1]))
        # exocytosis with I as the parent
        for q, kq in _of_kind(c, COEXO):
            for child in S.at(y):
                for e, ke in _of_kind(child.payload, EXO):
                    if e[1] == q[1]:
                        self._exo(emit, I, q, kq, child, e, ke)
        # exocytosis with I as the child
        parent = S.holder(x) if x != ROOT else None
        if parent is not None:
            for e, ke in _of_kind(c, EXO):
                for q, kq in _of_kind(parent.payload, COEXO):
                    if e[1] == q[1]:
                        self._exo(emit, parent, q, kq, I, e, ke)
        # phagocytosis, both roles, against live siblings (including I itself)
        siblings = S.at(x)
        if I not in siblings:
            siblings.append(I)
        for q, kq in _of_kind(c, COPHAGO):
            for sib in siblings:
                for p, kp in _of_kind(sib.payload, PHAGO):
                    if p[1] == q[1]:
                        self._phago(emit, I, q, kq, sib, p, kp)
        for p, kp in _of_kind(c, PHAGO):
            for sib in siblings:
                if sib == I:
                    continue  # covered above
                for q, kq in _of_kind(sib.payload, COPHAGO):
                    if p[1] == q[1]:
                        self._phago(emit, sib, q, kq, I, p, kp)
        return [Reaction(kind, name, list(r), list(pr), rn, rate)
                for (kind, name, r, pr, rn), rate in acc.items()]

    def _exo(self, emit, parent, q, kq, child, e, ke):
        n = q[1]
        merged = ms_union(_residual(parent.payload, q), _residual(child.payload, e))
        emit(EXO, n, [(parent, 1), (child, 1)],
             [(Species(merged, parent.outer, parent.inner), 1)],
             (child.inner, parent.outer), kq * ke * self.rates(n))

    def _phago(self, emit, eater, q, kq, food, p, kp):
        n = q[1]
        x, y = eater.outer, eater.inner
        if food == eater:
            reactants = [(eater, 2)]
            food_inner = TWIN
            rate = 2 * kq * kp * self.rates(n)
        else:
            reactants = [(eater, 1), (food, 1)]
            food_inner = food.inner
            rate = kq * kp * self.rates(n)
        products = [
            (Species(_residual(eater.payload, q), x, y), 1),
            (Species(q[2], y, FRESH), 1),
            (Species(_residual(food.payload, p), FRESH, food_inner), 1),
        ]
        emit(PHAGO, n, reactants, products, (), rate)


def gen_reactions(env: Environment, I: Species, i: int, S: Population, rates: RateMap) -> list:
    return BraneReactions(rates)(env, I, i, S)


def machine_init(P, rates: RateMap, rng, gen=None) -> MachineTerm:
    """Encode ``P`` at the root and fold it into the empty machine."""
    T = MachineTerm()
    species, _ = encode_species(T.env, ROOT, sx.canonicalize(P))
    gsam.add_species(T, species, gen or BraneReactions(rates), rng)
    return T


# --------------------------------------------------------------------------
# back-translation


def root(S: Population) -> str:
    live = S.live()
    if not live:
        raise DecodeError("no root: population is empty")
    inner = {s.inner for s in live}
    roots = []
    for s in live:
        if s.outer not in inner and s.outer not in roots:
            roots.append(s.outer)
    if len(roots) != 1:
        raise DecodeError(f"expected one root name, found {roots}")
    return roots[0]


def decode_canonical(S: Population, x: str = ROOT) -> tuple:
    """Canonical form of the system encoded in compartment ``x``."""
    return _decode(S, x, set())


def _decode(S: Population, x: str, active: set) -> tuple:
    if x in active:
        raise DecodeError(f"compartment cycle through {x!r}")
    active.add(x)
    acc: dict = {}
    for s in S.at(x):
        content = _decode(S, s.inner, active)
        if s.payload or content:  # an empty cell is no cell at all
            key = (s.payload, content)
            acc[key] = acc.get(key, 0) + S[s]
    active.discard(x)
    return tuple(sorted(acc.items()))


def decode(S: Population, x: str = ROOT) -> sx.System:
    return sx.system_from_canonical(decode_canonical(S, x))


def subtree_fingerprint(T: MachineTerm, s: Species):
    return decode_canonical(T.populations, s.inner)


def normalizer(T: MachineTerm, gen, rng) -> None:
    gsam.normalize(T, subtree_fingerprint, gen, rng)


def census(T: MachineTerm) -> list:
    """``(outer, complex, count)`` for live species, in a stable order."""
    rows = [(s.outer, format_complex(s.payload), T.populations[s]) for s in T.populations.live()]
    return sorted(rows)


def machine_snapshot(T: MachineTerm) -> str:
    """Human-readable dump of a machine term, for error reports."""
    lines = [f"time {T.time!r}", "species:"]
    for s in sorted(T.populations.counts, key=lambda s: s.sort_key()):
        lines.append(f"  ({format_complex(s.payload)})^{s.outer}_{s.inner} -> {T.populations[s]}")
    lines.append("reactions:")
    for O, act in T.reactions.items():
        lines.append(f"  {O.kind}<{O.name}> rate {O.rate} a={act.propensity} t={act.time!r}")
    return "\n".join(lines)
