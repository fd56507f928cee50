"""Executable adequacy checks: the machine against the reference semantics.

For a system ``P`` every live reaction of the initial machine is fired
once, each from its own copy of the initial state.  The decoded targets
and propensities are then compared with the oracle:

* soundness: each machine target class carries, summed over the
  reactions reaching it, exactly the oracle's id-rate for that class;
* progress: every class found by redex search is reached by the machine;
* completeness: every class with positive oracle id-rate is reached,
  with the same rate.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import gsam
from . import oracle
from . import syntax as sx
from .encoding import BraneReactions, decode_canonical, machine_init
from .rates import RateMap
from .syntax import ACTION_KINDS, ARG_KINDS, Prefix

REL_TOL = 1e-9


@dataclass
class TermGenerator:
    max_depth: int = 3
    max_width: int = 3
    n_names: int = 3
    rate_range: tuple = (1, 10)
    max_prefix_depth: int = 2
    max_count: int = 3

    @property
    def names(self):
        return [chr(ord("a") + i) for i in range(self.n_names)]

    def membrane(self, rng: random.Random, depth: Optional[int] = None) -> sx.Membrane:
        depth = self.max_prefix_depth if depth is None else depth
        if depth <= 0:
            return sx.ZERO
        n = rng.randint(0, self.max_width)
        return sx.par(*(self.prefix(rng, depth) for _ in range(n)))

    def prefix(self, rng: random.Random, depth: int) -> Prefix:
        kind = rng.choice(ACTION_KINDS)
        name = rng.choice(self.names)
        arg = self.membrane(rng, depth - 1) if kind in ARG_KINDS else None
        cont = self.membrane(rng, depth - 1) if rng.random() < 0.3 else sx.ZERO
        return Prefix(kind, name, arg, cont)

    def system(self, rng: random.Random, depth: Optional[int] = None) -> sx.System:
        depth = self.max_depth if depth is None else depth
        if depth <= 0:
            return sx.VOID
        items = []
        for _ in range(rng.randint(0, self.max_width)):
            c = sx.Cell(self.membrane(rng), self.system(rng, depth - 1))
            k = rng.randint(1, self.max_count) if rng.random() < 0.3 else 1
            items.extend([c] * k)
        return sx.compose(*items)

    def rates(self, rng: random.Random, exact: bool = True) -> RateMap:
        lo, hi = self.rate_range
        table = {}
        for n in self.names:
            r = Fraction(rng.randint(lo * 4, hi * 4), 4)
            table[n] = r if exact else float(r) * (1 + rng.random() * 1e-3)
        return RateMap(table)


@dataclass
class Verdict:
    check: str
    ok: bool
    term: Optional[sx.System] = None
    detail: str = ""

    def __bool__(self):
        return self.ok

    def report(self) -> str:
        status = "ok" if self.ok else "COUNTEREXAMPLE"
        text = f"{self.check}: {status}"
        if self.term is not None and not self.ok:
            text += f"\n  term: {sx.format_system(self.term)}"
        if self.detail:
            text += f"\n  {self.detail}"
        return text


@dataclass
class Transition:
    reaction: gsam.Reaction
    propensity: object
    target: tuple


def machine_transitions(P, rates: RateMap, seed: int = 0) -> list:
    """Fire each enabled reaction of the initial machine once, on a copy."""
    rng = random.Random(seed)
    gen = BraneReactions(rates)
    T0 = machine_init(P, rates, rng, gen)
    out = []
    for O in T0.live_reactions():
        T = T0.copy()
        fired = gsam.step(T, gen, rng, forced=O)
        out.append(Transition(O, fired.propensity, decode_canonical(T.populations)))
    return out


def _exact(rates: RateMap) -> RateMap:
    if rates.exact:
        return rates
    return RateMap({k: Fraction(v) for k, v in rates.rates.items()}, Fraction(rates.default))


def _close(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        a, b = float(a), float(b)
        return abs(a - b) <= REL_TOL * max(abs(a), abs(b))
    return a == b


def _aggregate(transitions) -> dict:
    agg: dict = {}
    for tr in transitions:
        agg[tr.target] = agg.get(tr.target, 0) + tr.propensity
    return agg


def _fmt(target) -> str:
    return sx.format_canonical_system(target)


class _Case:
    """Machine and oracle views of one system, computed once."""

    def __init__(self, P, rates: RateMap):
        self.P = P
        self.transitions = machine_transitions(P, rates)
        self.machine = _aggregate(self.transitions)
        self.oracle = oracle.measure(P, _exact(rates)).id_rates()
        self._reductions = None

    @property
    def reductions(self):
        if self._reductions is None:
            self._reductions = oracle.reduce_all(self.P)
        return self._reductions

    def soundness(self) -> Verdict:
        for target, a in self.machine.items():
            r = self.oracle.get(target, 0)
            if not _close(a, r):
                return Verdict("soundness", False, self.P,
                               f"machine rate {a} vs oracle rate {r} into {_fmt(target)}")
        return Verdict("soundness", True, self.P)

    def progress(self) -> Verdict:
        for q in self.reductions:
            if q not in self.machine:
                return Verdict("progress", False, self.P,
                               f"no machine transition reaches {_fmt(q)}")
        return Verdict("progress", True, self.P)

    def completeness(self) -> Verdict:
        for target, r in self.oracle.items():
            a = self.machine.get(target)
            if a is None or not _close(a, r):
                return Verdict("completeness", False, self.P,
                               f"oracle rate {r} into {_fmt(target)}, machine gives {a}")
        return Verdict("completeness", True, self.P)

    def all(self) -> list:
        return [self.soundness(), self.progress(), self.completeness()]


def check_soundness(P, rates: RateMap) -> Verdict:
    return _Case(P, rates).soundness()


def check_progress(P, rates: RateMap) -> Verdict:
    return _Case(P, rates).progress()


def check_completeness(P, rates: RateMap) -> Verdict:
    return _Case(P, rates).completeness()


def check_all(P, rates: RateMap) -> list:
    try:
        return _Case(P, rates).all()
    except gsam.MachineError as e:
        return [Verdict("machine", False, P, f"{type(e).__name__}: {e}")]


# --------------------------------------------------------------------------
# shrinking


def _shrink_mem(m: tuple):
    for p, _ in m:
        yield sx.ms_remove(m, p)
        kind, name, arg, cont = p
        if cont:
            yield sx.ms_union(sx.ms_remove(m, p), cont)  # drop the guard, keep what follows
        for arg2 in (_shrink_mem(arg) if arg else ()):
            yield sx.ms_add(sx.ms_remove(m, p), (kind, name, arg2, cont))
        for cont2 in (_shrink_mem(cont) if cont else ()):
            yield sx.ms_add(sx.ms_remove(m, p), (kind, name, arg, cont2))


def _shrink_sys(s: tuple):
    for (mem, content), k in s:
        c = (mem, content)
        rest = sx.ms_remove(s, c)
        yield rest
        if content:
            yield sx.ms_union(rest, content)  # dissolve the cell into its surroundings
        for mem2 in _shrink_mem(mem):
            yield sx.ms_union(rest, sx.c_cell(mem2, content))
        for content2 in _shrink_sys(content):
            yield sx.ms_union(rest, sx.c_cell(mem, content2))


def shrink(P, fails: Callable[[sx.System], bool]) -> sx.System:
    """Greedy shrinking: keep any one-step smaller term that still fails."""
    current = sx.canonicalize(P)
    progress = True
    while progress:
        progress = False
        for cand in _shrink_sys(current):
            if fails(sx.system_from_canonical(cand)):
                current = cand
                progress = True
                break
    return sx.system_from_canonical(current)


# --------------------------------------------------------------------------
# batch driver


@dataclass
class AdequacyReport:
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_adequacy(cases: int, seed: int, max_depth: int = 3, *, exact: bool = True,
                 generator: Optional[TermGenerator] = None, do_shrink: bool = True) -> AdequacyReport:
    gen = generator or TermGenerator(max_depth=max_depth)
    rng = random.Random(seed)
    report = AdequacyReport()
    for _ in range(cases):
        P = gen.system(rng)
        rates = gen.rates(rng, exact=exact)
        report.cases += 1
        bad = [v for v in check_all(P, rates) if not v.ok]
        if not bad:
            continue
        verdict = bad[0]
        if do_shrink:
            def fails(Q, check=verdict.check):
                return any(v.check == check and not v.ok for v in check_all(Q, rates))
            small = shrink(P, fails)
            verdict = next(v for v in check_all(small, rates) if not v.ok)
        report.failures.append(verdict)
    return report
