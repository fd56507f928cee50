"""Copy-on-write generic stochastic abstract machine.

A machine term is ``E |- (t, S, R)``: a name environment, the current
time, a population ``S`` of located species and a reaction map ``R`` from
reactions to Next-Reaction-method activities (scheduled time, propensity).

Species are opaque apart from their location: each has an ``outer`` name
(the compartment it sits in) and an ``inner`` name (the compartment it
encloses).  Everything calculus-specific happens in the reaction
generator, a callable ``gen(env, species, count, population) -> [Reaction]``.

The machine mutates terms in place; use ``MachineTerm.copy`` to branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Iterable, NamedTuple, Optional

ROOT = "root"
# placeholders in reaction products, resolved when the reaction fires
FRESH = "?fresh"
TWIN = "?twin"

INF = math.inf


class MachineError(RuntimeError):
    pass


class MalformedHierarchy(MachineError):
    pass


class Deadlock(MachineError):
    pass


class InvariantViolation(MachineError):
    pass


class Species:
    """A located complex ``(|payload|)^outer_inner``."""

    __slots__ = ("payload", "outer", "inner", "_hash")

    def __init__(self, payload, outer: str, inner: str):
        if outer == inner:
            raise ValueError("species must not enclose its own location")
        self.payload = payload
        self.outer = outer
        self.inner = inner
        self._hash = hash((payload, outer, inner))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (
            isinstance(other, Species)
            and self._hash == other._hash
            and self.outer == other.outer
            and self.inner == other.inner
            and self.payload == other.payload
        )

    def __repr__(self):
        return f"Species({self.payload!r}, {self.outer!r}, {self.inner!r})"

    def sort_key(self):
        return (self.outer, self.inner, self.payload)

    def rename(self, old: str, new: str) -> "Species":
        if old not in (self.outer, self.inner):
            return self
        return Species(
            self.payload,
            new if self.outer == old else self.outer,
            new if self.inner == old else self.inner,
        )

    def names(self):
        return (self.outer, self.inner)


def _ms_key(ms: tuple):
    return tuple((s.sort_key(), k) for s, k in ms)


class Reaction:
    """``(S1, r, f, S2)`` with ``f`` either identity or one substitution.

    ``kind`` and ``name`` only label the reaction for traces.  ``reactants``
    and ``products`` are tuples of ``(Species, count)`` in canonical order;
    ``rename`` is ``()`` or ``(old, new)``.
    """

    __slots__ = ("kind", "name", "reactants", "products", "rename", "rate", "_hash", "_key")

    def __init__(self, kind, name, reactants, products, rename=(), rate=1):
        self.kind = kind
        self.name = name
        self.reactants = tuple(sorted(reactants, key=lambda e: e[0].sort_key()))
        self.products = tuple(sorted(products, key=lambda e: e[0].sort_key()))
        self.rename = tuple(rename)
        self.rate = rate
        if any(k < 1 for _, k in self.reactants):
            raise ValueError("reactant multiplicities must be positive")
        self._key = None
        self._hash = hash((kind, name, self.reactants, self.products, self.rename, rate))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (
            isinstance(other, Reaction)
            and self._hash == other._hash
            and self.kind == other.kind
            and self.name == other.name
            and self.rate == other.rate
            and self.rename == other.rename
            and self.reactants == other.reactants
            and self.products == other.products
        )

    def __repr__(self):
        return (f"Reaction({self.kind}<{self.name}>, {self.reactants!r} -> {self.products!r},"
                f" f={self.rename!r}, r={self.rate})")

    def sort_key(self):
        # total order used to break ties between equal scheduled times
        if self._key is None:
            self._key = (self.kind, self.name, _ms_key(self.reactants),
                         _ms_key(self.products), self.rename, self.rate)
        return self._key

    def substitute(self, old: str, new: str) -> "Reaction":
        return Reaction(
            self.kind,
            self.name,
            [(s.rename(old, new), k) for s, k in self.reactants],
            [(s.rename(old, new), k) for s, k in self.products],
            tuple(new if n == old else n for n in self.rename),
            self.rate,
        )

    def names(self) -> set:
        out = set(self.rename)
        for s, _ in self.reactants + self.products:
            out.update(s.names())
        return out


class Activity(NamedTuple):
    time: float
    propensity: object


@dataclass
class Environment:
    names: dict = field(default_factory=dict)  # used as an ordered set
    counter: int = 0

    def __contains__(self, name):
        return name in self.names

    def add(self, name: str) -> None:
        self.names[name] = None

    def fresh(self) -> str:
        while True:
            self.counter += 1
            name = f"c{self.counter}"
            if name not in self.names:
                self.names[name] = None
                return name

    def copy(self) -> "Environment":
        return Environment(dict(self.names), self.counter)


class Population:
    """Species multiplicities with location indexes.

    Absent keys read as 0.  Zero counts may linger until ``sweep``.
    """

    def __init__(self):
        self.counts: dict = {}
        self._at: dict = {}  # outer name -> ordered set of species
        self._enclosing: dict = {}  # inner name -> ordered set of species

    def __getitem__(self, s: Species) -> int:
        return self.counts.get(s, 0)

    get = __getitem__

    def __contains__(self, s):
        return s in self.counts

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def items(self):
        return self.counts.items()

    def live(self):
        return [s for s, k in self.counts.items() if k > 0]

    def set(self, s: Species, n: int) -> None:
        if s not in self.counts:
            self._at.setdefault(s.outer, {})[s] = None
            self._enclosing.setdefault(s.inner, {})[s] = None
        self.counts[s] = n

    def delete(self, s: Species) -> None:
        del self.counts[s]
        for index, name in ((self._at, s.outer), (self._enclosing, s.inner)):
            bucket = index[name]
            del bucket[s]
            if not bucket:
                del index[name]

    def at(self, name: str, live: bool = True) -> list:
        """Species located in compartment ``name``."""
        bucket = self._at.get(name, ())
        if not live:
            return list(bucket)
        return [s for s in bucket if self.counts[s] > 0]

    def enclosing(self, name: str) -> list:
        return list(self._enclosing.get(name, ()))

    def holder(self, name: str) -> Optional[Species]:
        """The live species whose compartment is ``name``, if any."""
        found = [s for s in self._enclosing.get(name, ()) if self.counts[s] > 0]
        if len(found) > 1:
            raise MalformedHierarchy(f"compartment {name!r} enclosed by {len(found)} species")
        return found[0] if found else None

    def ancestors(self, s: Species) -> list:
        """Live ancestor chain of ``s``, innermost first; None if broken."""
        out = []
        seen = {s.inner}
        name = s.outer
        while name != ROOT:
            if name in seen:
                raise MalformedHierarchy(f"cycle through {name!r}")
            seen.add(name)
            parent = self.holder(name)
            if parent is None:
                return None
            out.append(parent)
            name = parent.outer
        return out

    def descendants(self, s: Species) -> list:
        out = []
        stack = [s.inner]
        seen = set()
        while stack:
            name = stack.pop()
            if name in seen:
                raise MalformedHierarchy(f"cycle through {name!r}")
            seen.add(name)
            for child in self._at.get(name, ()):
                out.append(child)
                stack.append(child.inner)
        return out

    def copy(self) -> "Population":
        p = Population()
        p.counts = dict(self.counts)
        p._at = {k: dict(v) for k, v in self._at.items()}
        p._enclosing = {k: dict(v) for k, v in self._enclosing.items()}
        return p

    def names(self) -> set:
        out = set()
        for s in self.counts:
            out.update(s.names())
        return out


class MachineTerm:
    def __init__(self, env: Optional[Environment] = None, time: float = 0.0):
        self.env = env or Environment({ROOT: None})
        self.time = time
        self.populations = Population()
        self.reactions: dict = {}  # Reaction -> Activity
        self._by_reactant: dict = {}  # Species -> ordered set of reactions

    def copy(self) -> "MachineTerm":
        t = MachineTerm(self.env.copy(), self.time)
        t.populations = self.populations.copy()
        t.reactions = dict(self.reactions)
        t._by_reactant = {k: dict(v) for k, v in self._by_reactant.items()}
        return t

    def set_activity(self, O: Reaction, act: Activity) -> None:
        if O not in self.reactions:
            for s, _ in O.reactants:
                self._by_reactant.setdefault(s, {})[O] = None
        self.reactions[O] = act

    def drop_reaction(self, O: Reaction) -> None:
        del self.reactions[O]
        for s, _ in O.reactants:
            bucket = self._by_reactant[s]
            del bucket[O]
            if not bucket:
                del self._by_reactant[s]

    def reactions_of(self, s: Species) -> list:
        return list(self._by_reactant.get(s, ()))

    def live_reactions(self) -> list:
        return [O for O, act in self.reactions.items() if act.propensity > 0]


Generator = Callable[[Environment, Species, int, Population], list]


# --------------------------------------------------------------------------
# propensities and timing


def s_star(S: Population, I: Species) -> int:
    """Cumulative multiplicity: own count times the counts up the parent chain."""
    total = S[I]
    name = I.outer
    seen = {I.inner}
    while name != ROOT:
        if name in seen:
            raise MalformedHierarchy(f"cycle through {name!r}")
        seen.add(name)
        parents = [p for p in S.enclosing(name) if S[p] > 0]
        if len(parents) != 1:
            what = "missing" if not parents else "ambiguous"
            raise MalformedHierarchy(f"parent of compartment {name!r} is {what}")
        total *= S[parents[0]]
        name = parents[0].outer
    return total


def propensity(O: Reaction, S: Population):
    """Mass-action propensity of ``O`` in ``S``.

    Each reactant contributes ``C(S(I), j)``; every distinct ancestor of the
    reactants that is not itself a reactant contributes its count once.
    When all reactants sit at the root this is the textbook product of
    binomials of cumulative multiplicities.
    """
    a = O.rate
    involved = {s for s, _ in O.reactants}
    seen: dict = {}
    for s, j in O.reactants:
        n = S[s]
        if n < j:
            return 0 * a
        a = a * comb(n, j)
        chain = S.ancestors(s)
        if chain is None:
            return 0 * a
        for anc in chain:
            if anc not in involved:
                seen[anc] = None
    for anc in seen:
        a = a * S[anc]
    return a


def delay(a, rng) -> float:
    """Exponential waiting time with parameter ``a`` (``inf`` when ``a`` is 0)."""
    if not a > 0:
        return INF
    u = 1.0 - rng.random()  # uniform on (0, 1]
    return -math.log(u) / float(a)


def next_reaction(T: MachineTerm):
    """``(O, a, t)`` for the earliest scheduled reaction; ties go to the least ``O``."""
    best = None
    best_time = INF
    for O, act in T.reactions.items():
        t = act.time
        if t < best_time:
            best, best_time = O, t
        elif t == best_time and best is not None and t != INF:
            if O.sort_key() < best.sort_key():
                best = O
    if best is None:
        raise Deadlock("no reaction can fire")
    return best, T.reactions[best].propensity, best_time


# the operation is called ``next`` in the machine description
next = next_reaction  # noqa: A001


def init_reactions(L: Iterable[Reaction], T: MachineTerm, rng) -> dict:
    out = {}
    for O in L:
        a = propensity(O, T.populations)
        out[O] = Activity(T.time + delay(a, rng), a)
    return out


def _rescheduled(act: Activity, a_new, now: float, rng) -> Activity:
    t_old, a_old = act
    if a_new == a_old and t_old > now:
        return act
    if not a_new > 0:
        return Activity(INF, a_new)
    if t_old == INF or not a_old > 0 or t_old <= now:
        return Activity(now + delay(a_new, rng), a_new)
    return Activity(now + float(a_old / a_new) * (t_old - now), a_new)


def affected_reactions(I: Species, T: MachineTerm) -> list:
    """Reactions whose propensity may depend on the count of ``I``."""
    out: dict = {}
    for O in T.reactions_of(I):
        out[O] = None
    if I in T.populations:
        for d in T.populations.descendants(I):
            for O in T.reactions_of(d):
                out[O] = None
    return list(out)


def update_reactions(I: Species, T: MachineTerm, rng) -> dict:
    """Recompute activities that depend on ``I`` and reschedule them."""
    out = {}
    for O in affected_reactions(I, T):
        act = T.reactions[O]
        new = _rescheduled(act, propensity(O, T.populations), T.time, rng)
        if new != act:
            out[O] = new
    return out


def _apply(T: MachineTerm, acts: dict) -> None:
    for O, act in acts.items():
        T.set_activity(O, act)


def _generate(T: MachineTerm, I: Species, gen: Generator, rng) -> None:
    new = [O for O in gen(T.env, I, T.populations[I], T.populations) if O not in T.reactions]
    _apply(T, init_reactions(new, T, rng))


# --------------------------------------------------------------------------
# population algebra


def add_species(T: MachineTerm, delta, gen: Generator, rng) -> MachineTerm:
    """Fold ``delta`` into ``T``: new species get fresh reactions, old ones rescale."""
    items = delta.items() if hasattr(delta, "items") else delta
    for I, i in items:
        if i == 0:
            continue
        for name in I.names():
            T.env.add(name)
        S = T.populations
        old = S[I]
        S.set(I, old + i)
        if old == 0:
            _generate(T, I, gen, rng)
        _apply(T, update_reactions(I, T, rng))
    return T


def remove_species(T: MachineTerm, delta, rng) -> MachineTerm:
    items = delta.items() if hasattr(delta, "items") else delta
    for I, i in items:
        have = T.populations[I]
        if have < i:
            raise MachineError(f"population underflow removing {i} of {I!r} (have {have})")
        T.populations.set(I, have - i)
        _apply(T, update_reactions(I, T, rng))
    return T


def sweep(T: MachineTerm) -> None:
    """Drop zero-count species together with the reactions that consume them."""
    S = T.populations
    dead = [s for s, k in S.items() if k == 0]
    for s in dead:
        for O in T.reactions_of(s):
            T.drop_reaction(O)
        S.delete(s)


# --------------------------------------------------------------------------
# copy on write


def dup(T: MachineTerm, y: str, y2: str, gen: Generator, rng):
    """Deep-copy the contents of compartment ``y`` into compartment ``y2``.

    Returns the copied species (as a dict of counts) and the activities of
    the reactions generated for them.
    """
    S = T.populations
    copies: dict = {}
    stack = [(y, y2)]
    while stack:
        src, dst = stack.pop()
        for child in S.at(src):
            w2 = T.env.fresh()
            c = Species(child.payload, dst, w2)
            copies[c] = S[child]
            S.set(c, S[child])
            stack.append((child.inner, w2))
    before = set(T.reactions)
    for c in copies:
        _generate(T, c, gen, rng)
    return copies, {O: T.reactions[O] for O in T.reactions if O not in before}


def _split(T: MachineTerm, I: Species, keep: int, gen: Generator, rng) -> Species:
    """Leave ``keep`` copies of ``I`` in place; move the rest to a fresh twin."""
    S = T.populations
    n = S[I]
    z = T.env.fresh()
    twin = Species(I.payload, I.outer, z)
    S.set(I, keep)
    S.set(twin, n - keep)
    dup(T, I.inner, z, gen, rng)
    _generate(T, twin, gen, rng)
    _apply(T, update_reactions(I, T, rng))
    return twin


def cow(T: MachineTerm, S1, gen: Generator, rng) -> dict:
    """Give every reactant a private lineage of multiplicity one.

    Ancestors with count > 1 are split root-first, then each reactant is
    split down to its required count.  A reactant required ``j > 1`` times
    is further split into ``j`` unit instances; the extra instances are
    returned as ``{reactant: [twin, ...]}``.
    """
    S = T.populations
    twins: dict = {}
    for I, j in S1:
        chain = S.ancestors(I)
        if chain is None:
            raise MalformedHierarchy(f"reactant {I!r} has no live parent chain")
        for A in reversed(chain):
            if S[A] > 1:
                _split(T, A, 1, gen, rng)
        if S[I] < j:
            raise MachineError(f"not enough copies of {I!r} to fire")
        if S[I] > j:
            _split(T, I, j, gen, rng)
        extra = []
        while S[I] > 1:
            extra.append(_split(T, I, S[I] - 1, gen, rng))
        if extra:
            twins[I] = extra
    return twins


# --------------------------------------------------------------------------
# stepping


@dataclass
class Fired:
    reaction: Reaction
    propensity: object
    time: float


def _resolve(sp: Species, fresh: Optional[str], twin: Optional[str]) -> Species:
    if fresh is not None and FRESH in sp.names():
        sp = sp.rename(FRESH, fresh)
    if twin is not None and TWIN in sp.names():
        sp = sp.rename(TWIN, twin)
    return sp


def apply_rename(T: MachineTerm, old: str, new: str, gen: Generator, rng) -> None:
    """Substitute ``new`` for ``old`` everywhere, then re-derive reactions."""
    S = T.populations
    moved = [s for s in S.at(old, live=False)] + [s for s in S.enclosing(old)]
    if not moved:
        return
    touched: dict = {}
    for s in moved:
        for O in T.reactions_of(s):
            touched[O] = T.reactions[O]
    for O in touched:
        T.drop_reaction(O)
    renamed = []
    for s in moved:
        k = S[s]
        S.delete(s)
        r = s.rename(old, new)
        S.set(r, S[r] + k)
        renamed.append(r)
    for O, act in touched.items():
        O2 = O.substitute(old, new)
        if O2 not in T.reactions:
            T.set_activity(O2, act)
    for r in renamed:
        if S[r] > 0:
            _generate(T, r, gen, rng)
    for r in renamed:
        _apply(T, update_reactions(r, T, rng))


def step(T: MachineTerm, gen: Generator, rng, *, forced: Optional[Reaction] = None,
         normalizer: Optional[Callable] = None) -> Fired:
    """Fire one reaction (the next one, or ``forced``) and return what fired."""
    if forced is None:
        O, a, t = next_reaction(T)
    else:
        O = forced
        a = T.reactions[O].propensity
        t = T.time
    if not a > 0:
        raise MachineError(f"reaction {O!r} is not enabled")
    T.time = t
    twins = cow(T, O.reactants, gen, rng)
    S1 = []
    twin_name = None
    for I, j in O.reactants:
        S1.append((I, 1 if I in twins else j))
        for tw in twins.get(I, ()):
            S1.append((tw, 1))
            twin_name = twin_name or tw.inner
    fresh = None
    if any(FRESH in sp.names() for sp, _ in O.products):
        fresh = T.env.fresh()
    S2 = [(_resolve(sp, fresh, twin_name), k) for sp, k in O.products]
    remove_species(T, S1, rng)
    add_species(T, S2, gen, rng)
    sweep(T)
    if O.rename:
        apply_rename(T, O.rename[0], O.rename[1], gen, rng)
    if normalizer is not None:
        normalizer(T, gen, rng)
        sweep(T)
    act = T.reactions.get(O)
    if act is not None and act.time <= t:
        T.set_activity(O, Activity(T.time + delay(act.propensity, rng), act.propensity))
    return Fired(O, a, t)


# --------------------------------------------------------------------------
# normalisation


def normalize(T: MachineTerm, fingerprint: Callable, gen: Generator, rng) -> MachineTerm:
    """Merge sibling species with equal payloads and congruent subtrees.

    ``fingerprint(T, species)`` must return a hashable value that is equal
    for two species exactly when their subtrees are interchangeable.  The
    merged-away copies and their subtrees are deleted with their reactions;
    the survivor absorbs the count and its reactions are rescaled.
    """
    S = T.populations
    queue = [ROOT]
    while queue:
        name = queue.pop(0)
        groups: dict = {}
        for s in S.at(name):
            groups.setdefault((s.payload, fingerprint(T, s)), []).append(s)
        for members in groups.values():
            keep = members[0]
            if len(members) > 1:
                extra = sum(S[m] for m in members[1:])
                for m in members[1:]:
                    for d in [m] + S.descendants(m):
                        for O in T.reactions_of(d):
                            T.drop_reaction(O)
                        S.delete(d)
                S.set(keep, S[keep] + extra)
                _apply(T, update_reactions(keep, T, rng))
            queue.append(keep.inner)
    return T


# --------------------------------------------------------------------------
# checks


def check_invariants(T: MachineTerm, gen: Optional[Generator] = None) -> None:
    """Raise ``InvariantViolation`` if the machine term is not well formed."""
    S = T.populations
    problems = []
    if not math.isfinite(T.time) or T.time < 0:
        problems.append(f"bad time {T.time}")
    for s, k in S.items():
        if k < 0:
            problems.append(f"negative count for {s!r}")
        for n in s.names():
            if n not in T.env:
                problems.append(f"free name {n!r} of {s!r} not in environment")
    inner_seen: dict = {}
    for s in S.live():
        if s.inner in inner_seen:
            problems.append(f"compartment {s.inner!r} enclosed twice")
        inner_seen[s.inner] = s
    for O, act in T.reactions.items():
        for n in O.names() - {FRESH, TWIN}:
            if n not in T.env:
                problems.append(f"free name {n!r} of {O!r} not in environment")
        try:
            a = propensity(O, S)
        except MachineError as e:
            problems.append(str(e))
            continue
        if a != act.propensity:
            problems.append(f"stale propensity for {O!r}: stored {act.propensity}, actual {a}")
        if (act.propensity > 0) == (act.time == INF):
            problems.append(f"activity {act} of {O!r} is inconsistent")
        if act.time < T.time:
            problems.append(f"{O!r} scheduled in the past")
    if gen is not None:
        for s in S.live():
            for O in gen(T.env, s, S[s], S):
                if O not in T.reactions:
                    problems.append(f"missing reaction {O!r}")
    if problems:
        raise InvariantViolation("; ".join(problems[:10]))
