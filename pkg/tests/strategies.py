"""Shared term generators for the tests."""

import random

from hypothesis import strategies as st

from branesim import syntax as sx
from branesim.syntax import ACTION_KINDS, ARG_KINDS, Cell, Prefix

NAMES = ["a", "b", "c"]


@st.composite
def prefixes(draw, depth=2):
    kind = draw(st.sampled_from(ACTION_KINDS))
    name = draw(st.sampled_from(NAMES))
    arg = draw(membranes(depth - 1)) if kind in ARG_KINDS else None
    cont = draw(membranes(depth - 1))
    return Prefix(kind, name, arg, cont)


@st.composite
def membranes(draw, depth=2, width=3):
    if depth <= 0:
        return sx.ZERO
    n = draw(st.integers(0, width))
    return sx.par(*[draw(prefixes(depth)) for _ in range(n)])


@st.composite
def systems(draw, depth=3, width=3):
    if depth <= 0:
        return sx.VOID
    items = []
    for _ in range(draw(st.integers(0, width))):
        c = Cell(draw(membranes()), draw(systems(depth - 1, width)))
        items.extend([c] * draw(st.integers(1, 3)))
    return sx.compose(*items)


def _random_tree(items, node, rng):
    if not items:
        raise ValueError
    if len(items) == 1:
        return items[0]
    cut = rng.randint(1, len(items) - 1)
    return node(_random_tree(items[:cut], node, rng), _random_tree(items[cut:], node, rng))


def scramble(t, rng: random.Random):
    """A structurally congruent but differently shaped copy of ``t``.

    Children are permuted, trees re-associated at random, and units
    (``0``, ``void``, empty cells) inserted.
    """
    if isinstance(t, sx.Membrane):
        gs = []
        for g in sx.guards(t):
            arg = scramble(g.arg, rng) if g.arg is not None else None
            gs.append(Prefix(g.action, g.name, arg, scramble(g.cont, rng)))
        for _ in range(rng.randint(0, 2)):
            gs.append(sx.ZERO)
        rng.shuffle(gs)
        return _random_tree(gs, sx.Par, rng) if gs else sx.ZERO
    items = [Cell(scramble(c.membrane, rng), scramble(c.content, rng)) for c in sx.components(t)]
    for _ in range(rng.randint(0, 2)):
        items.append(rng.choice([sx.VOID, Cell(sx.ZERO, sx.VOID),
                                 Cell(sx.ZERO, Cell(sx.ZERO, sx.VOID))]))
    rng.shuffle(items)
    return _random_tree(items, sx.Comp, rng) if items else sx.VOID


VESICLE_TEXT = ("10000 * phago<n>.exo<m>[phago<k>[void]] o "
            "100 * cophago<n>(coexo<m>)|coexo<m>[phago<k>[void]]")
VESICLE_RATES = {"n": 10, "k": 5, "m": 5}
