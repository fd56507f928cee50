import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from branesim import syntax as sx
from branesim.oracle import (
    ID_LABEL,
    Label,
    MeasureTable,
    Successor,
    format_table,
    id_successors,
    measure,
    measure_comp,
    measure_nest,
    measure_par,
    prefix_measure,
    reduce_all,
)
from branesim.rates import RateMap
from branesim.syntax import VOID, ZERO, canonicalize, parse_membrane, parse_system
from strategies import VESICLE_RATES, VESICLE_TEXT, membranes, scramble, systems

R = RateMap({"n": 10, "a": 3, "b": Fraction(5, 2), "c": 7})


def mem(text):
    return parse_membrane(text)


def sys_(text):
    return parse_system(text)


def C(t):
    return canonicalize(t)


# -- prefix constants


def test_prefix_zero_is_empty():
    assert prefix_measure(ZERO, R) == {}


def test_prefix_alpha():
    assert prefix_measure(mem("exo<n>"), R) == {(Label("exo", "n"), ((),)): 10}


def test_prefix_beta():
    m = mem("pino<n>(exo<a>).coexo<b>")
    assert prefix_measure(m, R) == {
        (Label("pino", "n"), (C(mem("coexo<b>")), C(mem("exo<a>")))): 10
    }


# -- parallel


def test_par_of_nulls():
    assert measure_par(MeasureTable(), MeasureTable(), ZERO, ZERO, R) == {}


def test_par_collision_sums():
    s = mem("pino<n>(0)")
    t = measure_par(measure(s, R), measure(s, R), s, s, R)
    assert t == {(Label("pino", "n"), (C(s), ())): 20}


def test_par_with_unit_membrane():
    s = mem("exo<n>.coexo<a>")
    t = measure_par(measure(s, R), MeasureTable(), s, ZERO, R)
    assert t == {(Label("exo", "n"), (C(mem("coexo<a>")),)): 10}


# -- nesting


def test_nest_pino_into_void():
    s = mem("pino<n>(exo<a>).coexo<b>")
    t = measure_nest(MeasureTable(), measure(s, R), s, VOID, R)
    assert t == {(ID_LABEL, (C(sys_("coexo<b>[exo<a>[void]]")),)): 10}


def test_nest_exo_synchronisation():
    inner = sys_("exo<n>[void]")
    outer = mem("coexo<n>")
    t = measure_nest(measure(inner, R), measure(outer, R), outer, inner, R)
    assert t == {(ID_LABEL, ((),)): 10}


def test_nest_nulls():
    assert measure_nest(MeasureTable(), MeasureTable(), ZERO, VOID, R) == {}


def test_nest_exposes_system_labels():
    t = measure(sys_("phago<a>.exo<b> | cophago<c>(coexo<a>) | exo<n>.pino<a>(0)[exo<b>[void]]"), R)
    content = C(sys_("exo<b>[void]"))
    assert t[(Label("ph", "a"), (C(sys_(
        "exo<b> | cophago<c>(coexo<a>) | exo<n>.pino<a>(0)[exo<b>[void]]")), ()))] == 3
    assert t[(Label("phperp", "c"), (C(mem("phago<a>.exo<b> | exo<n>.pino<a>(0)")),
                                      C(mem("coexo<a>")), content, ()))] == 7
    assert t[(Label("ex", "n"), (C(mem("phago<a>.exo<b> | cophago<c>(coexo<a>) | pino<a>(0)")),
                                  content, ()))] == 10
    assert len(t) == 3


# -- composition


def test_comp_nulls():
    assert measure_comp(MeasureTable(), MeasureTable(), VOID, VOID, R) == {}


def test_comp_phago_synchronisation():
    P, Q = sys_("phago<n>[void]"), sys_("cophago<n>(0)[void]")
    t = measure_comp(measure(P, R), measure(Q, R), P, Q, R)
    assert t.id_rates() == {(): 10}


@settings(max_examples=50, deadline=None)
@given(systems(depth=2), systems(depth=2))
def test_comp_commutes(P, Q):
    a = measure_comp(measure(P, R), measure(Q, R), P, Q, R)
    b = measure_comp(measure(Q, R), measure(P, R), Q, P, R)
    assert a == b


@settings(max_examples=50, deadline=None)
@given(membranes(), membranes())
def test_par_commutes(s, t):
    a = measure_par(measure(s, R), measure(t, R), s, t, R)
    b = measure_par(measure(t, R), measure(s, R), t, s, R)
    assert a == b


@settings(max_examples=50, deadline=None)
@given(membranes(), membranes(), membranes())
def test_par_associates(s, t, u):
    ms, mt, mu = measure(s, R), measure(t, R), measure(u, R)
    left = measure_par(measure_par(ms, mt, s, t, R), mu, sx.Par(s, t), u, R)
    right = measure_par(ms, measure_par(mt, mu, t, u, R), s, sx.Par(t, u), R)
    assert left == right


# -- whole terms


def test_measure_void():
    assert measure(VOID, R) == {}


def test_measure_pino_cell():
    assert measure(sys_("pino<n>(0)[void]"), R) == {(ID_LABEL, ((),)): 10}


def test_measure_vesicles():
    P = sys_(VESICLE_TEXT)
    rates = RateMap(VESICLE_RATES)
    ids = measure(P, rates).id_rates()
    assert list(ids.values()) == [10_000_000]
    target = sys_("coexo<m>[coexo<m>[exo<m>[phago<k>[void]]] o phago<k>[void]] o "
                  "99 * cophago<n>(coexo<m>)|coexo<m>[phago<k>[void]] o "
                  "9999 * phago<n>.exo<m>[phago<k>[void]]")
    assert list(ids) == [C(target)]


@settings(max_examples=100, deadline=None)
@given(systems(), st.randoms(use_true_random=False))
def test_measure_respects_congruence(P, rnd):
    assert measure(scramble(P, rnd), R) == measure(P, R)


@given(systems())
def test_measure_deterministic_and_positive(P):
    a, b = measure(P, R), measure(P, R)
    assert a == b
    assert all(r > 0 for r in a.values())


def test_measure_table_arities():
    from branesim.oracle import ARITY
    P = sys_("cophago<a>(exo<b>)|phago<a>|exo<c>[coexo<b>[void]] o pino<n>(0)|coexo<c>[exo<c>[void]]")
    for (label, targets), _ in measure(P, R).items():
        assert len(targets) == len(ARITY[label.kind])


# -- reduction relation


def test_reduce_void():
    assert reduce_all(VOID) == set()


def test_reduce_pino():
    assert reduce_all(sys_("pino<n>(0)[void]")) == {()}


def test_reduce_phago_shape():
    P = sys_("cophago<n>(exo<a>).coexo<b>[void] o phago<n>.pino<c>(0)[void]")
    Q = sys_("coexo<b>[exo<a>[pino<c>(0)[void]]]")
    assert reduce_all(P) == {C(Q)}


def test_reduce_exo_shape():
    P = sys_("coexo<a>.phago<b>[exo<a>.pino<c>(0)[phago<c>[void]] o exo<b>[void]]")
    Q = sys_("phago<b> | pino<c>(0)[exo<b>[void]] o phago<c>[void]")
    assert reduce_all(P) == {C(Q)}


def test_reduce_self_phago_needs_two_copies():
    one = sys_("cophago<n>(0)|phago<n>[void]")
    assert reduce_all(one) == set()
    two = sys_("2 * cophago<n>(0)|phago<n>[void]")
    assert reduce_all(two) == {C(sys_("phago<n>[0[cophago<n>(0)[void]]]"))}


def test_reduce_nested_positions():
    P = sys_("exo<a>[pino<n>(0)[void] o pino<n>(exo<b>)[void]]")
    got = {sx.format_canonical_system(q) for q in reduce_all(P)}
    assert got == {"exo<a>[pino<n>(exo<b>)[void]]",
                   "exo<a>[0[exo<b>[void]] o pino<n>(0)[void]]"}


def test_id_successors():
    assert id_successors(VOID, R) == set()
    P = sys_("pino<n>(0).0|pino<n>(0).0[void]")
    assert id_successors(P, R) == {Successor(C(sys_("pino<n>(0)[0[void]]")), 20)}


@settings(max_examples=150, deadline=None)
@given(systems())
def test_id_support_is_reduction_relation(P):
    assert set(measure(P, R).id_rates()) == reduce_all(P)


def test_id_support_random_corpus():
    from branesim.adequacy import TermGenerator
    gen = TermGenerator()
    rng = random.Random(11)
    for _ in range(200):
        P = gen.system(rng)
        assert set(measure(P, gen.rates(rng)).id_rates()) == reduce_all(P)


# -- printing


def test_format_table():
    assert format_table(measure(sys_("pino<n>(0)[void]"), R)) == "id -> [void] : 10\n"
    assert format_table(measure(VOID, R)) == ""
    t = format_table(measure(sys_("phago<a>[void]"), R))
    assert t == "ph(a) -> [void, void] : 3\n"  # the residual cell 0[void] is void
