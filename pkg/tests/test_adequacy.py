import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from branesim import syntax as sx
from branesim.adequacy import (
    TermGenerator,
    Verdict,
    check_all,
    check_completeness,
    check_progress,
    check_soundness,
    machine_transitions,
    run_adequacy,
    shrink,
)
from branesim.rates import RateMap
from branesim.syntax import canonicalize, parse_system
from strategies import VESICLE_RATES, VESICLE_TEXT, systems

R = RateMap({"n": 10, "a": 3, "b": Fraction(5, 2), "c": 7})

CASES = [
    "void",
    "pino<n>(0)[void]",
    "coexo<n>.0[exo<n>.0[void]]",
    "cophago<a>(exo<b>)[void] o phago<a>.pino<c>(0)[void]",
    "3 * cophago<n>(0)|phago<n>[void]",
    "exo<a>[pino<n>(0)[void] o 2 * coexo<b>[exo<b>|phago<c>[void]]]",
]


@pytest.mark.parametrize("text", CASES)
def test_three_checks_hold(text):
    P = parse_system(text)
    verdicts = check_all(P, R)
    assert [v.check for v in verdicts] == ["soundness", "progress", "completeness"]
    assert all(verdicts), [v.report() for v in verdicts]


def test_individual_checks():
    P = parse_system("pino<n>(0)[void]")
    assert check_soundness(P, R) and check_progress(P, R) and check_completeness(P, R)


def test_pino_transition():
    [tr] = machine_transitions(parse_system("pino<n>(0)[void]"), R)
    assert tr.propensity == 10 and tr.target == ()


def test_vesicles_transition():
    [tr] = machine_transitions(parse_system(VESICLE_TEXT), RateMap(VESICLE_RATES))
    assert tr.propensity == 10_000_000
    assert all(check_all(parse_system(VESICLE_TEXT), RateMap(VESICLE_RATES)))


def test_exo_transition():
    [tr] = machine_transitions(parse_system("coexo<n>.0[exo<n>.0[void]]"), R)
    assert tr.reaction.kind == "exo" and tr.target == ()


def test_self_phago_transition_rate():
    # three identical cells: C(3,2) unordered pairs, each able to engulf in either direction
    [tr] = machine_transitions(parse_system("3 * cophago<n>(0)|phago<n>[void]"), R)
    assert tr.propensity == 3 * 2 * 10


@settings(max_examples=60, deadline=None)
@given(systems(depth=3))
def test_adequacy_property(P):
    assert all(check_all(P, R))


def test_failed_verdict_report():
    v = Verdict("soundness", False, parse_system("pino<n>(0)[void]"), "machine rate 1 vs oracle rate 2")
    assert not v
    assert v.report().splitlines() == [
        "soundness: COUNTEREXAMPLE",
        "  term: pino<n>(0)[void]",
        "  machine rate 1 vs oracle rate 2",
    ]
    assert Verdict("progress", True).report() == "progress: ok"


def test_shrink_to_minimal_failing_part():
    P = parse_system("exo<a>[pino<n>(0)[void] o phago<b>.coexo<c>[void]] o cophago<a>(0)[void]")

    def fails(Q):
        return "coexo" in sx.format_system(Q)

    small = shrink(P, fails)
    assert fails(small)
    assert canonicalize(small) == canonicalize(parse_system("coexo<c>[void]"))


def test_shrink_keeps_term_when_nothing_smaller_fails():
    P = parse_system("pino<n>(0)[void]")
    assert canonicalize(shrink(P, lambda Q: canonicalize(Q) == canonicalize(P))) == canonicalize(P)


def test_generator_is_deterministic():
    g = TermGenerator()
    a = [sx.format_system(g.system(random.Random(3))) for _ in range(3)]
    assert len(set(a)) == 1
    r = g.rates(random.Random(3))
    assert r.exact and all(v * 4 == int(v * 4) for v in r.rates.values())
    assert not g.rates(random.Random(3), exact=False).exact


@pytest.mark.parametrize("exact", [True, False])
def test_run_adequacy_batch(exact):
    report = run_adequacy(80, seed=5, exact=exact)
    assert report.cases == 80
    assert report.ok, [v.report() for v in report.failures]
