import json
import random

import pytest

from aorta_mc.checker import (
    SATISFIED, VIOLATED, KripkeSystem, MasSystem, ModelSystem, StateSpaceModel, check,
    check_on_model, check_on_the_fly, explore_full, replay_counterexample,
    validate_counterexample,
)
from aorta_mc.aorta import OrgSpec
from aorta_mc.apl import parse_apl
from aorta_mc.errors import MalformedModel, ResourceLimit
from aorta_mc.logic import term
from aorta_mc.psl import Always, Eventually, Not, parse_psl
from aorta_mc.runtime import initial_state

from oracles import P, lasso_verdict, random_formula, random_model


def by_name(properties, name):
    return next(p for p in properties if p.name == name).formula


def test_property_rea_a_holds(initial, properties):
    assert check_on_the_fly(initial, by_name(properties, "rea_a")).result == SATISFIED


def test_wrong_role_fails_with_stuttering_counterexample(initial, properties):
    phi = by_name(properties, "error")
    v = check_on_the_fly(initial, phi)
    assert v.result == VIOLATED
    cex = v.counterexample
    assert cex.choices[-1] == (None, None)
    assert cex.cycle_start == len(cex.states) - 1
    assert validate_counterexample(MasSystem(initial), phi, cex)
    visited = replay_counterexample(initial, cex)
    assert term("sv") in visited[-1].agent("alice").beliefs


def test_tautology(initial):
    phi = parse_psl("[] (B(alice, x) || ~B(alice, x))")
    v = check_on_the_fly(initial, phi)
    assert v.result == SATISFIED


SMALL_PROPERTIES = ["rea_a", "rea_b", "error", "rea_tell_ab", "rea_tell_ba", "all_rea",
                    "one_obl", "one_dep", "paper_written"]


@pytest.mark.parametrize("name", SMALL_PROPERTIES)
def test_negation_soundness_on_fixture(initial, properties, name):
    phi = by_name(properties, name)
    a = check_on_the_fly(initial, phi)
    b = check_on_the_fly(initial, Not(phi))
    assert not (a.satisfied and b.satisfied)


def test_negation_soundness_on_random_models():
    rng = random.Random(9)
    for _ in range(100):
        edges, labels = random_model(rng)
        phi = random_formula(rng, 3)
        system = KripkeSystem(0, edges, labels)
        assert not (check(system, phi).satisfied and check(system, Not(phi)).satisfied)


def test_statistics(initial, properties):
    v = check_on_the_fly(initial, by_name(properties, "paper_written"))
    assert v.states > 0 and v.product_states > 0


def test_state_cap(initial, properties):
    with pytest.raises(ResourceLimit):
        check_on_the_fly(initial, by_name(properties, "all"), state_cap=10)
    with pytest.raises(ResourceLimit):
        explore_full(initial, state_cap=10)


def test_stutter_semantics_on_finite_runs():
    # 0 -> 1 -> 1 (end state loops): <> p holds iff p appears up to the end state.
    ks = KripkeSystem(0, {0: [1], 1: [1]}, {0: frozenset(), 1: frozenset([P])})
    assert check(ks, Eventually(P)).satisfied
    ks = KripkeSystem(0, {0: [1], 1: [1]}, {0: frozenset([P]), 1: frozenset()})
    assert check(ks, Eventually(P)).satisfied
    assert not check(ks, Always(P)).satisfied
    ks = KripkeSystem(0, {0: [0]}, {0: frozenset()})
    assert not check(ks, Eventually(P)).satisfied


def test_oracle_small_models():
    rng = random.Random(5)
    for _ in range(40):
        edges, labels = random_model(rng)
        phi = random_formula(rng, 3)
        system = KripkeSystem(0, edges, labels)
        v = check(system, phi)
        assert v.satisfied == lasso_verdict(phi, edges, labels, len(edges))
        if not v.satisfied:
            assert validate_counterexample(system, phi, v.counterexample)


def test_counterexample_validation_rejects_tampering():
    ks = KripkeSystem(0, {0: [1], 1: [0]}, {0: frozenset([P]), 1: frozenset()})
    v = check(ks, Always(P))
    assert not v.satisfied and validate_counterexample(ks, Always(P), v.counterexample)
    assert not validate_counterexample(ks, Eventually(P), v.counterexample)
    broken = v.counterexample.__class__(v.counterexample.states, v.counterexample.choices, 5)
    assert not validate_counterexample(ks, Always(P), broken)


# ---------------------------------------------------------------------------
# Full exploration and model files


def test_explore_fixture(model):
    assert len(model.end_states) == 1
    end = model.states[model.end_states[0]]
    assert "sv" in end["agents"]["alice"]["beliefs"]
    (loop,) = [e for e in model.edges if e[1] is None]
    assert loop[0] == loop[3] == model.end_states[0]
    model.check_edge_complete()


def test_single_idle_agent():
    (prog,) = parse_apl(":name: solo\n:Initial Goals:\n:Plans:\n")
    s0 = initial_state([prog], [], OrgSpec.parse(""), ["solo"])
    m = explore_full(s0)
    # The single state is the stutter-looping end state reached after one idle step.
    assert len(m.end_states) == 1
    assert sum(1 for e in m.edges if e[1] is None) == 1


def test_explore_is_deterministic(initial, model):
    assert explore_full(initial).to_bytes() == model.to_bytes()
    assert explore_full(initial, workers=4).to_bytes() == model.to_bytes()


def test_model_round_trip(model, tmp_path):
    path = tmp_path / "model.json"
    model.save(path)
    again = StateSpaceModel.load(path)
    assert again.to_bytes() == model.to_bytes()


def test_modes_agree(initial, model, properties):
    fly, saved = MasSystem(initial), ModelSystem(model)
    for prop in properties:
        a = check(fly, prop.formula)
        b = check(saved, prop.formula)
        assert a.result == b.result, prop.name
        if b.counterexample is not None:
            assert validate_counterexample(saved, prop.formula, b.counterexample)
            replay_counterexample(initial, b.counterexample)


def test_check_on_model_entry_point(model, properties):
    assert check_on_model(model, by_name(properties, "error")).result == VIOLATED


@pytest.mark.parametrize("damage", [
    lambda d: d.pop("edges"),
    lambda d: d.update(format_version=99),
    lambda d: d.update(initial=10 ** 6),
    lambda d: d["edges"].pop(),
    lambda d: d["edges"][0].update(to=-1),
    lambda d: d["states"][0]["state"]["agents"]["alice"].update(beliefs=["f(X"]),
    lambda d: d["states"][1].update(id=7),
])
def test_malformed_models(model, damage):
    data = json.loads(model.to_bytes())
    damage(data)
    with pytest.raises(MalformedModel):
        StateSpaceModel.from_bytes(json.dumps(data).encode())


def test_unparseable_model():
    with pytest.raises(MalformedModel):
        StateSpaceModel.from_bytes(b"\x00 not json")
    with pytest.raises(MalformedModel):
        StateSpaceModel.from_bytes(b"[]")
