import pytest

from aorta_mc.aorta import (
    AortaAgent, BelQ, MentalState, Message, Neg, OrgQ, OrgSpec, ReasoningRule, Top,
    aorta_cycle, check_obligations, eval_reasoning_formula, execute_action,
    generate_options, parse_aorta_program,
)
from aorta_mc.apl import parse_apl
from aorta_mc.errors import NonGroundNegation, ParseError, UnboundActionVariable, UnknownRecipient
from aorta_mc.logic import Atom, FactBase, parse_facts, parse_query, term

from conftest import FIXTURE_DIR

LISTING_RULES = parse_aorta_program((FIXTURE_DIR / "writing-paper.aorta").read_text())
ORG = OrgSpec.parse((FIXTURE_DIR / "org.spec").read_text())
REGISTRY = ("alice", "bob")


def facts(text: str) -> FactBase:
    return FactBase(parse_facts(text))


def agent(name="alice", beliefs="", goals="", org="", options="", rules=LISTING_RULES) -> AortaAgent:
    base = facts(beliefs).add(term(f"me({name})"), term("agent(alice)"), term("agent(bob)"))
    ms = MentalState(base, facts(goals), ORG.facts.add(*parse_facts(org)), facts(options))
    return AortaAgent(name, ms, tuple(rules))


# ---------------------------------------------------------------------------
# Parsing


def test_listing_rules_parse_verbatim():
    assert len(LISTING_RULES) == 5
    heads = [str(r.option) for r in LISTING_RULES]
    assert heads[0] == "role(R)"
    assert heads[1] == "obj(bel(O))"
    assert heads[2].startswith("send(") and heads[2].endswith(", tell, org(rea(Me, R)))")
    assert heads[3] == "send(R, achieve, O)"
    assert heads[4] == "send(R, tell, O)"
    assert [r.action.functor for r in LISTING_RULES] == ["enact", "commit", "send", "send", "send"]


def test_first_rule_structure():
    (rule,) = parse_aorta_program("role(R) : true => enact(R).")
    assert rule == ReasoningRule(term("role(R)"), Top(), term("enact(R)"))


def test_agent_listing_parses_verbatim():
    programs = parse_apl((FIXTURE_DIR / "agents.gwen").read_text())
    shape = [(p.name, len(p.initial_goals), len(p.plans)) for p in programs]
    assert shape == [("alice", 1, 7), ("bob", 1, 3)]


def test_unbound_action_variable():
    with pytest.raises(UnboundActionVariable):
        parse_aorta_program("role(R) : true => enact(Q).")


def test_rule_syntax_errors():
    with pytest.raises(ParseError):
        parse_aorta_program("role(R) : true => enact(R)")
    with pytest.raises(ParseError):
        parse_aorta_program("dance(R) : true => enact(R).")
    with pytest.raises(ParseError):
        parse_aorta_program("role(R) : true => fly(R).")


def test_org_spec_validation():
    with pytest.raises(ParseError):
        OrgSpec.parse("rea(alice, editor).")
    with pytest.raises(ParseError):
        OrgSpec.parse("role(editor, editor).")
    with pytest.raises(ParseError):
        OrgSpec.parse("role(editor, [editor]). dep(writer, editor, fdv).")
    assert len(ORG.obligations()) == 8
    assert len(ORG.dependencies()) == 3


# ---------------------------------------------------------------------------
# Reasoning formulas


def test_formula_semantics():
    ms = agent(org="rea(bob, writer).").state
    assert list(eval_reasoning_formula(ms, OrgQ(term("rea(Ag, writer)")))) == [{"Ag": Atom("bob")}]
    assert list(eval_reasoning_formula(ms, Top())) == [{}]
    assert list(eval_reasoning_formula(ms, Neg(Top()))) == []


def test_listing_context_binds_registry():
    context = LISTING_RULES[2].context
    ms = agent().state
    sols = [
        {k: v for k, v in s.items() if k in ("Me", "Ag")}
        for s in eval_reasoning_formula(ms, context, {"R": Atom("editor")})
    ]
    assert sols == [{"Me": Atom("alice"), "Ag": Atom("bob")}]


def test_negation_needs_ground_terms():
    ms = agent().state
    with pytest.raises(NonGroundNegation):
        list(eval_reasoning_formula(ms, Neg(BelQ(parse_query("f(X)")))))


# ---------------------------------------------------------------------------
# Obligation check


def test_obligation_activates():
    a = check_obligations(agent(org="rea(alice, editor)."))
    assert term("obl(alice, editor, bel(wabs), bel(fdv))") in a.state.org


def test_obligation_satisfied_is_removed():
    a = agent(beliefs="wabs.", org="rea(alice, editor). obl(alice, editor, bel(wabs), bel(fdv)).")
    org = check_obligations(a).state.org
    assert term("obl(alice, editor, bel(wabs), bel(fdv))") not in org
    assert not org.by_signature("viol", 3)
    assert not any(f.args[2] == term("bel(wabs)") for f in org.by_signature("obl", 4))


def test_obligation_deadline_violates():
    a = agent(beliefs="fdv.", org="rea(alice, editor). obl(alice, editor, bel(wabs), bel(fdv)).")
    org = check_obligations(a).state.org
    assert term("obl(alice, editor, bel(wabs), bel(fdv))") not in org
    assert term("viol(alice, editor, bel(wabs))") in org


def test_obligation_needs_enacted_role_and_unmet_condition():
    assert not check_obligations(agent()).state.org.by_signature("obl", 4)
    a = check_obligations(agent(org="rea(alice, editor)."))
    objectives = {str(f.args[2]) for f in a.state.org.by_signature("obl", 4)}
    # fdv, wcon and sv are guarded by conditions that do not hold yet.
    assert objectives == {"bel(wtitle)", "bel(wabs)", "bel(wsectitle)"}


def test_violation_blocks_reactivation():
    a = agent(org="rea(alice, editor). viol(alice, editor, bel(wabs)).")
    org = check_obligations(a).state.org
    assert term("obl(alice, editor, bel(wabs), bel(fdv))") not in org


# ---------------------------------------------------------------------------
# Option generation


def test_enactment_option_from_role_goal():
    a = generate_options(agent(goals="editor."))
    assert term("role(editor)") in a.state.options
    assert term("role(writer)") not in a.state.options


def test_obligation_option():
    a = generate_options(agent("bob", org="rea(bob, writer). obl(bob, writer, bel(wsec), bel(sv))."))
    assert term("obj(bel(wsec))") in a.state.options


def test_information_option():
    a = generate_options(agent(beliefs="fdv.", org="rea(alice, editor)."))
    assert term("send(writer, tell, fdv)") in a.state.options


def test_delegation_and_broadcast_options():
    a = generate_options(agent(org="rea(alice, editor)."))
    assert term("send(writer, achieve, wsec)") in a.state.options
    assert term("send(all, tell, org(rea(alice, editor)))") in a.state.options


def test_deactment_option_once_role_objectives_believed():
    a = generate_options(agent(beliefs="editor. fdv. sv.", org="rea(alice, editor)."))
    assert term("role(editor)") in a.state.options


def test_options_are_a_function_of_the_bases():
    a = agent(goals="editor.", beliefs="fdv.", org="rea(alice, editor).")
    assert generate_options(a).state.options == generate_options(generate_options(a)).state.options


# ---------------------------------------------------------------------------
# Action execution: one test per fixture reasoning rule


def test_rule_enact():
    a, action, msg = execute_action(agent(options="role(editor)."), REGISTRY)
    assert action == term("enact(editor)") and msg is None
    assert term("rea(alice, editor)") in a.state.org


def test_rule_commit_to_obligation():
    a = agent(org="rea(alice, editor). obl(alice, editor, bel(wabs), bel(fdv)).",
              options="obj(bel(wabs)).")
    a, action, msg = execute_action(a, REGISTRY)
    assert action == term("commit(wabs)") and msg is None
    assert term("wabs") in a.state.goals


def test_rule_tell_role():
    a = agent(org="rea(alice, editor).", options="send(all, tell, org(rea(alice, editor))).")
    a, action, msg = execute_action(a, REGISTRY)
    assert action == term("send(bob, org(rea(alice, editor)))")
    assert msg == Message("alice", "bob", term("org(rea(alice, editor))"))
    assert term("sent(bob, org(rea(alice, editor)))") in a.state.beliefs
    # Already told: the rule no longer fires.
    assert execute_action(a, REGISTRY)[1] is None


def test_rule_delegate_objective():
    a = agent(org="rea(bob, writer).", options="send(writer, achieve, wsec).")
    a, action, msg = execute_action(a, REGISTRY)
    assert action == term("send(bob, goal(wsec))")
    assert msg == Message("alice", "bob", term("goal(wsec)"))
    assert term("sent(bob, goal(wsec))") in a.state.beliefs


def test_rule_inform_dependant():
    a = agent(beliefs="fdv.", org="rea(alice, editor). rea(bob, writer).",
              options="send(writer, tell, fdv).")
    a, action, msg = execute_action(a, REGISTRY)
    assert action == term("send(bob, bel(fdv))")
    assert msg == Message("alice", "bob", term("bel(fdv)"))
    assert term("sent(bob, bel(fdv))") in a.state.beliefs


def test_no_options_no_action():
    a = agent()
    assert execute_action(a, REGISTRY) == (a, None, None)


def test_unknown_recipient():
    (rule,) = parse_aorta_program("role(R) : true => send(carol, org(R)).")
    a = agent(options="role(editor).", rules=[rule])
    with pytest.raises(UnknownRecipient):
        execute_action(a, REGISTRY)


# ---------------------------------------------------------------------------
# Full cycle


def test_cycle_receives_org_message():
    a, _, _ = aorta_cycle(agent("bob", goals=""), [Message("alice", "bob", term("org(rea(alice, editor))"))],
                          REGISTRY)
    assert term("rea(alice, editor)") in a.state.org
    assert a.changed


def test_cycle_at_fixpoint_reports_no_change():
    a, outbox, action = aorta_cycle(agent(), (), REGISTRY)
    assert not a.changed and outbox == () and action is None
    again, _, _ = aorta_cycle(a, (), REGISTRY)
    assert again.state == a.state and not again.changed


def test_initial_alice_cycle(initial):
    alice = initial.agent("alice")
    a = AortaAgent("alice", alice.mental, initial.program.spec("alice").rules)
    a, outbox, action = aorta_cycle(a, (), REGISTRY)
    assert term("role(editor)") in a.state.options
    assert action == term("enact(editor)")
    assert term("rea(alice, editor)") in a.state.org


def test_cycle_is_deterministic():
    a = agent(goals="editor.", org="rea(bob, writer).")
    assert aorta_cycle(a, (), REGISTRY) == aorta_cycle(a, (), REGISTRY)

