"""Organizational reasoning: obligation check, option generation, action execution.

An agent's organizational knowledge lives in ``MentalState.org`` as ground
facts over the metamodel predicates::

    role(Role, [Objective, ...])      obj(Objective, [SubObjective, ...])
    dep(Role1, Role2, Objective)      cond(Role, Objective, Deadline, Condition)
    rea(Agent, Role)                  obl(Agent, Role, Objective, Deadline)
    viol(Agent, Role, Objective)

Objectives, deadlines and conditions inside ``cond``/``obl`` are written as
belief formulas: ``true``, ``false`` or ``bel(t1, ..., tn)`` (a conjunction of
beliefs). Reasoning rules have the form ``option : context => action.``
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence, Union

from .errors import AortaMCError, ParseError, UnboundActionVariable, UnknownRecipient
from .logic import (
    Atom, Compound, FactBase, ListTerm, Pos, Substitution,
    TokenStream, is_ground, match, parse_facts, parse_literal, parse_term,
    solve, substitute, variables,
)

STATIC_ORG_SIGNATURES = {("role", 2), ("obj", 2), ("dep", 3), ("cond", 4)}
DYNAMIC_ORG_SIGNATURES = {("rea", 2), ("obl", 4), ("viol", 3)}

TRUE = Atom("true")
FALSE = Atom("false")
# Role slot of the "tell everyone about my role" option.
BROADCAST = Atom("all")


# ---------------------------------------------------------------------------
# Mental state and agents


@dataclass(frozen=True)
class MentalState:
    beliefs: FactBase = field(default_factory=FactBase)
    goals: FactBase = field(default_factory=FactBase)
    org: FactBase = field(default_factory=FactBase)
    options: FactBase = field(default_factory=FactBase)


@dataclass(frozen=True)
class Message:
    sender: str
    recipient: str
    content: object

    def __str__(self):
        return f"{self.sender}->{self.recipient}:{self.content}"


@dataclass(frozen=True)
class AortaAgent:
    name: str
    state: MentalState
    rules: tuple = field(default=(), compare=False, repr=False)
    changed: bool = False

    @property
    def me(self) -> Atom:
        return Atom(self.name)


# ---------------------------------------------------------------------------
# Organizational specification


@dataclass(frozen=True)
class OrgSpec:
    """Validated static organization facts (role, obj, dep, cond)."""

    facts: FactBase

    @classmethod
    def parse(cls, text: str) -> "OrgSpec":
        return cls.from_facts(parse_facts(text))

    @classmethod
    def from_facts(cls, facts) -> "OrgSpec":
        facts = FactBase(facts)
        for f in facts:
            sig = (f.functor, len(f.args)) if isinstance(f, Compound) else (str(f), 0)
            if sig not in STATIC_ORG_SIGNATURES:
                raise ParseError(f"not an organizational specification fact: {f}")
            if sig == ("role", 2) or sig == ("obj", 2):
                if not isinstance(f.args[1], ListTerm):
                    raise ParseError(f"second argument must be a list: {f}")
            if sig == ("cond", 4):
                for arg in f.args[1:]:
                    condition_formula(arg)
        spec = cls(facts)
        spec._check_objectives()
        return spec

    def _check_objectives(self):
        known = set()
        for f in self.facts.by_signature("role", 2) + self.facts.by_signature("obj", 2):
            known.update(f.args[1].elements)
        named = [f.args[0] for f in self.facts.by_signature("obj", 2)]
        named += [f.args[2] for f in self.facts.by_signature("dep", 3)]
        named += [unwrap_bel(f.args[1]) for f in self.facts.by_signature("cond", 4)]
        for objective in named:
            if objective not in known:
                raise ParseError(f"objective {objective} is not listed by any role or obj fact")

    @property
    def roles(self) -> tuple:
        return tuple(f.args[0] for f in self.facts.by_signature("role", 2))

    def referenced_roles(self) -> set:
        refs = set()
        for f in self.facts.by_signature("dep", 3):
            refs.update(f.args[:2])
        for f in self.facts.by_signature("cond", 4):
            refs.add(f.args[0])
        return refs

    def obligations(self) -> tuple:
        """(role, objective, deadline) triples of the conditional obligations."""
        return tuple(
            (f.args[0], unwrap_bel(f.args[1]), unwrap_bel(f.args[2]))
            for f in self.facts.by_signature("cond", 4)
        )

    def dependencies(self) -> tuple:
        return tuple(tuple(f.args) for f in self.facts.by_signature("dep", 3))


def unwrap_bel(t):
    """``bel(x)`` -> ``x``; anything else unchanged."""
    if isinstance(t, Compound) and t.functor == "bel" and len(t.args) == 1:
        return t.args[0]
    return t


# ---------------------------------------------------------------------------
# Reasoning formulas


@dataclass(frozen=True)
class Top:
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class OrgQ:
    term: object

    def __str__(self):
        return f"org({self.term})"


@dataclass(frozen=True)
class OptQ:
    term: object

    def __str__(self):
        return f"opt({self.term})"


@dataclass(frozen=True)
class GoalQ:
    term: object

    def __str__(self):
        return f"goal({self.term})"


@dataclass(frozen=True)
class BelQ:
    query: tuple

    def __str__(self):
        return f"bel({', '.join(map(str, self.query))})"


@dataclass(frozen=True)
class Neg:
    formula: object

    def __str__(self):
        return f"~({self.formula})"


@dataclass(frozen=True)
class And:
    left: object
    right: object

    def __str__(self):
        return f"{self.left}, {self.right}"


ReasoningFormula = Union[Top, OrgQ, OptQ, GoalQ, BelQ, Neg, And]


def condition_formula(t) -> ReasoningFormula:
    """Turn an objective/deadline/condition term into a reasoning formula."""
    if t == TRUE:
        return Top()
    if t == FALSE:
        return Neg(Top())
    if isinstance(t, Compound) and t.functor == "bel":
        return BelQ(tuple(Pos(a) for a in t.args))
    raise ParseError(f"expected true, false or bel(...) formula, found {t}")


def eval_reasoning_formula(ms: MentalState, rho, subst: Substitution | None = None) -> Iterator[Substitution]:
    """Enumerate the substitutions under which ``rho`` holds in ``ms``."""
    subst = subst or {}
    cls = type(rho)
    if cls is Top:
        yield subst
    elif cls is BelQ:
        yield from solve(ms.beliefs, rho.query, subst)
    elif cls is OrgQ:
        yield from solve(ms.org, (Pos(rho.term),), subst)
    elif cls is OptQ:
        yield from solve(ms.options, (Pos(rho.term),), subst)
    elif cls is GoalQ:
        yield from solve(ms.goals, (Pos(rho.term),), subst)
    elif cls is And:
        for s in eval_reasoning_formula(ms, rho.left, subst):
            yield from eval_reasoning_formula(ms, rho.right, s)
    elif cls is Neg:
        _require_ground(rho.formula, subst)
        for _ in eval_reasoning_formula(ms, rho.formula, subst):
            return
        yield subst
    else:
        raise TypeError(f"not a reasoning formula: {rho!r}")


def holds(ms: MentalState, rho, subst=None) -> bool:
    return next(eval_reasoning_formula(ms, rho, subst), None) is not None


def _require_ground(rho, subst):
    from .errors import NonGroundNegation

    free = {v for v in formula_variables(rho) if v not in subst}
    if free:
        raise NonGroundNegation(f"negated formula has unbound variables {sorted(free)}: {rho}")


def formula_variables(rho) -> set:
    cls = type(rho)
    if cls in (OrgQ, OptQ, GoalQ):
        return variables(rho.term)
    if cls is BelQ:
        out = set()
        for lit in rho.query:
            if hasattr(lit, "term"):
                out |= variables(lit.term)
            else:
                out |= variables(lit.left) | variables(lit.right)
        return out
    if cls is Neg:
        return formula_variables(rho.formula)
    if cls is And:
        return formula_variables(rho.left) | formula_variables(rho.right)
    return set()


# ---------------------------------------------------------------------------
# Options and rules

ACTIONS = {"enact": 1, "deact": 1, "commit": 1, "drop": 1, "send": 2}


def is_option(t) -> bool:
    if not isinstance(t, Compound):
        return False
    if t.functor in ("role", "obj") and len(t.args) == 1:
        return True
    return (
        t.functor == "send"
        and len(t.args) == 3
        and (isinstance(t.args[1], Atom) and t.args[1].name in ("tell", "achieve")
             or not is_ground(t.args[1]))
    )


def role_option(role) -> Compound:
    return Compound("role", [role])


def obj_option(objective_formula) -> Compound:
    return Compound("obj", [objective_formula])


def send_option(role, ilf: str, content) -> Compound:
    if ilf not in ("tell", "achieve"):
        raise ValueError(f"ilf must be tell or achieve, not {ilf}")
    return Compound("send", [role, Atom(ilf), content])


@dataclass(frozen=True)
class ReasoningRule:
    option: object
    context: object
    action: object

    def __str__(self):
        return f"{self.option} : {self.context} => {self.action}."


def parse_aorta_program(text: str) -> list[ReasoningRule]:
    """Parse ``option : context => action .`` rules in textual order."""
    stream = TokenStream.from_text(text)
    rules = []
    while not stream.at_end():
        start = stream.peek()
        option = parse_term(stream)
        if not is_option(option):
            stream.error(f"rule head is not an option: {option}", start)
        stream.expect(":")
        context = _parse_context(stream)
        stream.expect("=>")
        action_tok = stream.peek()
        action = parse_term(stream)
        if not (isinstance(action, Compound) and ACTIONS.get(action.functor) == len(action.args)):
            stream.error(f"unknown action {action}", action_tok)
        stream.expect(".")
        unbound = variables(action) - variables(option) - formula_variables(context)
        if unbound:
            raise UnboundActionVariable(
                f"action variables {sorted(unbound)} are not bound by option or context",
                action_tok.line, action_tok.column,
            )
        rules.append(ReasoningRule(option, context, action))
    return rules


def _parse_context(stream: TokenStream):
    if stream.at("true") and stream.at("=>", 1):
        stream.next()
        return Top()
    formula = _parse_context_item(stream)
    while stream.accept(","):
        formula = And(formula, _parse_context_item(stream))
    return formula


def _parse_context_item(stream: TokenStream):
    if stream.accept("~"):
        return Neg(_parse_context_item(stream))
    if stream.accept("("):
        inner = _parse_context(stream)
        stream.expect(")")
        return inner
    tok = stream.next()
    if tok.value == "true":
        return Top()
    if tok.value in ("org", "opt", "goal"):
        stream.expect("(")
        t = parse_term(stream)
        stream.expect(")")
        return {"org": OrgQ, "opt": OptQ, "goal": GoalQ}[tok.value](t)
    if tok.value == "bel":
        stream.expect("(")
        lits = [parse_literal(stream)]
        while stream.accept(","):
            lits.append(parse_literal(stream))
        stream.expect(")")
        return BelQ(tuple(lits))
    stream.error(f"expected org/opt/bel/goal formula, found {tok.value!r}", tok)


# ---------------------------------------------------------------------------
# Phases


def _rea(agent, role):
    return Compound("rea", [agent, role])


def check_obligations(agent: AortaAgent) -> AortaAgent:
    """Activate, satisfy and violate obligations against a snapshot of the state."""
    ms = agent.state
    me = agent.me
    org = ms.org
    add, remove = [], []
    for cond in org.by_signature("cond", 4):
        role, objective, deadline, condition = cond.args
        if _rea(me, role) not in org:
            continue
        for s in eval_reasoning_formula(ms, condition_formula(condition)):
            obj_t = substitute(objective, s)
            deadline_t = substitute(deadline, s)
            if not (is_ground(obj_t) and is_ground(deadline_t)):
                continue
            if holds(ms, condition_formula(obj_t)):
                continue
            if _has_obligation_record(org, me, role, obj_t):
                continue
            add.append(Compound("obl", [me, role, obj_t, deadline_t]))
    for obl in org.by_signature("obl", 4):
        ag, role, objective, deadline = obl.args
        if ag != me:
            continue
        if holds(ms, condition_formula(objective)):
            remove.append(obl)
        elif holds(ms, condition_formula(deadline)):
            remove.append(obl)
            add.append(Compound("viol", [me, role, objective]))
    if not add and not remove:
        return agent
    new_org = org.remove(*remove).add(*add)
    return replace(agent, state=replace(ms, org=new_org))


def _has_obligation_record(org: FactBase, me, role, objective) -> bool:
    for f in org.by_signature("obl", 4):
        if f.args[0] == me and f.args[1] == role and f.args[2] == objective:
            return True
    return Compound("viol", [me, role, objective]) in org


def generate_options(agent: AortaAgent) -> AortaAgent:
    """Recompute the option base from beliefs, goals and organization."""
    ms = agent.state
    me = agent.me
    org, beliefs, goals = ms.org, ms.beliefs, ms.goals
    options = set()
    for role_fact in org.by_signature("role", 2):
        role, objectives = role_fact.args
        enacted = _rea(me, role) in org
        if not enacted:
            if any(g == role or g in objectives.elements for g in goals):
                options.add(role_option(role))
        elif all(o in beliefs for o in objectives.elements):
            options.add(role_option(role))
    for obl in org.by_signature("obl", 4):
        if obl.args[0] == me and not holds(ms, condition_formula(obl.args[2])):
            options.add(obj_option(obl.args[2]))
    for dep in org.by_signature("dep", 3):
        r1, r2, objective = dep.args
        if _rea(me, r1) in org and objective not in beliefs:
            options.add(send_option(r2, "achieve", objective))
        if _rea(me, r2) in org and objective in beliefs:
            options.add(send_option(r1, "tell", objective))
    for rea in org.by_signature("rea", 2):
        if rea.args[0] == me:
            options.add(send_option(BROADCAST, "tell", Compound("org", [rea])))
    new = FactBase(options)
    if new == ms.options:
        return agent
    return replace(agent, state=replace(ms, options=new))


def _apply_action(agent: AortaAgent, action, registry: Sequence[str]):
    """Effect of ``action``, or None when it would not change anything."""
    ms = agent.state
    me = agent.me
    kind = action.functor
    arg = action.args[0]
    if kind == "enact":
        if _rea(me, arg) in ms.org:
            return None
        return replace(ms, org=ms.org.add(_rea(me, arg))), None
    if kind == "deact":
        if _rea(me, arg) not in ms.org:
            return None
        return replace(ms, org=ms.org.remove(_rea(me, arg))), None
    if kind == "commit":
        if arg in ms.goals or arg in ms.beliefs:
            return None
        return replace(ms, goals=ms.goals.add(arg)), None
    if kind == "drop":
        if arg not in ms.goals:
            return None
        return replace(ms, goals=ms.goals.remove(arg)), None
    recipient, content = action.args
    if not isinstance(recipient, Atom) or recipient.name not in registry:
        raise UnknownRecipient(f"{agent.name} cannot send to unknown agent {recipient}")
    message = Message(agent.name, recipient.name, content)
    sent = Compound("sent", [recipient, content])
    return replace(ms, beliefs=ms.beliefs.add(sent)), message


def execute_action(agent: AortaAgent, registry: Sequence[str]):
    """Fire at most one rule.

    Rules are scanned in textual order and options in canonical order; the
    first grounded action whose context holds and which would change the
    state fires. Returns ``(agent, action, message)`` with ``action`` and
    ``message`` possibly ``None``.
    """
    ms = agent.state
    for rule in agent.rules:
        for option in ms.options.candidates(rule.option):
            s = match(rule.option, option)
            if s is None:
                continue
            for s2 in eval_reasoning_formula(ms, rule.context, s):
                action = substitute(rule.action, s2)
                if not is_ground(action):
                    raise AortaMCError(f"rule {rule} produced non-ground action {action}")
                effect = _apply_action(agent, action, registry)
                if effect is None:
                    continue
                new_ms, message = effect
                return replace(agent, state=new_ms), action, message
    return agent, None, None


def receive(agent: AortaAgent, messages) -> AortaAgent:
    ms = agent.state
    for msg in messages:
        content = msg.content
        if not (isinstance(content, Compound) and len(content.args) == 1):
            raise AortaMCError(f"unsupported message content {content}")
        payload = content.args[0]
        if content.functor == "org":
            ms = replace(ms, org=ms.org.add(payload))
        elif content.functor == "bel":
            ms = replace(ms, beliefs=ms.beliefs.add(payload))
        elif content.functor == "goal":
            ms = replace(ms, goals=ms.goals.add(payload))
        else:
            raise AortaMCError(f"unsupported message content {content}")
    return replace(agent, state=ms)


def aorta_cycle(agent: AortaAgent, incoming=(), registry: Sequence[str] = ()):
    """One organizational cycle: messages, OC, OG, AE.

    Returns ``(agent, outbox, action)``; ``agent.changed`` tells whether any
    base differs from the cycle start.
    """
    start = agent.state
    agent = receive(agent, incoming)
    agent = check_obligations(agent)
    agent = generate_options(agent)
    agent, action, message = execute_action(agent, registry)
    outbox = (message,) if message is not None else ()
    return replace(agent, changed=agent.state != start), outbox, action
