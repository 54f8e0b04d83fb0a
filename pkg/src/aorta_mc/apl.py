"""A small Gwendolen subset: beliefs, achieve goals and belief-adding plans.

Example program::

    GWENDOLEN
    :name: alice
    :Initial Beliefs:
    :Belief Rules:
    :Initial Goals:
    editor [achieve]
    :Plans:
    +!editor [achieve] : {True} <- +editor;
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ParseError, UnsupportedFeature
from .logic import (
    FactBase, TokenStream, is_ground, parse_literal,
    parse_term, solve, substitute, term_key, tokenize, unify,
)

_SECTIONS = {
    ("name",): "name",
    ("Initial", "Beliefs"): "beliefs",
    ("Belief", "Rules"): "rules",
    ("Initial", "Goals"): "goals",
    ("Plans",): "plans",
}


@dataclass(frozen=True)
class Plan:
    trigger: object
    guard: tuple = ()
    body: tuple = ()

    def __str__(self):
        guard = ", ".join(map(str, self.guard)) or "True"
        body = ", ".join(f"+{b}" for b in self.body)
        return f"+!{self.trigger} [achieve] : {{{guard}}} <- {body};"


@dataclass(frozen=True)
class AplProgram:
    name: str
    initial_beliefs: tuple = ()
    belief_rules: tuple = ()
    initial_goals: tuple = ()
    plans: tuple = ()


@dataclass(frozen=True)
class Intention:
    goal: object
    body: tuple
    pc: int = 0


@dataclass(frozen=True)
class AplAgentState:
    beliefs: FactBase
    goals: FactBase
    intentions: tuple = ()
    pending: tuple = field(default=(), compare=False)


def parse_apl(text: str) -> list[AplProgram]:
    """Parse one or more ``:name:`` blocks into programs."""
    tokens = tokenize(text)
    stream = TokenStream(tokens)
    programs: list[dict] = []
    current = None
    section = None
    while not stream.at_end():
        header = _read_header(stream)
        if header is not None:
            if header == "name":
                tok = stream.next()
                if tok.kind != "name":
                    stream.error("expected agent name after :name:", tok)
                current = {"name": tok.value, "beliefs": [], "rules": [], "goals": [], "plans": []}
                programs.append(current)
            elif current is None:
                stream.error("section header before :name:")
            section = header
            continue
        if stream.at("GWENDOLEN"):
            stream.next()
            continue
        if current is None or section in (None, "name"):
            stream.error(f"unexpected {stream.peek().value!r}")
        if section == "beliefs":
            current["beliefs"].append(_parse_ground(stream))
            stream.accept(",")
        elif section == "rules":
            tok = stream.peek()
            raise UnsupportedFeature("belief rules are not supported", tok.line, tok.column)
        elif section == "goals":
            goal = _parse_ground(stream)
            _expect_achieve(stream)
            stream.accept(",")
            current["goals"].append(goal)
        else:
            current["plans"].append(_parse_plan(stream))
    return [
        AplProgram(p["name"], tuple(p["beliefs"]), (), tuple(p["goals"]), tuple(p["plans"]))
        for p in programs
    ]


def _read_header(stream: TokenStream):
    if not stream.at(":"):
        return None
    words = []
    i = 1
    while stream.peek(i).kind in ("name", "var"):
        words.append(stream.peek(i).value)
        i += 1
    if not stream.at(":", i) or tuple(words) not in _SECTIONS:
        return None
    stream.pos += i + 1
    return _SECTIONS[tuple(words)]


def _parse_ground(stream):
    tok = stream.peek()
    t = parse_term(stream)
    if not is_ground(t):
        stream.error(f"expected a ground term, found {t}", tok)
    return t


def _expect_achieve(stream):
    stream.expect("[")
    tok = stream.next()
    if tok.value != "achieve":
        raise UnsupportedFeature(f"only achieve goals are supported, found {tok.value!r}", tok.line, tok.column)
    stream.expect("]")


def _parse_plan(stream: TokenStream) -> Plan:
    tok = stream.peek()
    if not (stream.at("+") and stream.at("!", 1)):
        raise UnsupportedFeature("only +!goal [achieve] plan triggers are supported", tok.line, tok.column)
    stream.pos += 2
    trigger = parse_term(stream)
    _expect_achieve(stream)
    guard: tuple = ()
    if stream.accept(":"):
        stream.expect("{")
        if stream.at("True"):
            stream.next()
        else:
            lits = [parse_literal(stream)]
            while stream.accept(","):
                lits.append(parse_literal(stream))
            guard = tuple(lits)
        stream.expect("}")
    stream.expect("<-")
    body = [_parse_step(stream)]
    while stream.accept(","):
        body.append(_parse_step(stream))
    stream.expect(";")
    return Plan(trigger, guard, tuple(body))


def _parse_step(stream: TokenStream):
    tok = stream.peek()
    if stream.at("+") and not stream.at("!", 1):
        stream.next()
        return parse_term(stream)
    raise UnsupportedFeature(f"unsupported plan body step starting with {tok.value!r}", tok.line, tok.column)


def _drop_achieved(state: AplAgentState) -> AplAgentState:
    achieved = [g for g in state.goals if g in state.beliefs]
    intentions = tuple(i for i in state.intentions if i.goal not in state.beliefs)
    if not achieved and len(intentions) == len(state.intentions):
        return state
    return replace(state, goals=state.goals.remove(*achieved), intentions=intentions)


def _applicable_plan(goal, state: AplAgentState, plans):
    for plan in plans:
        s = unify(plan.trigger, goal)
        if s is None:
            continue
        for s2 in solve(state.beliefs, plan.guard, s):
            return tuple(substitute(step, s2) for step in plan.body)
    return None


def apl_step(state: AplAgentState, plans) -> tuple[AplAgentState, bool]:
    """One reasoning step: drop achieved goals, adopt an intention or advance one.

    Unintended goals are considered in canonical term order; the first with
    an applicable plan (textual order) gets a new intention. Goals without an
    applicable plan stay pending and are listed in ``state.pending``. When no
    goal can be adopted, the first running intention executes one body step.
    """
    start = state
    state = _drop_achieved(state)
    intended = {i.goal for i in state.intentions}
    pending = []
    adopted = False
    for goal in sorted((g for g in state.goals if g not in intended), key=term_key):
        body = _applicable_plan(goal, state, plans)
        if body is None:
            pending.append(goal)
            continue
        state = replace(state, intentions=state.intentions + (Intention(goal, body),))
        adopted = True
        break
    if not adopted and state.intentions:
        first, rest = state.intentions[0], state.intentions[1:]
        step = first.body[first.pc]
        if not is_ground(step):
            raise ParseError(f"plan step for {first.goal} is not ground: {step}")
        beliefs = state.beliefs.add(step)
        if first.pc + 1 < len(first.body):
            rest = (replace(first, pc=first.pc + 1),) + rest
        state = replace(state, beliefs=beliefs, intentions=rest)
    state = _drop_achieved(state)
    state = replace(state, pending=tuple(pending))
    return state, state != start
