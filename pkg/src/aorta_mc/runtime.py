"""Global multi-agent configuration and its deterministic macro-step.

A macro-step for agent ``a`` delivers the next message(s) from ``a``'s inbox,
runs one AORTA cycle, then one APL step, and finally routes outgoing
messages into the recipients' inboxes. Choosing which active agent steps is
the only nondeterminism in the system.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from .apl import AplAgentState, AplProgram, Intention, apl_step, parse_apl
from .aorta import (
    AortaAgent, MentalState, Message, OrgSpec, ReasoningRule, aorta_cycle,
    parse_aorta_program,
)
from .errors import (
    ConfigError, DuplicateAgentName, InactiveAgentChosen, ResourceLimit,
    UnknownAgent, UnknownRoleInSpec,
)
from .logic import Atom, Compound, FactBase, term

SERIAL_VERSION = 1


@dataclass(frozen=True)
class AgentSpec:
    """Static part of an agent: its name, plans and reasoning rules."""

    name: str
    plans: tuple
    rules: tuple


@dataclass(frozen=True)
class MasProgram:
    agents: tuple  # AgentSpec, in declaration order
    org: OrgSpec
    percepts: FactBase = field(default_factory=FactBase)
    inbox_batch: int | None = 1

    @property
    def names(self) -> tuple:
        return tuple(a.name for a in self.agents)

    def spec(self, name: str) -> AgentSpec:
        for a in self.agents:
            if a.name == name:
                return a
        raise UnknownAgent(name)


@dataclass(frozen=True)
class AgentState:
    name: str
    mental: MentalState
    intentions: tuple = ()
    inbox: tuple = ()
    sleeping: bool = False
    last_action: object = None

    @property
    def beliefs(self):
        return self.mental.beliefs

    @property
    def goals(self):
        return self.mental.goals

    @property
    def org(self):
        return self.mental.org

    @property
    def options(self):
        return self.mental.options


@dataclass(frozen=True)
class MasState:
    agents: tuple  # AgentState, in declaration order
    percepts: FactBase = field(default_factory=FactBase)
    program: MasProgram | None = field(default=None, compare=False, repr=False)

    def agent(self, name: str) -> AgentState:
        for a in self.agents:
            if a.name == name:
                return a
        raise UnknownAgent(f"no agent named {name!r}")

    @property
    def names(self) -> tuple:
        return tuple(a.name for a in self.agents)

    @property
    def ether(self) -> dict:
        return {a.name: a.inbox for a in self.agents if a.inbox}

    @property
    def last_action(self) -> dict:
        return {a.name: a.last_action for a in self.agents}

    def _with_agent(self, new: AgentState) -> "MasState":
        return replace(self, agents=tuple(new if a.name == new.name else a for a in self.agents))


def initial_state(
    programs: Sequence[AplProgram],
    aorta_rules: Mapping[str, Sequence[ReasoningRule]] | Sequence[ReasoningRule],
    org_spec: OrgSpec,
    registry: Sequence[str],
    percepts=(),
    inbox_batch: int | None = 1,
) -> MasState:
    """Build the initial configuration for the agents named in ``registry``.

    ``aorta_rules`` is either one rule list shared by all agents or a mapping
    from agent name to its rules.
    """
    if not registry:
        raise ConfigError("agent registry is empty")
    seen = set()
    for name in registry:
        if name in seen:
            raise DuplicateAgentName(name)
        seen.add(name)
    declared = set(org_spec.roles)
    unknown = org_spec.referenced_roles() - declared
    if unknown:
        raise UnknownRoleInSpec(", ".join(sorted(map(str, unknown))))
    by_name = {}
    for p in programs:
        if p.name in by_name:
            raise DuplicateAgentName(p.name)
        by_name[p.name] = p
    specs, agents = [], []
    registry_facts = [Compound("agent", [Atom(n)]) for n in registry]
    for name in registry:
        prog = by_name.get(name)
        if prog is None:
            raise ConfigError(f"no agent program for {name!r}")
        rules = aorta_rules[name] if isinstance(aorta_rules, Mapping) else aorta_rules
        specs.append(AgentSpec(name, tuple(prog.plans), tuple(rules)))
        beliefs = FactBase(prog.initial_beliefs).add(Compound("me", [Atom(name)]), *registry_facts)
        ms = MentalState(
            beliefs=beliefs,
            goals=FactBase(prog.initial_goals),
            org=org_spec.facts,
            options=FactBase(),
        )
        agents.append(AgentState(name, ms))
    program = MasProgram(tuple(specs), org_spec, FactBase(percepts), inbox_batch)
    return MasState(tuple(agents), FactBase(percepts), program)


def active_agents(s: MasState) -> list[str]:
    return [a.name for a in s.agents if not a.sleeping]


def is_end_state(s: MasState) -> bool:
    return not active_agents(s)


@dataclass(frozen=True)
class StepInfo:
    agent: str
    action: object
    delivered: tuple  # messages consumed from the inbox
    sent: tuple


def mas_step(s: MasState, chosen: str) -> MasState:
    return mas_step_info(s, chosen)[0]


def mas_step_info(s: MasState, chosen: str) -> tuple[MasState, StepInfo]:
    """Execute one macro-step of ``chosen``; also report what happened."""
    program = s.program
    if program is None:
        raise ConfigError("state is detached from its program and cannot be stepped")
    me = s.agent(chosen)
    if me.sleeping:
        raise InactiveAgentChosen(f"{chosen} is sleeping")
    spec = program.spec(chosen)
    batch = program.inbox_batch
    take = len(me.inbox) if batch is None else min(batch, len(me.inbox))
    incoming, remaining = me.inbox[:take], me.inbox[take:]

    aorta_agent = AortaAgent(chosen, me.mental, spec.rules)
    aorta_agent, outbox, action = aorta_cycle(aorta_agent, incoming, program.names)

    ms = aorta_agent.state
    apl_state = AplAgentState(ms.beliefs, ms.goals, me.intentions)
    apl_state, apl_changed = apl_step(apl_state, spec.plans)
    ms = replace(ms, beliefs=apl_state.beliefs, goals=apl_state.goals)

    new_me = replace(
        me,
        mental=ms,
        intentions=apl_state.intentions,
        inbox=remaining,
        last_action=action,
    )
    changed = aorta_agent.changed or apl_changed
    new_me = replace(new_me, sleeping=not changed and not new_me.inbox)
    s = s._with_agent(new_me)
    for msg in outbox:
        target = s.agent(msg.recipient)
        s = s._with_agent(replace(target, inbox=target.inbox + (msg,), sleeping=False))
    return s, StepInfo(chosen, action, tuple(incoming), tuple(outbox))


def run(s: MasState, seed: int = 0, state_cap: int | None = None, on_step=None) -> MasState:
    """Follow one seeded interleaving until an end state."""
    rng = random.Random(seed)
    visited = 1
    while not is_end_state(s):
        if state_cap is not None and visited >= state_cap:
            raise ResourceLimit(state_cap)
        chosen = rng.choice(active_agents(s))
        s, info = mas_step_info(s, chosen)
        visited += 1
        if on_step is not None:
            on_step(visited - 1, s, info)
    return s


def format_step(n: int, info: StepInfo) -> str:
    action = "none" if info.action is None else str(info.action)
    delivered = ", ".join(str(m.content) for m in info.delivered)
    return f"step {n}: {info.agent} | action={action} | delivered=[{delivered}]"


# ---------------------------------------------------------------------------
# Canonical serialization


def _facts(fb: FactBase) -> list:
    return [str(f) for f in fb.sorted()]


def _message_dict(m: Message) -> dict:
    return {"from": m.sender, "to": m.recipient, "content": str(m.content)}


def state_to_dict(s: MasState) -> dict:
    agents = {}
    for a in s.agents:
        agents[a.name] = {
            "beliefs": _facts(a.mental.beliefs),
            "goals": _facts(a.mental.goals),
            "org": _facts(a.mental.org),
            "options": _facts(a.mental.options),
            "intentions": [
                {"goal": str(i.goal), "body": [str(b) for b in i.body], "pc": i.pc}
                for i in a.intentions
            ],
            "inbox": [_message_dict(m) for m in a.inbox],
            "sleeping": a.sleeping,
            "last_action": None if a.last_action is None else str(a.last_action),
        }
    return {
        "version": SERIAL_VERSION,
        "order": list(s.names),
        "agents": agents,
        "percepts": _facts(s.percepts),
    }


def state_from_dict(data: dict, program: MasProgram | None = None) -> MasState:
    agents = []
    for name in data["order"]:
        d = data["agents"][name]
        ms = MentalState(
            beliefs=FactBase(map(term, d["beliefs"])),
            goals=FactBase(map(term, d["goals"])),
            org=FactBase(map(term, d["org"])),
            options=FactBase(map(term, d["options"])),
        )
        intentions = tuple(
            Intention(term(i["goal"]), tuple(map(term, i["body"])), i["pc"]) for i in d["intentions"]
        )
        inbox = tuple(Message(m["from"], m["to"], term(m["content"])) for m in d["inbox"])
        last = d["last_action"]
        agents.append(AgentState(
            name, ms, intentions, inbox, d["sleeping"], None if last is None else term(last),
        ))
    return MasState(tuple(agents), FactBase(map(term, data["percepts"])), program)


def serialize(s: MasState) -> bytes:
    return json.dumps(state_to_dict(s), sort_keys=True, separators=(",", ":")).encode()


def deserialize(data: bytes, program: MasProgram | None = None) -> MasState:
    return state_from_dict(json.loads(data), program)


def fingerprint(s: MasState) -> tuple[str, bytes]:
    """SHA-256 digest of the canonical serialization, plus the bytes themselves."""
    raw = serialize(s)
    return hashlib.sha256(raw).hexdigest(), raw


# ---------------------------------------------------------------------------
# Configuration files


@dataclass(frozen=True)
class MasConfig:
    path: Path
    initial: MasState
    properties: Path | None


def load_config(path, inbox_batch: int | None = 1) -> MasConfig:
    """Load a JSON MAS configuration.

    ``{"agents": [{"name", "apl", "aorta"}], "org": path, "percepts": [...],
    "properties": path, "inbox_batch": n | "all"}``; file paths are relative
    to the config file. ``inbox_batch`` is how many queued messages one
    macro-step consumes (default 1).
    """
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    base = path.parent
    entries = cfg.get("agents")
    if not entries:
        raise ConfigError("configuration lists no agents")
    programs, rules, registry = [], {}, []
    apl_cache: dict = {}
    for entry in entries:
        name = entry["name"]
        registry.append(name)
        apl_path = base / entry["apl"]
        if apl_path not in apl_cache:
            apl_cache[apl_path] = {p.name: p for p in parse_apl(apl_path.read_text(encoding="utf-8"))}
        prog = apl_cache[apl_path].get(name)
        if prog is None:
            raise ConfigError(f"{apl_path} has no program named {name!r}")
        programs.append(prog)
        rules[name] = parse_aorta_program((base / entry["aorta"]).read_text(encoding="utf-8"))
    org = OrgSpec.parse((base / cfg["org"]).read_text(encoding="utf-8"))
    percepts = [term(p) for p in cfg.get("percepts", [])]
    batch = cfg.get("inbox_batch", inbox_batch)
    if batch == "all":
        batch = None
    elif batch is not None and (not isinstance(batch, int) or isinstance(batch, bool) or batch < 1):
        raise ConfigError(f"inbox_batch must be a positive integer or \"all\", not {batch!r}")
    initial = initial_state(programs, rules, org, registry, percepts, batch)
    props = cfg.get("properties")
    return MasConfig(path, initial, base / props if props else None)
