"""Explicit-state LTL checking by nested depth-first search.

Both evaluation modes share one search over the product of a transition
system with the Büchi automaton of the negated property:

* on the fly: successors of a :class:`MasState` are computed when first
  needed (:class:`MasSystem`);
* on a model: the whole state space is explored first (:func:`explore_full`),
  saved as a :class:`StateSpaceModel` and searched from there
  (:class:`ModelSystem`).

End states carry a self-loop whose acting agent is ``None`` so that finite
runs are read as infinite words that stutter on their last state.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .buchi import BuchiAutomaton, ltl_to_buchi
from .errors import MalformedModel, ResourceLimit
from .psl import Not, atoms, eval_atom, evaluate_lasso, to_nnf
from .runtime import (
    MasState, active_agents, fingerprint, is_end_state, mas_step_info,
    state_from_dict, state_to_dict,
)

SATISFIED = "Satisfied"
VIOLATED = "Violated"
MODEL_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Transition systems


class TransitionSystem:
    """Interface used by the search: hashable keys, labelled successors, atom truth."""

    def initial(self):
        raise NotImplementedError

    def successors(self, key) -> list:
        """``[(label, key)]`` where ``label`` is ``(agent, action)``."""
        raise NotImplementedError

    def holds(self, key, atom) -> bool:
        raise NotImplementedError

    @property
    def states_seen(self) -> int:
        raise NotImplementedError


class MasSystem(TransitionSystem):
    """Interleaving graph of a multi-agent system, built lazily.

    States are keyed by fingerprint. Successors follow the active agents in
    declaration order; an end state has a single stutter edge to itself.
    """

    def __init__(self, initial: MasState, state_cap: int | None = None):
        self._initial_fp = fingerprint(initial)[0]
        self.states: dict = {self._initial_fp: initial}
        self._succ: dict = {}
        self._truth: dict = {}
        self.state_cap = state_cap

    def initial(self):
        return self._initial_fp

    def state(self, key) -> MasState:
        return self.states[key]

    def successors(self, key) -> list:
        out = self._succ.get(key)
        if out is None:
            out = []
            for label, fp, s2 in expand_state(self.states[key]):
                if fp not in self.states:
                    if self.state_cap is not None and len(self.states) >= self.state_cap:
                        raise ResourceLimit(self.state_cap)
                    self.states[fp] = s2
                out.append((label, fp))
            self._succ[key] = out
        return out

    def holds(self, key, atom) -> bool:
        k = (key, atom)
        v = self._truth.get(k)
        if v is None:
            v = self._truth[k] = eval_atom(self.states[key], atom)
        return v

    @property
    def states_seen(self) -> int:
        return len(self.states)


def expand_state(s: MasState) -> list:
    """``[((agent, action), fingerprint, successor)]`` for every branch out of ``s``."""
    if is_end_state(s):
        return [((None, None), fingerprint(s)[0], s)]
    out = []
    for name in active_agents(s):
        s2, info = mas_step_info(s, name)
        out.append(((name, info.action), fingerprint(s2)[0], s2))
    return out


class KripkeSystem(TransitionSystem):
    """A small explicit system given by edges and the atoms true in each state."""

    def __init__(self, initial, edges: dict, labels: dict):
        self._initial = initial
        self.edges = edges
        self.labels = labels

    def initial(self):
        return self._initial

    def successors(self, key) -> list:
        return [((None, None), t) for t in self.edges.get(key, ())]

    def holds(self, key, atom) -> bool:
        return atom in self.labels.get(key, ())

    @property
    def states_seen(self) -> int:
        return len(self.labels)


# ---------------------------------------------------------------------------
# Verdicts and counterexamples


@dataclass(frozen=True)
class Counterexample:
    """A lasso through the system.

    ``states[i]`` is a state key (a fingerprint for agent systems) and
    ``choices[i]`` the ``(agent, action)`` label of the transition leaving it;
    the last choice leads back to ``states[cycle_start]``.
    """

    states: tuple
    choices: tuple
    cycle_start: int

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "choices": [
                {"agent": a, "action": None if act is None else str(act)} for a, act in self.choices
            ],
            "cycleStart": self.cycle_start,
        }


@dataclass
class Verdict:
    result: str
    counterexample: Counterexample | None = None
    states: int = 0
    product_states: int = 0
    automaton_size: int = 0
    formula: object = field(default=None, repr=False)

    @property
    def satisfied(self) -> bool:
        return self.result == SATISFIED


def negated_automaton(phi) -> BuchiAutomaton:
    return ltl_to_buchi(to_nnf(Not(phi)))


def check(system: TransitionSystem, phi, automaton: BuchiAutomaton | None = None) -> Verdict:
    """Search the product of ``system`` and the automaton of ``¬phi`` for an accepting cycle."""
    aut = automaton if automaton is not None else negated_automaton(phi)
    letters_atoms = sorted(atoms(aut.formula), key=str) if aut.formula is not None else []
    if not aut.accepting:
        return Verdict(SATISFIED, None, 0, 0, aut.size, phi)
    letter_cache: dict = {}

    def letter(key):
        v = letter_cache.get(key)
        if v is None:
            v = letter_cache[key] = frozenset(a for a in letters_atoms if system.holds(key, a))
        return v

    def succ(node):
        key, q = node
        targets = aut.step(q, letter(key))
        if not targets:
            return []
        return [(label, (k2, q2)) for label, k2 in system.successors(key) for q2 in targets]

    found, visited = _nested_dfs((system.initial(), aut.initial), succ, lambda n: n[1] in aut.accepting)
    cex = None
    if found is not None:
        nodes, labels, loop = found
        cex = Counterexample(tuple(n[0] for n in nodes), tuple(labels), loop)
    return Verdict(
        VIOLATED if cex else SATISFIED, cex, system.states_seen, visited, aut.size, phi,
    )


def _nested_dfs(start, succ, accepting):
    """Iterative nested DFS; returns ``((nodes, labels, loop_index), visited)``.

    The inner search stops as soon as it meets a node on the outer stack,
    which closes a cycle through the accepting seed.
    """
    outer_seen = {start}
    inner_seen: set = set()
    path = [start]
    path_labels: list = []  # label of the edge entering path[i + 1]
    on_path = {start: 0}
    work = [iter(succ(start))]
    while work:
        advanced = False
        for label, w in work[-1]:
            if w not in outer_seen:
                outer_seen.add(w)
                on_path[w] = len(path)
                path.append(w)
                path_labels.append(label)
                work.append(iter(succ(w)))
                advanced = True
                break
        if advanced:
            continue
        work.pop()
        seed = path[-1]
        if accepting(seed):
            hit = _inner_dfs(seed, succ, on_path, inner_seen)
            if hit is not None:
                inner_nodes, inner_labels, target = hit
                nodes = path + inner_nodes
                labels = path_labels + inner_labels
                return (nodes, labels, on_path[target]), len(outer_seen | inner_seen)
        path.pop()
        del on_path[seed]
        if path_labels:
            path_labels.pop()
    return None, len(outer_seen | inner_seen)


def _inner_dfs(seed, succ, on_path, seen):
    """Look for a path from ``seed`` back to the outer stack.

    Returns ``(nodes after seed, labels of every edge taken, target)``.
    """
    seen.add(seed)
    nodes = [seed]
    labels: list = []
    work = [iter(succ(seed))]
    while work:
        advanced = False
        for label, w in work[-1]:
            if w in on_path:
                return nodes[1:], labels + [label], w
            if w not in seen:
                seen.add(w)
                nodes.append(w)
                labels.append(label)
                work.append(iter(succ(w)))
                advanced = True
                break
        if not advanced:
            work.pop()
            nodes.pop()
            if labels:
                labels.pop()
    return None


def check_on_the_fly(initial: MasState, phi, state_cap: int | None = None) -> Verdict:
    """Check ``phi`` over every interleaving, building states as the search needs them."""
    return check(MasSystem(initial, state_cap), phi)


def validate_counterexample(system: TransitionSystem, phi, cex: Counterexample) -> bool:
    """Machine check of a violation trace.

    Every step must be an edge of ``system`` with the recorded label, and the
    resulting lasso must be accepted by the automaton of ``¬phi`` and satisfy
    ``¬phi`` under the reference lasso semantics.
    """
    n = len(cex.states)
    if n == 0 or len(cex.choices) != n or not 0 <= cex.cycle_start < n:
        return False
    if cex.states[0] != system.initial():
        return False
    for i in range(n):
        target = cex.states[i + 1] if i + 1 < n else cex.states[cex.cycle_start]
        if (cex.choices[i], target) not in system.successors(cex.states[i]):
            return False
    neg = to_nnf(Not(phi))
    letters = list(cex.states)
    valuation = system.holds
    return (
        ltl_to_buchi(neg).accepts_lasso(letters, cex.cycle_start, valuation)
        and evaluate_lasso(neg, letters, cex.cycle_start, valuation)
    )


def replay_counterexample(initial: MasState, cex: Counterexample) -> list:
    """Re-execute the recorded agent choices; returns the states visited.

    Raises ``MalformedModel`` when a choice is impossible or a fingerprint differs.
    """
    s = initial
    visited = []
    for i, fp in enumerate(cex.states):
        if fingerprint(s)[0] != fp:
            raise MalformedModel(f"counterexample state {i} does not match its fingerprint")
        visited.append(s)
        agent = cex.choices[i][0]
        if agent is None:
            if not is_end_state(s):
                raise MalformedModel(f"stutter step at state {i}, which is not an end state")
        else:
            s = mas_step_info(s, agent)[0]
    if fingerprint(s)[0] != cex.states[cex.cycle_start]:
        raise MalformedModel("counterexample does not close its cycle")
    return visited


# ---------------------------------------------------------------------------
# Full exploration and the state-space model


@dataclass
class StateSpaceModel:
    """Explicit state space: states in BFS order, labelled edges, one initial state.

    ``states[i]`` is the serialized state (as produced by ``state_to_dict``);
    ``edges`` holds ``(from, agent, action, to)`` with ``agent`` ``None`` on
    the self-loop of an end state.
    """

    states: list
    edges: list
    initial: int = 0

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "initial": self.initial,
            "states": [
                {"id": i, "end": self.is_end(i), "state": s} for i, s in enumerate(self.states)
            ],
            "edges": [
                {"from": f, "agent": a, "action": act, "to": t} for f, a, act, t in self.edges
            ],
        }

    def to_bytes(self) -> bytes:
        return (json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n").encode()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    def is_end(self, i: int) -> bool:
        return all(a["sleeping"] for a in self.states[i]["agents"].values())

    @property
    def end_states(self) -> list:
        return [i for i in range(len(self.states)) if self.is_end(i)]

    @classmethod
    def from_dict(cls, data) -> "StateSpaceModel":
        try:
            if data["format_version"] != MODEL_FORMAT_VERSION:
                raise MalformedModel(f"unsupported model format version {data['format_version']!r}")
            raw_states = data["states"]
            states = []
            for i, entry in enumerate(raw_states):
                if entry["id"] != i:
                    raise MalformedModel(f"state ids must be consecutive from 0 (found {entry['id']!r} at {i})")
                state = entry["state"]
                state_from_dict(state)  # shape check
                states.append(state)
            edges = []
            for e in data["edges"]:
                f, a, act, t = e["from"], e["agent"], e["action"], e["to"]
                for x in (f, t):
                    if not isinstance(x, int) or not 0 <= x < len(states):
                        raise MalformedModel(f"edge refers to unknown state {x!r}")
                edges.append((f, a, act, t))
            initial = data["initial"]
        except MalformedModel:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise MalformedModel(f"malformed model: {exc!r}") from exc
        except Exception as exc:  # parse errors inside stored facts
            raise MalformedModel(f"malformed model: {exc}") from exc
        if not isinstance(initial, int) or not 0 <= initial < len(states):
            raise MalformedModel(f"initial state {initial!r} is not in the model")
        model = cls(states, edges, initial)
        model.check_edge_complete()
        return model

    @classmethod
    def from_bytes(cls, raw: bytes) -> "StateSpaceModel":
        try:
            data = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise MalformedModel(f"model is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise MalformedModel("model must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "StateSpaceModel":
        return cls.from_bytes(Path(path).read_bytes())

    def check_edge_complete(self) -> None:
        """Every active agent has an edge out of every state; end states loop on themselves."""
        out: dict = {}
        for f, a, _, t in self.edges:
            out.setdefault(f, {})[a] = t
        for i, s in enumerate(self.states):
            active = [n for n in s["order"] if not s["agents"][n]["sleeping"]]
            have = out.get(i, {})
            if not active:
                if have != {None: i}:
                    raise MalformedModel(f"end state {i} must carry exactly its stutter self-loop")
            elif set(have) != set(active):
                raise MalformedModel(f"state {i} lacks edges for agents {sorted(set(active) - set(have))}")


def explore_full(initial: MasState, workers: int = 1, state_cap: int | None = None) -> StateSpaceModel:
    """Breadth-first exploration of every interleaving with fingerprint deduplication.

    Each BFS layer is expanded by ``workers`` threads; results are merged in
    frontier order, so ids and edges do not depend on the worker count.
    """
    fp0, _ = fingerprint(initial)
    ids = {fp0: 0}
    states = [state_to_dict(initial)]
    edges: list = []
    frontier = [initial]
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while frontier:
            expanded = list(pool.map(expand_state, frontier)) if pool else list(map(expand_state, frontier))
            next_frontier = []
            for s, branches in zip(frontier, expanded):
                src = ids[fingerprint(s)[0]]
                for (agent, action), fp, s2 in branches:
                    if fp not in ids:
                        if state_cap is not None and len(ids) >= state_cap:
                            raise ResourceLimit(state_cap)
                        ids[fp] = len(states)
                        states.append(state_to_dict(s2))
                        next_frontier.append(s2)
                    edges.append((src, agent, None if action is None else str(action), ids[fp]))
            frontier = next_frontier
    finally:
        if pool is not None:
            pool.shutdown()
    return StateSpaceModel(states, edges, 0)


class ModelSystem(TransitionSystem):
    """A saved state space as a transition system; keys are fingerprints."""

    def __init__(self, model: StateSpaceModel):
        self.model = model
        self.keys = [
            hashlib.sha256(json.dumps(s, sort_keys=True, separators=(",", ":")).encode()).hexdigest()
            for s in model.states
        ]
        self.index = {k: i for i, k in enumerate(self.keys)}
        self._succ: dict = {}
        for f, a, act, t in model.edges:
            self._succ.setdefault(self.keys[f], []).append(((a, act), self.keys[t]))
        self._decoded: dict = {}
        self._truth: dict = {}

    def initial(self):
        return self.keys[self.model.initial]

    def successors(self, key) -> list:
        return self._succ.get(key, [])

    def holds(self, key, atom) -> bool:
        k = (key, atom)
        v = self._truth.get(k)
        if v is None:
            s = self._decoded.get(key)
            if s is None:
                s = self._decoded[key] = state_from_dict(self.model.states[self.index[key]])
            v = self._truth[k] = eval_atom(s, atom)
        return v

    @property
    def states_seen(self) -> int:
        return len(self.keys)


def check_on_model(model: StateSpaceModel, phi) -> Verdict:
    """Check ``phi`` against a previously explored state space."""
    return check(ModelSystem(model), phi)
