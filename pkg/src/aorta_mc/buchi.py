"""LTL to Büchi automata by on-the-fly tableau expansion.

The tableau produces a generalized Büchi automaton with one acceptance set
per ``U`` subformula; a counter construction turns it into an ordinary one.
Transitions are labelled with literal sets: a transition may be taken when
the letter being read satisfies every literal on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Callable, Sequence

from .psl import (
    And, FalseF, Next, Not, Or, Release, TrueF, Until, is_atom, is_nnf,
)

INIT = 0


@dataclass
class BuchiAutomaton:
    """Transition-labelled Büchi automaton; node ``initial`` reads the first letter.

    ``transitions[n]`` lists ``(literals, target)`` where ``literals`` is a
    frozenset of ``(atom, polarity)`` pairs.
    """

    nodes: set
    initial: int
    transitions: dict
    accepting: set
    formula: object = None

    def successors(self, node, holds: Callable) -> list:
        """Targets reachable from ``node`` on a letter described by ``holds(atom)``."""
        out = []
        for literals, target in self.transitions.get(node, ()):
            if all(holds(a) == pol for a, pol in literals):
                out.append(target)
        return out

    @property
    def size(self) -> int:
        return len(self.nodes)

    def step(self, node, letter) -> tuple:
        """Successors of ``node`` on a letter given as a set of true atoms (cached)."""
        cache = self.__dict__.setdefault("_step_cache", {})
        key = (node, letter)
        out = cache.get(key)
        if out is None:
            out = tuple(self.successors(node, lambda a: a in letter))
            cache[key] = out
        return out

    def accepts_lasso(self, letters: Sequence, loop_start: int, valuation: Callable | None = None) -> bool:
        """Membership of ``letters[:loop_start] (letters[loop_start:])^ω``.

        Letters are sets of true atoms unless ``valuation(letter, atom)`` is given.
        """
        n = len(letters)
        if not 0 <= loop_start < n:
            raise ValueError("loop_start must index into letters")
        if valuation is None:
            def succ(node, pos):
                return self.step(node, letters[pos])
        else:
            def succ(node, pos):
                letter = letters[pos]
                return self.successors(node, lambda a: bool(valuation(letter, a)))
        # Graph over (automaton node, next position to read).
        start = (self.initial, 0)
        edges: dict = {}
        stack = [start]
        while stack:
            v = stack.pop()
            if v in edges:
                continue
            node, pos = v
            nxt_pos = pos + 1 if pos + 1 < n else loop_start
            targets = [(t, nxt_pos) for t in succ(node, pos)]
            edges[v] = targets
            stack.extend(t for t in targets if t not in edges)
        return any(
            any(v[0] in self.accepting for v in comp)
            for comp in _cyclic_sccs(edges)
        )


def _cyclic_sccs(edges: dict):
    """Strongly connected components that contain at least one edge (iterative Tarjan)."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    counter = 0
    for root in edges:
        if root in index:
            continue
        work = [(root, iter(edges[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(edges.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                if len(comp) > 1 or v in edges.get(v, ()):
                    yield comp


@dataclass
class _Node:
    name: int
    incoming: set
    new: set
    old: set = field(default_factory=set)
    next: set = field(default_factory=set)


def _is_literal(f) -> bool:
    return is_atom(f) or (isinstance(f, Not) and is_atom(f.sub))


def _tableau(formula):
    """GPVW expansion; returns the list of completed nodes."""
    names = count(1)
    done: list[_Node] = []
    index: dict = {}
    pending = [_Node(next(names), {INIT}, {formula})]
    while pending:
        node = pending.pop()
        while True:
            if not node.new:
                key = (frozenset(node.old), frozenset(node.next))
                existing = index.get(key)
                if existing is not None:
                    existing.incoming |= node.incoming
                    break
                index[key] = node
                done.append(node)
                node = _Node(next(names), {node.name}, set(node.next))
                continue
            eta = node.new.pop()
            if eta in node.old:
                continue
            if isinstance(eta, FalseF):
                break
            if isinstance(eta, TrueF):
                node.old.add(eta)
                continue
            if _is_literal(eta):
                neg = eta.sub if isinstance(eta, Not) else Not(eta)
                if neg in node.old:
                    break
                node.old.add(eta)
                continue
            if isinstance(eta, And):
                node.old.add(eta)
                node.new |= {eta.left, eta.right} - node.old
                continue
            if isinstance(eta, Next):
                node.old.add(eta)
                node.next.add(eta.sub)
                continue
            if isinstance(eta, Or):
                first = (eta.left,), ()
                second = (eta.right,), ()
            elif isinstance(eta, Until):
                first = (eta.left,), (eta,)
                second = (eta.right,), ()
            elif isinstance(eta, Release):
                first = (eta.right,), (eta,)
                second = (eta.left, eta.right), ()
            else:
                raise TypeError(f"formula is not in negation normal form: {eta}")
            old = node.old | {eta}
            n1 = _Node(next(names), set(node.incoming), node.new | (set(first[0]) - old), set(old),
                       node.next | set(first[1]))
            n2 = _Node(next(names), set(node.incoming), node.new | (set(second[0]) - old), set(old),
                       set(node.next))
            pending.append(n1)
            node = n2
    return done


def _subformulas(f, out=None) -> set:
    out = set() if out is None else out
    out.add(f)
    if isinstance(f, (Not, Next)):
        _subformulas(f.sub, out)
    elif isinstance(f, (And, Or, Until, Release)):
        _subformulas(f.left, out)
        _subformulas(f.right, out)
    return out


def ltl_to_buchi(formula, reduce: bool = True) -> BuchiAutomaton:
    """Translate an NNF formula into an equivalent (degeneralized) Büchi automaton."""
    if not is_nnf(formula):
        raise ValueError("ltl_to_buchi expects a formula in negation normal form")
    nodes = _tableau(formula)
    names = {n.name for n in nodes}
    untils = sorted((g for g in _subformulas(formula) if isinstance(g, Until)), key=str)
    acc_sets = []
    for u in untils:
        acc = {n.name for n in nodes if u not in n.old or u.right in n.old}
        if acc != names and acc not in acc_sets:
            acc_sets.append(acc)
    labels = {
        n.name: frozenset(
            (lit.sub, False) if isinstance(lit, Not) else (lit, True)
            for lit in n.old if _is_literal(lit)
        )
        for n in nodes
    }
    gba_edges: dict = {}
    for n in nodes:
        for src in n.incoming:
            gba_edges.setdefault(src, []).append((labels[n.name], n.name))

    # Counter degeneralization: state (node, i) waits for acceptance set i.
    k = len(acc_sets)
    ids: dict = {}
    transitions: dict = {}
    accepting: set = set()

    def ident(key):
        if key not in ids:
            ids[key] = len(ids)
        return ids[key]

    start_key = (INIT, 0)
    ident(start_key)
    stack = [start_key]
    seen = {start_key}
    while stack:
        key = stack.pop()
        node, i = key
        if k == 0:
            j = 0
        else:
            j = (i + 1) % k if node in acc_sets[i] else i
        out = []
        for literals, target in sorted(gba_edges.get(node, ()), key=lambda e: e[1]):
            tkey = (target, j)
            out.append((literals, ident(tkey)))
            if tkey not in seen:
                seen.add(tkey)
                stack.append(tkey)
        transitions[ident(key)] = out
    for (node, i), nid in ids.items():
        if node == INIT:
            continue
        if k == 0 or (i == 0 and node in acc_sets[0]):
            accepting.add(nid)
    automaton = BuchiAutomaton(set(ids.values()), ids[start_key], transitions, accepting, formula)
    return _reduce(automaton) if reduce else automaton


def _reduce(a: BuchiAutomaton) -> BuchiAutomaton:
    """Language-preserving clean-up.

    Removes nodes from which no accepting cycle is reachable, then merges
    nodes with identical acceptance and outgoing transitions until stable.
    Node ids are renumbered densely in breadth-first order from the initial node.
    """
    edges = {n: {t for _, t in a.transitions.get(n, ())} for n in a.nodes}
    live = set()
    for comp in _cyclic_sccs(edges):
        if any(v in a.accepting for v in comp):
            live.update(comp)
    reverse: dict = {}
    for src, targets in edges.items():
        for t in targets:
            reverse.setdefault(t, set()).add(src)
    stack = list(live)
    while stack:
        v = stack.pop()
        for src in reverse.get(v, ()):
            if src not in live:
                live.add(src)
                stack.append(src)
    trans = {
        n: {(lits, t) for lits, t in a.transitions.get(n, ()) if t in live}
        for n in live
    }
    accepting = set(a.accepting) & live
    initial = a.initial
    if initial not in live:
        return BuchiAutomaton({0}, 0, {0: []}, set(), a.formula)

    while True:
        groups: dict = {}
        for n in sorted(trans):
            sig = (n in accepting, frozenset(trans[n]))
            groups.setdefault(sig, []).append(n)
        rename = {}
        for members in groups.values():
            for m in members:
                rename[m] = members[0]
        if all(rename[n] == n for n in trans):
            break
        trans = {
            n: {(lits, rename[t]) for lits, t in out}
            for n, out in trans.items() if rename[n] == n
        }
        accepting = {n for n in accepting if rename[n] == n}
        initial = rename[initial]

    order = [initial]
    index = {initial: 0}
    for n in order:
        for _, t in sorted(trans[n], key=lambda e: (e[1], sorted(map(str, e[0])))):
            if t not in index:
                index[t] = len(order)
                order.append(t)
    transitions = {
        index[n]: sorted(((lits, index[t]) for lits, t in trans[n]), key=lambda e: (e[1], sorted(map(str, e[0]))))
        for n in order
    }
    return BuchiAutomaton(
        set(range(len(order))), 0, transitions, {index[n] for n in accepting}, a.formula,
    )
