"""Property specification language: LTL over agent modalities.

Concrete syntax::

    B(ag, f)  G(ag, f)  A(ag, f)  I(ag, f)  P(f)  Org(ag, f)  Opt(ag, f)
    true  false  ~φ  φ && ψ  φ || ψ  φ -> ψ  X φ  <> φ  [] φ  φ U ψ  φ R ψ
    forall ag in agents: φ
    forall obl in obligations: φ        binds role, obj, deadline
    forall dep in dependencies: φ       binds role1, role2, obj
    @name                                a previously defined property

Unary operators bind tightest, then ``U``/``R`` (right associative), ``&&``,
``||`` and finally ``->`` (right associative). A ``forall`` body extends as
far to the right as possible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .aorta import unwrap_bel
from .errors import NonGroundAtom, ParseError, UnknownAgent
from .logic import (
    Atom, Compound, ListTerm, TokenStream, Var, is_ground, parse_term, tokenize,
)

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class ModalAtom:
    agent: str

    def __str__(self):
        return f"{self.symbol}({self.agent}, {self.fact})"


@dataclass(frozen=True)
class Bel(ModalAtom):
    fact: object
    symbol = "B"


@dataclass(frozen=True)
class Goal(ModalAtom):
    fact: object
    symbol = "G"


@dataclass(frozen=True)
class Act(ModalAtom):
    fact: object
    symbol = "A"


@dataclass(frozen=True)
class Intend(ModalAtom):
    fact: object
    symbol = "I"


@dataclass(frozen=True)
class OrgB(ModalAtom):
    fact: object
    symbol = "Org"


@dataclass(frozen=True)
class OptB(ModalAtom):
    fact: object
    symbol = "Opt"


@dataclass(frozen=True)
class Percept:
    fact: object

    def __str__(self):
        return f"P({self.fact})"


@dataclass(frozen=True)
class TrueF:
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class FalseF:
    def __str__(self):
        return "false"


@dataclass(frozen=True)
class Not:
    sub: object

    def __str__(self):
        return f"~{_wrap(self.sub)}"


@dataclass(frozen=True)
class And:
    left: object
    right: object

    def __str__(self):
        return f"{_wrap(self.left)} && {_wrap(self.right)}"


@dataclass(frozen=True)
class Or:
    left: object
    right: object

    def __str__(self):
        return f"{_wrap(self.left)} || {_wrap(self.right)}"


@dataclass(frozen=True)
class Until:
    left: object
    right: object

    def __str__(self):
        return f"{_wrap(self.left)} U {_wrap(self.right)}"


@dataclass(frozen=True)
class Release:
    left: object
    right: object

    def __str__(self):
        return f"{_wrap(self.left)} R {_wrap(self.right)}"


@dataclass(frozen=True)
class Next:
    sub: object

    def __str__(self):
        return f"X {_wrap(self.sub)}"


@dataclass(frozen=True)
class Eventually:
    sub: object

    def __str__(self):
        return f"<> {_wrap(self.sub)}"


@dataclass(frozen=True)
class Always:
    sub: object

    def __str__(self):
        return f"[] {_wrap(self.sub)}"


ATOM_TYPES = (Bel, Goal, Act, Intend, OrgB, OptB, Percept)
_MODAL = {"B": Bel, "G": Goal, "A": Act, "I": Intend, "Org": OrgB, "Opt": OptB}
_LEAF = ATOM_TYPES + (TrueF, FalseF)


def _wrap(f) -> str:
    return str(f) if isinstance(f, _LEAF) else f"({f})"


def is_atom(f) -> bool:
    return isinstance(f, ATOM_TYPES)


def atoms(f) -> set:
    if is_atom(f):
        return {f}
    if isinstance(f, (TrueF, FalseF)):
        return set()
    if isinstance(f, (Not, Next, Eventually, Always)):
        return atoms(f.sub)
    return atoms(f.left) | atoms(f.right)


def conjuncts(f) -> list:
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


def conjoin(fs: Sequence):
    fs = list(fs)
    if not fs:
        return TrueF()
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


# ---------------------------------------------------------------------------
# Parsing


@dataclass(frozen=True)
class PslContext:
    """Finite domains for ``forall`` macros."""

    agents: tuple = ()
    obligations: tuple = ()  # (role, objective, deadline) terms
    dependencies: tuple = ()  # (role1, role2, objective) terms

    @classmethod
    def from_org(cls, agents: Iterable[str], org_facts) -> "PslContext":
        obligations, deps = [], []
        for f in org_facts:
            if isinstance(f, Compound) and f.functor == "cond" and len(f.args) == 4:
                obligations.append((f.args[0], unwrap_bel(f.args[1]), unwrap_bel(f.args[2])))
            elif isinstance(f, Compound) and f.functor == "dep" and len(f.args) == 3:
                deps.append(tuple(f.args))
        return cls(tuple(agents), tuple(obligations), tuple(deps))


_DOMAIN_NAMES = {
    "obligations": ("role", "obj", "deadline"),
    "dependencies": ("role1", "role2", "obj"),
}


@dataclass(frozen=True)
class Property:
    name: str
    formula: object
    expect_fail: bool = False
    source: str = ""


class _Parser:
    def __init__(self, stream: TokenStream, context: PslContext | None, env: Mapping[str, object]):
        self.s = stream
        self.context = context
        self.env = env

    def formula(self):
        if self.s.at("forall"):
            return self.forall()
        left = self.disjunction()
        if self.s.accept("->"):
            return Or(_negate(left), self.formula())
        return left

    def forall(self):
        tok = self.s.next()
        if self.s.accept("("):
            names = [self._binder_name()]
            while self.s.accept(","):
                names.append(self._binder_name())
            self.s.expect(")")
        else:
            names = [self._binder_name()]
        self.s.expect("in")
        domain_tok = self.s.next()
        domain = domain_tok.value
        self.s.expect(":")
        body = self.formula()
        if self.context is None:
            self.s.error("forall needs a context of agents and organization facts", tok)
        if domain == "agents":
            if len(names) != 1:
                self.s.error("forall over agents binds exactly one name", tok)
            rows = [(Atom(a),) for a in self.context.agents]
        elif domain in _DOMAIN_NAMES:
            rows = list(getattr(self.context, domain))
            if len(names) == 1:
                names = list(_DOMAIN_NAMES[domain])
            elif len(names) != 3:
                self.s.error(f"forall over {domain} binds one name or a 3-tuple", tok)
        else:
            self.s.error(f"unknown forall domain {domain!r}", domain_tok)
        return conjoin([instantiate(body, dict(zip(names, row))) for row in rows])

    def _binder_name(self) -> str:
        tok = self.s.next()
        if tok.kind not in ("name", "var"):
            self.s.error("expected a binder name", tok)
        return tok.value

    def disjunction(self):
        left = self.conjunction()
        while self.s.accept("||"):
            left = Or(left, self.conjunction())
        return left

    def conjunction(self):
        left = self.until()
        while self.s.accept("&&"):
            left = And(left, self.until())
        return left

    def until(self):
        left = self.unary()
        if self.s.accept("U"):
            return Until(left, self.until())
        if self.s.accept("R"):
            return Release(left, self.until())
        return left

    def unary(self):
        s = self.s
        if s.at("forall"):
            return self.forall()
        if s.accept("~") or s.accept("!"):
            return Not(self.unary())
        if s.accept("<>"):
            return Eventually(self.unary())
        if s.at("[") and s.at("]", 1):
            s.pos += 2
            return Always(self.unary())
        if s.at("X") and not s.at("(", 1):
            s.next()
            return Next(self.unary())
        return self.primary()

    def primary(self):
        s = self.s
        tok = s.next()
        if tok.value == "(":
            inner = self.formula()
            s.expect(")")
            return inner
        if tok.value == "true":
            return TrueF()
        if tok.value == "false":
            return FalseF()
        if tok.value == "@":
            ref = s.next()
            if ref.value not in self.env:
                s.error(f"unknown property reference @{ref.value}", ref)
            return self.env[ref.value]
        if tok.value == "P" and s.at("("):
            s.next()
            fact = parse_term(s)
            s.expect(")")
            return Percept(fact)
        if tok.value in _MODAL and s.at("("):
            s.next()
            agent = parse_term(s)
            s.expect(",")
            fact = parse_term(s)
            s.expect(")")
            return _MODAL[tok.value](agent, fact)
        s.error(f"expected a formula, found {tok.value or 'end of input'!r}", tok)


def _negate(f):
    return Not(f)


def _subst_term(t, binding: Mapping[str, object]):
    cls = type(t)
    if cls is Atom or cls is Var:
        return binding.get(t.name, t)
    if cls is Compound:
        return Compound(t.functor, [_subst_term(a, binding) for a in t.args])
    if cls is ListTerm:
        return ListTerm([_subst_term(e, binding) for e in t.elements])
    return t


def instantiate(f, binding: Mapping[str, object]):
    """Replace bound names (atoms or variables) throughout a formula."""
    if isinstance(f, Percept):
        return Percept(_subst_term(f.fact, binding))
    if isinstance(f, ModalAtom):
        return type(f)(_subst_term(f.agent, binding), _subst_term(f.fact, binding))
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, (Not, Next, Eventually, Always)):
        return type(f)(instantiate(f.sub, binding))
    return type(f)(instantiate(f.left, binding), instantiate(f.right, binding))


def _finalize(f, tok_line=None):
    """Check groundness and turn agent terms into plain names."""
    if isinstance(f, Percept):
        if not is_ground(f.fact):
            raise NonGroundAtom(f"atom is not ground: {f}", tok_line)
        return f
    if isinstance(f, ModalAtom):
        agent, fact = f.agent, f.fact
        if isinstance(agent, Atom):
            agent = agent.name
        elif not isinstance(agent, str):
            raise NonGroundAtom(f"agent must be a name: {f}", tok_line)
        if not is_ground(fact):
            raise NonGroundAtom(f"atom is not ground: {f}", tok_line)
        return type(f)(agent, fact)
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, (Not, Next, Eventually, Always)):
        return type(f)(_finalize(f.sub, tok_line))
    return type(f)(_finalize(f.left, tok_line), _finalize(f.right, tok_line))


def parse_psl(text, context: PslContext | None = None, env: Mapping[str, object] | None = None):
    """Parse one formula; ``forall`` macros are expanded using ``context``."""
    stream = text if isinstance(text, TokenStream) else TokenStream.from_text(text)
    start = stream.peek()
    f = _Parser(stream, context, env or {}).formula()
    if not stream.at_end():
        stream.error(f"unexpected {stream.peek().value!r}")
    return _finalize(f, start.line)


def parse_properties(text: str, context: PslContext | None = None) -> list[Property]:
    """Parse ``name := formula`` lines; ``expect-fail:`` marks expected violations.

    A formula may continue on following lines; ``%`` and ``#`` start comments.
    """
    entries: list[list] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        if ":=" in line:
            name, body = line.split(":=", 1)
            entries.append([name.strip(), body, lineno])
        elif entries:
            entries[-1][1] += "\n" + line
        else:
            raise ParseError("expected 'name := formula'", lineno, 1)
    props, env = [], {}
    for name, body, lineno in entries:
        expect_fail = name.startswith("expect-fail:")
        if expect_fail:
            name = name[len("expect-fail:"):].strip()
        if not name or name in env:
            raise ParseError(f"missing or duplicate property name {name!r}", lineno, 1)
        stream = TokenStream(tokenize(body, line_offset=lineno - 1))
        formula = parse_psl(stream, context, env)
        env[name] = formula
        props.append(Property(name, formula, expect_fail, " ".join(body.split())))
    return props


def _strip_comment(line: str) -> str:
    for i, ch in enumerate(line):
        if ch in "%#":
            return line[:i]
    return line


# ---------------------------------------------------------------------------
# Negation normal form


def to_nnf(f):
    """Push negations down to atoms; ◇ and □ become U and R."""
    return _nnf(f, False)


def _nnf(f, neg: bool):
    if is_atom(f):
        return Not(f) if neg else f
    if isinstance(f, TrueF):
        return FalseF() if neg else f
    if isinstance(f, FalseF):
        return TrueF() if neg else f
    if isinstance(f, Not):
        return _nnf(f.sub, not neg)
    if isinstance(f, And):
        cls = Or if neg else And
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Or):
        cls = And if neg else Or
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Until):
        cls = Release if neg else Until
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Release):
        cls = Until if neg else Release
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Next):
        return Next(_nnf(f.sub, neg))
    if isinstance(f, Eventually):
        return _nnf(Until(TrueF(), f.sub), neg)
    if isinstance(f, Always):
        return _nnf(Release(FalseF(), f.sub), neg)
    raise TypeError(f"not a PSL formula: {f!r}")


def is_nnf(f) -> bool:
    if is_atom(f) or isinstance(f, (TrueF, FalseF)):
        return True
    if isinstance(f, Not):
        return is_atom(f.sub)
    if isinstance(f, (Eventually, Always)):
        return False
    if isinstance(f, Next):
        return is_nnf(f.sub)
    return is_nnf(f.left) and is_nnf(f.right)


# ---------------------------------------------------------------------------
# Atom evaluation


def _normalize_org(t):
    from .aorta import unwrap_bel

    if isinstance(t, Compound):
        if t.functor == "obl" and len(t.args) == 4:
            a = t.args
            return Compound("obl", [a[0], a[1], unwrap_bel(a[2]), unwrap_bel(a[3])])
        if t.functor == "viol" and len(t.args) == 3:
            a = t.args
            return Compound("viol", [a[0], a[1], unwrap_bel(a[2])])
    return t


def eval_atom(s, atom) -> bool:
    """Truth of a ground modal atom in a global state."""
    if isinstance(atom, Percept):
        return atom.fact in s.percepts
    try:
        agent = s.agent(atom.agent)
    except UnknownAgent:
        raise UnknownAgent(f"property mentions unknown agent {atom.agent!r}") from None
    fact = atom.fact
    cls = type(atom)
    if cls is Bel:
        return fact in agent.beliefs
    if cls is Goal:
        return fact in agent.goals
    if cls is OptB:
        return fact in agent.options
    if cls is Act:
        return agent.last_action == fact
    if cls is Intend:
        return fact in agent.goals and any(i.goal == fact for i in agent.intentions)
    if cls is OrgB:
        org = agent.org
        if fact in org:
            return True
        norm = _normalize_org(fact)
        if norm is fact:
            return False
        return any(_normalize_org(f) == norm for f in org.candidates(fact))
    raise TypeError(f"not a modal atom: {atom!r}")


# ---------------------------------------------------------------------------
# Reference semantics on ultimately periodic words


def evaluate_lasso(f, letters: Sequence, loop_start: int, valuation: Callable | None = None) -> bool:
    """Truth of ``f`` at position 0 of ``letters[:loop_start] (letters[loop_start:])^ω``.

    ``valuation(letter, atom)`` decides atoms; by default a letter is a set of
    true atoms. Computed directly from the LTL fixpoint definitions.
    """
    n = len(letters)
    if not 0 <= loop_start < n:
        raise ValueError("loop_start must index into letters")
    val = valuation or (lambda letter, a: a in letter)
    succ = [i + 1 if i + 1 < n else loop_start for i in range(n)]
    memo: dict = {}

    def ev(g):
        key = id(g)
        if key in memo:
            return memo[key]
        if is_atom(g):
            out = [bool(val(letters[i], g)) for i in range(n)]
        elif isinstance(g, TrueF):
            out = [True] * n
        elif isinstance(g, FalseF):
            out = [False] * n
        elif isinstance(g, Not):
            out = [not x for x in ev(g.sub)]
        elif isinstance(g, And):
            a, b = ev(g.left), ev(g.right)
            out = [x and y for x, y in zip(a, b)]
        elif isinstance(g, Or):
            a, b = ev(g.left), ev(g.right)
            out = [x or y for x, y in zip(a, b)]
        elif isinstance(g, Next):
            a = ev(g.sub)
            out = [a[succ[i]] for i in range(n)]
        elif isinstance(g, (Until, Eventually)):
            a = [True] * n if isinstance(g, Eventually) else ev(g.left)
            b = ev(g.sub if isinstance(g, Eventually) else g.right)
            out = [False] * n
            changed = True
            while changed:
                changed = False
                for i in range(n - 1, -1, -1):
                    v = b[i] or (a[i] and out[succ[i]])
                    if v != out[i]:
                        out[i] = v
                        changed = True
        elif isinstance(g, (Release, Always)):
            a = [False] * n if isinstance(g, Always) else ev(g.left)
            b = ev(g.sub if isinstance(g, Always) else g.right)
            out = [True] * n
            changed = True
            while changed:
                changed = False
                for i in range(n - 1, -1, -1):
                    v = b[i] and (a[i] or out[succ[i]])
                    if v != out[i]:
                        out[i] = v
                        changed = True
        else:
            raise TypeError(f"not a PSL formula: {g!r}")
        memo[key] = out
        return out

    return ev(f)[0]
