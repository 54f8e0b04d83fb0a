"""First-order terms, unification and conjunctive queries over ground fact bases.

Term syntax::

    atom        lowercase identifier         wabs
    variable    uppercase or _ identifier    Ag, _
    integer     digits                       42
    compound    f(t1, ..., tn)               rea(bob, writer)
    list        [t1, ..., tn]                [editor, fdv, sv]

Query syntax is a comma separated conjunction of terms, ``~t`` (negation as
failure) and ``t1 \\= t2`` (structural inequality).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from .errors import NonGroundNegation, ParseError

__all__ = [
    "Atom", "Var", "Int", "Compound", "ListTerm", "Term",
    "Pos", "Neg", "Neq", "Literal",
    "FactBase", "Substitution",
    "is_ground", "variables", "term_key", "substitute", "unify", "match",
    "solve", "tokenize", "TokenStream", "parse_term", "parse_query",
    "parse_facts", "atom", "compound",
]


class _TermBase:
    __slots__ = ()

    def __lt__(self, other):
        return term_key(self) < term_key(other)

    def __repr__(self):
        return f"{type(self).__name__}({self})"


class Atom(_TermBase):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("a", name))

    def __eq__(self, other):
        return type(other) is Atom and other.name == self.name

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name


class Var(_TermBase):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("v", name))

    def __eq__(self, other):
        return type(other) is Var and other.name == self.name

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name


class Int(_TermBase):
    __slots__ = ("value", "_hash")

    def __init__(self, value: int):
        self.value = value
        self._hash = hash(("i", value))

    def __eq__(self, other):
        return type(other) is Int and other.value == self.value

    def __hash__(self):
        return self._hash

    def __str__(self):
        return str(self.value)


class Compound(_TermBase):
    __slots__ = ("functor", "args", "_hash", "_ground")

    def __init__(self, functor: str, args):
        args = tuple(args)
        if not args:
            raise ValueError("compound terms need at least one argument; use Atom")
        self.functor = functor
        self.args = args
        self._hash = hash(("c", functor, args))
        self._ground = all(is_ground(a) for a in args)

    def __eq__(self, other):
        return (
            type(other) is Compound
            and other._hash == self._hash
            and other.functor == self.functor
            and other.args == self.args
        )

    def __hash__(self):
        return self._hash

    def __str__(self):
        return f"{self.functor}({', '.join(map(str, self.args))})"


class ListTerm(_TermBase):
    __slots__ = ("elements", "_hash", "_ground")

    def __init__(self, elements):
        self.elements = tuple(elements)
        self._hash = hash(("l", self.elements))
        self._ground = all(is_ground(e) for e in self.elements)

    def __eq__(self, other):
        return type(other) is ListTerm and other.elements == self.elements

    def __hash__(self):
        return self._hash

    def __str__(self):
        return f"[{', '.join(map(str, self.elements))}]"


Term = Union[Atom, Var, Int, Compound, ListTerm]
Substitution = dict  # variable name -> Term


def atom(name: str) -> Atom:
    return Atom(name)


def compound(functor: str, *args) -> Compound:
    """Build ``functor(args...)``; plain strings are turned into atoms."""
    return Compound(functor, [Atom(a) if isinstance(a, str) else a for a in args])


def is_ground(t) -> bool:
    cls = type(t)
    if cls is Atom or cls is Int:
        return True
    if cls is Var:
        return False
    return t._ground


def variables(t) -> set[str]:
    """Names of all variables occurring in ``t``."""
    out: set[str] = set()
    stack = [t]
    while stack:
        x = stack.pop()
        cls = type(x)
        if cls is Var:
            out.add(x.name)
        elif cls is Compound:
            if not x._ground:
                stack.extend(x.args)
        elif cls is ListTerm:
            if not x._ground:
                stack.extend(x.elements)
    return out


_KEY_CACHE: dict = {}


def term_key(t):
    """Canonical sort key: functor name, then arity, then arguments."""
    key = _KEY_CACHE.get(t)
    if key is not None:
        return key
    cls = type(t)
    if cls is Int:
        key = (0, t.value)
    elif cls is Atom:
        key = (1, t.name, 0, ())
    elif cls is Compound:
        key = (1, t.functor, len(t.args), tuple(term_key(a) for a in t.args))
    elif cls is ListTerm:
        key = (2, len(t.elements), tuple(term_key(e) for e in t.elements))
    else:
        key = (3, t.name)
    if len(_KEY_CACHE) > 500_000:
        _KEY_CACHE.clear()
    _KEY_CACHE[t] = key
    return key


def substitute(t, subst: Mapping[str, object]):
    if not subst:
        return t
    cls = type(t)
    if cls is Var:
        bound = subst.get(t.name)
        return t if bound is None else bound
    if cls is Compound:
        if t._ground:
            return t
        return Compound(t.functor, [substitute(a, subst) for a in t.args])
    if cls is ListTerm:
        if t._ground:
            return t
        return ListTerm([substitute(e, subst) for e in t.elements])
    return t


def _walk(t, bindings):
    while type(t) is Var and t.name in bindings:
        t = bindings[t.name]
    return t


def _resolve(t, bindings):
    t = _walk(t, bindings)
    cls = type(t)
    if cls is Compound and not t._ground:
        return Compound(t.functor, [_resolve(a, bindings) for a in t.args])
    if cls is ListTerm and not t._ground:
        return ListTerm([_resolve(e, bindings) for e in t.elements])
    return t


def _occurs(name, t, bindings) -> bool:
    t = _walk(t, bindings)
    cls = type(t)
    if cls is Var:
        return t.name == name
    if cls is Compound:
        return any(_occurs(name, a, bindings) for a in t.args)
    if cls is ListTerm:
        return any(_occurs(name, e, bindings) for e in t.elements)
    return False


def unify(t1, t2, subst: Mapping[str, object] | None = None) -> Substitution | None:
    """Most general unifier of ``t1`` and ``t2`` extending ``subst``.

    Returns a fully resolved (idempotent) substitution, or ``None`` when the
    terms do not unify. The occurs check is always on.
    """
    bindings = dict(subst) if subst else {}
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a = _walk(a, bindings)
        b = _walk(b, bindings)
        if a == b:
            continue
        if type(a) is Var:
            if _occurs(a.name, b, bindings):
                return None
            bindings[a.name] = b
        elif type(b) is Var:
            if _occurs(b.name, a, bindings):
                return None
            bindings[b.name] = a
        elif type(a) is Compound and type(b) is Compound:
            if a.functor != b.functor or len(a.args) != len(b.args):
                return None
            stack.extend(zip(a.args, b.args))
        elif type(a) is ListTerm and type(b) is ListTerm:
            if len(a.elements) != len(b.elements):
                return None
            stack.extend(zip(a.elements, b.elements))
        else:
            return None
    return {name: _resolve(value, bindings) for name, value in bindings.items()}


def match(pattern, fact, subst: Mapping[str, object] | None = None) -> Substitution | None:
    """One-way matching of ``pattern`` against a ground ``fact``."""
    out = dict(subst) if subst else {}
    stack = [(pattern, fact)]
    while stack:
        p, f = stack.pop()
        cls = type(p)
        if cls is Var:
            bound = out.get(p.name)
            if bound is None:
                out[p.name] = f
            elif bound != f:
                return None
        elif cls is Compound:
            if p._ground:
                if p != f:
                    return None
            elif (type(f) is not Compound or f.functor != p.functor
                  or len(f.args) != len(p.args)):
                return None
            else:
                stack.extend(zip(p.args, f.args))
        elif cls is ListTerm:
            if type(f) is not ListTerm or len(f.elements) != len(p.elements):
                return None
            stack.extend(zip(p.elements, f.elements))
        elif p != f:
            return None
    return out


class FactBase:
    """Immutable set of ground terms, iterated in canonical term order."""

    __slots__ = ("_facts", "_hash", "_sorted", "_index")

    def __init__(self, facts: Iterable = ()):
        facts = frozenset(facts)
        for f in facts:
            if not is_ground(f):
                raise ValueError(f"fact base members must be ground: {f}")
        self._facts = facts
        self._hash = hash(facts)
        self._sorted = None
        self._index = None

    @classmethod
    def _trusted(cls, facts: frozenset) -> "FactBase":
        fb = cls.__new__(cls)
        fb._facts = facts
        fb._hash = hash(facts)
        fb._sorted = None
        fb._index = None
        return fb

    def __contains__(self, term) -> bool:
        return term in self._facts

    def __len__(self):
        return len(self._facts)

    def __iter__(self) -> Iterator:
        return iter(self.sorted())

    def __eq__(self, other):
        return isinstance(other, FactBase) and self._facts == other._facts

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "FactBase({" + ", ".join(map(str, self.sorted())) + "})"

    def sorted(self) -> tuple:
        if self._sorted is None:
            self._sorted = tuple(sorted(self._facts, key=term_key))
        return self._sorted

    def add(self, *terms) -> "FactBase":
        new = [t for t in terms if t not in self._facts]
        if not new:
            return self
        for t in new:
            if not is_ground(t):
                raise ValueError(f"fact base members must be ground: {t}")
        return FactBase._trusted(self._facts.union(new))

    def remove(self, *terms) -> "FactBase":
        if not any(t in self._facts for t in terms):
            return self
        return FactBase._trusted(self._facts.difference(terms))

    def by_signature(self, functor: str, arity: int) -> tuple:
        if self._index is None:
            index: dict = {}
            for f in self.sorted():
                if type(f) is Compound:
                    sig = (f.functor, len(f.args))
                elif type(f) is Atom:
                    sig = (f.name, 0)
                else:
                    sig = None
                index.setdefault(sig, []).append(f)
            self._index = {k: tuple(v) for k, v in index.items()}
        return self._index.get((functor, arity), ())

    def candidates(self, pattern) -> tuple:
        """Facts that could possibly match ``pattern``, in canonical order."""
        cls = type(pattern)
        if cls is Compound:
            return self.by_signature(pattern.functor, len(pattern.args))
        if cls is Atom:
            return (pattern,) if pattern in self._facts else ()
        if cls is Var or cls is ListTerm:
            return self.sorted()
        return (pattern,) if pattern in self._facts else ()


@dataclass(frozen=True)
class Pos:
    term: object

    def __str__(self):
        return str(self.term)


@dataclass(frozen=True)
class Neg:
    term: object

    def __str__(self):
        return f"~{self.term}"


@dataclass(frozen=True)
class Neq:
    left: object
    right: object

    def __str__(self):
        return f"{self.left} \\= {self.right}"


Literal = Union[Pos, Neg, Neq]


def solve(base: FactBase, goal, subst: Mapping[str, object] | None = None) -> Iterator[Substitution]:
    """Lazily enumerate substitutions satisfying the conjunctive ``goal``.

    Conjuncts are processed left to right and facts are tried in canonical
    order, so the enumeration order is deterministic.
    """
    goal = tuple(goal)
    yield from _solve(base, goal, 0, dict(subst) if subst else {})


def _solve(base, goal, i, subst):
    if i == len(goal):
        yield subst
        return
    lit = goal[i]
    cls = type(lit)
    if cls is Pos:
        pattern = substitute(lit.term, subst)
        if is_ground(pattern):
            if pattern in base:
                yield from _solve(base, goal, i + 1, subst)
            return
        for fact in base.candidates(pattern):
            extended = match(pattern, fact, subst)
            if extended is not None:
                yield from _solve(base, goal, i + 1, extended)
    elif cls is Neg:
        t = substitute(lit.term, subst)
        if not is_ground(t):
            raise NonGroundNegation(f"negated literal not ground: ~{t}")
        if t not in base:
            yield from _solve(base, goal, i + 1, subst)
    elif cls is Neq:
        left = substitute(lit.left, subst)
        right = substitute(lit.right, subst)
        if not (is_ground(left) and is_ground(right)):
            raise NonGroundNegation(f"inequality not ground: {left} \\= {right}")
        if left != right:
            yield from _solve(base, goal, i + 1, subst)
    else:
        raise TypeError(f"not a query literal: {lit!r}")


# ---------------------------------------------------------------------------
# Text syntax

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>[%\#][^\n]*)
  | (?P<int>\d+)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<punct>\\=|=>|->|<-|<>|&&|\|\||:=|[()\[\],.:~!+\-;{}@])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # int | name | var | punct | eof
    value: str
    line: int
    column: int


def tokenize(text: str, line_offset: int = 0) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1 + line_offset
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over a token list with helpers for recursive descent parsers."""

    _fresh = itertools.count()

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @classmethod
    def from_text(cls, text: str) -> "TokenStream":
        return cls(tokenize(text))

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, value: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind != "eof" and tok.value == value

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.pos += 1
            return True
        return False

    def expect(self, value: str) -> Token:
        tok = self.peek()
        if tok.kind == "eof" or tok.value != value:
            self.error(f"expected {value!r}, found {tok.value or 'end of input'!r}")
        return self.next()

    def at_end(self) -> bool:
        return self.peek().kind == "eof"

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.column)

    def fresh_var(self) -> Var:
        return Var(f"_G{next(self._fresh)}")


def parse_term(stream: TokenStream):
    tok = stream.next()
    if tok.kind == "int":
        return Int(int(tok.value))
    if tok.kind == "var":
        return stream.fresh_var() if tok.value == "_" else Var(tok.value)
    if tok.kind == "name":
        if stream.at("("):
            stream.next()
            args = [parse_term(stream)]
            while stream.accept(","):
                args.append(parse_term(stream))
            stream.expect(")")
            return Compound(tok.value, args)
        return Atom(tok.value)
    if tok.value == "[":
        elements = []
        if not stream.at("]"):
            elements.append(parse_term(stream))
            while stream.accept(","):
                elements.append(parse_term(stream))
        stream.expect("]")
        return ListTerm(elements)
    stream.error(f"expected a term, found {tok.value or 'end of input'!r}", tok)


def parse_literal(stream: TokenStream) -> Literal:
    if stream.accept("~"):
        if stream.accept("("):
            t = parse_term(stream)
            stream.expect(")")
        else:
            t = parse_term(stream)
        return Neg(t)
    t = parse_term(stream)
    if stream.accept("\\="):
        return Neq(t, parse_term(stream))
    return Pos(t)


def parse_query(text_or_stream) -> tuple:
    """Parse ``l1, l2, ...`` into a tuple of literals."""
    stream = _as_stream(text_or_stream)
    lits = [parse_literal(stream)]
    while stream.accept(","):
        lits.append(parse_literal(stream))
    if isinstance(text_or_stream, str) and not stream.at_end():
        stream.error(f"unexpected {stream.peek().value!r}")
    return tuple(lits)


def parse_facts(text: str) -> list:
    """Ground facts, one per line, optional trailing ``.``; ``%`` comments."""
    stream = TokenStream.from_text(text)
    facts = []
    while not stream.at_end():
        tok = stream.peek()
        t = parse_term(stream)
        if not is_ground(t):
            stream.error(f"fact is not ground: {t}", tok)
        facts.append(t)
        stream.accept(".")
    return facts


def _as_stream(text_or_stream) -> TokenStream:
    if isinstance(text_or_stream, TokenStream):
        return text_or_stream
    return TokenStream.from_text(text_or_stream)


def term(text: str):
    """Parse a single term from text."""
    stream = TokenStream.from_text(text)
    t = parse_term(stream)
    if not stream.at_end():
        stream.error(f"unexpected {stream.peek().value!r} after term")
    return t


__all__.append("term")
