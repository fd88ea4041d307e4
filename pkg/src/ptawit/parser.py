"""Reader and writer for the line-oriented ``.pta`` model format.

Example::

    clocks x y;
    bound 2;
    loc l0 inv "x<=0" init;
    loc goal goal;
    loc fail fail;
    trans l0 guard "true" act a { 1/2 -> reset{x} l0; 1/2 -> goal; };
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

from . import dbm as D
from .model import (
    Atom,
    Branch,
    ClockConstraint,
    ConstraintError,
    Pta,
    Transition,
    merge_branches,
)
from .numeric import format_rational, parse_rational


class ParseError(Exception):
    pass


class PtaSyntaxError(ParseError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class ValidationError(ParseError):
    def __init__(self, kind: str, message: str = ""):
        super().__init__(f"{kind}: {message}" if message else kind)
        self.kind = kind


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<number>[0-9]+(?:\s*/\s*[0-9]+|\.[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[;{},])
    """,
    re.VERBOSE,
)


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self):
        return f"{self.kind}:{self.text}@{self.line}:{self.col}"


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PtaSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        val = m.group()
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, val, line, pos - line_start + 1))
        nl = val.count("\n")
        if nl:
            line += nl
            line_start = pos + val.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.clocks: tuple | None = None
        self.bound: int | None = None
        self.locs: list = []  # (name, inv_text, flags, tok)
        self.trans: list = []

    # token helpers
    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return PtaSyntaxError(msg, tok.line, tok.col)

    def expect(self, kind, text=None) -> _Tok:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise self.error(f"expected {want!r}, found {t.text or 'end of input'!r}")
        return self.next()

    def accept(self, kind, text=None) -> _Tok | None:
        t = self.peek()
        if t.kind == kind and (text is None or t.text == text):
            return self.next()
        return None

    # grammar
    def parse(self):
        while self.peek().kind != "eof":
            t = self.expect("ident")
            if t.text == "clocks":
                self.clocks_decl(t)
            elif t.text == "bound":
                n = self.expect("number")
                if not n.text.isdigit():
                    raise self.error("bound must be a non-negative integer", n)
                self.bound = int(n.text)
                self.expect("punct", ";")
            elif t.text == "loc":
                self.loc_decl(t)
            elif t.text == "trans":
                self.trans_decl(t)
            else:
                raise self.error(f"unknown declaration {t.text!r}", t)

    def clocks_decl(self, t):
        if self.clocks is not None:
            raise self.error("clocks declared twice", t)
        names = []
        while not self.accept("punct", ";"):
            names.append(self.expect("ident").text)
            self.accept("punct", ",")
        if len(set(names)) != len(names):
            raise self.error("duplicate clock name", t)
        self.clocks = tuple(names)

    def constraint(self, tok: _Tok) -> ClockConstraint:
        if self.clocks is None:
            raise self.error("clocks must be declared before constraints", tok)
        try:
            return ClockConstraint.parse(tok.text[1:-1], self.clocks)
        except ConstraintError as e:
            raise PtaSyntaxError(str(e), tok.line, tok.col + 1 + e.offset) from None

    def loc_decl(self, t):
        name = self.expect("ident")
        inv = None
        flags = set()
        while not self.accept("punct", ";"):
            k = self.expect("ident")
            if k.text == "inv":
                inv = self.constraint(self.expect("string"))
            elif k.text in ("init", "goal", "fail"):
                flags.add(k.text)
            else:
                raise self.error(f"unknown location attribute {k.text!r}", k)
        self.locs.append((name.text, inv, flags, name))

    def trans_decl(self, t):
        src = self.expect("ident")
        guard = None
        action = None
        while True:
            k = self.peek()
            if k.kind == "punct" and k.text == "{":
                break
            k = self.expect("ident")
            if k.text == "guard":
                guard = self.constraint(self.expect("string"))
            elif k.text == "act":
                action = self.expect("ident").text
            else:
                raise self.error(f"unknown transition attribute {k.text!r}", k)
        if action is None:
            raise self.error("transition without action", src)
        self.expect("punct", "{")
        branches = []
        while not self.accept("punct", "}"):
            p = self.expect("number")
            try:
                prob = parse_rational(p.text)
            except ValueError:
                raise self.error(f"bad probability {p.text!r}", p) from None
            self.expect("arrow")
            reset = set()
            target = self.expect("ident")
            if target.text == "reset" and self.peek().text == "{":
                self.next()
                while not self.accept("punct", "}"):
                    c = self.expect("ident")
                    if self.clocks is None or c.text not in self.clocks:
                        raise self.error(f"unknown clock {c.text!r}", c)
                    reset.add(c.text)
                    self.accept("punct", ",")
                target = self.expect("ident")
            self.expect("punct", ";")
            branches.append((prob, frozenset(reset), target))
        self.expect("punct", ";")
        self.trans.append((src, guard, action, branches))


def parse(text: str) -> Pta:
    """Parse and validate a model; raises PtaSyntaxError or ValidationError."""
    p = _Parser(text)
    p.parse()
    if p.clocks is None:
        raise ValidationError("missing-clocks", "no clocks declaration")
    clocks = p.clocks
    names = [n for n, *_ in p.locs]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise ValidationError("duplicate-location", dup)

    def only(flag):
        found = [n for n, _, fl, _ in p.locs if flag in fl]
        if not found:
            raise ValidationError(f"missing-{flag}", f"no location marked {flag}")
        if len(found) > 1:
            raise ValidationError(f"multiple-{flag}", ", ".join(found))
        return found[0]

    goal, fail, initial = only("goal"), only("fail"), only("init")
    if goal == fail:
        raise ValidationError("goal-is-fail", goal)

    invariants = {}
    for name, inv, _, _ in p.locs:
        inv = inv or ClockConstraint.true(clocks)
        if p.bound is not None and name not in (goal, fail):
            inv = with_bound(inv, p.bound)
        invariants[name] = inv

    transitions = {n: [] for n in names}
    for src, guard, action, branches in p.trans:
        if src.text not in transitions:
            raise ValidationError("unknown-location", src.text)
        if src.text in (goal, fail):
            raise ValidationError("absorbing", f"transition out of {src.text}")
        bs = []
        for prob, reset, target in branches:
            if target.text not in transitions:
                raise ValidationError("unknown-location", target.text)
            if not (0 < prob <= 1):
                raise ValidationError("probability", f"{prob} not in (0,1]")
            bs.append(Branch(prob, reset, target.text))
        total = sum((b.prob for b in bs), Fraction(0))
        if total != 1:
            raise ValidationError("distribution-sum", f"transition at {src.text} sums to {total}")
        transitions[src.text].append(
            Transition(src.text, guard or ClockConstraint.true(clocks), action, merge_branches(bs))
        )

    for n in names:
        if n not in (goal, fail) and not transitions[n]:
            raise ValidationError("no-transitions", n)

    zero = (Fraction(0),) * (len(clocks) + 1)
    if not D.satisfies(zero, invariants[initial].dbm):
        raise ValidationError("initial-invariant", f"0 does not satisfy inv({initial})")

    return Pta(
        clocks=clocks,
        locations=tuple(names),
        invariants=invariants,
        transitions={n: tuple(ts) for n, ts in transitions.items()},
        initial=initial,
        goal=goal,
        fail=fail,
        bound=p.bound,
    )


def with_bound(inv: ClockConstraint, K: int) -> ClockConstraint:
    """Conjoin ``c <= K`` for every clock, skipping atoms already present."""
    if inv.is_false:
        return inv
    extra = [Atom(c, None, "<=", K) for c in inv.clocks]
    atoms = list(inv.atoms) + [a for a in extra if a not in inv.atoms]
    return ClockConstraint(inv.clocks, atoms)


def load(path) -> Pta:
    with open(path, encoding="utf-8") as f:
        return parse(f.read())


def _quote(c: ClockConstraint) -> str:
    return f'"{c.text}"'


def serialize(T: Pta, header: Iterable[str] = ()) -> str:
    lines = [f"# {h}" if h else "#" for h in header]
    lines.append("clocks " + " ".join(T.clocks) + ";")
    if T.bound is not None:
        lines.append(f"bound {T.bound};")
    for l in T.locations:
        parts = ["loc", l]
        inv = T.invariants[l]
        if inv.text != "true":
            parts += ["inv", _quote(inv)]
        if l == T.initial:
            parts.append("init")
        if l == T.goal:
            parts.append("goal")
        if l == T.fail:
            parts.append("fail")
        lines.append(" ".join(parts) + ";")
    for l in T.locations:
        for t in T.transitions.get(l, ()):
            bs = []
            for b in t.branches:
                reset = f"reset{{{','.join(c for c in T.clocks if c in b.reset)}}} " if b.reset else ""
                bs.append(f"{format_rational(b.prob)} -> {reset}{b.target};")
            lines.append(
                f"trans {l} guard {_quote(t.guard)} act {t.action} {{ {' '.join(bs)} }};"
            )
    return "\n".join(lines) + "\n"


def save(T: Pta, path, header: Iterable[str] = ()) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize(T, header))
