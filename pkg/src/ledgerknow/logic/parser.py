"""Concrete syntax: recursive-descent parser and printer.

Precedence, loosest first: ``->`` (right-assoc), ``|``, ``&``, prefix operators.
See ``docs/formulas.md`` for the full grammar.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import NamedTuple

from .formula import (
    Acc,
    And,
    B,
    Bottom,
    Box,
    C,
    E,
    Formula,
    Honest,
    HonestSelf,
    Implies,
    InitGeq,
    K,
    Next,
    Not,
    Or,
    Prop,
    Top,
    TPrefix,
    TPrefixSelf,
    Y_NONE,
    YOp,
)

SETS = ("H", "A")


class ParseError(ValueError):
    def __init__(self, message: str, position: int, expected: set[str]):
        self.position = position
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(expected))
        super().__init__(f"{message} at position {position} (expected one of: {exp})")


class Token(NamedTuple):
    kind: str  # WORD, a punctuation string, or EOF
    text: str
    pos: int


_TOKEN_RE = re.compile(r"\s*(?:(->|>=|[!&|()\[\],;^_/])|([0-9]+(?:\.[0-9]+)?|[A-Za-z][A-Za-z0-9.]*))")


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, {"token"})
        start = m.start(1) if m.group(1) else m.start(2)
        if m.group(1):
            tokens.append(Token(m.group(1), m.group(1), start))
        else:
            tokens.append(Token("WORD", m.group(2), start))
        pos = m.end()
    tokens.append(Token("EOF", "", len(text)))
    return tokens


_PREFIX_WORDS = {"G", "X", "K", "B", "E", "C", "init"}


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, expected: set[str], msg: str | None = None):
        t = self.tok
        found = "end of input" if t.kind == "EOF" else repr(t.text)
        raise ParseError(msg or f"unexpected {found}", t.pos, expected)

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_word(self, text: str) -> bool:
        return self.at("WORD", text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        if not self.at(kind, text):
            self.error({text or kind})
        t = self.tok
        self.i += 1
        return t

    def word(self, what: str) -> str:
        if self.tok.kind != "WORD":
            self.error({what})
        t = self.tok
        self.i += 1
        return t.text

    def _adjacent(self, k: int) -> bool:
        prev = self.tokens[k - 1]
        return self.tokens[k].pos == prev.pos + len(prev.text)

    def name(self, what: str) -> str:
        """A word glued to directly adjacent words and ``_word`` pieces."""
        text = self.word(what)
        while True:
            if self.at("WORD") and self._adjacent(self.i):
                text += self.tok.text
                self.i += 1
            elif self.at("_") and self._adjacent(self.i) and self.tokens[self.i + 1].kind == "WORD" and self._adjacent(self.i + 1):
                text += "_" + self.tokens[self.i + 1].text
                self.i += 2
            else:
                return text

    def integer(self) -> int:
        t = self.tok
        if t.kind != "WORD" or not t.text.isdigit():
            self.error({"integer"})
        self.i += 1
        return int(t.text)

    def fraction(self) -> Fraction:
        t = self.tok
        try:
            num = Fraction(self.word("number"))
        except ValueError:
            raise ParseError(f"bad number {t.text!r}", t.pos, {"number"})
        if self.at("/"):
            self.i += 1
            den = self.integer()
            if den == 0:
                raise ParseError("zero denominator", self.tokens[self.i - 1].pos, {"nonzero integer"})
            num = num / den
        if not 0 <= num <= 1:
            raise ParseError(f"probability {num} outside [0, 1]", t.pos, {"number in [0, 1]"})
        return num

    # -- grammar -----------------------------------------------------------

    def parse(self) -> Formula:
        f = self.implication()
        if not self.at("EOF"):
            self.error({"->", "|", "&", "end of input"})
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.i += 1
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.at("|"):
            self.i += 1
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.at("&"):
            self.i += 1
            f = And(f, self.unary())
        return f

    def set_spec(self, allow_y: bool) -> tuple[str, YOp, bool]:
        self.expect("[")
        t = self.tok
        s = self.word("indexical set")
        if s not in SETS:
            raise ParseError(f"unknown indexical set {s!r}", t.pos, set(SETS))
        y, acc = Y_NONE, False
        if allow_y and self.at(";") and not self.tokens[self.i + 1].text == "acc":
            self.i += 1
            y = self.y_op()
        if self.at(";"):
            self.i += 1
            self.expect("WORD", "acc")
            acc = True
        self.expect("]")
        return s, y, acc

    def y_op(self) -> YOp:
        if self.at_word("none"):
            self.i += 1
            return Y_NONE
        if not self.at_word("X"):
            self.error({"none", "X"})
        self.i += 1
        self.expect("^")
        k = self.integer()
        box = False
        if self.at_word("G"):
            self.i += 1
            box = True
        return YOp(k, box)

    def agent_suffix(self) -> str:
        self.expect("_")
        return self.name("agent name")

    def unary(self) -> Formula:
        t = self.tok
        if t.kind == "!":
            self.i += 1
            return Not(self.unary())
        if t.kind == "WORD" and t.text in _PREFIX_WORDS:
            self.i += 1
            if t.text == "G":
                return Box(self.unary())
            if t.text == "X":
                self.expect("^")
                k = self.integer()
                return Next(k, self.unary())
            if t.text == "K":
                a = self.agent_suffix()
                return K(a, self.unary())
            if t.text == "B":
                s, _, acc = self.set_spec(allow_y=False)
                a = self.agent_suffix()
                return B(a, self.unary(), s, acc)
            if t.text == "E":
                s, _, acc = self.set_spec(allow_y=False)
                return E(self.unary(), s, acc)
            if t.text == "C":
                s, y, acc = self.set_spec(allow_y=True)
                return C(self.unary(), s, y, acc)
            if t.text == "init":
                self.expect(">=")
                alpha = self.fraction()
                return InitGeq(alpha, self.unary())
        return self.atom()

    def atom(self) -> Formula:
        t = self.tok
        expected = {"(", "!", "true", "false", "honest", "Honest", "tprefix", "acc", "prop", "G", "X", "K", "B", "E", "C", "init"}
        if t.kind == "(":
            self.i += 1
            f = self.implication()
            self.expect(")")
            return f
        if t.kind != "WORD":
            self.error(expected)
        self.i += 1
        if t.text == "true":
            return Top()
        if t.text == "false":
            return Bottom()
        if t.text == "Honest":
            return HonestSelf()
        if t.text == "acc":
            return Acc()
        if t.text == "honest":
            self.expect("(")
            a = self.name("agent name")
            self.expect(")")
            return Honest(a)
        if t.text == "prop":
            self.expect("(")
            name = self.name("proposition name")
            self.expect(")")
            return Prop(name)
        if t.text == "tprefix":
            self.expect("(")
            self.expect("[")
            ids: list[str] = []
            if not self.at("]"):
                ids.append(self.name("transaction id"))
                while self.at(","):
                    self.i += 1
                    ids.append(self.name("transaction id"))
            self.expect("]")
            self.expect(",")
            self.expect("WORD", "L")
            agent = None
            if self.at("_"):
                agent = self.agent_suffix()
            self.expect(")")
            return TPrefix(tuple(ids), agent) if agent is not None else TPrefixSelf(tuple(ids))
        self.i -= 1
        self.error(expected)


def parse_formula(text: str) -> Formula:
    return _Parser(text).parse()


def _set_text(set_name: str, y: YOp | None, acc: bool) -> str:
    parts = [set_name]
    if y is not None:
        parts.append(str(y))
    if acc:
        parts.append("acc")
    return "[" + "; ".join(parts) + "]"


def to_text(f: Formula) -> str:
    """Print ``f`` so that ``parse_formula(to_text(f)) == f``."""
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Honest):
        return f"honest({f.agent})"
    if isinstance(f, HonestSelf):
        return "Honest"
    if isinstance(f, Acc):
        return "acc"
    if isinstance(f, Prop):
        return f"prop({f.name})"
    if isinstance(f, TPrefix):
        return f"tprefix([{','.join(f.X)}], L_{f.agent})"
    if isinstance(f, TPrefixSelf):
        return f"tprefix([{','.join(f.X)}], L)"
    if isinstance(f, Not):
        return "!" + to_text(f.sub)
    if isinstance(f, And):
        return f"({to_text(f.left)} & {to_text(f.right)})"
    if isinstance(f, Or):
        return f"({to_text(f.left)} | {to_text(f.right)})"
    if isinstance(f, Implies):
        return f"({to_text(f.left)} -> {to_text(f.right)})"
    if isinstance(f, Box):
        return "G " + to_text(f.sub)
    if isinstance(f, Next):
        return f"X^{f.steps} " + to_text(f.sub)
    if isinstance(f, K):
        return f"K_{f.agent} " + to_text(f.sub)
    if isinstance(f, B):
        return f"B{_set_text(f.set_name, None, f.acc)}_{f.agent} " + to_text(f.sub)
    if isinstance(f, E):
        return f"E{_set_text(f.set_name, None, f.acc)} " + to_text(f.sub)
    if isinstance(f, C):
        return f"C{_set_text(f.set_name, f.y, f.acc)} " + to_text(f.sub)
    if isinstance(f, InitGeq):
        return f"init>={f.alpha} " + to_text(f.sub)
    raise TypeError(f"not a formula: {f!r}")
