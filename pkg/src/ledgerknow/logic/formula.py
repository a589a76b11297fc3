"""Formula AST for the epistemic-temporal ledger language.

Nodes are immutable and compare structurally; hashes are cached so deep
formulas (the bounded-iteration oracle builds hundreds of levels) stay cheap
as memo keys.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from fractions import Fraction


class Formula:
    __slots__ = ()

    def _key(self):
        return (type(self),) + tuple(getattr(self, f.name) for f in fields(self))

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(self._key())
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __rshift__(self, other):
        return Implies(self, other)

    def __str__(self):
        from .parser import to_text

        return to_text(self)

    def children(self) -> tuple["Formula", ...]:
        return tuple(getattr(self, f.name) for f in fields(self) if isinstance(getattr(self, f.name), Formula))


def _node(cls):
    return dataclass(frozen=True, eq=False, repr=True)(cls)


@_node
class Top(Formula):
    pass


@_node
class Bottom(Formula):
    pass


@_node
class Honest(Formula):
    """``i in H``."""

    agent: str


@_node
class TPrefix(Formula):
    """``X`` is a T-prefix of agent ``agent``'s ledger."""

    X: tuple[str, ...]
    agent: str


@_node
class HonestSelf(Formula):
    """``I in H``: the perspective agent is honest."""


@_node
class TPrefixSelf(Formula):
    """``X`` is a T-prefix of the perspective agent's ledger."""

    X: tuple[str, ...]


@_node
class Acc(Formula):
    pass


@_node
class Prop(Formula):
    name: str


@_node
class Not(Formula):
    sub: Formula


@_node
class And(Formula):
    left: Formula
    right: Formula


@_node
class Or(Formula):
    left: Formula
    right: Formula


@_node
class Implies(Formula):
    left: Formula
    right: Formula


@_node
class Box(Formula):
    sub: Formula


@_node
class Next(Formula):
    steps: int
    sub: Formula

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("Next needs steps >= 0")


@_node
class K(Formula):
    agent: str
    sub: Formula


@_node
class B(Formula):
    """``K_i(i in S [and acc] -> sub)``."""

    agent: str
    sub: Formula
    set_name: str = "H"
    acc: bool = False


@_node
class E(Formula):
    """Everyone in ``S`` believes ``sub`` (via ``B``)."""

    sub: Formula
    set_name: str = "H"
    acc: bool = False


@dataclass(frozen=True)
class YOp:
    """A simple operator prefix: nothing, ``X^k`` or ``X^k G``."""

    steps: int | None = None
    box: bool = False

    def __post_init__(self):
        if self.steps is None and self.box:
            raise ValueError("G without X^k is not a supported Y")
        if self.steps is not None and self.steps < 0:
            raise ValueError("Y needs steps >= 0")

    def wrap(self, f: Formula) -> Formula:
        if self.steps is None:
            return f
        return Next(self.steps, Box(f) if self.box else f)

    def __str__(self):
        if self.steps is None:
            return "none"
        return f"X^{self.steps}" + (" G" if self.box else "")


Y_NONE = YOp()


@_node
class C(Formula):
    """Common knowledge ``C^Y_S``: the infinite conjunction of ``(Y E_S)^n``."""

    sub: Formula
    set_name: str = "H"
    y: YOp = Y_NONE
    acc: bool = False


@_node
class InitGeq(Formula):
    """Prior probability (in the run's cell) that ``G sub`` holds from time 0."""

    alpha: Fraction
    sub: Formula

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")


def needs_perspective(f: Formula) -> bool:
    """True when the truth value can depend on who "I" is."""
    if isinstance(f, (HonestSelf, TPrefixSelf)):
        return True
    if isinstance(f, (K, B, E, C)):
        return False
    return any(needs_perspective(c) for c in f.children())


def uses_acc(f: Formula) -> bool:
    if isinstance(f, Acc):
        return True
    if isinstance(f, (B, E, C)) and f.acc:
        return True
    return any(uses_acc(c) for c in f.children())
