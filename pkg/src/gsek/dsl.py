"""Parser for the potential mini-language.

    P := zero | const:<a> | ball:<r>,<amp>[,<c1>,...,<cd>] | cyl3:<n>
       | dilate:<s>(P) | trunc:<r>(P) | scale:<c>(P) | neg(P) | sum(P;P;...)

Whitespace is ignored.  Errors carry the 0-based character position.
"""

from __future__ import annotations

import re

from .errors import DomainError, ParseError, UsageError
from .potentials import (
    BallIndicator, Constant, Cylinder3, Dilate, Negate, Potential, Scale, Sum, Truncate, Zero,
)

_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_WORD = re.compile(r"[a-z0-9]+")
_KEYWORDS = ("zero", "const", "ball", "cyl3", "dilate", "trunc", "scale", "neg", "sum")


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.pos = 0

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            got = self.peek() or "end of input"
            raise ParseError(f"unexpected {got!r}", self.pos, repr(ch))
        self.pos += 1

    def number(self, what="number"):
        self.skip()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            raise ParseError("malformed number", self.pos, what)
        self.pos = m.end()
        return float(m.group())

    def potential(self) -> Potential:
        self.skip()
        start = self.pos
        m = _WORD.match(self.text, self.pos)
        if not m or m.group() not in _KEYWORDS:
            raise ParseError("unknown potential", start, " | ".join(_KEYWORDS))
        word = m.group()
        self.pos = m.end()
        try:
            return self._node(word, start)
        except (DomainError, UsageError) as exc:
            raise ParseError(str(exc), start) from exc

    def _node(self, word, start):
        d = self.dim
        if word == "zero":
            return Zero(d)
        if word == "neg":
            return Negate(self._wrapped())
        if word == "sum":
            self.expect("(")
            terms = [self.potential()]
            while self.peek() == ";":
                self.pos += 1
                terms.append(self.potential())
            self.expect(")")
            return Sum(terms)
        self.expect(":")
        if word == "const":
            return Constant(self.number("real"), d)
        if word == "ball":
            nums = [self.number("radius")]
            while self.peek() == ",":
                self.pos += 1
                nums.append(self.number("real"))
            if len(nums) < 2:
                raise ParseError("ball needs radius and amplitude", self.pos, "','")
            center = nums[2:] or [0.0] * d
            if len(center) != d:
                raise ParseError(f"ball center has {len(center)} coordinates, dimension is {d}", start)
            return BallIndicator(center, nums[0], nums[1], d)
        if word == "cyl3":
            n = self.number("positive integer")
            if n != int(n):
                raise ParseError("cylinder index must be an integer", start, "positive integer")
            return Cylinder3(int(n), d)
        param = self.number("real")
        inner = self._wrapped()
        if word == "dilate":
            return Dilate(param, inner)
        if word == "trunc":
            return Truncate(param, inner)
        return Scale(param, inner)

    def _wrapped(self):
        self.expect("(")
        inner = self.potential()
        self.expect(")")
        return inner


def parse_potential(text: str, dim: int) -> Potential:
    """Parse ``text`` into a potential on R^dim."""
    parser = _Parser(text, dim)
    pot = parser.potential()
    parser.skip()
    if parser.pos != len(text):
        raise ParseError(f"trailing input {text[parser.pos:]!r}", parser.pos, "end of input")
    return pot
