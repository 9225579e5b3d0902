"""Recursive-descent parser for the expression grammar.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' ['-'] INT)?
    atom   := NUMBER | 'x' INT | 't' | FUNC '(' expr ')' | '(' expr ')'

Decimal literals are exact (``0.5`` is 1/2).
"""

from __future__ import annotations

import re
from fractions import Fraction

from . import nodes as N

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.message = message
        self.text = text
        self.pos = pos


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", text, start)
        start = m.start(m.lastgroup)
        out.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok[2])

    def expect(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            self.error(f"expected {op!r}", tok)

    def parse(self) -> N.Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = N.add(e, rhs) if op == "+" else N.add(e, N.neg(rhs))
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op_tok = self.take()
            rhs = self.unary()
            if op_tok[1] == "*":
                e = N.mul(e, rhs)
            else:
                try:
                    e = N.div(e, rhs)
                except ZeroDivisionError:
                    self.error("division by literal zero", op_tok)
        return e

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            inner = self.unary()
            return N.neg(inner) if tok[1] == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            caret = self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.take()
                sign = -1
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                self.error("exponent must be an integer literal", tok)
            try:
                return N.power(base, sign * int(tok[1]))
            except ZeroDivisionError:
                self.error("zero raised to a negative power", caret)
        return base

    def atom(self):
        tok = self.take()
        kind, val, pos = tok
        if kind == "num":
            return N.Const(Fraction(val))
        if kind == "name":
            if val == "t":
                return N.T
            m = re.fullmatch(r"x([1-9]\d*)", val)
            if m:
                idx = int(m.group(1))
                if idx > self.n:
                    raise ParseError(
                        f"variable index out of range ({val} with n={self.n})", self.text, pos
                    )
                return N.Var(idx)
            if val in N.FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return N.func(val, arg)
            raise ParseError(f"unknown identifier {val!r}", self.text, pos)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            self.error("unexpected end of input", tok)
        self.error(f"unexpected {val!r}", tok)


def parse(text: str, n: int) -> N.Expr:
    """Parse ``text`` into an expression over x1..xn and t."""
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    return _Parser(text, n).parse()
