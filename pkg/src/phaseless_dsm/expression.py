"""Arithmetic expressions over x, y, k for source profiles.

Grammar: real literals, the variables x, y, k, binary ``+ - * /``, ``^`` with an
integer exponent, unary minus and parentheses.  Parsing goes through Python's
``ast`` with a node whitelist; evaluation is vectorised over numpy arrays.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field

import numpy as np


class ExpressionError(ValueError):
    pass


_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
VARIABLES = frozenset({"x", "y", "k"})


def _int_exponent(node: ast.AST) -> int:
    sign = 1
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        sign = -1 if isinstance(node.op, ast.USub) else 1
        node = node.operand
    if isinstance(node, ast.Constant) and type(node.value) is int:
        return sign * node.value
    if isinstance(node, ast.Constant) and isinstance(node.value, float) and node.value.is_integer():
        return sign * int(node.value)
    raise ExpressionError("exponent must be an integer literal")


def _validate(node: ast.AST, names: set) -> None:
    if isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _validate(node.left, names)
        if isinstance(node.op, ast.Pow):
            _int_exponent(node.right)
        else:
            _validate(node.right, names)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError("only unary minus/plus allowed")
        _validate(node.operand, names)
    elif isinstance(node, ast.Constant):
        if type(node.value) not in (int, float):
            raise ExpressionError(f"literal {node.value!r} not allowed")
    elif isinstance(node, ast.Name):
        if node.id not in VARIABLES:
            raise ExpressionError(f"unknown variable {node.id!r}")
        names.add(node.id)
    else:
        raise ExpressionError(f"syntax element {type(node).__name__} not allowed")


def _eval(node: ast.AST, env: dict):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    left = _eval(node.left, env)
    op = node.op
    if isinstance(op, ast.Pow):
        n = _int_exponent(node.right)
        if n < 0:
            if np.any(np.asarray(left) == 0):
                raise ExpressionError("division by zero (negative power of zero)")
            return 1.0 / left ** (-n)
        return left ** n
    right = _eval(node.right, env)
    if isinstance(op, ast.Add):
        return left + right
    if isinstance(op, ast.Sub):
        return left - right
    if isinstance(op, ast.Mult):
        return left * right
    if np.any(np.asarray(right) == 0):
        raise ExpressionError("division by zero")
    return left / right


@dataclass(frozen=True)
class Expression:
    """A parsed profile expression.

    ``shift`` and ``scale`` support translated and phase-rotated copies:
    the value at (x, y, k) is ``scale * e(x - sx, y - sy, k)``.
    """

    text: str
    shift: tuple[float, float] = (0.0, 0.0)
    scale: complex = 1.0
    _tree: ast.AST = field(init=False, repr=False, compare=False)
    variables: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        text = self.text.strip()
        object.__setattr__(self, "text", text)
        if not text:
            raise ExpressionError("empty expression")
        try:
            tree = ast.parse(text.replace("^", "**"), mode="eval").body
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
        names: set = set()
        _validate(tree, names)
        object.__setattr__(self, "_tree", tree)
        object.__setattr__(self, "variables", frozenset(names))

    def __call__(self, x=0.0, y=0.0, k=0.0):
        env = {
            "x": np.asarray(x, float) - self.shift[0],
            "y": np.asarray(y, float) - self.shift[1],
            "k": np.asarray(k, float),
        }
        val = _eval(self._tree, env)
        if self.scale != 1.0:
            val = self.scale * val
        return val

    def shifted(self, hx: float, hy: float) -> "Expression":
        return Expression(self.text, (self.shift[0] + hx, self.shift[1] + hy), self.scale)

    def scaled(self, factor: complex) -> "Expression":
        return Expression(self.text, self.shift, self.scale * factor)

    @property
    def is_zero(self) -> bool:
        return self.scale == 0 or (isinstance(self._tree, ast.Constant) and self._tree.value == 0)
