"""Tiny arithmetic expression language for initial data and sources.

Grammar: literals, + - * / ** and unary minus, parentheses, the names
x, y, t, pi, theta_c, and the functions cos, sin, exp, tanh, abs and
step (step(v) = 1 where v >= 0 else 0, for sharp interfaces).  Parsed
with the ast module and evaluated with numpy only; nothing else is
reachable, so untrusted config files stay harmless.
"""

from __future__ import annotations

import ast
import math

import numpy as np

from .errors import ValidationError

_FUNCTIONS = {
    "cos": np.cos,
    "sin": np.sin,
    "exp": np.exp,
    "tanh": np.tanh,
    "abs": np.abs,
    "step": lambda v: np.where(np.asarray(v, dtype=float) >= 0.0, 1.0, 0.0),
}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}

_ALLOWED_NAMES = ("x", "y", "t", "pi", "theta_c")


class Expression:
    """A validated expression, callable with keyword arrays/scalars."""

    def __init__(self, text: str):
        if not isinstance(text, str) or not text.strip():
            raise ValidationError("expression must be a non-empty string")
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise ValidationError(f"bad expression {text!r}: {exc.msg}") from None
        self.text = text
        self._tree = tree
        self._validate(tree.body)

    def _validate(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise ValidationError(f"non-numeric literal in {self.text!r}")
        elif isinstance(node, ast.Name):
            if node.id not in _ALLOWED_NAMES:
                raise ValidationError(
                    f"unknown name {node.id!r} in {self.text!r}; "
                    f"allowed: {', '.join(_ALLOWED_NAMES)}"
                )
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ValidationError(f"operator not allowed in {self.text!r}")
            self._validate(node.left)
            self._validate(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ValidationError(f"operator not allowed in {self.text!r}")
            self._validate(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ValidationError(
                    f"unknown function in {self.text!r}; "
                    f"allowed: {', '.join(sorted(_FUNCTIONS))}"
                )
            if node.keywords or len(node.args) != 1:
                raise ValidationError(
                    f"functions take exactly one positional argument "
                    f"({self.text!r})"
                )
            self._validate(node.args[0])
        else:
            raise ValidationError(
                f"unsupported syntax {type(node).__name__} in {self.text!r}"
            )

    def __call__(self, **names):
        env = {"pi": math.pi}
        env.update(names)

        def ev(node):
            if isinstance(node, ast.Constant):
                return float(node.value)
            if isinstance(node, ast.Name):
                if node.id not in env:
                    raise ValidationError(
                        f"{node.id!r} is not available in this context "
                        f"({self.text!r})"
                    )
                return env[node.id]
            if isinstance(node, ast.BinOp):
                return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
            if isinstance(node, ast.UnaryOp):
                v = ev(node.operand)
                return -v if isinstance(node.op, ast.USub) else +v
            if isinstance(node, ast.Call):
                return _FUNCTIONS[node.func.id](ev(node.args[0]))
            raise AssertionError("validated tree")

        return ev(self._tree.body)
