"""Small arithmetic expression language for load and ambient fields.

Expressions are Python-syntax arithmetic over the coordinates ``x, y, z``
and, on boundaries, the outward normal ``nx, ny, nz``. Allowed functions:
sin, cos, tan, exp, log, sqrt, abs, tanh, sinh, cosh, atan, atan2, min, max.
Only a whitelisted subset of the Python grammar is accepted and evaluation
is vectorised with numpy.
"""

from __future__ import annotations

import ast
import operator

import numpy as np

from .exceptions import ValidationError

__all__ = ["Expression", "VectorExpression", "as_field_function"]

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "atan": np.arctan,
    "atan2": np.arctan2,
    "min": np.minimum,
    "max": np.maximum,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_VARS = ("x", "y", "z", "nx", "ny", "nz")
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


class Expression:
    """Compiled scalar expression; call with points ``(..., d)`` and optional normals."""

    def __init__(self, source):
        if isinstance(source, (int, float)) and not isinstance(source, bool):
            source = repr(float(source))
        if not isinstance(source, str):
            raise ValidationError(f"expression must be a string or number, got {type(source).__name__}")
        self.source = source
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ValidationError(f"cannot parse expression {source!r}: {exc.msg} (column {exc.offset})") from None
        self._check(tree.body)
        self._tree = tree.body
        self.uses_normal = any(isinstance(n, ast.Name) and n.id in ("nx", "ny", "nz") for n in ast.walk(tree))

    def __repr__(self):
        return f"Expression({self.source!r})"

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ValidationError(f"only numeric constants allowed in {self.source!r}")
        elif isinstance(node, ast.Name):
            if node.id not in _VARS and node.id not in _CONSTS:
                raise ValidationError(f"unknown name {node.id!r} in expression {self.source!r}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ValidationError(f"operator {type(node.op).__name__} not allowed in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise ValidationError(f"operator {type(node.op).__name__} not allowed in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords:
                raise ValidationError(f"unknown function call in expression {self.source!r}")
            for arg in node.args:
                self._check(arg)
        else:
            raise ValidationError(f"unsupported syntax {type(node).__name__} in expression {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            if node.id not in env:
                raise ValidationError(f"variable {node.id!r} unavailable here (expression {self.source!r})")
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        return _FUNCS[node.func.id](*(self._eval(a, env) for a in node.args))

    def __call__(self, points, normals=None):
        points = np.asarray(points, dtype=float)
        env = {name: points[..., i] for i, name in enumerate(("x", "y", "z")[: points.shape[-1]])}
        if normals is not None:
            normals = np.asarray(normals, dtype=float)
            env.update({name: normals[..., i] for i, name in enumerate(("nx", "ny", "nz")[: normals.shape[-1]])})
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, env)
        out = np.broadcast_to(np.asarray(out, dtype=float), points.shape[:-1]).copy()
        if not np.all(np.isfinite(out)):
            raise ValidationError(f"expression {self.source!r} is not finite at every evaluation point")
        return out


class VectorExpression:
    """Component-wise vector expression (one :class:`Expression` per coordinate)."""

    def __init__(self, sources):
        if isinstance(sources, (str, int, float)):
            raise ValidationError("vector expression needs a list of component expressions")
        self.components = [Expression(s) for s in sources]
        self.uses_normal = any(c.uses_normal for c in self.components)

    def __repr__(self):
        return f"VectorExpression({[c.source for c in self.components]!r})"

    def __call__(self, points, normals=None):
        points = np.asarray(points, dtype=float)
        d = points.shape[-1]
        if len(self.components) != d:
            raise ValidationError(f"vector expression has {len(self.components)} components, mesh dimension is {d}")
        return np.stack([c(points, normals) for c in self.components], axis=-1)


def as_field_function(source, vector: bool = False):
    """Normalise a constant, expression string, list of strings or callable into a callable.

    Callables receive ``(points, normals)``; normals are ``None`` inside the domain.
    """
    if callable(source) and not isinstance(source, (Expression, VectorExpression)):
        return source
    if isinstance(source, (Expression, VectorExpression)):
        return source
    if vector:
        return VectorExpression(source)
    return Expression(source)
