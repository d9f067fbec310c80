"""A small arithmetic expression language for drift, volatility and model
functions in config files.

Grammar (Python syntax, restricted): numeric literals, ``+ - * / **``,
unary minus, parentheses, the variables ``t``, ``x``, ``theta`` and ``n``,
component access ``x[k]`` / ``theta[k]``, the constant ``pi`` and the
functions ``sin cos exp log sqrt abs pow``. A bare ``x`` or ``theta`` means
component 0.

>>> f = Expression("1 + sin(5 * x)")
>>> float(f(x=[[0.0]])[0])
1.0
"""
from __future__ import annotations

import ast
import math
import operator

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "pow": np.power,
}
CONSTANTS = {"pi": math.pi}
VARIABLES = ("t", "x", "theta", "n")
_BINARY = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class ExpressionError(ValueError):
    pass


def _compile(node, source):
    if isinstance(node, ast.Expression):
        return _compile(node.body, source)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        value = float(node.value)
        return lambda env: value
    if isinstance(node, ast.Name):
        name = node.id
        if name in CONSTANTS:
            value = CONSTANTS[name]
            return lambda env: value
        if name in ("x", "theta"):
            return lambda env: _component(env, name, 0)
        if name in VARIABLES:
            return lambda env: _lookup(env, name)
        raise ExpressionError(f"unknown name {name!r} in {source!r}")
    if isinstance(node, ast.Subscript):
        if not (isinstance(node.value, ast.Name) and node.value.id in ("x", "theta")):
            raise ExpressionError(f"only x[k] and theta[k] may be indexed in {source!r}")
        index = node.slice
        if not (isinstance(index, ast.Constant) and isinstance(index.value, int) and index.value >= 0):
            raise ExpressionError(f"index must be a non-negative integer in {source!r}")
        name, k = node.value.id, index.value
        return lambda env: _component(env, name, k)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
        op = _BINARY[type(node.op)]
        left, right = _compile(node.left, source), _compile(node.right, source)
        return lambda env: op(left(env), right(env))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op = _UNARY[type(node.op)]
        inner = _compile(node.operand, source)
        return lambda env: op(inner(env))
    if isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS) or node.keywords:
            raise ExpressionError(f"unsupported call in {source!r}")
        fn = FUNCTIONS[node.func.id]
        args = [_compile(a, source) for a in node.args]
        arity = 2 if node.func.id == "pow" else 1
        if len(args) != arity:
            raise ExpressionError(f"{node.func.id} takes {arity} argument(s) in {source!r}")
        return lambda env: fn(*(a(env) for a in args))
    raise ExpressionError(f"unsupported syntax {type(node).__name__} in {source!r}")


def _lookup(env, name):
    try:
        return env[name]
    except KeyError:
        raise ExpressionError(f"variable {name!r} is not available here") from None


def _component(env, name, k):
    v = _lookup(env, name)
    if np.ndim(v) == 0:
        if k:
            raise ExpressionError(f"{name} is scalar, {name}[{k}] does not exist")
        return v
    try:
        return v[k]
    except IndexError:
        raise ExpressionError(f"{name}[{k}] is out of range") from None


class Expression:
    """Compiled expression; call with keyword variables."""

    def __init__(self, source: str):
        self.source = str(source)
        try:
            tree = ast.parse(self.source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.source!r}: {exc.msg}") from None
        self._fn = _compile(tree, self.source)

    def __call__(self, **env):
        with np.errstate(all="ignore"):
            return self._fn(env)

    def __reduce__(self):
        return (type(self), (self.source,))

    def __repr__(self):
        return f"{type(self).__name__}({self.source!r})"


class SdeHandle(Expression):
    """``(t, x) -> array`` handle for :class:`~smgof.model.SdeSpec`."""

    def __call__(self, t, x):
        v = super().__call__(t=t, x=x)
        return np.asarray(v, dtype=float)


class ModelHandle(Expression):
    """``(theta, t, x) -> array`` handle for parametric volatility models."""

    def __call__(self, theta, t, x):
        v = np.asarray(super().__call__(theta=theta, t=t, x=x), dtype=float)
        shape = np.broadcast_shapes(np.shape(t), np.shape(x[0]))
        return np.broadcast_to(v, shape) if v.shape != shape else v


class BasisHandle:
    """Design-matrix handle built from one expression per parameter."""

    def __init__(self, sources):
        self.columns = [Expression(s) for s in sources]

    def __call__(self, t, x):
        shape = np.broadcast_shapes(np.shape(t), np.shape(x[0]))
        cols = [np.broadcast_to(np.asarray(c(t=t, x=x), dtype=float), shape) for c in self.columns]
        return np.stack(cols, axis=-1)

    def __reduce__(self):
        return (type(self), ([c.source for c in self.columns],))


class SequenceHandle(Expression):
    """``n -> value`` handle, e.g. a truncation sequence ``log(n)**2``."""

    def __call__(self, n):
        return float(super().__call__(n=float(n)))
