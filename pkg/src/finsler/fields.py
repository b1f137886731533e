"""Coefficient fields: matrix, covector and scalar functions on a chart.

Three representations cover every model file: constant values, closed-form
expressions in the chart coordinates (a small grammar: polynomials, trig,
exp, sqrt), and tabulated grids with multilinear interpolation.  Constant
and expression fields carry exact spatial derivatives; grid fields fall
back to central differences of the interpolant.
"""

from __future__ import annotations

import numpy as np
import sympy as sp
from scipy.interpolate import RegularGridInterpolator

from .errors import InvalidCoefficients, SchemaError

_ALLOWED_FUNCS = {
    "sin": sp.sin, "cos": sp.cos, "tan": sp.tan, "exp": sp.exp,
    "sqrt": sp.sqrt, "log": sp.log, "sinh": sp.sinh, "cosh": sp.cosh,
    "tanh": sp.tanh, "abs": sp.Abs, "pi": sp.pi,
}


def coordinate_symbols(dim: int):
    return sp.symbols(f"x0:{dim}")


class ConstantField:
    """A coefficient that does not depend on position."""

    def __init__(self, value):
        self.value = np.asarray(value, dtype=float)
        self.shape = self.value.shape

    def __call__(self, points):
        p = np.asarray(points, dtype=float)
        return np.broadcast_to(self.value, p.shape[:-1] + self.shape).copy()

    def jacobian(self, points):
        p = np.asarray(points, dtype=float)
        n = p.shape[-1]
        return np.zeros(p.shape[:-1] + self.shape + (n,))

    def to_json(self):
        return {"type": "constant", "value": self.value.tolist()}


class ExpressionField:
    """Entries given as closed-form expressions in coordinates x0..x{n-1}."""

    def __init__(self, entries, dim: int):
        self.dim = int(dim)
        arr = np.asarray(entries, dtype=object)
        self.entries = arr
        self.shape = arr.shape
        syms = coordinate_symbols(self.dim)
        local = dict(_ALLOWED_FUNCS)
        local.update({str(s): s for s in syms})
        flat_exprs = []
        for text in arr.ravel():
            try:
                expr = sp.sympify(text, locals=local)
            except (sp.SympifyError, SyntaxError, TypeError) as exc:
                raise SchemaError("/params", f"bad expression {text!r}: {exc}") from exc
            bad = expr.free_symbols - set(syms)
            if bad:
                raise SchemaError("/params", f"unknown symbols {bad} in {text!r}")
            flat_exprs.append(expr)
        self._value_fn = sp.lambdify(syms, flat_exprs, modules="numpy")
        self._jac_fn = sp.lambdify(
            syms, [[sp.diff(e, s) for s in syms] for e in flat_exprs], modules="numpy")

    def _split(self, points):
        p = np.asarray(points, dtype=float)
        return [p[..., k] for k in range(self.dim)], p.shape[:-1]

    def __call__(self, points):
        coords, base = self._split(points)
        vals = self._value_fn(*coords)
        out = np.empty(base + (len(self.entries.ravel()),))
        for i, v in enumerate(vals):
            out[..., i] = v
        return out.reshape(base + self.shape)

    def jacobian(self, points):
        coords, base = self._split(points)
        rows = self._jac_fn(*coords)
        flat = np.empty(base + (len(self.entries.ravel()), self.dim))
        for i, row in enumerate(rows):
            for k, v in enumerate(row):
                flat[..., i, k] = v
        return flat.reshape(base + self.shape + (self.dim,))

    def to_json(self):
        def tolist(a):
            return [tolist(x) for x in a] if isinstance(a, np.ndarray) else str(a)
        return {"type": "expr", "entries": tolist(self.entries)}


class GridField:
    """Tabulated coefficient on a rectangular point grid, multilinear interp.

    axes: list of strictly increasing 1-d coordinate arrays.
    values: array of shape grid_shape + component_shape.
    Queries outside the table are clamped to the boundary values.
    """

    def __init__(self, axes, values):
        self.axes = [np.asarray(a, dtype=float) for a in axes]
        values = np.asarray(values, dtype=float)
        grid_shape = tuple(len(a) for a in self.axes)
        if values.shape[:len(grid_shape)] != grid_shape:
            raise InvalidCoefficients(
                f"table shape {values.shape} does not start with grid {grid_shape}")
        self.values = values
        self.shape = values.shape[len(grid_shape):]
        ncomp = int(np.prod(self.shape)) if self.shape else 1
        flat = values.reshape(grid_shape + (ncomp,))
        self._interp = RegularGridInterpolator(
            self.axes, flat, method="linear", bounds_error=False, fill_value=None)
        self._lo = np.array([a[0] for a in self.axes])
        self._hi = np.array([a[-1] for a in self.axes])

    def __call__(self, points):
        p = np.asarray(points, dtype=float)
        base = p.shape[:-1]
        q = np.clip(p.reshape(-1, p.shape[-1]), self._lo, self._hi)
        out = self._interp(q)
        return out.reshape(base + self.shape) if self.shape else out.reshape(base)

    def jacobian(self, points, step=None):
        p = np.asarray(points, dtype=float)
        n = p.shape[-1]
        if step is None:
            step = 0.5 * np.array([a[1] - a[0] for a in self.axes])
        cols = []
        for k in range(n):
            dp = np.zeros(n)
            dp[k] = step[k]
            cols.append((self(p + dp) - self(p - dp)) / (2 * step[k]))
        return np.stack(cols, axis=-1)

    def to_json(self):
        return {"type": "grid",
                "axes": [a.tolist() for a in self.axes],
                "values": self.values.tolist()}


def as_field(spec, dim: int, expected_shape=None, pointer: str = "/params"):
    """Build a field from JSON (or pass through an existing field object)."""
    if callable(spec) and hasattr(spec, "shape") and not isinstance(spec, np.ndarray):
        fld = spec
    elif isinstance(spec, dict):
        kind = spec.get("type")
        if kind == "constant":
            if "value" not in spec:
                raise SchemaError(f"{pointer}/value", "missing")
            fld = ConstantField(spec["value"])
        elif kind == "expr":
            if "entries" not in spec:
                raise SchemaError(f"{pointer}/entries", "missing")
            fld = ExpressionField(spec["entries"], dim)
        elif kind == "grid":
            for key in ("axes", "values"):
                if key not in spec:
                    raise SchemaError(f"{pointer}/{key}", "missing")
            fld = GridField(spec["axes"], spec["values"])
        else:
            raise SchemaError(f"{pointer}/type", f"unknown field type {kind!r}")
    elif isinstance(spec, (list, tuple, np.ndarray, float, int)):
        fld = ConstantField(spec)
    else:
        raise SchemaError(pointer, f"cannot interpret {type(spec).__name__} as a field")
    if expected_shape is not None and tuple(fld.shape) != tuple(expected_shape):
        raise SchemaError(pointer,
                          f"expected component shape {tuple(expected_shape)}, got {tuple(fld.shape)}")
    return fld


def symmetrize_check(mat, pointer="/params", tol=1e-9):
    """Require matrix-valued samples to be symmetric to working precision."""
    m = np.asarray(mat)
    asym = np.max(np.abs(m - np.swapaxes(m, -1, -2)))
    scale = max(np.max(np.abs(m)), 1.0)
    if asym > tol * scale:
        raise InvalidCoefficients(f"{pointer}: matrix not symmetric (deviation {asym:.3g})")
