"""Model files, field CSV round trips, and deterministic serialization.

Model files are JSON documents

    {"family": ..., "dimension": n, "chart": {"box": ...},
     "derivatives": "exact"|"fd", "params": {...}}

with coefficient fields given as constants, expressions in x0..x{n-1}, or
tabulated grids (inline or as sidecar CSV).  Loading validates the schema
(errors carry a JSON-pointer location) and then asserts the family
invariants eagerly on a sample set, so a bad file fails at load time, not
mid-computation.

All numeric output is printed with 17 significant digits, which round-trips
IEEE doubles losslessly and keeps reports byte-identical across runs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .chart import Chart, GridSpec
from .distance import DistanceField
from .errors import InvariantViolation, SchemaError
from .metrics import (
    BogoslovskyMetric,
    FermatMetric,
    KosteleckyMetric,
    MatsumotoMetric,
    MetricModel,
    RandersMetric,
    RiemannianMetric,
    TabulatedMetric,
    ZermeloMetric,
)
from .stationary import StationaryModel

FAMILIES = ("riemannian", "randers", "zermelo", "matsumoto", "fermat",
            "bogoslovsky", "kostelecky", "tabulated", "stationary")

_TOP_KEYS = {"family", "dimension", "chart", "derivatives", "params"}

_PARAM_KEYS = {
    "riemannian": {"h"},
    "randers": {"h", "beta"},
    "zermelo": {"g", "W"},
    "matsumoto": {"h", "beta"},
    "fermat": {"g0", "omega", "orientation"},
    "bogoslovsky": {"g0", "omega", "exponent"},
    "kostelecky": {"a", "b", "mass", "branch"},
    "tabulated": {"axes", "values", "csv"},
    "stationary": {"g0", "omega"},
}


def fmt(x: float) -> str:
    """17 significant digits: lossless and deterministic."""
    return f"{float(x):.17g}"


def dumps_canonical(obj) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    def render(o):
        if isinstance(o, dict):
            items = sorted(o.items())
            return "{" + ", ".join(f"{json.dumps(str(k))}: {render(v)}" for k, v in items) + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ", ".join(render(v) for v in o) + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            v = float(o)
            if np.isnan(v):
                return '"nan"'
            if np.isinf(v):
                return '"inf"' if v > 0 else '"-inf"'
            return fmt(v)
        if isinstance(o, np.ndarray):
            return render(o.tolist())
        return json.dumps(str(o))
    return render(obj) + "\n"


def _resolve_grid_param(spec, base_dir: Path, pointer: str):
    """Inline a sidecar-CSV table reference into an explicit grid field."""
    if isinstance(spec, dict) and spec.get("type") == "grid" and "csv" in spec:
        axes, values = read_table_csv(base_dir / spec["csv"])
        return {"type": "grid", "axes": [a.tolist() for a in axes],
                "values": values.tolist()}
    return spec


def load_model(path):
    """Load and validate a metric or stationary model from a JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"not valid JSON: {exc}") from exc
    return model_from_json(data, base_dir=path.parent)


def model_from_json(data: dict, base_dir: Path = Path(".")):
    if not isinstance(data, dict):
        raise SchemaError("/", "model document must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise SchemaError(f"/{sorted(unknown)[0]}", "unknown key")
    for key in ("family", "dimension", "chart", "params"):
        if key not in data:
            raise SchemaError(f"/{key}", "missing")
    family = data["family"]
    if family not in FAMILIES:
        raise SchemaError("/family", f"unknown family {family!r}; expected one of {FAMILIES}")
    n = data["dimension"]
    if not isinstance(n, int) or n < 2:
        raise SchemaError("/dimension", "must be an integer >= 2")
    chart = Chart.from_json(data["chart"])
    if chart.dim != n:
        raise SchemaError("/chart/box", f"chart has {chart.dim} axes, dimension says {n}")
    mode = data.get("derivatives", "exact")
    if mode not in ("exact", "fd"):
        raise SchemaError("/derivatives", "must be 'exact' or 'fd'")
    params = data["params"]
    if not isinstance(params, dict):
        raise SchemaError("/params", "must be an object")
    unknown = set(params) - _PARAM_KEYS[family]
    if unknown:
        raise SchemaError(f"/params/{sorted(unknown)[0]}", "unknown key")

    def need(key):
        if key not in params:
            raise SchemaError(f"/params/{key}", "missing")
        return _resolve_grid_param(params[key], base_dir, f"/params/{key}")

    if family == "riemannian":
        model = RiemannianMetric(chart, need("h"), mode)
    elif family == "randers":
        model = RandersMetric(chart, need("h"), need("beta"), mode)
    elif family == "zermelo":
        model = ZermeloMetric(chart, need("g"), need("W"), mode)
    elif family == "matsumoto":
        model = MatsumotoMetric(chart, need("h"), need("beta"), mode)
    elif family == "fermat":
        model = FermatMetric(chart, need("g0"), need("omega"),
                             params.get("orientation", "forward"), mode)
    elif family == "bogoslovsky":
        model = BogoslovskyMetric(chart, need("g0"), need("omega"), need("exponent"), mode)
    elif family == "kostelecky":
        model = KosteleckyMetric(chart, np.asarray(need("a"), dtype=float),
                                 np.asarray(need("b"), dtype=float),
                                 params.get("mass", 1.0), params.get("branch", +1), mode)
    elif family == "tabulated":
        if "csv" in params:
            axes, values = read_table_csv(base_dir / params["csv"])
        else:
            axes, values = need("axes"), need("values")
        model = TabulatedMetric.from_direction_table(chart, axes, values)
    elif family == "stationary":
        return StationaryModel(chart, need("g0"), need("omega"), mode)
    validate_model(model)
    return model


def validate_model(model: MetricModel, per_axis: int = 4, n_dirs: int = 32, seed: int = 0):
    """Eagerly assert family invariants on a coarse sample set."""
    chart = model.chart
    axes = [np.linspace(chart.box[k, 0], chart.box[k, 1], per_axis)
            for k in range(chart.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.stack([mm.ravel() for mm in mesh], axis=-1)

    def assert_posdef(mat_field, name):
        mats = mat_field(P)
        asym = np.max(np.abs(mats - np.swapaxes(mats, -1, -2)))
        if asym > 1e-9 * max(np.max(np.abs(mats)), 1.0):
            raise InvariantViolation(f"{name} not symmetric (deviation {asym:.3g})")
        eigs = np.linalg.eigvalsh(mats)
        if np.any(eigs[..., 0] <= 0):
            bad = P[int(np.argmin(eigs[..., 0]))]
            raise InvariantViolation(f"{name} not positive definite", sample=bad)

    def assert_lorentz(mat_field, name):
        eigs = np.linalg.eigvalsh(mat_field(P))
        n_neg = np.sum(eigs < 0, axis=-1)
        if np.any(n_neg != 1):
            bad = P[int(np.argmax(n_neg != 1))]
            raise InvariantViolation(f"{name} not Lorentzian (one negative eigenvalue)",
                                     sample=bad)

    if isinstance(model, (RiemannianMetric, RandersMetric, MatsumotoMetric)):
        assert_posdef(model.h, "h")
    if isinstance(model, ZermeloMetric):
        assert_posdef(model.g, "g")
        G = model.g(P)
        Wv = model.W(P)
        gww = np.einsum("...ij,...i,...j->...", G, Wv, Wv)
        if np.any(gww >= 1.0):
            bad = P[int(np.argmax(gww))]
            raise InvariantViolation(
                f"wind too strong: g(W,W) = {np.max(gww):.6g} >= 1", sample=bad)
    if isinstance(model, FermatMetric):
        assert_posdef(model.g0, "g0")
    if isinstance(model, BogoslovskyMetric):
        assert_lorentz(model.g0, "g0")
    if isinstance(model, KosteleckyMetric):
        pass  # constant Minkowski background by construction

    # probe evaluation on random admissible directions
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_dirs, chart.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    F = model.F_values(P[: len(dirs)], dirs[: len(P)])
    if not np.any(np.isfinite(F)):
        raise InvariantViolation("no admissible direction found at sampled points")
    return model


# -- tables and fields as CSV --------------------------------------------------

def write_table_csv(path, axes, values):
    """Sidecar grid table: header with axis ranges, then row-major values."""
    axes = [np.asarray(a, dtype=float) for a in axes]
    values = np.asarray(values, dtype=float)
    header = {"axes": [[fmt(a[0]), fmt(a[-1]), len(a)] for a in axes],
              "shape": list(values.shape)}
    lines = ["# " + json.dumps(header, sort_keys=True)]
    flat = values.reshape(-1, values.shape[-1]) if values.ndim > 1 else values[None, :]
    for row in flat:
        lines.append(",".join(fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_table_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SchemaError("/csv", f"{path}: missing header row")
    header = json.loads(lines[0][1:].strip())
    axes = [np.linspace(float(lo), float(hi), int(count))
            for lo, hi, count in header["axes"]]
    values = np.array([[float(x) for x in line.split(",")]
                       for line in lines[1:] if line.strip()])
    return axes, values.reshape(header["shape"])


def save_field_csv(field: DistanceField, path):
    """Distance field as CSV: grid-spec header, then row-major values."""
    meta = {"grid": field.grid.to_json(), "direction": field.direction,
            "k": field.stencil_order,
            "stencil_gap_deg": fmt(field.stencil_gap_deg),
            "source": field.source_spec}
    lines = ["# " + json.dumps(meta, sort_keys=True)]
    flat = field.values.reshape(-1, field.grid.shape[-1])
    for row in flat:
        lines.append(",".join(fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_field_csv(path) -> DistanceField:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SchemaError("/csv", f"{path}: missing header row")
    meta = json.loads(lines[0][1:].strip())
    grid = GridSpec.from_json(meta["grid"])
    values = np.array([[float(x) for x in line.split(",")]
                       for line in lines[1:] if line.strip()])
    values = values.reshape(grid.shape)
    return DistanceField(grid=grid, direction=meta["direction"], values=values,
                         stencil_order=int(meta["k"]),
                         source_mask=np.zeros(grid.shape, dtype=bool),
                         source_spec=meta.get("source"),
                         stencil_gap_deg=float(meta.get("stencil_gap_deg", "nan")))


def save_mask_csv(mask: np.ndarray, grid: GridSpec, path):
    """Region as a 0/1 node mask with the grid spec in the header."""
    meta = {"grid": grid.to_json(), "kind": "mask"}
    lines = ["# " + json.dumps(meta, sort_keys=True)]
    flat = mask.astype(int).reshape(-1, grid.shape[-1])
    for row in flat:
        lines.append(",".join(str(int(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_mask_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SchemaError("/csv", f"{path}: missing header row")
    meta = json.loads(lines[0][1:].strip())
    grid = GridSpec.from_json(meta["grid"])
    values = np.array([[int(x) for x in line.split(",")]
                       for line in lines[1:] if line.strip()])
    return grid, values.reshape(grid.shape).astype(bool)


def load_region(path):
    """Region from a JSON predicate file or a 0/1 mask CSV."""
    from .chart import Region

    path = Path(path)
    if path.suffix.lower() == ".csv":
        grid, mask = load_mask_csv(path)

        def predicate(points):
            p = np.atleast_2d(np.asarray(points, dtype=float))
            rel = (p - grid.origin) / grid.spacing
            idx = np.rint(rel).astype(int)
            for axis in range(grid.dim):
                if grid.periodic[axis]:
                    idx[..., axis] %= grid.shape[axis]
                else:
                    idx[..., axis] = np.clip(idx[..., axis], 0, grid.shape[axis] - 1)
            out = mask[tuple(idx[..., a] for a in range(grid.dim))]
            return out.reshape(np.asarray(points).shape[:-1])

        return Region(predicate, {"type": "mask", "csv": str(path)})
    return Region.from_json(json.loads(path.read_text()))


def save_geodesic_csv(geo, path):
    n = geo.points.shape[1]
    header = {"columns": ["param"] + [f"x{i}" for i in range(n)]
              + [f"v{i}" for i in range(n)],
              "length": fmt(geo.length), "F0": fmt(geo.F0),
              "affine": geo.affine, "exited_chart": geo.exited_chart}
    lines = ["# " + json.dumps(header, sort_keys=True)]
    for k in range(len(geo.params)):
        row = [geo.params[k], *geo.points[k], *geo.velocities[k]]
        lines.append(",".join(fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")
