"""Grid distance fields, symmetrized distance, convexity and cut-locus probes.

Distance fields solve a single- or multi-source shortest-path problem on a
stencil graph: every node connects to its integer offsets of Chebyshev norm
at most k (primitive offsets only; repeated steps reproduce the rest by
homogeneity).  The edge from node x along offset e costs F_x(e) for forward
fields and F_x(-e) for reverse fields, so the reverse field from p is the
forward field of the reverse metric, node for node.  A label-setting sweep
(Dijkstra) computes the exact graph distance; it converges to the Finsler
distance as the spacing shrinks and the stencil order grows.  Conic metrics
simply drop inadmissible offsets; unreached nodes stay at +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .chart import GridSpec, Region
from .errors import Unreachable
from .metrics import MetricModel


def stencil_offsets(dim: int, k: int) -> np.ndarray:
    """Primitive integer offsets with max-norm <= k (no zero, no multiples)."""
    ranges = [range(-k, k + 1)] * dim
    offsets = []
    for combo in np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, dim):
        if not np.any(combo):
            continue
        if math.gcd(*[abs(int(c)) for c in combo]) != 1:
            continue
        offsets.append(combo)
    return np.asarray(offsets, dtype=int)


def stencil_gap_degrees(offsets: np.ndarray, samples: int = 720) -> float:
    """Worst angular gap of the stencil: how far a direction can sit from
    its nearest offset.  Exact for 2-d, sampled otherwise."""
    unit = offsets / np.linalg.norm(offsets, axis=1, keepdims=True)
    if offsets.shape[1] == 2:
        angles = np.sort(np.arctan2(unit[:, 1], unit[:, 0]))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
        return float(np.degrees(np.max(gaps)) / 2.0)
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(samples, offsets.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    cosines = np.clip(dirs @ unit.T, -1.0, 1.0)
    return float(np.degrees(np.max(np.arccos(np.max(cosines, axis=1)))))


@dataclass
class DistanceField:
    """Forward or reverse Finsler distance values on a rectangular grid."""

    grid: GridSpec
    direction: str
    values: np.ndarray
    stencil_order: int
    source_mask: np.ndarray
    source_spec: Optional[dict] = None
    predecessors: Optional[np.ndarray] = None
    stencil_gap_deg: float = np.nan
    node_mask: Optional[np.ndarray] = None

    def value_at(self, point) -> float:
        """Multilinear read of the field; falls back to the nearest node when
        a surrounding corner is unreached."""
        rel = (np.asarray(point, dtype=float) - self.grid.origin) / self.grid.spacing
        base = np.floor(rel).astype(int)
        frac = rel - base
        dim = self.grid.dim
        total = 0.0
        ok = True
        for corner in range(1 << dim):
            idx = []
            weight = 1.0
            for axis in range(dim):
                bit = (corner >> axis) & 1
                i = base[axis] + bit
                if self.grid.periodic[axis]:
                    i %= self.grid.shape[axis]
                else:
                    i = int(np.clip(i, 0, self.grid.shape[axis] - 1))
                idx.append(i)
                weight *= frac[axis] if bit else (1.0 - frac[axis])
            v = self.values[tuple(idx)]
            if not np.isfinite(v):
                ok = False
                break
            total += weight * v
        if ok:
            return float(total)
        return float(self.values[self.grid.nearest_node(point)])

    def ball_mask(self, radius: float, closed: bool = False) -> np.ndarray:
        return self.values <= radius if closed else self.values < radius


def _source_indices(grid: GridSpec, source, node_ok: np.ndarray):
    """Resolve a source specification to flat node indices."""
    points = None
    if isinstance(source, Region):
        mask = source(grid.points()).reshape(grid.shape)
        spec = {"region": source.spec}
        flat = np.flatnonzero(mask.ravel() & node_ok)
    elif isinstance(source, np.ndarray) and source.dtype == bool:
        spec = {"mask": "array"}
        flat = np.flatnonzero(source.ravel() & node_ok)
    else:
        points = np.atleast_2d(np.asarray(source, dtype=float))
        spec = {"points": points.tolist()}
        flat = np.unique([grid.ravel(grid.nearest_node(p)) for p in points])
        flat = flat[node_ok[flat]]
    if flat.size == 0:
        raise Unreachable("no admissible source node on the grid")
    return flat, spec


def _edge_arrays(model: MetricModel, grid: GridSpec, offsets, sign: float,
                 node_ok: np.ndarray):
    """Tails, heads and costs for every admissible stencil edge."""
    points = grid.points()
    flat_idx = np.arange(grid.size).reshape(grid.shape)
    tails, heads, costs = [], [], []
    for e in offsets:
        sl_tail = []
        sl_head = []
        valid = True
        for axis, step in enumerate(e):
            n_ax = grid.shape[axis]
            if grid.periodic[axis]:
                sl_tail.append(np.arange(n_ax))
                sl_head.append((np.arange(n_ax) + step) % n_ax)
            else:
                if step >= 0:
                    t = np.arange(0, n_ax - step)
                else:
                    t = np.arange(-step, n_ax)
                if t.size == 0:
                    valid = False
                    break
                sl_tail.append(t)
                sl_head.append(t + step)
        if not valid:
            continue
        tail_idx = flat_idx[np.ix_(*sl_tail)].ravel()
        head_idx = flat_idx[np.ix_(*sl_head)].ravel()
        keep = node_ok[tail_idx] & node_ok[head_idx]
        tail_idx = tail_idx[keep]
        head_idx = head_idx[keep]
        if tail_idx.size == 0:
            continue
        vec = sign * e * grid.spacing
        cost = model.cost_values(points[tail_idx], np.broadcast_to(vec, (tail_idx.size, grid.dim)))
        finite = np.isfinite(cost)
        tails.append(tail_idx[finite])
        heads.append(head_idx[finite])
        costs.append(cost[finite])
    if not tails:
        return (np.empty(0, int), np.empty(0, int), np.empty(0))
    return (np.concatenate(tails), np.concatenate(heads), np.concatenate(costs))


def distance_field(model: MetricModel, source, grid: GridSpec,
                   direction: str = "forward", k: int = 3,
                   region: Optional[Region] = None,
                   return_predecessors: bool = False) -> DistanceField:
    """Single/multi-source Finsler distance on a stencil graph.

    direction="forward" approximates d_F(source, y); "reverse" approximates
    d_F(y, source).  `region`, when given, restricts nodes to its closure
    (edges must stay inside).
    """
    if direction not in ("forward", "reverse"):
        raise ValueError("direction must be 'forward' or 'reverse'")
    points = grid.points()
    node_ok = model.chart.contains(points)
    if region is not None:
        node_ok = node_ok & region(points)
    node_ok = np.asarray(node_ok).ravel()

    offsets = stencil_offsets(grid.dim, k)
    sign = 1.0 if direction == "forward" else -1.0
    tails, heads, costs = _edge_arrays(model, grid, offsets, sign, node_ok)
    graph = csr_matrix((costs, (tails, heads)), shape=(grid.size, grid.size))

    src, spec = _source_indices(grid, source, node_ok)
    result = dijkstra(graph, directed=True, indices=src, min_only=True,
                      return_predecessors=return_predecessors)
    if return_predecessors:
        dist, predecessors, _ = result
    else:
        dist, predecessors = result, None
    dist = np.where(node_ok, dist, np.inf).reshape(grid.shape)

    source_mask = np.zeros(grid.size, dtype=bool)
    source_mask[src] = True
    return DistanceField(grid=grid, direction=direction, values=dist,
                         stencil_order=k, source_mask=source_mask.reshape(grid.shape),
                         source_spec=spec, predecessors=predecessors,
                         stencil_gap_deg=stencil_gap_degrees(offsets),
                         node_mask=node_ok.reshape(grid.shape))


def backtrack_path(field: DistanceField, target) -> np.ndarray:
    """Node polyline from a source to `target`, following predecessors."""
    if field.predecessors is None:
        raise ValueError("field was computed without predecessors")
    grid = field.grid
    idx = grid.ravel(grid.nearest_node(target)) if not isinstance(target, (int, np.integer)) \
        else int(target)
    if not np.isfinite(field.values.ravel()[idx]):
        raise Unreachable("target node was not reached")
    chain = [idx]
    seen = set()
    while True:
        prev = int(field.predecessors[chain[-1]])
        if prev < 0:
            break
        if prev in seen:
            raise RuntimeError("predecessor cycle (should not happen)")
        seen.add(prev)
        chain.append(prev)
    chain.reverse()
    return np.array([grid.node_point(grid.unravel(i)) for i in chain])


def symmetrized_distance(model: MetricModel, p, q, grid: GridSpec, k: int = 3) -> float:
    """(d_F(p,q) + d_F(q,p)) / 2 via one forward and one reverse field from p."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.allclose(p, q):
        return 0.0
    fwd = distance_field(model, p, grid, "forward", k)
    rev = distance_field(model, p, grid, "reverse", k)
    d_pq = fwd.value_at(q)
    d_qp = rev.value_at(q)
    if not (np.isfinite(d_pq) and np.isfinite(d_qp)):
        raise Unreachable(f"one-way distance infinite between {p} and {q}")
    return 0.5 * (d_pq + d_qp)


@dataclass
class PairVerdict:
    p: np.ndarray
    q: np.ndarray
    verdict: str  # "inside" | "exits" | "no-connection"
    witness: Optional[np.ndarray] = None
    length: float = np.nan


@dataclass
class ConvexityReport:
    """Geodesic convexity of a region: minimizers between interior points
    must stay interior.  Every "exits" verdict carries a witness point."""

    region_spec: Optional[dict]
    pairs: list
    convex: bool
    counterexamples: list = field(default_factory=list)


def convexity_check(model: MetricModel, D: Region, grid: GridSpec,
                    pair_budget: int = 30, k: int = 3,
                    rng: Optional[np.random.Generator] = None,
                    boundary_probe: float = 0.75,
                    pair_margin_cells: float = 3.0) -> ConvexityReport:
    """Sample point pairs in D, connect each by a shortest stencil path inside
    the closure of D, and test whether the path keeps clear of the boundary.

    A path node within `boundary_probe` half-spacings of the region boundary
    (probed by evaluating the predicate on a small cross around the node)
    counts as touching it, and becomes the witness of an "exits" verdict.
    Pairs are sampled `pair_margin_cells` inside D so that the one-cell
    zigzag of discrete minimizers cannot fake a boundary touch.
    """
    rng = rng or np.random.default_rng(0)

    def effective(pts):
        # the region to stay clear of includes holes carved by the chart
        return np.asarray(D(pts), dtype=bool) & model.chart.contains(pts)

    points = grid.points()
    inside = effective(points)
    candidates = points[inside.ravel()]
    probes = _cross_probes(grid, boundary_probe)
    clear = np.ones(len(candidates), dtype=bool)
    for dp in _cross_probes(grid, 2.0 * pair_margin_cells):
        clear &= effective(candidates + dp)
    interior_pts = candidates[clear]
    if len(interior_pts) < 2:
        return ConvexityReport(D.spec, [], convex=True)

    verdicts = []
    counterexamples = []
    for _ in range(pair_budget):
        i, j = rng.choice(len(interior_pts), size=2, replace=False)
        p, q = interior_pts[i], interior_pts[j]
        fld = distance_field(model, p, grid, "forward", k, region=D,
                             return_predecessors=True)
        try:
            path = backtrack_path(fld, q)
        except Unreachable:
            verdicts.append(PairVerdict(p, q, "no-connection"))
            continue
        witness = None
        for node in path:
            if not all(bool(effective(node + dp)) for dp in probes):
                witness = node
                break
        if witness is not None:
            verdicts.append(PairVerdict(p, q, "exits", witness=witness,
                                        length=fld.value_at(q)))
            counterexamples.append((p, q, witness))
        else:
            verdicts.append(PairVerdict(p, q, "inside", length=fld.value_at(q)))
    convex = not counterexamples and all(v.verdict != "no-connection" for v in verdicts)
    return ConvexityReport(D.spec, verdicts, convex, counterexamples)


def _cross_probes(grid: GridSpec, scale: float):
    probes = [np.zeros(grid.dim)]
    for axis in range(grid.dim):
        dp = np.zeros(grid.dim)
        dp[axis] = scale * 0.5 * grid.spacing[axis]
        probes.extend([dp.copy(), -dp])
    return probes


@dataclass
class CutLocusProbe:
    field: DistanceField
    flagged: np.ndarray  # boolean over grid nodes
    spread_deg: np.ndarray
    validated: Optional[list] = None


def cut_locus_probe(model: MetricModel, p, grid: GridSpec, k: int = 3,
                    spread_threshold_deg: float = 60.0, slack_rel: float = 0.05,
                    min_cells: float = 3.5, validate: int = 0,
                    rng: Optional[np.random.Generator] = None) -> CutLocusProbe:
    """Flag nodes whose field gradient is multivalued: several incoming
    stencil directions achieve the optimal arrival value but point far apart.

    Smooth points of the distance have a unique minimizing direction, so the
    minimizing in-offsets cluster within the stencil's angular gap; along a
    cut line two clusters of nearly opposite directions tie.
    """
    fld = distance_field(model, p, grid, "forward", k)
    offsets = stencil_offsets(grid.dim, k)
    points = grid.points()
    d = fld.values
    shape = grid.shape

    arrivals = np.full((len(offsets),) + shape, np.inf)
    for m, e in enumerate(offsets):
        pred_idx = []
        for axis, step in enumerate(e):
            coords = np.arange(shape[axis]) - step
            if grid.periodic[axis]:
                coords %= shape[axis]
            pred_idx.append(coords)
        mesh = np.meshgrid(*pred_idx, indexing="ij")
        in_range = np.ones(shape, dtype=bool)
        for axis in range(grid.dim):
            if not grid.periodic[axis]:
                in_range &= (mesh[axis] >= 0) & (mesh[axis] < shape[axis])
        mesh = [np.clip(mm, 0, shape[axis] - 1) for axis, mm in enumerate(mesh)]
        pred_pts = points.reshape(shape + (grid.dim,))[tuple(mesh)]
        vec = np.broadcast_to(e * grid.spacing, pred_pts.shape)
        cost = model.cost_values(pred_pts.reshape(-1, grid.dim),
                                 vec.reshape(-1, grid.dim)).reshape(shape)
        a = d[tuple(mesh)] + cost
        arrivals[m] = np.where(in_range, a, np.inf)

    best = arrivals.min(axis=0)
    unit = offsets / np.linalg.norm(offsets, axis=1, keepdims=True)
    min_in_cost = np.full(shape, np.inf)
    for m, e in enumerate(offsets):
        vec = np.broadcast_to(e * grid.spacing, points.shape)
        min_in_cost = np.minimum(min_in_cost,
                                 model.cost_values(points, vec).reshape(shape))
    slack = slack_rel * min_in_cost
    finite = np.isfinite(best)
    flat_arr = arrivals.reshape(len(offsets), -1)
    minimal = flat_arr <= (best + slack).ravel()  # (n_offsets, N)
    cos_table = np.clip(unit @ unit.T, -1.0, 1.0)
    ang_table = np.degrees(np.arccos(cos_table))
    spread = np.zeros(grid.size)
    n_off = len(offsets)
    for a in range(n_off):
        for b in range(a + 1, n_off):
            both = minimal[a] & minimal[b]
            if ang_table[a, b] > 0 and np.any(both):
                np.maximum(spread, np.where(both, ang_table[a, b], 0.0), out=spread)
    spread = spread.reshape(shape)

    near_source = fld.values <= min_cells * np.where(np.isfinite(min_in_cost),
                                                     min_in_cost, np.inf)
    flagged = finite & (spread > spread_threshold_deg) & ~near_source & ~fld.source_mask

    validated = None
    if validate > 0 and flagged.any():
        from .geodesic import shoot  # local import keeps module load light

        validated = []
        order = np.argsort(-spread.ravel())
        chosen = [i for i in order if flagged.ravel()[i]][:validate]
        for flat in chosen:
            y = grid.node_point(grid.unravel(int(flat)))
            geos = shoot(model, np.asarray(p, dtype=float), y, restarts=6,
                         rng=rng or np.random.default_rng(0))
            ok = False
            if len(geos) >= 2:
                l0, l1 = geos[0].length, geos[1].length
                ok = abs(l1 - l0) <= 0.01 * max(l0, l1)
            validated.append({"node": grid.unravel(int(flat)), "point": y,
                              "minimizers": len(geos), "tie_within_1pct": ok})
    return CutLocusProbe(field=fld, flagged=flagged, spread_deg=spread,
                         validated=validated)
