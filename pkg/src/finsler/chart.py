"""Coordinate charts, regions, and rectangular grids.

Everything in the toolkit lives on a single chart: a rectangular bounding
box per coordinate, optionally with periodic axes (for cylinders, angular
coordinates) and an open-region predicate carving out a subdomain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SchemaError


@dataclass(frozen=True, eq=False)
class Chart:
    """A coordinate chart: box bounds, optional periods, optional open region.

    box: (n, 2) array of [lo, hi] per coordinate.
    periodic: per-axis period or None.  A periodic axis never triggers a
        chart-exit; its box fixes the fundamental interval.
    region: vectorized predicate on points, shape (..., n) -> bool (...),
        defining an open subregion. Must be deterministic.
    """

    box: np.ndarray
    periodic: tuple = None
    region: Optional[Callable] = None

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float)
        if box.ndim != 2 or box.shape[1] != 2:
            raise SchemaError("/chart/box", "expected an (n, 2) array of intervals")
        if box.shape[0] < 2:
            raise SchemaError("/chart/box", "chart dimension must be >= 2")
        if np.any(box[:, 1] <= box[:, 0]):
            raise SchemaError("/chart/box", "empty interval in bounding box")
        object.__setattr__(self, "box", box)
        per = self.periodic
        if per is None:
            per = (None,) * box.shape[0]
        per = tuple(per)
        if len(per) != box.shape[0]:
            raise SchemaError("/chart/periodic", "one entry per coordinate required")
        object.__setattr__(self, "periodic", per)

    @property
    def dim(self) -> int:
        return self.box.shape[0]

    @property
    def lo(self) -> np.ndarray:
        return self.box[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.box[:, 1]

    def contains(self, points, margin: float = 0.0):
        """Vectorized box membership; periodic axes always count as inside."""
        p = np.asarray(points, dtype=float)
        inside = np.ones(p.shape[:-1], dtype=bool)
        for k in range(self.dim):
            if self.periodic[k] is not None:
                continue
            inside &= (p[..., k] >= self.box[k, 0] + margin)
            inside &= (p[..., k] <= self.box[k, 1] - margin)
        if self.region is not None:
            inside &= np.asarray(self.region(p), dtype=bool)
        return inside

    def boundary_distance(self, points):
        """Signed distance to the box boundary (positive inside), skipping
        periodic axes. Used to stop geodesic integration at chart exit."""
        p = np.asarray(points, dtype=float)
        dists = []
        for k in range(self.dim):
            if self.periodic[k] is not None:
                continue
            dists.append(p[..., k] - self.box[k, 0])
            dists.append(self.box[k, 1] - p[..., k])
        if not dists:
            return np.full(p.shape[:-1], np.inf)
        return np.min(np.stack(dists, axis=-1), axis=-1)

    def wrap(self, points):
        """Map periodic coordinates back to the fundamental interval."""
        p = np.array(points, dtype=float, copy=True)
        for k in range(self.dim):
            period = self.periodic[k]
            if period is not None:
                p[..., k] = self.box[k, 0] + np.mod(p[..., k] - self.box[k, 0], period)
        return p

    def to_json(self) -> dict:
        out = {"box": self.box.tolist()}
        if any(per is not None for per in self.periodic):
            out["periodic"] = [per for per in self.periodic]
        return out

    @classmethod
    def from_json(cls, data: dict, pointer: str = "/chart") -> "Chart":
        if not isinstance(data, dict) or "box" not in data:
            raise SchemaError(pointer, "chart must be an object with a 'box' key")
        return cls(box=np.asarray(data["box"], dtype=float),
                   periodic=tuple(data.get("periodic", [])) or None)


def box_chart(*intervals, periodic=None, region=None) -> Chart:
    """Convenience constructor: box_chart((-1, 1), (-1, 1))."""
    return Chart(box=np.array(intervals, dtype=float), periodic=periodic, region=region)


class Region:
    """A JSON-representable open region: box, ball, union, complement.

    Callable on point arrays, shape (..., n) -> bool (...). Arbitrary
    predicates can be wrapped for in-memory use but do not serialize.
    """

    def __init__(self, predicate: Callable, spec: Optional[dict] = None):
        self._predicate = predicate
        self.spec = spec

    def __call__(self, points):
        return np.asarray(self._predicate(np.asarray(points, dtype=float)), dtype=bool)

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "Region":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return cls(lambda p: np.all((p > lo) & (p < hi), axis=-1),
                   {"type": "box", "lo": lo.tolist(), "hi": hi.tolist()})

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "Region":
        c = np.asarray(center, dtype=float)
        r = float(radius)
        return cls(lambda p: np.linalg.norm(p - c, axis=-1) < r,
                   {"type": "ball", "center": c.tolist(), "radius": r})

    @classmethod
    def union(cls, *parts: "Region") -> "Region":
        return cls(lambda p: np.any([part(p) for part in parts], axis=0),
                   {"type": "union", "parts": [part.spec for part in parts]})

    @classmethod
    def complement(cls, part: "Region") -> "Region":
        return cls(lambda p: ~part(p), {"type": "complement", "part": part.spec})

    @classmethod
    def from_json(cls, data: dict, pointer: str = "/region") -> "Region":
        if not isinstance(data, dict) or "type" not in data:
            raise SchemaError(pointer, "region must be an object with a 'type' key")
        kind = data["type"]
        if kind == "box":
            for key in ("lo", "hi"):
                if key not in data:
                    raise SchemaError(f"{pointer}/{key}", "missing")
            return cls.box(data["lo"], data["hi"])
        if kind == "ball":
            for key in ("center", "radius"):
                if key not in data:
                    raise SchemaError(f"{pointer}/{key}", "missing")
            return cls.ball(data["center"], data["radius"])
        if kind == "union":
            parts = data.get("parts")
            if not parts:
                raise SchemaError(f"{pointer}/parts", "missing or empty")
            return cls.union(*[cls.from_json(part, f"{pointer}/parts/{i}")
                               for i, part in enumerate(parts)])
        if kind == "complement":
            if "part" not in data:
                raise SchemaError(f"{pointer}/part", "missing")
            return cls.complement(cls.from_json(data["part"], f"{pointer}/part"))
        raise SchemaError(f"{pointer}/type", f"unknown region type {kind!r}")


@dataclass(frozen=True, eq=False)
class GridSpec:
    """A rectangular node grid: origin, spacing and node count per axis."""

    origin: np.ndarray
    spacing: np.ndarray
    shape: tuple
    periodic: tuple = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "spacing", np.asarray(self.spacing, dtype=float))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        per = self.periodic
        if per is None:
            per = (False,) * len(self.shape)
        object.__setattr__(self, "periodic", tuple(bool(b) for b in per))
        if np.any(self.spacing <= 0):
            raise SchemaError("/grid/spacing", "spacing must be positive")
        if any(s < 2 for s in self.shape):
            raise SchemaError("/grid/shape", "need at least 2 nodes per axis")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axes(self):
        return [self.origin[k] + self.spacing[k] * np.arange(self.shape[k])
                for k in range(self.dim)]

    def points(self) -> np.ndarray:
        """All node coordinates, shape (size, dim), C-order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def node_point(self, index):
        idx = np.asarray(index)
        return self.origin + idx * self.spacing

    def nearest_node(self, point) -> tuple:
        """Index of the grid node closest to `point` (periodic aware)."""
        rel = (np.asarray(point, dtype=float) - self.origin) / self.spacing
        idx = np.rint(rel).astype(int)
        out = []
        for k in range(self.dim):
            if self.periodic[k]:
                out.append(int(idx[k] % self.shape[k]))
            else:
                out.append(int(np.clip(idx[k], 0, self.shape[k] - 1)))
        return tuple(out)

    def ravel(self, index) -> int:
        return int(np.ravel_multi_index(tuple(index), self.shape))

    def unravel(self, flat: int) -> tuple:
        return tuple(int(i) for i in np.unravel_index(int(flat), self.shape))

    @classmethod
    def from_chart(cls, chart: Chart, shape) -> "GridSpec":
        shape = tuple(int(s) for s in shape)
        spacing = []
        for k in range(chart.dim):
            span = chart.box[k, 1] - chart.box[k, 0]
            # periodic axis: last node one step short of the wrap image
            denom = shape[k] if chart.periodic[k] is not None else shape[k] - 1
            spacing.append(span / denom)
        return cls(origin=chart.lo.copy(), spacing=np.array(spacing), shape=shape,
                   periodic=tuple(per is not None for per in chart.periodic))

    def to_json(self) -> dict:
        return {"origin": self.origin.tolist(), "spacing": self.spacing.tolist(),
                "shape": list(self.shape), "periodic": list(self.periodic)}

    @classmethod
    def from_json(cls, data: dict, pointer: str = "/grid") -> "GridSpec":
        for key in ("origin", "spacing", "shape"):
            if key not in data:
                raise SchemaError(f"{pointer}/{key}", "missing")
        return cls(origin=np.asarray(data["origin"], dtype=float),
                   spacing=np.asarray(data["spacing"], dtype=float),
                   shape=tuple(data["shape"]),
                   periodic=tuple(data.get("periodic", [])) or None)
