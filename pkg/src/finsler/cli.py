"""Command-line interface: deterministic evaluation, fields, and suites.

Every command reads models from JSON files, takes an explicit seed, and
writes plain JSON/CSV with 17-significant-digit floats, so identical
invocations produce byte-identical outputs.  Timing goes to stderr only.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chart import GridSpec
from .distance import distance_field
from .errors import FinslerError, SchemaError
from .geodesic import integrate_geodesic, shoot
from .metrics import MetricModel, TangentSample
from .modelio import (
    dumps_canonical,
    load_model,
    load_region,
    save_field_csv,
    save_geodesic_csv,
    save_mask_csv,
)
from .stationary import (
    StationaryModel,
    cauchy_horizon,
    causal_ladder_report,
    chronological_future_slice,
)
from .causalgrid import CausalGrid, causal_reachability, finsler_separation
from .suites import DEFAULT_TOLERANCES, SUITES, run_suite
from .tensor import fundamental_tensor


@dataclass
class RunConfig:
    """One resolved invocation; identical configs yield identical bytes."""

    command: str
    model_paths: list
    seed: int = 0
    tol_overrides: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "json"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in self.tol_overrides:
            if key not in DEFAULT_TOLERANCES:
                raise SchemaError(f"/tolerances/{key}", "unknown tolerance key")


def _parse_vec(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError as exc:
        raise SchemaError("/vector", f"cannot parse {text!r} as comma-separated floats") from exc


def _parse_node(text: str):
    parts = [int(x) for x in text.split(",")]
    return parts[0], tuple(parts[1:])


def _load_grid(path) -> GridSpec:
    data = json.loads(Path(path).read_text())
    if "origin" in data:
        return GridSpec.from_json(data)
    if "box" in data and "shape" in data:
        from .chart import Chart
        chart = Chart.from_json({"box": data["box"],
                                 "periodic": data.get("periodic", [])})
        return GridSpec.from_chart(chart, data["shape"])
    raise SchemaError("/grid", "expected {origin,spacing,shape} or {box,shape}")


def _emit(payload: dict, cfg: RunConfig):
    text = dumps_canonical(payload)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _require_metric(model) -> MetricModel:
    if isinstance(model, StationaryModel):
        raise SchemaError("/family", "this command needs a metric model, not 'stationary'")
    return model


def _require_stationary(model) -> StationaryModel:
    if not isinstance(model, StationaryModel):
        raise SchemaError("/family", "this command needs a 'stationary' model")
    return model


def cmd_eval(cfg: RunConfig):
    model = _require_metric(load_model(cfg.model_paths[0]))
    s = TangentSample(cfg.params["point"], cfg.params["vector"])
    L, F = model.evaluate(s)
    verdict = model.classify_domain(s)
    _emit({"L": L, "F": F, "classification": verdict.classification,
           "margin": verdict.margin}, cfg)


def cmd_tensor(cfg: RunConfig):
    model = _require_metric(load_model(cfg.model_paths[0]))
    s = TangentSample(cfg.params["point"], cfg.params["vector"])
    ft = fundamental_tensor(model, s, mode=cfg.params.get("mode"))
    _emit({"matrix": ft.matrix, "signature": list(ft.signature),
           "zero_tol": ft.zero_tol, "near_degenerate": ft.near_degenerate}, cfg)


def cmd_classify(cfg: RunConfig):
    model = _require_metric(load_model(cfg.model_paths[0]))
    s = TangentSample(cfg.params["point"], cfg.params["vector"])
    verdict = model.classify_domain(s)
    _emit({"classification": verdict.classification, "margin": verdict.margin,
           "scale": verdict.scale, "degenerate": verdict.degenerate}, cfg)


def cmd_geodesic(cfg: RunConfig):
    model = _require_metric(load_model(cfg.model_paths[0]))
    geo = integrate_geodesic(model, cfg.params["point"], cfg.params["vector"],
                             cfg.params["length"])
    if cfg.fmt == "csv":
        if not cfg.out:
            raise SchemaError("/out", "csv output needs --out")
        save_geodesic_csv(geo, cfg.out)
        return
    _emit({"end": geo.end, "length": geo.length, "F0": geo.F0,
           "affine": geo.affine, "exited_chart": geo.exited_chart}, cfg)


def cmd_shoot(cfg: RunConfig):
    model = _require_metric(load_model(cfg.model_paths[0]))
    rng = np.random.default_rng(cfg.seed)
    geos = shoot(model, cfg.params["from"], cfg.params["to"],
                 restarts=cfg.params.get("restarts", 6), rng=rng)
    payload = {"count": len(geos),
               "solutions": [{"length": g.length,
                              "initial_velocity": g.velocities[0],
                              "end": g.end} for g in geos]}
    if not geos:
        payload["finding"] = "no-connection"
    _emit(payload, cfg)


def cmd_field(cfg: RunConfig):
    model = load_model(cfg.model_paths[0])
    metric = model.fermat if isinstance(model, StationaryModel) else model
    grid = _load_grid(cfg.params["grid"])
    direction = {"fwd": "forward", "rev": "reverse"}[cfg.params["direction"]]
    fld = distance_field(metric, cfg.params["source"], grid, direction,
                         k=cfg.params.get("k", 3))
    if not cfg.out:
        raise SchemaError("/out", "field output needs --out")
    save_field_csv(fld, cfg.out)
    sys.stderr.write(f"field written to {cfg.out}\n")


def cmd_stationary(cfg: RunConfig):
    sm = _require_stationary(load_model(cfg.model_paths[0]))
    sub = cfg.params["subcommand"]
    grid = _load_grid(cfg.params["grid"])
    if sub == "future":
        sl = chronological_future_slice(sm, cfg.params["point"], cfg.params["t0"],
                                        grid, k=cfg.params.get("k", 3))
        if cfg.out:
            save_mask_csv(sl.mask, grid, cfg.out)
        _emit_region_summary(sl.mask, grid, cfg)
    elif sub == "horizon":
        region = load_region(cfg.params["region"])
        hor = cauchy_horizon(sm, region, grid, k=cfg.params.get("k", 3))
        if cfg.out:
            save_field_csv(hor.field, cfg.out)
        _emit({"apex_value": hor.apex_value,
               "apex_point": grid.node_point(hor.apex_index),
               "region_nodes": int(hor.region_mask.sum())},
              RunConfig(cfg.command, cfg.model_paths, cfg.seed, cfg.tol_overrides,
                        None, "json", cfg.params))
    elif sub == "ladder":
        rng = np.random.default_rng(cfg.seed)
        report = causal_ladder_report(sm, grid, cfg.params["budget"], rng=rng,
                                      k=cfg.params.get("k", 3))
        payload = {"budget": report.budget,
                   "findings": [{"name": f.name, "criterion": f.criterion,
                                 "verdict": f.verdict, "proxy": f.proxy,
                                 "witness": _jsonable(f.witness)}
                                for f in report.findings]}
        _emit(payload, cfg)
    else:
        raise SchemaError("/stationary", f"unknown subcommand {sub!r}")


def _emit_region_summary(mask, grid, cfg):
    payload = {"nodes_inside": int(mask.sum()), "grid": grid.to_json()}
    _emit(payload, cfg if not cfg.out else
          RunConfig(cfg.command, cfg.model_paths, cfg.seed, cfg.tol_overrides,
                    None, "json", cfg.params))


def _jsonable(obj):
    if obj is None:
        return None
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return [_jsonable(o) for o in obj]
    return obj


def cmd_causal(cfg: RunConfig):
    sm = _require_stationary(load_model(cfg.model_paths[0]))
    grid = _load_grid(cfg.params["grid"])
    cg = CausalGrid(sm, grid, n_levels=cfg.params["levels"],
                    cells_per_level=cfg.params.get("cells", 3))
    sub = cfg.params["subcommand"]
    if sub == "build":
        n_edges = sum(len(eo.tails) for eo in cg.edges)
        n_timelike = sum(int(np.sum(eo.timelike)) for eo in cg.edges)
        _emit({"levels": cg.n_levels, "dt": cg.dt,
               "nodes": cg.node_count(), "edges_per_level": n_edges,
               "timelike_edges_per_level": n_timelike}, cfg)
    elif sub == "reach":
        start = _parse_node(cfg.params["from"])
        reach = causal_reachability(cg, start)
        _emit({"start": list(start[0:1]) + list(start[1]),
               "I_nodes": int(reach.I_masks.sum()),
               "J_nodes": int(reach.J_masks.sum()),
               "I_final_slice": int(reach.I_masks[-1].sum()),
               "J_final_slice": int(reach.J_masks[-1].sum())}, cfg)
    elif sub == "separation":
        p = _parse_node(cfg.params["from"])
        q = _parse_node(cfg.params["to"])
        _emit({"separation": finsler_separation(cg, p, q), "dt": cg.dt}, cfg)
    else:
        raise SchemaError("/causal", f"unknown subcommand {sub!r}")


def cmd_suite(cfg: RunConfig) -> int:
    name = cfg.params["name"]
    t0 = time.perf_counter()
    report = run_suite(name, seed=cfg.seed, tol_overrides=cfg.tol_overrides)
    elapsed = time.perf_counter() - t0
    _emit(report, cfg)
    for r in report["results"]:
        status = "pass" if r["passed"] else "FAIL"
        sys.stderr.write(f"[{status}] {r['name']}: {r['measured']:.6g} "
                         f"{r['comparator']} {r['threshold']:.6g}\n")
    sys.stderr.write(f"suite {name}: {report['failures']} failure(s), "
                     f"{elapsed:.2f}s wall\n")
    return report["failures"]


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted both before and after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--tol-override", action="append", metavar="KEY=VALUE",
                        default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("json", "csv"),
                        default=argparse.SUPPRESS)

    top = argparse.ArgumentParser(prog="finsler",
                                  description="conic metrics, wind navigation, "
                                              "and stationary-spacetime causality")
    top.add_argument("--seed", type=int, default=0)
    top.add_argument("--tol-override", action="append", default=[],
                     metavar="KEY=VALUE")
    top.add_argument("--out", default=None)
    top.add_argument("--format", choices=("json", "csv"), default="json")
    sub = top.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        p = sub.add_parser(name, parents=[common], **kw)
        return p

    p = add("eval");  p.add_argument("--model", required=True)
    p.add_argument("--point", required=True); p.add_argument("--vector", required=True)

    p = add("tensor"); p.add_argument("--model", required=True)
    p.add_argument("--point", required=True); p.add_argument("--vector", required=True)
    p.add_argument("--mode", choices=("exact", "fd"), default=None)

    p = add("classify"); p.add_argument("--model", required=True)
    p.add_argument("--point", required=True); p.add_argument("--vector", required=True)

    p = add("geodesic"); p.add_argument("--model", required=True)
    p.add_argument("--from", dest="from_", required=True)
    p.add_argument("--dir", required=True); p.add_argument("--len", type=float, required=True)

    p = add("shoot"); p.add_argument("--model", required=True)
    p.add_argument("--from", dest="from_", required=True)
    p.add_argument("--to", required=True)
    p.add_argument("--restarts", type=int, default=6)

    p = add("field"); p.add_argument("--model", required=True)
    p.add_argument("--source", required=True); p.add_argument("--grid", required=True)
    p.add_argument("--direction", choices=("fwd", "rev"), default="fwd")
    p.add_argument("--k", type=int, default=3)

    p = add("stationary")
    p.add_argument("subcommand", choices=("future", "horizon", "ladder"))
    p.add_argument("--model", required=True); p.add_argument("--grid", required=True)
    p.add_argument("--point", default=None); p.add_argument("--t0", type=float, default=None)
    p.add_argument("--region", default=None)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--k", type=int, default=3)

    p = add("causal")
    p.add_argument("subcommand", choices=("build", "reach", "separation"))
    p.add_argument("--model", required=True); p.add_argument("--grid", required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--cells", type=int, default=3)
    p.add_argument("--from", dest="from_", default=None)
    p.add_argument("--to", default=None)

    p = add("suite")
    p.add_argument("name", choices=sorted(SUITES))
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    for item in args.tol_override:
        if "=" not in item:
            sys.stderr.write(f"bad --tol-override {item!r}; expected KEY=VALUE\n")
            return 2
        key, value = item.split("=", 1)
        overrides[key] = value

    params = {}
    if args.command in ("eval", "tensor", "classify"):
        params = {"point": _parse_vec(args.point), "vector": _parse_vec(args.vector)}
        if args.command == "tensor":
            params["mode"] = args.mode
    elif args.command == "geodesic":
        params = {"point": _parse_vec(args.from_), "vector": _parse_vec(args.dir),
                  "length": args.len}
    elif args.command == "shoot":
        params = {"from": _parse_vec(args.from_), "to": _parse_vec(args.to),
                  "restarts": args.restarts}
    elif args.command == "field":
        params = {"source": _parse_vec(args.source), "grid": args.grid,
                  "direction": args.direction, "k": args.k}
    elif args.command == "stationary":
        params = {"subcommand": args.subcommand, "grid": args.grid, "k": args.k}
        if args.subcommand == "future":
            if args.point is None or args.t0 is None:
                sys.stderr.write("stationary future needs --point and --t0\n")
                return 2
            params["point"] = _parse_vec(args.point)
            params["t0"] = args.t0
        elif args.subcommand == "horizon":
            if args.region is None:
                sys.stderr.write("stationary horizon needs --region\n")
                return 2
            params["region"] = args.region
        elif args.subcommand == "ladder":
            if args.budget is None:
                sys.stderr.write("stationary ladder needs --budget\n")
                return 2
            params["budget"] = args.budget
    elif args.command == "causal":
        params = {"subcommand": args.subcommand, "grid": args.grid,
                  "levels": args.levels, "cells": args.cells}
        if args.subcommand in ("reach", "separation"):
            if args.from_ is None:
                sys.stderr.write(f"causal {args.subcommand} needs --from\n")
                return 2
            params["from"] = args.from_
        if args.subcommand == "separation":
            if args.to is None:
                sys.stderr.write("causal separation needs --to\n")
                return 2
            params["to"] = args.to
    elif args.command == "suite":
        params = {"name": args.name}

    model_paths = [getattr(args, "model")] if hasattr(args, "model") else []
    try:
        cfg = RunConfig(command=args.command, model_paths=model_paths,
                        seed=args.seed, tol_overrides=overrides,
                        out=args.out, fmt=args.format, params=params)
        handler = {
            "eval": cmd_eval, "tensor": cmd_tensor, "classify": cmd_classify,
            "geodesic": cmd_geodesic, "shoot": cmd_shoot, "field": cmd_field,
            "stationary": cmd_stationary, "causal": cmd_causal,
        }.get(args.command)
        if args.command == "suite":
            return cmd_suite(cfg)
        handler(cfg)
        return 0
    except FinslerError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
