"""Experiment harness: region ingestion, end-to-end pipeline runs, sweep
orchestration, oracle scoring, and report emission.

Subcommands: validate, run, sweep, oracle, paper-repro.  All outputs are
plain UTF-8 CSV/JSON, deterministic byte-for-byte for a fixed config.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from . import boundary, convergetree, geometry, netgraph, topo
from .boundary import NodeClass
from .simkernel import RoundLimitExceeded

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GEOMETRY = 3
EXIT_PROTOCOL = 4
EXIT_MISMATCH = 5


class MismatchedRun(RuntimeError):
    """Oracle invoked with a config that differs from the run's provenance."""


@dataclass
class RunConfig:
    region: str = "standard"          # path or builtin name
    n: int = 20000
    seed: int = 1
    alpha: float | str = "sweep"      # numeric or "sweep"
    bin_count: int = 64
    tolerance_hops: int = 2
    min_component_size: int = 8
    out_dir: str | None = None
    trace: bool = False
    token_loops: bool = True

    def to_dict(self) -> dict:
        return {
            "region": self.region, "n": self.n, "seed": self.seed,
            "alpha": self.alpha, "bin_count": self.bin_count,
            "tolerance_hops": self.tolerance_hops,
            "min_component_size": self.min_component_size,
            "token_loops": self.token_loops,
        }


# --------------------------------------------------------------------------
# builtin regions
# --------------------------------------------------------------------------

def _octagon(cx: float, cy: float, r: float) -> geometry.Polygon:
    ang = np.arange(8) * (math.pi / 4) + math.pi / 8
    return geometry.Polygon(np.stack([cx + r * np.cos(ang), cy + r * np.sin(ang)], axis=1))


def standard_region() -> geometry.Region:
    """30R x 30R square with three convex holes (two octagon "eyes", one
    elongated chamfered-rectangle "mouth"); total area comes to 786.90R²,
    k = 4, feature size well above 2R."""
    outer = geometry.Polygon(np.array([[0.0, 0.0], [30.0, 0.0], [30.0, 30.0], [0.0, 30.0]]))
    eye_l = _octagon(9.5, 20.5, 2.7)
    eye_r = _octagon(20.5, 20.5, 2.7)
    # mouth area solves 900 - 2*eye - mouth = 786.9015...; chamfer c = 2
    w, h, c, cx, cy = 79.86 / 7.0, 7.0, 2.0, 15.0, 8.0
    x0, x1, y0, y1 = cx - w / 2, cx + w / 2, cy - h / 2, cy + h / 2
    mouth = geometry.Polygon(np.array([
        [x0 + c, y0], [x1 - c, y0], [x1, y0 + c], [x1, y1 - c],
        [x1 - c, y1], [x0 + c, y1], [x0, y1 - c], [x0, y0 + c]]))
    return geometry.Region([outer, eye_l, eye_r, mouth])


def annulus_region(r_out: float = 9.0, r_in: float = 3.0) -> geometry.Region:
    return geometry.Region([
        geometry.Circle((0.0, 0.0), r_out),
        geometry.Circle((0.0, 0.0), r_in),
    ])


BUILTIN_REGIONS = {
    "standard": standard_region,
    "annulus": annulus_region,
}


def resolve_region(name_or_path: str) -> geometry.Region:
    if name_or_path in BUILTIN_REGIONS:
        return BUILTIN_REGIONS[name_or_path]()
    return geometry.load_region(name_or_path)


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------

@dataclass
class PhaseCost:
    phase: str
    broadcasts: int
    id_units: int
    rounds: int


@dataclass
class PipelineResult:
    config: RunConfig
    region: geometry.Region
    feature: geometry.FeatureReport
    g: netgraph.UnitDiskGraph
    mu_analytic: float
    density: boundary.DensityEstimate
    alpha_star: float
    sweep: boundary.AlphaSweep | None
    threshold: int
    classes: np.ndarray
    comps: boundary.ComponentsResult
    dist: boundary.DistanceField
    voronoi: np.ndarray
    loops: dict[int, boundary.TokenLoop]
    stats: list[topo.ComponentStats]
    outer_id: int
    thick: topo.ThicknessReport
    costs: list[PhaseCost] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    wall_seconds: float = 0.0


def mu_analytic_value(n: int, area: float, R: float = 1.0) -> float:
    """Unconstrained expected neighborhood size (n-1) * pi R^2 / area."""
    return (n - 1) * math.pi * R * R / area


def run_pipeline(config: RunConfig, trace_stream=None) -> PipelineResult:
    """Full run: validate, sample, build, bootstrap tree, estimate density,
    pick alpha, classify, form components, flood distances, flag Voronoi
    nodes, run token loops, and derive the higher-order parameters.

    `trace_stream`, if given, receives one 'round,node,kind,size_units'
    line per broadcast across every protocol phase.
    """
    t0 = time.perf_counter()
    tr = trace_stream
    warnings: list[str] = []
    costs: list[PhaseCost] = []

    def cost(phase: str, res) -> None:
        costs.append(PhaseCost(phase, res.ledger.total_broadcasts,
                               res.ledger.total_id_units, res.rounds_used))

    region = resolve_region(config.region)
    feature = geometry.validate_region(region)
    area = feature.area
    mu_an = mu_analytic_value(config.n, area)

    pts = geometry.sample_uniform(region, config.n, config.seed)
    ids = Generator(Philox([config.seed, 1])).permutation(config.n) + 1
    g = netgraph.build_udg((ids, pts), R=1.0)

    mean_deg = float(g.degrees()[1:].mean())
    if config.n < 100 or mean_deg < 100:
        warnings.append(
            f"density warning: mean degree {mean_deg:.1f} (paper assumes "
            f"every node reaches at least 100 others)")
    if not netgraph.is_connected(g):
        raise RoundLimitExceeded(0, {0: "graph disconnected before protocols"})

    tree = convergetree.build_tree(g, trace=tr)
    cost("tree", tree.result)
    convergetree.check_tree(g, tree)

    (delta_val,), res = convergetree.aggregate(g, tree.states, convergetree.AggOp.MAX,
                                               g.degrees(), trace=tr)
    cost("agg_delta", res)
    _, res = convergetree.broadcast_down(g, tree.states, (delta_val,), trace=tr)
    cost("flood_delta", res)

    bins = config.bin_count
    deg = g.degrees()
    onehots = {}
    base = (0,) * bins
    for v in g.id_list:
        b = netgraph.degree_bin(int(deg[v]), delta_val, bins)
        onehots[v] = base[:b] + (1,) + base[b + 1:]
    hist_counts, res = convergetree.aggregate(g, tree.states,
                                              convergetree.AggOp.HISTOGRAM_MERGE,
                                              onehots, trace=tr)
    cost("agg_histogram", res)
    hist = netgraph.histogram_from_counts(hist_counts, delta_val)
    density = boundary.estimate_mu(hist, mu_analytic=mu_an)

    sweep = None
    if config.alpha == "sweep":
        try:
            sweep = boundary.alpha_sweep(g, density.mu_est,
                                         min_component_size=config.min_component_size)
            alpha_star = sweep.alpha_star
        except boundary.NoPlateau:
            warnings.append("alpha sweep found no plateau; using default alpha")
            alpha_star = boundary.default_alpha()
    else:
        alpha_star = float(config.alpha)

    thr = boundary.threshold_units(alpha_star, density.mu_est)
    _, res = convergetree.broadcast_down(g, tree.states, (density.mu_est, thr),
                                         trace=tr)
    cost("flood_threshold", res)

    classes, res = boundary.classify(g, thr, trace=tr)
    cost("classify", res)

    comps = boundary.form_components(g, classes, trace=tr)
    for r in comps.results:
        cost("components", r)

    dist, res = boundary.distance_flood(g, comps.comp_of, density.mu_est, trace=tr)
    cost("distance_flood", res)
    voronoi = boundary.detect_voronoi(dist, config.tolerance_hops)

    loops: dict[int, boundary.TokenLoop] = {}
    if config.token_loops:
        loops, res = boundary.run_token_loops(g, comps, trace=tr)
        cost("token_loops", res)
        for c in comps.components:
            if c.component_id not in loops:
                warnings.append(f"token loop failed for component {c.component_id}")

    stats = topo.component_stats(comps.components)
    sizeable = [s for s in stats if s.boundary_count >= config.min_component_size]
    outer_id = topo.classify_outer(sizeable or stats)
    thick = topo.thickness(classes, dist, deg, density.mu_est)

    return PipelineResult(
        config=config, region=region, feature=feature, g=g, mu_analytic=mu_an,
        density=density, alpha_star=alpha_star, sweep=sweep, threshold=thr,
        classes=classes, comps=comps, dist=dist, voronoi=voronoi, loops=loops,
        stats=stats, outer_id=outer_id, thick=thick, costs=costs,
        warnings=warnings, wall_seconds=time.perf_counter() - t0,
    )


# --------------------------------------------------------------------------
# report files
# --------------------------------------------------------------------------

_CLASS_NAMES = {0: "INTERIOR", 1: "NEAR_BOUNDARY", 2: "BOUNDARY"}


def write_classification_csv(r: PipelineResult, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,class,boundary_id,hop_dist,voronoi\n")
        for v in r.g.id_list:
            hop = int(r.dist.hop[v]) if np.isfinite(r.dist.hop[v]) else -1
            fh.write(f"{v},{_CLASS_NAMES[int(r.classes[v])]},{int(r.dist.comp[v])},"
                     f"{hop},{int(bool(r.voronoi[v]))}\n")


def write_sweep_csv(r: PipelineResult, path: str) -> None:
    deg = r.g.degrees()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("alpha,component_count,boundary_node_count\n")
        if r.sweep is None:
            return
        for a, c in zip(r.sweep.grid, r.sweep.component_counts):
            nb = int((deg[1:] <= boundary.threshold_units(a, r.density.mu_est)).sum())
            fh.write(f"{a!r},{c},{nb}\n")


def write_cost_csv(r: PipelineResult, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("phase,broadcasts,id_units,rounds\n")
        for c in r.costs:
            fh.write(f"{c.phase},{c.broadcasts},{c.id_units},{c.rounds}\n")


def summary_dict(r: PipelineResult) -> dict:
    classes = r.classes[r.g.ids]
    b = int((classes == int(NodeClass.BOUNDARY)).sum())
    nb = int((classes == int(NodeClass.NEAR_BOUNDARY)).sum())
    loops = {
        str(cid): {"length": len(lp.members) - 1, "closed": lp.members[0] == lp.members[-1]}
        for cid, lp in sorted(r.loops.items())
    }
    return {
        "schema": SCHEMA_VERSION,
        "config": r.config.to_dict(),
        "area": r.feature.area,
        "mu_analytic": r.mu_analytic,
        "mu_est": r.density.mu_est,
        "delta": r.density.delta,
        "alpha_star": r.alpha_star,
        "threshold": r.threshold,
        "plateau": list(r.sweep.plateau) if r.sweep else None,
        "components": [
            {"id": s.component_id, "size": s.boundary_count,
             "near_size": s.near_count, "ratio": s.ratio}
            for s in sorted(r.stats, key=lambda s: s.component_id)
        ],
        "component_count": sum(
            1 for s in r.stats if s.boundary_count >= r.config.min_component_size),
        "outer_id": r.outer_id,
        "thickness_estimate": r.thick.thickness_estimate,
        "thickness_node": r.thick.best_node,
        "voronoi_count": int(r.voronoi[r.g.ids].sum()),
        "boundary_count": b,
        "near_count": nb,
        "interior_count": r.g.n - b - nb,
        "token_loops": loops,
        "warnings": r.warnings,
    }


def write_summary_json(r: PipelineResult, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary_dict(r), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_reports(r: PipelineResult, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for name, writer in (("classification.csv", write_classification_csv),
                         ("sweep.csv", write_sweep_csv),
                         ("cost.csv", write_cost_csv),
                         ("summary.json", write_summary_json)):
        path = os.path.join(out_dir, name)
        writer(r, path)
        files.append(path)
    return files


# --------------------------------------------------------------------------
# oracle scoring
# --------------------------------------------------------------------------

def score_run(r: PipelineResult, eps: float = 0.25, far: float = 1.5,
              inradius_step: float = 0.05) -> dict:
    """Join the run with the geometry oracles and score every claim the
    recognizer makes.  Truth for precision/recall is distance <= eps."""
    g = r.g
    pts = g.positions[1:]
    table = geometry.curve_distance_table(r.region, pts)  # (k, n)
    dmin = table.min(axis=0)
    nearest_curve = table.argmin(axis=0)
    is_b = r.classes[1:] == int(NodeClass.BOUNDARY)

    truth = dmin <= eps
    tp = int((truth & is_b).sum())
    precision = tp / max(int(is_b.sum()), 1)
    recall = tp / max(int(truth.sum()), 1)

    bands = [(0.0, 0.25), (0.25, 0.5), (0.5, 1.0), (1.0, 1.5), (1.5, math.inf)]
    band_rows = []
    for lo, hi in bands:
        m = (dmin > lo) & (dmin <= hi) if lo else (dmin <= hi)
        band_rows.append({"band": f"({lo},{hi}]" if lo else f"[0,{hi}]",
                          "nodes": int(m.sum()),
                          "boundary_rate": float(is_b[m].mean()) if m.any() else 0.0})
    false_far_rate = float(is_b[dmin >= far].mean()) if (dmin >= far).any() else 0.0

    # map components to their generating curves by member majority
    comp_curve: dict[int, int] = {}
    for c in r.comps.components:
        mem = np.array(c.members) - 1
        comp_curve[c.component_id] = int(np.bincount(nearest_curve[mem]).argmax())
    outer_correct = comp_curve.get(r.outer_id, -1) == 0

    vmask = r.voronoi[1:]
    hits = 0
    flagged = int(vmask.sum())
    for v in np.flatnonzero(vmask):
        c1, c2 = int(r.dist.comp[v + 1]), int(r.dist.comp2[v + 1])
        if c1 not in comp_curve or c2 not in comp_curve:
            continue
        da = table[comp_curve[c1], v]
        db = table[comp_curve[c2], v]
        if abs(da - db) <= 4.0:  # within 2R of the equidistance locus
            hits += 1
    voronoi_hit_rate = hits / flagged if flagged else 1.0

    thickness_true, _ = geometry.inradius_oracle(r.region, inradius_step)
    best_true_dist = float(dmin[r.thick.best_node - 1])

    band_table = []
    for i, curve in enumerate(r.region.curves):
        if not isinstance(curve, geometry.Polygon):
            continue
        cf = geometry.band_areas_closed_form(curve)
        mc = geometry.band_areas_oracle(curve, samples=200_000, seed=1000 + i)
        band_table.append({
            "curve": i,
            "outer_closed": cf.outer_band, "outer_mc": mc.outer_band,
            "outer_rel_err": abs(cf.outer_band - mc.outer_band) / cf.outer_band,
            "inner_closed": cf.inner_band, "inner_mc": mc.inner_band,
            "inner_rel_err": abs(cf.inner_band - mc.inner_band) / cf.inner_band,
        })

    return {
        "schema": SCHEMA_VERSION,
        "config": r.config.to_dict(),
        "precision": precision,
        "recall": recall,
        "bands": band_rows,
        "false_rate_beyond_1_5R": false_far_rate,
        "outer_correct": bool(outer_correct),
        "component_to_curve": {str(k): v for k, v in sorted(comp_curve.items())},
        "voronoi_flagged": flagged,
        "voronoi_hit_rate": voronoi_hit_rate,
        "thickness_estimate": r.thick.thickness_estimate,
        "thickness_true": thickness_true,
        "thickness_best_node_true_dist": best_true_dist,
        "band_area_table": band_table,
    }


def check_provenance(summary: dict, config: RunConfig) -> None:
    saved = summary.get("config", {})
    mine = config.to_dict()
    for key in ("region", "n", "seed", "alpha", "bin_count"):
        if saved.get(key) != mine[key]:
            raise MismatchedRun(
                f"run was produced with {key}={saved.get(key)!r}, "
                f"oracle invoked with {mine[key]!r}")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_validate(args) -> int:
    region = resolve_region(args.region)
    rep = geometry.validate_region(region)
    print(f"region ok: k={rep.k} area={rep.area:.4f}R^2 d_min={rep.d_min:.4f}R "
          f"angles=[{rep.min_angle:.4f}, {rep.max_angle:.4f}] rad")
    return EXIT_OK


def _config_from_args(args) -> RunConfig:
    alpha = args.alpha
    if alpha != "sweep":
        alpha = float(alpha)
    return RunConfig(region=args.region, n=args.nodes, seed=args.seed,
                     alpha=alpha, bin_count=args.bins,
                     tolerance_hops=args.voronoi_tol,
                     min_component_size=args.min_comp,
                     out_dir=args.out, trace=args.trace)


def cmd_run(args) -> int:
    config = _config_from_args(args)
    out_dir = config.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    with contextlib.ExitStack() as stack:
        trace_stream = None
        if config.trace:
            trace_stream = stack.enter_context(
                open(os.path.join(out_dir, "trace.csv"), "w",
                     encoding="utf-8", newline="\n"))
            trace_stream.write("round,node,kind,size_units\n")
        r = run_pipeline(config, trace_stream)
    files = write_reports(r, out_dir)
    for w in r.warnings:
        print(w, file=sys.stderr)
    s = summary_dict(r)
    print(f"n={config.n} seed={config.seed} mu_analytic={r.mu_analytic:.2f} "
          f"mu_est={r.density.mu_est} delta={r.density.delta} "
          f"alpha*={r.alpha_star:.3f} components={s['component_count']} "
          f"outer={r.outer_id} thickness={r.thick.thickness_estimate:.2f}R "
          f"[{r.wall_seconds:.1f}s]")
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    args.alpha = "sweep"
    return cmd_run(args)


def cmd_oracle(args) -> int:
    config = _config_from_args(args)
    run_dir = config.out_dir or "."
    with open(os.path.join(run_dir, "summary.json"), "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    check_provenance(summary, config)
    r = run_pipeline(config)
    score = score_run(r)
    path = os.path.join(run_dir, "oracle_score.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(score, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"precision={score['precision']:.3f} recall={score['recall']:.3f} "
          f"false>1.5R={score['false_rate_beyond_1_5R']:.4f} "
          f"voronoi_hit={score['voronoi_hit_rate']:.3f} "
          f"outer_correct={score['outer_correct']} "
          f"thickness {score['thickness_estimate']:.2f} vs {score['thickness_true']:.2f}")
    print(f"wrote {path}")
    return EXIT_OK


def _repro_one(seed: int, loops: bool) -> dict:
    n = 45_000
    config = RunConfig(region="standard", n=n, seed=seed, alpha="sweep",
                       token_loops=loops)
    r = run_pipeline(config)
    s = summary_dict(r)
    mu_an = r.mu_analytic
    bn = s["boundary_count"] + s["near_count"]
    return {
        "seed": seed,
        "mu_est": r.density.mu_est,
        "mu_rel_err": abs(r.density.mu_est - mu_an) / mu_an,
        "delta_over_mu": r.density.delta / mu_an,
        "components": s["component_count"],
        "alpha_star": r.alpha_star,
        "boundary_plus_near": bn,
        "boundary_plus_near_frac": bn / n,
        "interior": s["interior_count"],
        "outer_id": r.outer_id,
        "ratios": {str(st.component_id): round(st.ratio, 3) for st in r.stats
                   if st.boundary_count >= config.min_component_size},
        "thickness_estimate": r.thick.thickness_estimate,
        "wall_seconds": round(r.wall_seconds, 1),
    }


def cmd_paper_repro(args) -> int:
    """Full-scale reproduction: n=45,000 on the standard region, 3 seeds.

    SWARMTOPO_THREADS > 1 fans the seeds out over worker processes (memory
    scales with the worker count); the report order stays by seed.
    """
    n = 45_000
    region = standard_region()
    area = geometry.validate_region(region).area
    mu_an = mu_analytic_value(n, area)
    print(f"mu_analytic = {mu_an:.2f} (paper-scale instance, area {area:.1f}R^2)")
    seeds = list(range(1, args.seeds + 1))
    workers = max(1, int(os.environ.get("SWARMTOPO_THREADS", "1")))
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_repro_one, seeds, [args.loops] * len(seeds)))
    else:
        rows = [_repro_one(seed, args.loops) for seed in seeds]
    for row in rows:
        bn = row["boundary_plus_near"]
        print(f"seed {row['seed']}: mu_est={row['mu_est']} "
              f"({100 * row['mu_rel_err']:.2f}%) "
              f"delta/mu={row['delta_over_mu']:.3f} components={row['components']} "
              f"boundary+near={bn} ({100 * bn / n:.1f}%) interior={row['interior']} "
              f"[{row['wall_seconds']}s]")
    report = {"schema": SCHEMA_VERSION, "n": n, "mu_analytic": mu_an, "runs": rows}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "paper_repro.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--region", default="standard",
                   help="builtin name (standard, annulus) or region JSON path")
    p.add_argument("--nodes", type=int, default=20000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--alpha", default="sweep", help="numeric threshold factor or 'sweep'")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--voronoi-tol", type=int, default=2)
    p.add_argument("--min-comp", type=int, default=8)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--trace", action="store_true", help="write a broadcast trace CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swarmtopo",
                                 description="coordinate-free topology recognition testbed")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a region file or builtin")
    p.add_argument("--region", default="standard")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="full pipeline run")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="pipeline run with alpha calibration sweep")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="score a finished run against geometry oracles")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("paper-repro", help="full-scale 45k reproduction")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--out", default=None)
    p.add_argument("--no-loops", dest="loops", action="store_false")
    p.set_defaults(func=cmd_paper_repro)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except geometry.GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except MismatchedRun as exc:
        print(f"mismatched run: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except RoundLimitExceeded as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    raise SystemExit(main())
