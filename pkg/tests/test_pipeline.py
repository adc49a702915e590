import json
import math
import os

import numpy as np
import pytest

from swarmtopo import cli, geometry
from swarmtopo.cli import MismatchedRun, RunConfig


def small_region_file(tmp_path):
    region = geometry.Region([
        geometry.Polygon(np.array([[0, 0], [8, 0], [8, 8], [0, 8]], float)),
        geometry.Circle((4.0, 4.0), 1.2),
    ])
    path = tmp_path / "small.json"
    geometry.save_region(region, str(path))
    return str(path)


def test_standard_region_matches_paper_scale():
    rep = geometry.validate_region(cli.standard_region())
    assert rep.k == 4
    assert rep.area == pytest.approx(786.9, rel=0.01)
    assert rep.d_min >= 2.0
    assert cli.mu_analytic_value(45000, rep.area) == pytest.approx(179.65, abs=0.05)


def test_pipeline_end_to_end_small(tmp_path):
    path = small_region_file(tmp_path)
    config = RunConfig(region=path, n=1500, seed=2, alpha=0.77)
    r = cli.run_pipeline(config)
    s = cli.summary_dict(r)
    assert s["schema"] == 1
    assert s["boundary_count"] + s["near_count"] + s["interior_count"] == 1500
    assert s["component_count"] >= 1
    assert r.outer_id in {c.component_id for c in r.comps.components}
    files = cli.write_reports(r, str(tmp_path / "out"))
    assert all(os.path.exists(f) for f in files)
    lines = open(os.path.join(tmp_path, "out", "classification.csv")).read().splitlines()
    assert lines[0] == "id,class,boundary_id,hop_dist,voronoi"
    assert len(lines) == 1501


def test_pipeline_byte_identical_reruns(tmp_path):
    path = small_region_file(tmp_path)
    config = RunConfig(region=path, n=1200, seed=5, alpha="sweep")
    for sub in ("a", "b"):
        r = cli.run_pipeline(config)
        cli.write_reports(r, str(tmp_path / sub))
    for name in ("classification.csv", "sweep.csv", "cost.csv", "summary.json"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"


def test_density_warning_low_n(tmp_path):
    region = geometry.Region([geometry.Polygon(
        np.array([[0, 0], [2, 0], [2, 2], [0, 2]], float))])
    path = tmp_path / "tiny.json"
    geometry.save_region(region, str(path))
    r = cli.run_pipeline(RunConfig(region=str(path), n=50, seed=1, alpha=0.77,
                                   token_loops=False))
    assert any("density warning" in w for w in r.warnings)


def test_score_run_perfect_and_shuffled(tmp_path):
    path = small_region_file(tmp_path)
    config = RunConfig(region=path, n=1500, seed=3, alpha=0.77)
    r = cli.run_pipeline(config)
    # perfect classifier: relabel from the oracle itself
    table = geometry.curve_distance_table(r.region, r.g.positions[1:])
    truth = table.min(axis=0) <= 0.25
    classes = np.zeros(r.g.n + 1, dtype=np.int8)
    classes[1:][truth] = 2
    r.classes = classes
    score = cli.score_run(r, inradius_step=0.1)
    assert score["precision"] == pytest.approx(1.0)
    assert score["recall"] == pytest.approx(1.0)
    # shuffled labels: recall collapses to roughly the base rate
    rng = np.random.Generator(np.random.Philox(8))
    classes2 = np.zeros(r.g.n + 1, dtype=np.int8)
    classes2[1:][rng.permutation(r.g.n) < truth.sum()] = 2
    r.classes = classes2
    score2 = cli.score_run(r, inradius_step=0.1)
    base = truth.mean()
    assert score2["recall"] == pytest.approx(base, abs=4 * math.sqrt(base / truth.sum()))


def test_cli_validate_and_run(tmp_path, capsys):
    path = small_region_file(tmp_path)
    assert cli.main(["validate", "--region", path]) == 0
    out = str(tmp_path / "run")
    rc = cli.main(["run", "--region", path, "--nodes", "900", "--seed", "4",
                   "--alpha", "0.77", "--out", out])
    assert rc == 0
    summary = json.loads(open(os.path.join(out, "summary.json")).read())
    assert summary["config"]["n"] == 900
    captured = capsys.readouterr()
    assert "mu_est" in captured.out


def test_cli_missing_region_file():
    assert cli.main(["run", "--region", "/nonexistent/region.json"]) == cli.EXIT_USAGE


def test_cli_invalid_region(tmp_path):
    bad = geometry.Region([geometry.Polygon(
        np.array([[0, 0], [30, 0], [30, 30], [0, 30]], float)),
        geometry.Polygon(np.array([[1.0, 10], [5, 10], [5, 14], [1.0, 14]]))])
    path = tmp_path / "bad.json"
    geometry.save_region(bad, str(path))
    assert cli.main(["validate", "--region", str(path)]) == cli.EXIT_GEOMETRY


def test_cli_oracle_roundtrip_and_mismatch(tmp_path):
    path = small_region_file(tmp_path)
    out = str(tmp_path / "o")
    args = ["--region", path, "--nodes", "800", "--seed", "6", "--alpha", "0.77",
            "--out", out]
    assert cli.main(["run"] + args) == 0
    assert cli.main(["oracle"] + args) == 0
    score = json.loads(open(os.path.join(out, "oracle_score.json")).read())
    assert 0 <= score["recall"] <= 1
    assert score["band_area_table"]
    # different seed than the recorded provenance
    bad = ["--region", path, "--nodes", "800", "--seed", "7", "--alpha", "0.77",
           "--out", out]
    assert cli.main(["oracle"] + bad) == cli.EXIT_MISMATCH


def test_check_provenance():
    summary = {"config": RunConfig(n=100, seed=1).to_dict()}
    cli.check_provenance(summary, RunConfig(n=100, seed=1))
    with pytest.raises(MismatchedRun):
        cli.check_provenance(summary, RunConfig(n=200, seed=1))


def test_trace_flag_writes_costs(tmp_path):
    path = small_region_file(tmp_path)
    out = str(tmp_path / "t")
    rc = cli.main(["run", "--region", path, "--nodes", "600", "--seed", "9",
                   "--alpha", "0.6", "--out", out, "--trace"])
    assert rc == 0
    cost = open(os.path.join(out, "cost.csv")).read().splitlines()
    assert cost[0] == "phase,broadcasts,id_units,rounds"
    phases = [line.split(",")[0] for line in cost[1:]]
    assert "tree" in phases and "distance_flood" in phases
    trace = open(os.path.join(out, "trace.csv")).read().splitlines()
    assert trace[0] == "round,node,kind,size_units"
    total = sum(int(line.split(",")[1]) for line in cost[1:])
    assert len(trace) - 1 == total  # one line per charged broadcast


def test_paper_repro_smoke(tmp_path, capsys):
    # one seed, loops off: exercises the reporting path end to end
    rc = cli.main(["paper-repro", "--seeds", "1", "--no-loops",
                   "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "paper_repro.json").read_text())
    assert report["mu_analytic"] == pytest.approx(179.65, abs=0.01)
    run = report["runs"][0]
    assert run["components"] == 4
    assert run["mu_rel_err"] <= 0.03
    assert 1.2 <= run["delta_over_mu"] <= 1.5
    out = capsys.readouterr().out
    assert "mu_analytic = 179.65" in out
