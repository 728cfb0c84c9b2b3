"""CLI and persistence tests: schemas, exit codes, artifacts, reruns.

Every subcommand runs in-process through cli() against a temp directory,
so these tests cover the argv surface, the closed config schemas, and the
byte-stability contract of the written artifacts.
"""

import contextlib
import csv
import filecmp
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from cfdeconv import cli_io
from cfdeconv._util import ConfigError
from cfdeconv.cli_io import (
    build_profile_panels,
    cli,
    emit_figure_data,
    load_density,
    load_poly,
    load_report_rows,
    save_density,
    save_report,
    scenario_from_config,
)
from cfdeconv.multiindex_taylor import TaylorPoly, to_json_record
from cfdeconv.reconstruct import DensityGrid, LatticeSpec
from cfdeconv.runner import CellResult, ExperimentReport

GOLDEN_FIGURES = Path(__file__).parent / "golden" / "figures"

POINTMASS_SCENARIO = {
    "variant": "repeated",
    "d1": 1,
    "signal": {"kind": "point_mass", "params": [0.0]},
    "noise1": {"kind": "point_mass"},
    "noise2": {"kind": "point_mass"},
}

SMALL_LATTICE = {"mins": [-2.0, -2.0], "maxs": [2.0, 2.0], "counts": [9, 9]}


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run_cli(args):
    """Invoke the CLI in-process, returning (exit_code, stderr_text)."""
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        rc = cli(args)
    return rc, err.getvalue()


def zero_samples(tmp_path, n):
    path = tmp_path / "samples.csv"
    path.write_text("y1,y2\n" + "0,0\n" * n)
    return str(path)


def make_row(n, **overrides):
    fields = dict(
        n=n, kappa=0.75, replicate=0, seed=0, status="ok",
        contrast_value=0.1, cf_box_error=1.0, l2_raw=float("nan"),
        l2_aligned=float("nan"), shift=(0.0, 0.0), m_trunc=1, m_opt=2,
        omega=1.0, no_density_truth=True, converged=True,
    )
    fields.update(overrides)
    return CellResult(**fields)


def rows_equal(rows_a, rows_b):
    """Field-by-field row comparison treating NaN as equal to NaN."""
    def eq(x, y):
        if isinstance(x, float) and isinstance(y, float):
            return (math.isnan(x) and math.isnan(y)) or x == y
        return x == y

    return len(rows_a) == len(rows_b) and all(
        all(eq(getattr(a, f), getattr(b, f)) for f in a.__dataclass_fields__)
        for a, b in zip(rows_a, rows_b)
    )


class TestExitCodes:
    def test_missing_config_file(self, tmp_path):
        rc, err = run_cli(["estimate", str(tmp_path / "nope.json")])
        assert rc == 2
        assert "no such file" in err

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        rc, err = run_cli(["estimate", str(path)])
        assert rc == 2
        assert "invalid JSON" in err

    def test_non_object_config(self, tmp_path):
        path = tmp_path / "arr.json"
        path.write_text("[1, 2]")
        rc, err = run_cli(["estimate", str(path)])
        assert rc == 2
        assert "JSON object" in err

    def test_unknown_subcommand(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {})
        rc, _ = run_cli(["frobnicate", cfg])
        assert rc == 2

    def test_unknown_config_key(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "samples": zero_samples(tmp_path, 12), "d1": 1, "d2": 1,
            "kappa": 0.75, "S": 1.5, "out_dir": str(tmp_path / "out"),
            "typo_key": 1,
        })
        rc, err = run_cli(["estimate", cfg])
        assert rc == 2
        assert "unknown config keys" in err and "typo_key" in err

    def test_missing_required_key(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "samples": zero_samples(tmp_path, 12), "d1": 1, "d2": 1,
            "kappa": 0.75, "out_dir": str(tmp_path / "out"),
        })
        rc, err = run_cli(["estimate", cfg])
        assert rc == 2
        assert "missing config keys" in err and "S" in err

    def test_kappa_out_of_range(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "samples": zero_samples(tmp_path, 12), "d1": 1, "d2": 1,
            "kappa": 1.5, "S": 1.5, "out_dir": str(tmp_path / "out"),
        })
        rc, err = run_cli(["estimate", cfg])
        assert rc == 2
        assert "kappa" in err

    def test_missing_samples_file(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "samples": str(tmp_path / "ghost.csv"), "d1": 1, "d2": 1,
            "kappa": 0.75, "S": 1.5, "out_dir": str(tmp_path / "out"),
        })
        rc, err = run_cli(["estimate", cfg])
        assert rc == 2
        assert "config error" in err

    def test_wrong_sample_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n0,0\n")
        cfg = write_config(tmp_path, "c.json", {
            "samples": str(path), "d1": 1, "d2": 1,
            "kappa": 0.75, "S": 1.5, "out_dir": str(tmp_path / "out"),
        })
        rc, err = run_cli(["estimate", cfg])
        assert rc == 2
        assert "header" in err

    def test_numerical_failure_is_exit_3(self, tmp_path):
        # an impossible orthonormality certificate fails the basis build
        cfg = write_config(tmp_path, "c.json", {
            "kappa_list": [0.75], "K_list": [2], "K_max": 8,
            "cert_tol": 1e-30, "out_dir": str(tmp_path / "out"),
        })
        rc, err = run_cli(["conjecture", cfg])
        assert rc == 3
        assert "numerical failure" in err and "orthonormality lost" in err


class TestScenarioConfig:
    def test_repeated(self):
        spec = scenario_from_config(POINTMASS_SCENARIO)
        assert spec.variant == "repeated"
        assert (spec.d1, spec.d2) == (1, 1)

    def test_repeated_axis_noise_lists(self):
        spec = scenario_from_config({
            "variant": "repeated", "d1": 2,
            "signal": {"kind": "uniform", "params": [1.0]},
            "noise1": [{"kind": "uniform", "param": 0.3},
                       {"kind": "laplace", "param": 0.2}],
            "noise2": [{"kind": "gaussian", "param": 0.2},
                       {"kind": "point_mass"}],
        })
        assert (spec.d1, spec.d2) == (2, 2)
        assert spec.sample(4, 0).data.shape == (4, 4)

    def test_eiv(self):
        spec = scenario_from_config({
            "variant": "eiv",
            "signal": {"kind": "uniform", "params": [1.0]},
            "noise1": {"kind": "laplace", "param": 0.2},
            "noise2": {"kind": "gaussian", "param": 0.2},
            "link": "cubic_plus_x",
        })
        assert spec.variant == "eiv"
        assert (spec.d1, spec.d2) == (1, 1)

    def test_ica(self):
        spec = scenario_from_config({
            "variant": "ica", "d1": 1,
            "sources": [{"kind": "uniform", "params": [1.0]},
                        {"kind": "uniform", "params": [0.5]}],
            "mixing": [[1.0, 0.5], [0.5, 1.0]],
            "noise1": {"kind": "uniform", "param": 0.3},
            "noise2": {"kind": "uniform", "param": 0.3},
        })
        assert spec.variant == "ica"
        assert (spec.d1, spec.d2) == (1, 1)

    def test_two_point(self):
        spec = scenario_from_config({
            "variant": "two_point",
            "two_point": {"kappa": 0.75, "n": 1000},
            "noise1": {"kind": "point_mass"},
            "noise2": {"kind": "point_mass"},
            "perturbed": True,
        })
        assert spec.variant == "two_point"
        assert (spec.d1, spec.d2) == (1, 1)

    def test_unknown_variant(self):
        with pytest.raises(ConfigError, match="unknown scenario variant"):
            scenario_from_config({"variant": "bogus"})

    def test_unknown_signal_key(self):
        cfg = dict(POINTMASS_SCENARIO, signal={"kind": "point_mass", "extra": 1})
        with pytest.raises(ConfigError, match="unknown config keys in signal"):
            scenario_from_config(cfg)


class TestSimulate:
    def test_pointmass_artifacts(self, tmp_path):
        out = tmp_path / "sim"
        cfg = write_config(tmp_path, "sim.json", {
            "scenario": POINTMASS_SCENARIO, "n": 5, "seed": 7,
            "out_dir": str(out),
        })
        rc, err = run_cli(["simulate", cfg])
        assert rc == 0 and err == ""
        assert sorted(p.name for p in out.iterdir()) == [
            "MANIFEST.json", "config.json", "samples.csv", "summary.json",
        ]
        with open(out / "samples.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["y1", "y2"]
        assert len(rows) == 6
        assert all(row == ["0", "0"] for row in rows[1:])
        summary = json.loads((out / "summary.json").read_text())
        assert summary["variant"] == "repeated"
        assert summary["n"] == 5
        assert set(summary["diagnostics"]) == {
            "h2_probe_min", "noise_cf_floor_1", "noise_cf_floor_2", "nu", "c_nu",
        }

    def test_seed_determinism(self, tmp_path):
        scenario = {
            "variant": "repeated", "d1": 1,
            "signal": {"kind": "uniform", "params": [1.0]},
            "noise1": {"kind": "uniform", "param": 0.3},
            "noise2": {"kind": "uniform", "param": 0.3},
        }
        paths = {}
        for tag, seed in (("a", 3), ("b", 3), ("c", 4)):
            out = tmp_path / tag
            cfg = write_config(tmp_path, f"{tag}.json", {
                "scenario": scenario, "n": 50, "seed": seed, "out_dir": str(out),
            })
            assert run_cli(["simulate", cfg])[0] == 0
            paths[tag] = out / "samples.csv"
        assert filecmp.cmp(paths["a"], paths["b"], shallow=False)
        assert not filecmp.cmp(paths["a"], paths["c"], shallow=False)


@pytest.fixture(scope="module")
def est_run(tmp_path_factory):
    """One estimate run on degenerate point-mass data, shared readonly."""
    tmp_path = tmp_path_factory.mktemp("est")
    out = tmp_path / "est"
    cfg = write_config(tmp_path, "est.json", {
        "samples": zero_samples(tmp_path, 12), "d1": 1, "d2": 1,
        "kappa": 0.75, "S": 1.5, "nodes": 24, "lattice": SMALL_LATTICE,
        "out_dir": str(out),
    })
    rc, err = run_cli(["estimate", cfg])
    assert rc == 0 and err == ""
    return out


class TestEstimate:
    def test_artifacts_written(self, est_run):
        assert sorted(p.name for p in est_run.iterdir()) == [
            "MANIFEST.json", "config.json", "density.csv",
            "density_meta.json", "phi.json", "summary.json",
        ]

    def test_degenerate_fit_is_exact(self, est_run):
        summary = json.loads((est_run / "summary.json").read_text())
        assert float(summary["contrast_value"]) == 0.0
        assert summary["m_opt"] == 2 * summary["m_trunc"]
        # flat CF -> truncated inversion puts (omega/pi)^d at the origin
        omega = float(summary["omega"])
        dens = load_density(est_run / "density.csv", est_run / "density_meta.json")
        center = dens.values[4, 4]
        assert center == pytest.approx((omega / math.pi) ** 2, rel=1e-12)

    def test_reload_poly(self, est_run):
        poly = load_poly(est_run / "phi.json")
        assert poly.cf_candidate
        assert poly.theta[0] == 1.0
        assert poly.theta.shape == poly.orders.shape
        # degenerate data leaves every free coefficient at zero
        assert np.all(poly.theta[1:] == 0.0)


class TestAdapt:
    def test_single_kappa(self, tmp_path):
        out = tmp_path / "adapt"
        cfg = write_config(tmp_path, "adapt.json", {
            "samples": zero_samples(tmp_path, 30), "d1": 1, "d2": 1,
            "kappa_grid": [0.75], "S": 1.5, "nodes": 24,
            "lattice": SMALL_LATTICE, "out_dir": str(out),
        })
        rc, err = run_cli(["adapt", cfg])
        assert rc == 0 and err == ""
        assert sorted(p.name for p in out.iterdir()) == [
            "MANIFEST.json", "config.json", "density.csv",
            "density_meta.json", "selection.json",
        ]
        sel = json.loads((out / "selection.json").read_text())
        assert float(sel["kappa_hat"]) == 0.75
        assert sel["n"] == 30
        # identical halves: fluctuation pilot bottoms out at its floor
        assert float(sel["c_sigma"]) == pytest.approx(1e-12, rel=1e-9)
        (row,) = sel["rows"]
        assert float(row["spread"]) == 0.0
        assert float(row["criterion"]) == float(row["sigma"])

    def test_empty_grid_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "adapt.json", {
            "samples": zero_samples(tmp_path, 30), "d1": 1, "d2": 1,
            "kappa_grid": [], "S": 1.5, "out_dir": str(tmp_path / "out"),
        })
        rc, err = run_cli(["adapt", cfg])
        assert rc == 2
        assert "nonempty" in err


class TestConjecture:
    def test_panels_and_census(self, tmp_path):
        out = tmp_path / "conj"
        cfg = write_config(tmp_path, "conj.json", {
            "kappa_list": [0.75], "K_list": [2, 4], "K_max": 16,
            "census": True, "c1": 0.8, "c2": 0.3,
            "stretch_grid": [-1.5, 1.5, 41], "squeeze_grid": [-10.0, 10.0, 51],
            "out_dir": str(out),
        })
        rc, err = run_cli(["conjecture", cfg])
        assert rc == 0 and err == ""
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_panels"] == 4
        census = summary["census"]["0.75"]
        assert census["ok"] is True
        assert float(census["c0"]) == pytest.approx(0.7698, rel=1e-3)
        assert [row["K"] for row in census["rows"]] == list(range(11, 17))
        assert all(row["count"] >= row["need"] for row in census["rows"])
        names = sorted(p.name for p in (out / "figures").iterdir())
        assert names == [
            "MANIFEST.json",
            "profile_squeeze_kappa0.75_K2.csv",
            "profile_squeeze_kappa0.75_K4.csv",
            "profile_stretch_kappa0.75_K2.csv",
            "profile_stretch_kappa0.75_K4.csv",
        ]

    def test_census_needs_full_holdout(self, tmp_path):
        out = tmp_path / "never"
        cfg = write_config(tmp_path, "conj.json", {
            "kappa_list": [0.75], "K_list": [2], "K_max": 8, "census": True,
            "out_dir": str(out),
        })
        rc, err = run_cli(["conjecture", cfg])
        assert rc == 2
        assert "K_max >= 16" in err
        assert not out.exists()  # rejected before any artifact is written

    def test_k_list_exceeds_k_max(self, tmp_path):
        cfg = write_config(tmp_path, "conj.json", {
            "kappa_list": [0.75], "K_list": [10], "K_max": 8,
            "out_dir": str(tmp_path / "out"),
        })
        rc, err = run_cli(["conjecture", cfg])
        assert rc == 2
        assert "K_list exceeds K_max" in err

    def test_unknown_scaling(self, tmp_path):
        cfg = write_config(tmp_path, "conj.json", {
            "kappa_list": [0.75], "scalings": ["shear"],
            "out_dir": str(tmp_path / "out"),
        })
        rc, err = run_cli(["conjecture", cfg])
        assert rc == 2
        assert "unknown scaling" in err


class TestBoundsCheck:
    def test_small_sweep_holds(self, tmp_path):
        out = tmp_path / "bc"
        cfg = write_config(tmp_path, "bc.json", {
            "kappa_list": [0.75], "S_list": [1.5], "nu_list": [1.0],
            "m_list": [4], "d_list": [1], "n_members": 4,
            "member_degree": 12, "out_dir": str(out),
        })
        rc, err = run_cli(["bounds-check", cfg])
        assert rc == 0 and err == ""
        summary = json.loads((out / "summary.json").read_text())
        assert summary == {"rows": 4, "violations": 0}
        with open(out / "bounds.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["name"] for r in rows] == [
            "truncation_sup", "class_sup", "psi_sum", "sigma1",
        ]
        assert all(r["holds"] == "1" for r in rows)
        for r in rows:
            assert float(r["slack"]) >= 0.0


@pytest.fixture(scope="module")
def twin_runs(tmp_path_factory):
    """The same degenerate plan executed twice into separate run dirs."""
    tmp_path = tmp_path_factory.mktemp("exp")
    outs = []
    for tag in ("run_a", "run_b"):
        out = tmp_path / tag
        cfg = write_config(tmp_path, f"{tag}.json", {
            "scenario": POINTMASS_SCENARIO, "n_list": [12, 24],
            "replicates": 2, "kappa_grid": [0.75], "S": 1.5,
            "nodes": 24, "lattice": SMALL_LATTICE, "seed": 5,
            "out_dir": str(out),
        })
        rc, err = run_cli(["experiment", cfg])
        assert rc == 0 and err == ""
        outs.append(out)
    return outs


class TestExperiment:
    def test_rerun_byte_identical(self, twin_runs):
        run_a, run_b = twin_runs
        assert filecmp.cmp(run_a / "report.csv", run_b / "report.csv", shallow=False)
        assert filecmp.cmp(run_a / "report.json", run_b / "report.json", shallow=False)

    def test_report_reloads(self, twin_runs):
        rows = load_report_rows(twin_runs[0] / "report.csv")
        assert len(rows) == 4
        assert all(r.status == "ok" for r in rows)
        assert all(r.contrast_value == 0.0 and r.cf_box_error == 0.0 for r in rows)
        assert all(math.isnan(r.l2_raw) and r.no_density_truth for r in rows)
        report = json.loads((twin_runs[0] / "report.json").read_text())
        assert set(report["aggregates"]) == {"n=12 kappa=0.75", "n=24 kappa=0.75"}
        for entry in report["aggregates"].values():
            assert entry["n_ok"] == 2

    def test_threads_env_overrides_workers(self, tmp_path, monkeypatch):
        captured = {}

        def fake_run(plan):
            captured["workers"] = plan.workers
            return ExperimentReport(plan_summary={"stub": True},
                                    rows=(make_row(12),))

        monkeypatch.setattr(cli_io, "run", fake_run)
        monkeypatch.setenv("CFDECONV_THREADS", "3")
        cfg = write_config(tmp_path, "exp.json", {
            "scenario": POINTMASS_SCENARIO, "n_list": [12], "replicates": 1,
            "kappa_grid": [0.75], "S": 1.5, "workers": 1,
            "out_dir": str(tmp_path / "out"),
        })
        rc, _ = run_cli(["experiment", cfg])
        assert rc == 0
        assert captured["workers"] == 3

    def test_tuning_override_wiring(self, tmp_path, monkeypatch):
        captured = {}

        def fake_run(plan):
            captured["mode"] = plan.tuning_mode
            captured["m_opt"] = plan.m_opt
            return ExperimentReport(plan_summary={"stub": True},
                                    rows=(make_row(12),))

        monkeypatch.setattr(cli_io, "run", fake_run)
        cfg = write_config(tmp_path, "exp.json", {
            "scenario": POINTMASS_SCENARIO, "n_list": [12], "replicates": 1,
            "kappa_grid": [0.75], "S": 1.5,
            "tuning": {"mode": "override", "m_opt": 4},
            "out_dir": str(tmp_path / "out"),
        })
        rc, _ = run_cli(["experiment", cfg])
        assert rc == 0
        assert captured == {"mode": "override", "m_opt": 4}

    def test_tuning_unknown_key(self, tmp_path):
        cfg = write_config(tmp_path, "exp.json", {
            "scenario": POINTMASS_SCENARIO, "n_list": [12], "replicates": 1,
            "kappa_grid": [0.75], "S": 1.5,
            "tuning": {"mode": "theoretical", "degree": 4},
            "out_dir": str(tmp_path / "out"),
        })
        rc, err = run_cli(["experiment", cfg])
        assert rc == 2
        assert "unknown config keys in tuning" in err


class TestPersistence:
    def test_density_roundtrip_exact(self, tmp_path, rng):
        lattice = LatticeSpec(mins=(-1.0, 0.0), maxs=(1.0, 2.0), counts=(5, 4))
        grid = DensityGrid(lattice=lattice, values=rng.normal(size=(5, 4)),
                           imag_residue=1.25e-9)
        save_density(grid, tmp_path / "d.csv", tmp_path / "d.json")
        back = load_density(tmp_path / "d.csv", tmp_path / "d.json")
        assert back.lattice == lattice
        assert np.array_equal(back.values, grid.values)
        assert back.imag_residue == grid.imag_residue

    def test_density_header_guard(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n")
        (tmp_path / "x.json").write_text(json.dumps(
            {"mins": ["0"], "maxs": ["1"], "counts": [2], "imag_residue": "0"}
        ))
        with pytest.raises(ConfigError, match="not a density file"):
            load_density(tmp_path / "x.csv", tmp_path / "x.json")

    def test_poly_roundtrip(self, tmp_path):
        theta = np.array([1.0, 0.2, -0.1, 0.0, 0.3, 0.05, 0.0, -0.02, 0.01, 0.004])
        poly = TaylorPoly(dims=(1, 1), max_degree=3, theta=theta)
        (tmp_path / "phi.json").write_text(json.dumps(to_json_record(poly)))
        back = load_poly(tmp_path / "phi.json")
        assert back.dims == (1, 1)
        assert back.max_degree == 3
        assert back.cf_candidate
        assert np.array_equal(back.theta, poly.theta)

    def test_report_roundtrip_nan_aware(self, tmp_path):
        rows = (
            make_row(12, contrast_value=0.25, cf_box_error=0.5,
                     l2_raw=0.1, l2_aligned=0.08, no_density_truth=False),
            make_row(12, replicate=1, status="error", contrast_value=float("nan"),
                     cf_box_error=float("nan"), converged=False,
                     message="solver exploded, twice"),
            make_row(24, shift=(0.05, -0.1)),
        )
        report = ExperimentReport(plan_summary={"n_list": [12, 24]}, rows=rows)
        save_report(report, tmp_path / "r.csv", tmp_path / "r.json")
        back = load_report_rows(tmp_path / "r.csv")
        assert rows_equal(back, list(rows))
        # commas in messages survive the CSV layer
        assert back[1].message == "solver exploded, twice"


class TestFigureData:
    def test_empty_panel_list(self, tmp_path):
        target = tmp_path / "figs"
        assert emit_figure_data([], target) == []
        assert sorted(p.name for p in target.iterdir()) == ["MANIFEST.json"]
        manifest = json.loads((target / "MANIFEST.json").read_text())
        assert manifest["panels"] == []

    def test_single_panel_contents(self, tmp_path):
        xs = np.linspace(-1.0, 1.0, 5)
        panel = {"scaling": "stretch", "kappa": 0.75, "K": 3,
                 "x": xs, "value": xs**2}
        (path,) = emit_figure_data([panel], tmp_path / "figs")
        assert path.name == "profile_stretch_kappa0.75_K3.csv"
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x", "value", "kappa", "K"]
        assert len(rows) == 6
        assert [float(r[0]) for r in rows[1:]] == pytest.approx(list(xs))
        assert [float(r[1]) for r in rows[1:]] == pytest.approx(list(xs**2))
        manifest = json.loads((tmp_path / "figs" / "MANIFEST.json").read_text())
        assert manifest["panels"] == [{
            "file": path.name, "scaling": "stretch", "kappa": "0.75",
            "K": 3, "points": 5,
        }]

    def test_regenerated_panels_match_golden(self, tmp_path):
        """Default grids reproduce the stored figure data byte for byte."""
        panels = build_profile_panels([0.55], [8], ["stretch", "squeeze"])
        written = emit_figure_data(panels, tmp_path / "figs")
        assert len(written) == 2
        for path in written:
            golden = GOLDEN_FIGURES / path.name
            assert golden.exists()
            assert filecmp.cmp(path, golden, shallow=False), path.name
        manifest = json.loads((tmp_path / "figs" / "MANIFEST.json").read_text())
        points = {p["file"]: p["points"] for p in manifest["panels"]}
        assert points["profile_stretch_kappa0.55_K8.csv"] == 301
        assert points["profile_squeeze_kappa0.55_K8.csv"] == 401


class TestManifest:
    def test_hashes_cover_nested_files(self, tmp_path):
        out = tmp_path / "conj"
        cfg = write_config(tmp_path, "conj.json", {
            "kappa_list": [0.75], "K_list": [2], "K_max": 8,
            "stretch_grid": [-1.5, 1.5, 21], "squeeze_grid": [-10.0, 10.0, 21],
            "out_dir": str(out),
        })
        assert run_cli(["conjecture", cfg])[0] == 0
        manifest = json.loads((out / "MANIFEST.json").read_text())
        assert manifest["subcommand"] == "conjecture"
        paths = [entry["path"] for entry in manifest["files"]]
        assert "MANIFEST.json" not in paths  # the manifest never lists itself
        assert "figures/MANIFEST.json" in paths
        assert "config.json" in paths
        listed = set(paths)
        on_disk = {
            p.relative_to(out).as_posix()
            for p in out.rglob("*") if p.is_file()
        } - {"MANIFEST.json"}
        assert listed == on_disk
        for entry in manifest["files"]:
            blob = (out / entry["path"]).read_bytes()
            assert hashlib.sha256(blob).hexdigest() == entry["sha256"]
            assert len(blob) == entry["bytes"]
