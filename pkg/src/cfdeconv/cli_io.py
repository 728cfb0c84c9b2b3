"""Command-line surface: config schema, run directories, persistence.

Every subcommand reads one JSON config file, validates it against a closed
key schema (unknown keys are errors), and writes its outputs into a run
directory containing a copy of the config, a MANIFEST with content hashes,
and the artifact files.  All floats are printed with 17 significant digits
so reruns are byte-identical.  Exit codes: 0 success, 2 config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import shutil
import sys
from pathlib import Path

import numpy as np

from ._util import ConfigError, NumericalError, fmt17
from . import ecf
from .adaptive import sigma_rule
from .conjecture_lab import (
    WeightSpec,
    build_two_point,
    build_weighted_basis,
    census_protocol,
    make_instance,
    scaled_profile,
)
from .contrast import make_grid
from .legendre_bounds import bound_suite
from .multiindex_taylor import from_json_record, to_json_record
from .reconstruct import DensityGrid, LatticeSpec
from .runner import ExperimentPlan, adapt_from_samples, estimate_once, run
from .scenarios import (
    AxisNoise,
    ScenarioSpec,
    SignalSpec,
    make_eiv,
    make_ica,
    make_repeated,
    make_two_point,
)

_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# schema helpers

def _require_keys(cfg: dict, allowed, required, where: str) -> None:
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config keys in {where}: {', '.join(unknown)}")
    missing = sorted(set(required) - set(cfg))
    if missing:
        raise ConfigError(f"missing config keys in {where}: {', '.join(missing)}")


def _as_kappa(value, key: str) -> float:
    k = float(value)
    if not (0.0 < k <= 1.0):
        raise ConfigError(f"{key} must lie in (0, 1], got {value}")
    return k


def _as_pos(value, key: str) -> float:
    x = float(value)
    if not (x > 0):
        raise ConfigError(f"{key} must be positive, got {value}")
    return x


def _as_int(value, key: str, minimum: int) -> int:
    n = int(value)
    if n < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return n


def _as_nodes(value) -> int:
    n = int(value)
    if n < 2:
        raise ConfigError(f"nodes must be >= 2, got {value}")
    return n


def _as_kappa_grid(value, key: str) -> tuple:
    grid = tuple(_as_kappa(v, key) for v in value)
    if not grid:
        raise ConfigError(f"{key} must be a nonempty list")
    return grid


def _lattice_from_config(cfg, d: int) -> LatticeSpec:
    if cfg is None:
        return LatticeSpec(mins=(-4.0,) * d, maxs=(4.0,) * d, counts=(33,) * d)
    _require_keys(cfg, {"mins", "maxs", "counts"}, {"mins", "maxs", "counts"}, "lattice")
    return LatticeSpec(
        mins=tuple(float(v) for v in cfg["mins"]),
        maxs=tuple(float(v) for v in cfg["maxs"]),
        counts=tuple(int(v) for v in cfg["counts"]),
    )


# ---------------------------------------------------------------------------
# scenario configuration

_SIGNAL_KEYS = {"kind", "params"}
_NOISE_KEYS = {"kind", "param", "centered"}
_SCENARIO_KEYS = {
    "variant", "d1", "signal", "noise1", "noise2", "link", "sources",
    "mixing", "nu", "c_nu", "two_point", "perturbed",
}


def _signal_from_config(cfg: dict) -> SignalSpec:
    _require_keys(cfg, _SIGNAL_KEYS, {"kind"}, "signal")
    return SignalSpec(kind=cfg["kind"], params=tuple(cfg.get("params", ())))


def _noise_from_config(cfg, d: int):
    if isinstance(cfg, list):
        return [_noise_from_config(item, d) for item in cfg]
    _require_keys(cfg, _NOISE_KEYS, {"kind"}, "noise")
    return AxisNoise(
        kind=cfg["kind"],
        param=float(cfg.get("param", 1.0)),
        centered=bool(cfg.get("centered", True)),
    )


_TWO_POINT_KEYS = {
    "kappa", "x0", "K_max", "n", "a", "c_K", "c_b", "c_mass", "beta",
}


def _two_point_from_config(cfg: dict):
    _require_keys(cfg, _TWO_POINT_KEYS, {"kappa", "n"}, "two_point")
    spec = WeightSpec(
        kappa=_as_kappa(cfg["kappa"], "two_point.kappa"),
        x0=float(cfg.get("x0", 1.0)),
    )
    basis = build_weighted_basis(spec, K_max=int(cfg.get("K_max", 16)))
    inst = make_instance(
        basis, _as_int(cfg["n"], "two_point.n", 3),
        a=float(cfg.get("a", 0.4)),
        beta=float(cfg.get("beta", 1.0)),
        c_K=float(cfg.get("c_K", 1.0)),
        c_b=float(cfg.get("c_b", 4.0)),
        c_mass=float(cfg.get("c_mass", 1e-8)),
    )
    return build_two_point(inst, basis)


def scenario_from_config(cfg: dict) -> ScenarioSpec:
    _require_keys(cfg, _SCENARIO_KEYS, {"variant"}, "scenario")
    variant = cfg["variant"]
    nu = _as_pos(cfg.get("nu", 1.0), "scenario.nu")
    c_nu = _as_pos(cfg.get("c_nu", 1e-3), "scenario.c_nu")
    if variant == "repeated":
        d1 = _as_int(cfg.get("d1", 1), "scenario.d1", 1)
        return make_repeated(
            _signal_from_config(cfg["signal"]),
            _noise_from_config(cfg["noise1"], d1),
            _noise_from_config(cfg["noise2"], d1),
            d1=d1, nu=nu, c_nu=c_nu,
        )
    if variant == "eiv":
        return make_eiv(
            _signal_from_config(cfg["signal"]),
            _noise_from_config(cfg["noise1"], 1),
            _noise_from_config(cfg["noise2"], 1),
            link=cfg.get("link", "cubic_plus_x"), nu=nu, c_nu=c_nu,
        )
    if variant == "ica":
        sources = [_signal_from_config(s) for s in cfg["sources"]]
        d = len(sources)
        d1 = _as_int(cfg.get("d1", 1), "scenario.d1", 1)
        return make_ica(
            sources, np.asarray(cfg["mixing"], dtype=np.float64),
            _noise_from_config(cfg["noise1"], d1),
            _noise_from_config(cfg["noise2"], d - d1),
            d1=d1, nu=nu, c_nu=c_nu,
        )
    if variant == "two_point":
        tp = _two_point_from_config(cfg["two_point"])
        return make_two_point(
            tp,
            _noise_from_config(cfg["noise1"], tp.instance.d1),
            _noise_from_config(cfg["noise2"], tp.instance.d2),
            perturbed=bool(cfg.get("perturbed", False)), nu=nu, c_nu=c_nu,
        )
    raise ConfigError(f"unknown scenario variant {variant!r}")


# ---------------------------------------------------------------------------
# persistence

def load_poly(path):
    """Reload a persisted CF candidate (inverse of the phi.json dump)."""
    with open(path) as fh:
        return from_json_record(json.load(fh))


def save_density(grid: DensityGrid, csv_path, meta_path) -> None:
    mesh = np.stack(np.meshgrid(*grid.lattice.axes(), indexing="ij"), axis=-1)
    pts = mesh.reshape(-1, grid.lattice.d)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{a + 1}" for a in range(grid.lattice.d)] + ["value"])
        for pt, val in zip(pts, grid.values.reshape(-1)):
            writer.writerow([fmt17(c) for c in pt] + [fmt17(val)])
    meta = {
        "mins": [fmt17(v) for v in grid.lattice.mins],
        "maxs": [fmt17(v) for v in grid.lattice.maxs],
        "counts": list(grid.lattice.counts),
        "imag_residue": fmt17(grid.imag_residue),
    }
    _dump_json(meta, meta_path)


def load_density(csv_path, meta_path) -> DensityGrid:
    with open(meta_path) as fh:
        meta = json.load(fh)
    lattice = LatticeSpec(
        mins=tuple(float(v) for v in meta["mins"]),
        maxs=tuple(float(v) for v in meta["maxs"]),
        counts=tuple(int(v) for v in meta["counts"]),
    )
    vals = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "value":
            raise ConfigError(f"not a density file: {csv_path}")
        for row in reader:
            vals.append(float(row[-1]))
    values = np.asarray(vals, dtype=np.float64).reshape(lattice.counts)
    return DensityGrid(lattice=lattice, values=values,
                       imag_residue=float(meta["imag_residue"]))


def save_report(report, csv_path, json_path) -> None:
    fields = [
        "n", "kappa", "replicate", "seed", "status", "contrast_value",
        "cf_box_error", "l2_raw", "l2_aligned", "shift", "m_trunc",
        "m_opt", "omega", "no_density_truth", "converged", "message",
    ]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in report.rows:
            rec = []
            for name in fields:
                val = getattr(row, name)
                if name == "shift":
                    rec.append(";".join(fmt17(s) for s in val))
                elif isinstance(val, bool):
                    rec.append(str(int(val)))
                elif isinstance(val, float):
                    rec.append(fmt17(val))
                else:
                    rec.append(str(val))
            writer.writerow(rec)
    _dump_json(
        {"plan": report.plan_summary, "aggregates": report.aggregates}, json_path
    )


def load_report_rows(csv_path) -> list:
    from .runner import CellResult

    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(CellResult(
                n=int(rec["n"]), kappa=float(rec["kappa"]),
                replicate=int(rec["replicate"]), seed=int(rec["seed"]),
                status=rec["status"],
                contrast_value=float(rec["contrast_value"]),
                cf_box_error=float(rec["cf_box_error"]),
                l2_raw=float(rec["l2_raw"]),
                l2_aligned=float(rec["l2_aligned"]),
                shift=tuple(float(s) for s in rec["shift"].split(";")),
                m_trunc=int(rec["m_trunc"]), m_opt=int(rec["m_opt"]),
                omega=float(rec["omega"]),
                no_density_truth=bool(int(rec["no_density_truth"])),
                converged=bool(int(rec["converged"])),
                message=rec["message"],
            ))
    return rows


def _dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return fmt17(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, subcommand: str) -> None:
    entries = []
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.relative_to(out_dir).as_posix() != "MANIFEST.json":
            entries.append({
                "path": p.relative_to(out_dir).as_posix(),
                "sha256": _sha256(p),
                "bytes": p.stat().st_size,
            })
    _dump_json(
        {"schema_version": _SCHEMA_VERSION, "subcommand": subcommand,
         "files": entries},
        out_dir / "MANIFEST.json",
    )


def _open_run_dir(cfg: dict, config_path) -> Path:
    if "out_dir" not in cfg:
        raise ConfigError("missing config keys: out_dir")
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(config_path, out / "config.json")
    return out


# ---------------------------------------------------------------------------
# figure data

def emit_figure_data(panels, target) -> list:
    """Write one CSV per profile panel plus a MANIFEST JSON.

    Each panel is a mapping with keys scaling, kappa, K, x, value.  Column
    order is fixed (x, value, kappa, K) and floats use 17 significant
    digits, so regeneration under identical settings is byte-stable.
    """
    target = Path(target)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    listing = []
    for panel in panels:
        scaling = panel["scaling"]
        kappa = float(panel["kappa"])
        K = int(panel["K"])
        name = f"profile_{scaling}_kappa{kappa:g}_K{K}.csv"
        path = target / name
        xs = np.asarray(panel["x"], dtype=np.float64)
        vals = np.asarray(panel["value"], dtype=np.float64)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "value", "kappa", "K"])
            for x, v in zip(xs, vals):
                writer.writerow([fmt17(x), fmt17(v), fmt17(kappa), str(K)])
        written.append(path)
        listing.append({
            "file": name, "scaling": scaling, "kappa": fmt17(kappa),
            "K": K, "points": int(xs.size),
        })
    _dump_json({"schema_version": _SCHEMA_VERSION, "panels": listing},
               target / "MANIFEST.json")
    return written


_SCALING_GRIDS = {"stretch": (-1.5, 1.5, 301), "squeeze": (-10.0, 10.0, 401)}


def build_profile_panels(kappa_list, K_list, scalings, basis_opts=None,
                         grids=None) -> list:
    """Evaluate the rescaled weighted-projection profiles for figure export."""
    grids = dict(_SCALING_GRIDS, **(grids or {}))
    basis_opts = basis_opts or {}
    panels = []
    K_max = max(K_list)
    for kappa in kappa_list:
        basis = build_weighted_basis(
            WeightSpec(kappa=kappa), K_max=K_max, **basis_opts
        )
        for scaling in scalings:
            lo, hi, count = grids[scaling]
            xs = np.linspace(lo, hi, count)
            for K in K_list:
                panels.append({
                    "scaling": scaling, "kappa": kappa, "K": K, "x": xs,
                    "value": scaled_profile(basis, K, scaling, xs),
                })
    return panels


# ---------------------------------------------------------------------------
# subcommands

_SIM_KEYS = {"scenario", "n", "seed", "out_dir"}


def _cmd_simulate(cfg: dict, config_path) -> int:
    _require_keys(cfg, _SIM_KEYS, {"scenario", "n", "out_dir"}, "simulate")
    scenario = scenario_from_config(cfg["scenario"])
    n = _as_int(cfg["n"], "n", 1)
    samples = scenario.sample(n, int(cfg.get("seed", 0)))
    out = _open_run_dir(cfg, config_path)
    ecf.export_csv(samples, out / "samples.csv")
    _dump_json(
        {"variant": scenario.variant, "n": n, "d1": scenario.d1,
         "d2": scenario.d2, "diagnostics": scenario.diagnostics},
        out / "summary.json",
    )
    _write_manifest(out, "simulate")
    return 0


_EST_KEYS = {
    "samples", "d1", "d2", "kappa", "S", "nu", "nodes", "m_opt", "c_kappa",
    "restarts", "lattice", "seed", "out_dir",
}


def _cmd_estimate(cfg: dict, config_path) -> int:
    _require_keys(cfg, _EST_KEYS, {"samples", "d1", "d2", "kappa", "S", "out_dir"},
                  "estimate")
    d1 = _as_int(cfg["d1"], "d1", 1)
    d2 = _as_int(cfg["d2"], "d2", 1)
    kappa = _as_kappa(cfg["kappa"], "kappa")
    S = _as_pos(cfg["S"], "S")
    nu = _as_pos(cfg.get("nu", 1.0), "nu")
    nodes = _as_nodes(cfg.get("nodes", 48))
    lattice = _lattice_from_config(cfg.get("lattice"), d1 + d2)
    samples = ecf.load_csv(cfg["samples"], d1, d2)
    grid = make_grid(nu, (d1, d2), nodes)
    out = _open_run_dir(cfg, config_path)
    outcome = estimate_once(
        samples, grid, lattice, kappa=kappa, S=S, nu=nu,
        m_opt=cfg.get("m_opt"), c_kappa=cfg.get("c_kappa"),
        restarts=int(cfg.get("restarts", 4)), seed=int(cfg.get("seed", 0)),
    )
    record = to_json_record(outcome.result.estimate)
    _dump_json(record, out / "phi.json")
    save_density(outcome.density, out / "density.csv", out / "density_meta.json")
    _dump_json(
        {
            "contrast_value": outcome.result.value,
            "converged": outcome.result.converged,
            "restarts_used": outcome.result.restarts_used,
            "m_trunc": outcome.m_trunc, "m_opt": outcome.m_opt,
            "omega": outcome.omega,
            "imag_residue": outcome.density.imag_residue,
        },
        out / "summary.json",
    )
    _write_manifest(out, "estimate")
    return 0


_ADAPT_KEYS = {
    "samples", "d1", "d2", "kappa_grid", "S", "beta", "nu", "nodes",
    "c_kappa", "restarts", "lattice", "align_window", "align_step", "seed",
    "out_dir",
}


def _cmd_adapt(cfg: dict, config_path) -> int:
    _require_keys(cfg, _ADAPT_KEYS,
                  {"samples", "d1", "d2", "kappa_grid", "S", "out_dir"}, "adapt")
    d1 = _as_int(cfg["d1"], "d1", 1)
    d2 = _as_int(cfg["d2"], "d2", 1)
    kappa_grid = _as_kappa_grid(cfg["kappa_grid"], "kappa_grid")
    S = _as_pos(cfg["S"], "S")
    nu = _as_pos(cfg.get("nu", 1.0), "nu")
    beta = _as_pos(cfg.get("beta", 1.0), "beta")
    nodes = _as_nodes(cfg.get("nodes", 48))
    lattice = _lattice_from_config(cfg.get("lattice"), d1 + d2)
    samples = ecf.load_csv(cfg["samples"], d1, d2)
    grid = make_grid(nu, (d1, d2), nodes)
    out = _open_run_dir(cfg, config_path)
    outcome = adapt_from_samples(
        samples, grid, lattice, kappa_grid=kappa_grid, S=S, beta=beta, nu=nu,
        c_kappa=cfg.get("c_kappa"), restarts=int(cfg.get("restarts", 4)),
        seed=int(cfg.get("seed", 0)),
    )
    save_density(outcome.chosen, out / "density.csv", out / "density_meta.json")
    _dump_json(
        {
            "kappa_hat": outcome.kappa_hat,
            "c_sigma": outcome.c_sigma,
            "n": samples.n,
            "rows": [
                {"kappa": r.kappa, "sigma": r.sigma, "spread": r.spread,
                 "criterion": r.criterion}
                for r in outcome.selection.rows
            ],
        },
        out / "selection.json",
    )
    _write_manifest(out, "adapt")
    return 0


_CONJ_KEYS = {
    "kappa_list", "K_list", "K_max", "scalings", "panels", "nodes",
    "cert_tol", "c1", "c2", "census", "stretch_grid", "squeeze_grid",
    "out_dir",
}


def _cmd_conjecture(cfg: dict, config_path) -> int:
    _require_keys(cfg, _CONJ_KEYS, {"kappa_list", "out_dir"}, "conjecture")
    kappa_list = _as_kappa_grid(cfg["kappa_list"], "kappa_list")
    K_max = _as_int(cfg.get("K_max", 16), "K_max", 1)
    K_list = [
        _as_int(K, "K_list entry", 1) for K in cfg.get("K_list", range(1, K_max + 1))
    ]
    if max(K_list) > K_max:
        raise ConfigError("K_list exceeds K_max")
    scalings = list(cfg.get("scalings", ["stretch", "squeeze"]))
    for s in scalings:
        if s not in _SCALING_GRIDS:
            raise ConfigError(f"unknown scaling {s!r}")
    census = bool(cfg.get("census", False))
    if census and K_max < 16:
        raise ConfigError("census needs K_max >= 16 to cover its holdout range")
    basis_opts = {}
    if "panels" in cfg:
        basis_opts["panels"] = _as_int(cfg["panels"], "panels", 1)
    if "nodes" in cfg:
        basis_opts["nodes"] = _as_nodes(cfg["nodes"])
    if "cert_tol" in cfg:
        basis_opts["cert_tol"] = _as_pos(cfg["cert_tol"], "cert_tol")
    grids = {}
    if "stretch_grid" in cfg:
        lo, hi, count = cfg["stretch_grid"]
        grids["stretch"] = (float(lo), float(hi), int(count))
    if "squeeze_grid" in cfg:
        lo, hi, count = cfg["squeeze_grid"]
        grids["squeeze"] = (float(lo), float(hi), int(count))
    out = _open_run_dir(cfg, config_path)
    panels = build_profile_panels(kappa_list, K_list, scalings,
                                  basis_opts=basis_opts, grids=grids)
    emit_figure_data(panels, out / "figures")
    summary = {"kappa_list": list(kappa_list), "K_max": K_max,
               "n_panels": len(panels), "census": {}}
    if census:
        c1 = _as_pos(cfg.get("c1", 0.8), "c1")
        c2 = _as_pos(cfg.get("c2", 0.3), "c2")
        for kappa in kappa_list:
            basis = build_weighted_basis(WeightSpec(kappa=kappa), K_max=K_max,
                                         **basis_opts)
            c0, rows, ok = census_protocol(basis, c1, c2)
            summary["census"][fmt17(kappa)] = {
                "c0": c0, "ok": ok,
                "rows": [{"K": K, "count": cnt, "need": need}
                         for K, cnt, need in rows],
            }
    _dump_json(summary, out / "summary.json")
    _write_manifest(out, "conjecture")
    return 0


_BOUNDS_KEYS = {
    "kappa_list", "S_list", "nu_list", "m_list", "d_list", "n_members",
    "member_degree", "seed", "out_dir",
}


def _cmd_bounds_check(cfg: dict, config_path) -> int:
    _require_keys(cfg, _BOUNDS_KEYS, {"out_dir"}, "bounds-check")
    kappa_list = _as_kappa_grid(cfg.get("kappa_list", [0.55, 0.75, 1.0]),
                                "kappa_list")
    S_list = [_as_pos(s, "S_list entry") for s in cfg.get("S_list", [0.5, 1.0, 2.0])]
    nu_list = [_as_pos(v, "nu_list entry") for v in cfg.get("nu_list", [0.5, 1.0])]
    m_list = [_as_int(m, "m_list entry", 1) for m in cfg.get("m_list", [2, 3, 4, 5, 6])]
    d_list = [_as_int(d, "d_list entry", 1) for d in cfg.get("d_list", [1, 2])]
    n_members = _as_int(cfg.get("n_members", 25), "n_members", 1)
    member_degree = _as_int(cfg.get("member_degree", 30), "member_degree", 1)
    seed = int(cfg.get("seed", 0))
    out = _open_run_dir(cfg, config_path)
    rows = []
    violations = 0
    for kappa in kappa_list:
        for S in S_list:
            for nu in nu_list:
                for d in d_list:
                    for m in m_list:
                        reports = bound_suite(
                            kappa, S, nu, d, m, n_members=n_members,
                            seed=seed, member_degree=member_degree,
                        )
                        for rep in reports:
                            ok = rep.holds()
                            violations += 0 if ok else 1
                            rows.append([
                                rep.name, fmt17(kappa), fmt17(S), fmt17(nu),
                                str(d), str(m), fmt17(rep.bound),
                                fmt17(rep.measured), fmt17(rep.slack),
                                str(int(ok)),
                            ])
    with open(out / "bounds.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "kappa", "S", "nu", "d", "m", "bound",
                         "measured", "slack", "holds"])
        writer.writerows(rows)
    _dump_json({"rows": len(rows), "violations": violations},
               out / "summary.json")
    _write_manifest(out, "bounds-check")
    return 0 if violations == 0 else 3


_EXP_KEYS = {
    "scenario", "n_list", "replicates", "kappa_grid", "S", "beta", "nu",
    "nodes", "tuning", "c_kappa", "lattice", "align_window", "align_step",
    "seed", "restarts", "workers", "cell_budget_s", "out_dir",
}


def _cmd_experiment(cfg: dict, config_path) -> int:
    _require_keys(
        cfg, _EXP_KEYS,
        {"scenario", "n_list", "replicates", "kappa_grid", "S", "out_dir"},
        "experiment",
    )
    scenario = scenario_from_config(cfg["scenario"])
    tuning = cfg.get("tuning", {"mode": "theoretical"})
    _require_keys(tuning, {"mode", "m_opt"}, {"mode"}, "tuning")
    workers = int(os.environ.get("CFDECONV_THREADS", cfg.get("workers", 1)))
    plan = ExperimentPlan(
        scenario=scenario,
        n_list=tuple(cfg["n_list"]),
        replicates=_as_int(cfg["replicates"], "replicates", 1),
        kappa_grid=_as_kappa_grid(cfg["kappa_grid"], "kappa_grid"),
        S=_as_pos(cfg["S"], "S"),
        beta=_as_pos(cfg.get("beta", 1.0), "beta"),
        nu=_as_pos(cfg.get("nu", 1.0), "nu"),
        nodes_per_axis=_as_nodes(cfg.get("nodes", 48)),
        tuning_mode=tuning["mode"],
        m_opt=tuning.get("m_opt"),
        c_kappa=cfg.get("c_kappa"),
        lattice=_lattice_from_config(cfg.get("lattice"), scenario.d)
        if cfg.get("lattice") is not None else None,
        align_window=float(cfg.get("align_window", 0.5)),
        align_step=float(cfg.get("align_step", 0.05)),
        seed=int(cfg.get("seed", 0)),
        restarts=_as_int(cfg.get("restarts", 4), "restarts", 1),
        workers=workers,
        cell_budget_s=cfg.get("cell_budget_s"),
    )
    out = _open_run_dir(cfg, config_path)
    report = run(plan)
    save_report(report, out / "report.csv", out / "report.json")
    _write_manifest(out, "experiment")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "adapt": _cmd_adapt,
    "conjecture": _cmd_conjecture,
    "bounds-check": _cmd_bounds_check,
    "experiment": _cmd_experiment,
}


def cli(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cfdeconv",
        description="Deconvolution with unknown noise: estimation, "
                    "adaptation, bound checks, and figure data.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="path to a JSON config file")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        print(f"config error: no such file {args.config}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"config error: invalid JSON in {args.config}: {exc}",
              file=sys.stderr)
        return 2
    if not isinstance(cfg, dict):
        print("config error: top-level config must be a JSON object",
              file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.subcommand](cfg, args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli())
