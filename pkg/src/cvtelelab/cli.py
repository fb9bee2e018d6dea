"""Command-line front end.

Scenarios configure and run teleportation experiments and emit
machine-readable JSON reports (variances in absolute units and dB,
fidelities with threshold flags and margins) plus optional CSV/grid
artifacts.  Configs are TOML; unknown fields are rejected, not ignored,
and every run is reproducible from (config, seed).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .chain import (
    ChainSpec,
    accumulate_noise,
    run_chain,
    scan_swap_gain,
    sequential_fidelity_ideal,
    threshold_squeezing,
)
from .states import make_coherent, make_vacuum, variance_to_db
from .teleport import TeleporterConfig, calibrate_gain
from .tomography import (
    GridSpec,
    ScanSpec,
    acquire,
    inverse_radon,
    reconstruction_error,
    save_dataset,
    save_wigner_grid,
    simulate_figure4,
)
from .teleport import teleport_analytic

OUT_DIR_ENV_VAR = "CV_TELELAB_OUT"

SCENARIOS = ("teleport", "chain", "swap", "tomography", "figure4", "thresholds")

# Default two-hop experiment: per-hop output variances in dB above vacuum.
DEFAULT_HOPS = (
    {"db_x": 2.5, "db_p": 2.8, "g_x": 1.0, "g_p": 1.0},
    {"db_x": 2.3, "db_p": 2.2, "g_x": 1.0, "g_p": 1.0},
)

DEFAULT_CONFIG = {
    "scenario": "chain",
    "seed": 12345,
    "input": {"alpha_x": 1.0, "alpha_p": 1.0},
    "hops": [dict(h) for h in DEFAULT_HOPS],
    "run": {"mode": "analytic", "n_shots": 100_000},
    "tomography": {
        "source": "coherent",
        "n_samples": 100_000,
        "cutoff": 6.0,
        "phase_bins": 180,
        "quadrature_bins": 128,
        "grid_extent": 6.0,
        "grid_points": 121,
        "scan": "grid",
        "amplitude": 1.0,
        "phase_deg": 45.0,
        "csv_matrix": False,
    },
    "swap": {"r": 0.1, "gain_min": 0.1, "gain_max": 2.0, "gain_step": 0.01},
    "thresholds": {"n": 2, "target_fidelity": 0.5},
}


def default_config() -> dict:
    return copy.deepcopy(DEFAULT_CONFIG)


def load_config_file(path: "str | Path") -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def merge_config(overrides: dict) -> dict:
    """Overlay a (possibly partial) config onto the defaults."""
    merged = default_config()
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_keys(section: dict, allowed: dict, prefix: str, problems: list):
    for key in section:
        if key not in allowed:
            problems.append(f"{prefix}{key}: unknown field")


def validate_config(config: dict) -> list:
    """Schema plus physicality diagnostics; an empty list means runnable."""
    problems: list[str] = []
    top_allowed = {
        "scenario",
        "seed",
        "out_dir",
        "input",
        "hops",
        "run",
        "tomography",
        "swap",
        "thresholds",
    }
    _check_keys(config, {k: None for k in top_allowed}, "", problems)

    scenario = config.get("scenario")
    if scenario not in SCENARIOS:
        problems.append(f"scenario: must be one of {', '.join(SCENARIOS)} (got {scenario!r})")
    if not isinstance(config.get("seed"), int) or isinstance(config.get("seed"), bool):
        problems.append("seed: must be an integer")
    elif config["seed"] < 0:
        problems.append("seed: must be nonnegative")
    if "out_dir" in config and not isinstance(config["out_dir"], str):
        problems.append("out_dir: must be a string path")

    inp = config.get("input", {})
    if not isinstance(inp, dict):
        problems.append("input: must be a table")
    else:
        _check_keys(inp, {"alpha_x": 0, "alpha_p": 0}, "input.", problems)
        for key in ("alpha_x", "alpha_p"):
            if key in inp and not _is_number(inp[key]):
                problems.append(f"input.{key}: must be a number")

    hops = config.get("hops")
    if not isinstance(hops, list) or not hops:
        problems.append("hops: must be a nonempty list of hop tables")
        hops = []
    for i, hop in enumerate(hops):
        where = f"hops[{i}]."
        if not isinstance(hop, dict):
            problems.append(f"hops[{i}]: must be a table")
            continue
        _check_keys(
            hop, {"db_x": 0, "db_p": 0, "r": 0, "excess": 0, "g_x": 0, "g_p": 0}, where, problems
        )
        has_db = "db_x" in hop or "db_p" in hop
        has_r = "r" in hop
        if has_db and has_r:
            problems.append(f"hops[{i}]: give either db_x/db_p or r, not both")
        elif has_db:
            max_db = 10.0 * math.log10(3.0)
            for key in ("db_x", "db_p"):
                if key not in hop:
                    problems.append(f"{where}{key}: required together with its partner")
                elif not _is_number(hop[key]):
                    problems.append(f"{where}{key}: must be a number")
                elif hop[key] < 0:
                    problems.append(
                        f"{where}{key}: teleported-output dB is >= 0 relative to vacuum"
                    )
                elif hop[key] > max_db:
                    problems.append(
                        f"{where}{key}: exceeds the zero-squeezing output {max_db:.4f} dB"
                    )
            if "excess" in hop:
                problems.append(f"{where}excess: only valid with r-characterized hops")
        elif has_r:
            if not _is_number(hop["r"]) or hop["r"] < 0:
                problems.append(f"{where}r: must be a number >= 0")
            if "excess" in hop and (not _is_number(hop["excess"]) or hop["excess"] < 1):
                problems.append(f"{where}excess: must be a number >= 1")
        else:
            problems.append(f"hops[{i}]: needs db_x/db_p or r")
        for key in ("g_x", "g_p"):
            if key in hop and not _is_number(hop[key]):
                problems.append(f"{where}{key}: must be a number")

    run_sec = config.get("run", {})
    if not isinstance(run_sec, dict):
        problems.append("run: must be a table")
    else:
        _check_keys(run_sec, {"mode": 0, "n_shots": 0}, "run.", problems)
        if run_sec.get("mode") not in ("analytic", "shots"):
            problems.append("run.mode: must be 'analytic' or 'shots'")
        n_shots = run_sec.get("n_shots")
        if not isinstance(n_shots, int) or isinstance(n_shots, bool) or n_shots < 1:
            problems.append("run.n_shots: must be a positive integer")

    tomo = config.get("tomography", {})
    if not isinstance(tomo, dict):
        problems.append("tomography: must be a table")
    else:
        allowed = {
            "source": 0,
            "n_samples": 0,
            "cutoff": 0,
            "phase_bins": 0,
            "quadrature_bins": 0,
            "grid_extent": 0,
            "grid_points": 0,
            "scan": 0,
            "amplitude": 0,
            "phase_deg": 0,
            "csv_matrix": 0,
        }
        _check_keys(tomo, allowed, "tomography.", problems)
        if tomo.get("source") not in ("vacuum", "coherent", "chain_output"):
            problems.append("tomography.source: must be vacuum, coherent, or chain_output")
        for key in ("n_samples", "phase_bins", "quadrature_bins", "grid_points"):
            value = tomo.get(key)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                problems.append(f"tomography.{key}: must be a positive integer")
        for key in ("cutoff", "grid_extent"):
            if not _is_number(tomo.get(key)) or tomo.get(key) <= 0:
                problems.append(f"tomography.{key}: must be a positive number")
        for key in ("amplitude", "phase_deg"):
            if not _is_number(tomo.get(key)):
                problems.append(f"tomography.{key}: must be a number")
        if tomo.get("scan") not in ("grid", "ramp"):
            problems.append("tomography.scan: must be 'grid' or 'ramp'")
        if not isinstance(tomo.get("csv_matrix"), bool):
            problems.append("tomography.csv_matrix: must be a boolean")

    swap = config.get("swap", {})
    if not isinstance(swap, dict):
        problems.append("swap: must be a table")
    else:
        _check_keys(swap, {"r": 0, "gain_min": 0, "gain_max": 0, "gain_step": 0}, "swap.", problems)
        if not _is_number(swap.get("r")) or swap.get("r") < 0:
            problems.append("swap.r: must be a number >= 0")
        for key in ("gain_min", "gain_max", "gain_step"):
            if not _is_number(swap.get(key)) or swap.get(key) <= 0:
                problems.append(f"swap.{key}: must be a positive number")
        if (
            _is_number(swap.get("gain_min"))
            and _is_number(swap.get("gain_max"))
            and swap["gain_min"] > swap["gain_max"]
        ):
            problems.append("swap.gain_min: must not exceed swap.gain_max")

    thresholds = config.get("thresholds", {})
    if not isinstance(thresholds, dict):
        problems.append("thresholds: must be a table")
    else:
        _check_keys(thresholds, {"n": 0, "target_fidelity": 0}, "thresholds.", problems)
        n_value = thresholds.get("n")
        if not isinstance(n_value, int) or isinstance(n_value, bool) or n_value < 1:
            problems.append("thresholds.n: must be a positive integer")
        target = thresholds.get("target_fidelity")
        if not _is_number(target) or not 0 < target < 1:
            problems.append("thresholds.target_fidelity: must lie in (0, 1)")

    if scenario == "figure4" and isinstance(hops, list) and len(hops) != 2:
        problems.append("hops: the figure4 scenario needs exactly 2 hops")

    return problems


def hop_config(hop: dict) -> TeleporterConfig:
    g_x = float(hop.get("g_x", 1.0))
    g_p = float(hop.get("g_p", 1.0))
    if "r" in hop:
        return TeleporterConfig.from_squeezing(
            r=float(hop["r"]), excess=float(hop.get("excess", 1.0)), g_x=g_x, g_p=g_p
        )
    return TeleporterConfig.from_output_db(
        db_x=float(hop["db_x"]), db_p=float(hop["db_p"]), g_x=g_x, g_p=g_p
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully merged experiment description."""

    scenario: str
    seed: int
    input_alpha: tuple
    hops: tuple
    run_mode: str
    n_shots: int
    tomo: dict
    swap: dict
    thresholds: dict
    raw: dict

    @classmethod
    def from_dict(cls, config: dict) -> "ExperimentConfig":
        problems = validate_config(config)
        if problems:
            raise ValueError("invalid config: " + "; ".join(problems))
        return cls(
            scenario=config["scenario"],
            seed=config["seed"],
            input_alpha=(config["input"]["alpha_x"], config["input"]["alpha_p"]),
            hops=tuple(hop_config(h) for h in config["hops"]),
            run_mode=config["run"]["mode"],
            n_shots=config["run"]["n_shots"],
            tomo=dict(config["tomography"]),
            swap=dict(config["swap"]),
            thresholds=dict(config["thresholds"]),
            raw=copy.deepcopy(config),
        )

    def input_state(self):
        return make_coherent(*self.input_alpha)

    def chain_spec(self) -> ChainSpec:
        return ChainSpec(hops=self.hops, label=self.scenario)

    def grid_spec(self) -> GridSpec:
        return GridSpec(extent=self.tomo["grid_extent"], points=self.tomo["grid_points"])

    def scan_spec(self) -> ScanSpec:
        return ScanSpec(kind=self.tomo["scan"], n_bins=self.tomo["phase_bins"])


# ---------------------------------------------------------------------------
# scenario runners


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def _budget_dict(budget) -> dict:
    return {
        "per_hop": [
            {"delta_x": h.delta_x, "delta_p": h.delta_p} for h in budget.per_hop
        ],
        "total_delta_x": budget.totals.delta_x,
        "total_delta_p": budget.totals.delta_p,
        "out_var_x": budget.out_var_x,
        "out_var_p": budget.out_var_p,
        "out_db_x": budget.out_db_x,
        "out_db_p": budget.out_db_p,
    }


def _report_dict(report) -> dict:
    return {
        "per_hop_fidelity": list(report.per_hop_fidelity),
        "chain_fidelity": report.chain_fidelity,
        "beats_classical": report.beats_classical,
        "beats_no_cloning": report.beats_no_cloning,
        "classical_margin": report.classical_margin,
        "no_cloning_margin": report.no_cloning_margin,
    }


def _run_teleport(cfg: ExperimentConfig, out_dir: Path) -> dict:
    spec = ChainSpec(hops=cfg.hops[:1], label="teleport")
    run = run_chain(cfg.input_state(), spec, mode=cfg.run_mode, seed=cfg.seed, n_shots=cfg.n_shots)
    results = {"budget": _budget_dict(run.budget), "fidelity": _report_dict(run.report)}
    if cfg.run_mode == "shots":
        ensemble = run.output
        mean = ensemble.mixture_mean()
        cov = ensemble.mixture_cov()
        results["shots"] = {
            "n_shots": len(ensemble),
            "mean": mean.tolist(),
            "var_x": cov[0, 0],
            "var_p": cov[1, 1],
            "db_x": variance_to_db(cov[0, 0]),
            "db_p": variance_to_db(cov[1, 1]),
        }
        if all(cfg.input_alpha):
            g = calibrate_gain(tuple(mean), cfg.input_alpha)
            results["shots"]["calibrated_gain"] = list(g)
    return results


def _run_chain_scenario(cfg: ExperimentConfig, out_dir: Path) -> dict:
    run = run_chain(
        cfg.input_state(), cfg.chain_spec(), mode=cfg.run_mode, seed=cfg.seed, n_shots=cfg.n_shots
    )
    results = {"budget": _budget_dict(run.budget), "fidelity": _report_dict(run.report)}
    if cfg.run_mode == "shots":
        cov = run.output.mixture_cov()
        results["shots"] = {
            "n_shots": len(run.output),
            "mean": run.output.mixture_mean().tolist(),
            "var_x": cov[0, 0],
            "var_p": cov[1, 1],
        }
    return results


def _run_swap(cfg: ExperimentConfig, out_dir: Path) -> dict:
    r = float(cfg.swap["r"])
    step = float(cfg.swap["gain_step"])
    gains = np.arange(cfg.swap["gain_min"], cfg.swap["gain_max"] + step / 2, step)
    scan = scan_swap_gain(cfg.input_state(), r, gains=gains, seed=cfg.seed)
    sequential = sequential_fidelity_ideal(2, r)
    return {
        "r": r,
        "best_gain": scan.best_gain,
        "best_fidelity": scan.best_fidelity,
        "beats_classical": scan.best_fidelity > 0.5,
        "classical_margin": scan.best_fidelity - 0.5,
        "sequential_two_hop_fidelity": sequential,
        "sequential_beats_classical": sequential > 0.5,
        "gains": scan.gains.tolist(),
        "fidelities": scan.fidelities.tolist(),
    }


def _tomography_source(cfg: ExperimentConfig):
    source = cfg.tomo["source"]
    if source == "vacuum":
        return make_vacuum(1), "vacuum"
    if source == "coherent":
        return cfg.input_state(), "coherent"
    state = cfg.input_state()
    for hop in cfg.hops:
        state = teleport_analytic(state, hop)
    return state, "chain_output"


def _run_tomography(cfg: ExperimentConfig, out_dir: Path) -> dict:
    state, label = _tomography_source(cfg)
    dataset = acquire(
        state,
        cfg.tomo["n_samples"],
        scan=cfg.scan_spec(),
        seed=cfg.seed,
        source_label=label,
    )
    save_dataset(dataset, out_dir / "dataset.csv")
    grid = inverse_radon(
        dataset,
        grid=cfg.grid_spec(),
        cutoff=cfg.tomo["cutoff"],
        n_quadrature_bins=cfg.tomo["quadrature_bins"],
    )
    save_wigner_grid(
        grid,
        out_dir / "wigner.json",
        out_dir / "wigner.csv" if cfg.tomo["csv_matrix"] else None,
    )
    metrics = reconstruction_error(grid, state)
    return {
        "source": label,
        "n_samples": len(dataset),
        "files": ["dataset.csv", "dataset.json", "wigner.json"]
        + (["wigner.csv"] if cfg.tomo["csv_matrix"] else []),
        "peak_value": grid.peak_value(),
        "peak_location": list(grid.peak_location()),
        "metrics": {
            "max_abs_error": metrics.max_abs_error,
            "l1_error": metrics.l1_error,
            "integral": metrics.integral,
            "integral_error": metrics.integral_error,
            "mean_error": metrics.mean_error.tolist(),
            "cov_error": metrics.cov_error.tolist(),
        },
    }


def _run_figure4(cfg: ExperimentConfig, out_dir: Path) -> dict:
    grids = simulate_figure4(
        cfg.chain_spec(),
        cfg.tomo["n_samples"],
        seed=cfg.seed,
        amplitude=cfg.tomo["amplitude"],
        phase_deg=cfg.tomo["phase_deg"],
        scan=cfg.scan_spec(),
        grid=cfg.grid_spec(),
        cutoff=cfg.tomo["cutoff"],
    )
    names = ("wigner_input.json", "wigner_hop1.json", "wigner_hop2.json")
    stages = []
    for grid, name in zip(grids, names):
        save_wigner_grid(grid, out_dir / name)
        mean, cov = grid.moments()
        stages.append(
            {
                "file": name,
                "peak_value": grid.peak_value(),
                "peak_location": list(grid.peak_location()),
                "mean": mean.tolist(),
                "cov": cov.tolist(),
            }
        )
    peaks = [s["peak_value"] for s in stages]
    budget = accumulate_noise(cfg.chain_spec())
    return {
        "stages": stages,
        "peaks_strictly_decreasing": peaks[0] > peaks[1] > peaks[2],
        "expected_final_var": [budget.out_var_x, budget.out_var_p],
    }


def _run_thresholds(cfg: ExperimentConfig, out_dir: Path) -> dict:
    n = int(cfg.thresholds["n"])
    target = float(cfg.thresholds["target_fidelity"])
    r_star = threshold_squeezing(n, target)
    return {
        "n": n,
        "target_fidelity": target,
        "r_star": r_star,
        "reachable": math.isfinite(r_star),
    }


_RUNNERS = {
    "teleport": _run_teleport,
    "chain": _run_chain_scenario,
    "swap": _run_swap,
    "tomography": _run_tomography,
    "figure4": _run_figure4,
    "thresholds": _run_thresholds,
}


def run(cfg: ExperimentConfig, out_dir: "str | Path", quiet: bool = False) -> Path:
    """Execute a validated config and write report.json; returns its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _RUNNERS[cfg.scenario](cfg, out_dir)
    embedded = copy.deepcopy(cfg.raw)
    embedded.pop("out_dir", None)  # keep reports byte-identical across locations
    report = _jsonable(
        {
            "scenario": cfg.scenario,
            "seed": cfg.seed,
            "config": embedded,
            "results": results,
        }
    )
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if not quiet:
        print(f"scenario: {cfg.scenario}")
        _print_summary(cfg.scenario, report["results"])
        print(f"report: {report_path}")
    return report_path


def _print_summary(scenario: str, results: dict) -> None:
    if scenario in ("teleport", "chain"):
        fid = results["fidelity"]
        budget = results["budget"]
        print(
            f"  output: {budget['out_db_x']:.2f} dB (x), {budget['out_db_p']:.2f} dB (p) "
            "above vacuum"
        )
        per_hop = ", ".join(f"{f:.3f}" for f in fid["per_hop_fidelity"])
        print(f"  per-hop fidelity: {per_hop}")
        print(
            f"  chain fidelity: {fid['chain_fidelity']:.3f} "
            f"(beats classical: {fid['beats_classical']})"
        )
    elif scenario == "swap":
        print(
            f"  swap: best gain {results['best_gain']:.2f} -> F = {results['best_fidelity']:.3f}; "
            f"sequential two-hop F = {results['sequential_two_hop_fidelity']:.3f}"
        )
    elif scenario == "tomography":
        metrics = results["metrics"]
        print(
            f"  reconstruction: peak {results['peak_value']:.4f}, "
            f"max |err| {metrics['max_abs_error']:.4f}, integral {metrics['integral']:.4f}"
        )
    elif scenario == "figure4":
        peaks = ", ".join(f"{s['peak_value']:.4f}" for s in results["stages"])
        print(
            f"  peaks: {peaks} (strictly decreasing: {results['peaks_strictly_decreasing']})"
        )
    elif scenario == "thresholds":
        r_star = results["r_star"]
        shown = f"{r_star:.4f}" if r_star is not None else "unreachable"
        print(f"  n = {results['n']}, target F = {results['target_fidelity']}: r* = {shown}")


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvtelelab",
        description="Teleportation experiments over Gaussian states: run scenarios "
        "and emit JSON reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and write report files")
    run_p.add_argument("--config", type=Path, help="TOML config file (defaults used if omitted)")
    run_p.add_argument("--seed", type=int, help="override the config seed")
    run_p.add_argument("--out", type=Path, help="output directory")
    run_p.add_argument("--scenario", choices=SCENARIOS, help="override the config scenario")
    run_p.add_argument("--quiet", action="store_true", help="suppress the summary printout")

    val_p = sub.add_parser("validate", help="check a config file without running")
    val_p.add_argument("config", type=Path)
    return parser


def _resolve_out_dir(flag_value, config: dict) -> Path:
    if flag_value is not None:
        return Path(flag_value)
    if "out_dir" in config:
        return Path(config["out_dir"])
    env = os.environ.get(OUT_DIR_ENV_VAR)
    return Path(env) if env else Path("out")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "validate":
        try:
            raw = load_config_file(args.config)
        except OSError as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return 2
        except tomllib.TOMLDecodeError as exc:
            print(f"config is not valid TOML: {exc}", file=sys.stderr)
            return 2
        problems = validate_config(merge_config(raw))
        for problem in problems:
            print(problem)
        return 0 if not problems else 2

    try:
        overrides = load_config_file(args.config) if args.config else {}
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    except tomllib.TOMLDecodeError as exc:
        print(f"config is not valid TOML: {exc}", file=sys.stderr)
        return 2
    config = merge_config(overrides)
    if args.scenario:
        config["scenario"] = args.scenario
    if args.seed is not None:
        config["seed"] = args.seed

    problems = validate_config(config)
    if problems:
        for problem in problems:
            print(problem, file=sys.stderr)
        return 2

    cfg = ExperimentConfig.from_dict(config)
    out_dir = _resolve_out_dir(args.out, config)
    try:
        run(cfg, out_dir, quiet=args.quiet)
    except ValueError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
