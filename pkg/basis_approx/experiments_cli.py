"""
Command-line harness: seeded trials fanned out over a joblib worker pool,
raw traces and summaries as CSV, a JSON manifest per run and SVG figures.

    python -m basis_approx greedy --trials 100 --out results/greedy
    python -m basis_approx chains --config chains.toml
    python -m basis_approx replay results/greedy/manifest.json
    python -m basis_approx verify results/greedy
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
from joblib import Parallel, delayed

from . import __version__, config, plots
from .chains import angle_histogram, run_chain, verify_chain
from .config_file import SCHEMAS, load_config
from .errors import BasisApproxError, ConfigError
from .evaluate import print_report, verify_output
from .greedy import GreedyConfig, run_greedy
from .numerics import constant, make_grid_function, midpoints, three_bump_target, sign_changes
from .persist import ensure_writable_dir, read_csv, read_manifest, write_csv, write_manifest
from .random_basis import RandomBasisConfig, run_constant_blowup, run_random_basis
from .rng import make_stream, trial_seeds
from .summary import bounds_table, chain_summary, per_step_values, summarize_frames

logger = logging.getLogger(__name__)

# =========================================================
# CONFIG
# =========================================================
COMMANDS = tuple(SCHEMAS)
TRACE_COMMANDS = ("greedy", "random", "const-blowup")
MANIFEST = "manifest.json"
SUMMARY = "summary.csv"
TRIALS_DIR = "trials"
SNAPSHOT_DIR = "snapshots"
CHAIN_EPS = math.sin(config.CHAIN_TOL)  # = cos(0.963 pi / 2) ~ 0.0581

PARAM_DEFAULTS = {
    "greedy": {
        "target": "three-bump",
        "grid_size": config.GRID_SIZE,
        "n_steps": 100,
        "m_prime": config.M_PRIME,
        "m_dprime": config.M_DPRIME,
        "sel_eps": config.SEL_EPS,
        "w_range": list(config.GREEDY_W_RANGE),
        "b_range": list(config.GREEDY_B_RANGE),
        "max_draws": config.MAX_DRAWS,
        "batch_size": config.DRAW_BATCH,
        "selection_rule": "mixed",
    },
    "random": {
        "target": "three-bump",
        "family": "gaussian",
        "grid_size": config.GRID_SIZE,
        "n_steps": 100,
        "w_range": list(config.RANDOM_W_RANGE),
        "b_range": list(config.RANDOM_B_RANGE),
        "a_range": list(config.INDICATOR_RANGE),
        "sigma_range": list(config.INDICATOR_RANGE),
        "cond_limit": None,
        "rel_tol": config.REL_TOL,
    },
    "const-blowup": {
        "grid_size": config.GRID_SIZE,
        "n_steps": config.BLOWUP_STEPS,
        "a_range": list(config.INDICATOR_RANGE),
        "sigma_range": list(config.INDICATOR_RANGE),
        "cond_limit": None,
        "rel_tol": config.REL_TOL,
        "snapshot_steps": list(config.SNAPSHOT_STEPS),
    },
    "bounds": {
        "n": [100, 200, 400, 800, 1600, 3200],
        "eps": [CHAIN_EPS, 0.1],
        "theta": [config.CHAIN_THETA],
    },
    "chains": {
        "n": [400, 800, 1600],
        "tol": config.CHAIN_TOL,
        "theta": config.CHAIN_THETA,
        "max_length": config.MAX_CHAIN_LENGTH,
    },
    "angles": {
        "n": 1920,
        "count": 10_000,
        "bins": 60,
    },
}

DEFAULT_TRIALS = {"chains": config.CHAINS_PER_N, "bounds": 1, "angles": 1}

# =========================================================
# EXPERIMENT CONFIG
# =========================================================

@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    trials: int = config.TRIALS
    base_seed: int = 0
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown subcommand {self.command!r}")
        merged = {**PARAM_DEFAULTS[self.command], **self.params}
        object.__setattr__(self, "params", merged)
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.workers == 0 or self.workers < -1:
            raise ConfigError(f"workers must be >= 1 (or -1 for all cores), got {self.workers}")
        _validate_params(self.command, merged)

    @property
    def seeds(self) -> list:
        return trial_seeds(self.base_seed, self.trials)

    def to_manifest(self) -> dict:
        return {
            "command": self.command,
            "params": self.params,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "seeds": self.seeds,
            "version": __version__,
        }

    @classmethod
    def from_manifest(cls, manifest: dict, output_dir=None, workers=None) -> "ExperimentConfig":
        try:
            return cls(
                command=manifest["command"],
                params=dict(manifest["params"]),
                trials=int(manifest["trials"]),
                base_seed=int(manifest["base_seed"]),
                workers=workers if workers is not None else int(manifest.get("workers", 1)),
                output_dir=str(output_dir) if output_dir is not None else "replay",
            )
        except KeyError as exc:
            raise ConfigError(f"manifest is missing {exc}") from exc


def _validate_params(command, params):
    """Build every nested record once so bad values fail before any trial runs."""
    if command == "greedy":
        _target(params)
        _greedy_config(params, 0)
        if params["n_steps"] < 1:
            raise ConfigError(f"n_steps must be >= 1, got {params['n_steps']}")
    elif command in ("random", "const-blowup"):
        if command == "random":
            _target(params)
        _random_config(params, 0)
    elif command == "chains":
        if not params["n"] or min(params["n"]) < 1:
            raise ConfigError("chains needs a non-empty list of dimensions >= 1")
        if not (0.0 < params["tol"] < math.pi / 2):
            raise ConfigError(f"tol must lie in (0, pi/2), got {params['tol']}")
        if not (0.0 < params["theta"] < 1.0):
            raise ConfigError(f"theta must lie in (0,1), got {params['theta']}")
        if params["max_length"] < 1:
            raise ConfigError(f"max_length must be >= 1, got {params['max_length']}")
    elif command == "angles":
        if params["n"] < 1 or params["count"] < 2 or params["bins"] < 1:
            raise ConfigError("angles needs n >= 1, count >= 2 and bins >= 1")


def _target(params):
    name = params["target"]
    if name == "three-bump":
        return make_grid_function(three_bump_target(), params["grid_size"])
    if name == "constant":
        return constant(1.0, params["grid_size"])
    raise ConfigError(f"unknown target {name!r} (expected 'three-bump' or 'constant')")


def _greedy_config(params, seed):
    return GreedyConfig(
        m_prime=params["m_prime"],
        m_dprime=params["m_dprime"],
        sel_eps=params["sel_eps"],
        w_range=tuple(params["w_range"]),
        b_range=tuple(params["b_range"]),
        max_draws=params["max_draws"],
        grid_size=params["grid_size"],
        seed=seed,
        selection_rule=params["selection_rule"],
        batch_size=params["batch_size"],
    )


def _random_config(params, seed):
    family = params.get("family", "indicator")
    return RandomBasisConfig(
        family=family,
        w_range=tuple(params.get("w_range", config.RANDOM_W_RANGE)),
        b_range=tuple(params.get("b_range", config.RANDOM_B_RANGE)),
        a_range=tuple(params["a_range"]),
        sigma_range=tuple(params["sigma_range"]),
        n_steps=params["n_steps"],
        grid_size=params["grid_size"],
        seed=seed,
        cond_limit=params["cond_limit"],
        rel_tol=params["rel_tol"],
    )


def build_config(command: str, args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then the config file, then command-line flags."""
    values = load_config(args.config, command) if args.config else {}
    common = {k: values.pop(k) for k in ("trials", "seed", "workers", "out") if k in values}
    trials = args.trials if args.trials is not None else common.get("trials", DEFAULT_TRIALS.get(command, config.TRIALS))
    return ExperimentConfig(
        command=command,
        params=values,
        trials=trials,
        base_seed=args.seed if args.seed is not None else common.get("seed", 0),
        workers=args.workers if args.workers is not None else common.get("workers", 1),
        output_dir=args.out or common.get("out") or f"results/{command}",
    )


# =========================================================
# TRIALS (module level so the worker pool can pickle them)
# =========================================================

def trial_file(index: int) -> str:
    return f"{TRIALS_DIR}/trial_{index:04d}.csv"


def _trace_trial(command, params, out_dir, index, seed):
    out_dir = Path(out_dir)
    record = {"index": index, "seed": seed, "file": trial_file(index)}
    if command == "greedy":
        run = run_greedy(_target(params), params["n_steps"], _greedy_config(params, seed))
        record["stalled"] = run.trace.stalled
    elif command == "random":
        run = run_random_basis(_target(params), _random_config(params, seed))
        record["discarded"] = int(sum(run.trace.discarded))
    else:
        run = run_constant_blowup(_random_config(params, seed), params["snapshot_steps"])
        xs = midpoints(params["grid_size"])
        snaps = {"x": xs}
        for step in sorted(run.snapshots):
            snaps[f"N={step}"] = run.snapshots[step].values
        snap_file = f"{SNAPSHOT_DIR}/trial_{index:04d}.csv"
        write_csv(pd.DataFrame(snaps), out_dir / snap_file)
        record["snapshot_file"] = snap_file
        record["sign_changes"] = {str(k): sign_changes(v) for k, v in sorted(run.snapshots.items())}
    write_csv(run.trace.to_frame(), out_dir / record["file"])
    return record


def _chain_trial(n, tol, max_length, index, seed):
    chain = run_chain(n, tol, seed, max_length=max_length)
    return {
        "n": n,
        "trial": index,
        "seed": seed,
        "length": chain.length,
        "capped": chain.capped,
        "valid": verify_chain(chain.vectors, tol),
    }


def _guarded(fn, *args):
    """Run one trial; a failure becomes a record instead of aborting the pool.
    Every trial function takes (..., index, seed) last."""
    index, seed = args[-2:]
    try:
        return fn(*args)
    except Exception as exc:  # recorded in the manifest
        logger.exception("trial %d (seed %d) failed", index, seed)
        return {"index": index, "seed": seed, "error": f"{type(exc).__name__}: {exc}"}


def _pool(workers):
    return Parallel(n_jobs=workers)


# =========================================================
# SUBCOMMANDS
# =========================================================

def cmd_traces(cfg: ExperimentConfig) -> dict:
    """greedy / random / const-blowup: one trace CSV per seeded trial plus
    the cross-trial summary and a convergence figure."""
    out = ensure_writable_dir(cfg.output_dir)
    seeds = cfg.seeds
    logger.info("%s: %d trials on %s worker(s) -> %s", cfg.command, cfg.trials, cfg.workers, out)
    records = _pool(cfg.workers)(
        delayed(_guarded)(_trace_trial, cfg.command, cfg.params, str(out), i, seed)
        for i, seed in enumerate(seeds)
    )

    failures = [r for r in records if "error" in r]
    done = [r for r in records if "error" not in r]
    for r in failures:
        logger.warning("trial failed: %s", r["error"])

    frames = {r["seed"]: read_csv(out / r["file"]) for r in done}
    files = [r["file"] for r in done]
    summary = None
    if frames:
        summary = summarize_frames(frames)
        write_csv(summary.table, out / SUMMARY)
        files.append(SUMMARY)
        values = per_step_values([f["normalized"].tolist() for f in frames.values()])
        bound = None
        first = next(iter(frames.values()))
        if cfg.command == "greedy":
            bound = (first["bound_sq"] / first["raw_sq"].iloc[0]).tolist()
        plots.plot_convergence(values, out / "convergence.svg", title=cfg.command, bound=bound)
        files.append("convergence.svg")

    if cfg.command == "const-blowup" and done:
        rows = [
            {"index": r["index"], "seed": r["seed"], "step": int(k), "sign_changes": v}
            for r in done
            for k, v in r["sign_changes"].items()
        ]
        write_csv(pd.DataFrame(rows, columns=["index", "seed", "step", "sign_changes"]), out / "sign_changes.csv")
        files.append("sign_changes.csv")
        files.extend(r["snapshot_file"] for r in done)
        snap = read_csv(out / done[0]["snapshot_file"])
        plots.plot_snapshots(
            snap["x"], {int(c[2:]): snap[c] for c in snap.columns if c.startswith("N=")}, out / "snapshots.svg"
        )
        files.append("snapshots.svg")

    manifest = {**cfg.to_manifest(), "workers": cfg.workers, "files": files, "failures": failures}
    if cfg.command == "greedy":
        manifest["stalled"] = [r["seed"] for r in done if r.get("stalled")]
    write_manifest(manifest, out / MANIFEST)

    report = {
        "output": str(out),
        "trials run": len(done),
        "trial failures": len(failures),
    }
    if summary is not None:
        last = summary.table.iloc[-1]
        report["last step"] = int(last["step"])
        report["median normalized error"] = f"{last['median']:.6g}"
        report["IQR"] = f"{last['q3'] - last['q1']:.6g}"
    print_report(f"{cfg.command.upper()} RUN", report)
    return manifest


def cmd_bounds(cfg: ExperimentConfig) -> dict:
    out = ensure_writable_dir(cfg.output_dir)
    p = cfg.params
    table = bounds_table(p["n"], p["eps"], p["theta"])
    write_csv(table, out / "bounds.csv")
    plots.plot_bounds(table, out / "bounds.svg")
    manifest = {**cfg.to_manifest(), "workers": cfg.workers, "files": ["bounds.csv", "bounds.svg"], "failures": []}
    write_manifest(manifest, out / MANIFEST)
    print_report("QUASI-ORTHOGONALITY BOUNDS", {"output": str(out), "rows": len(table)})
    return manifest


def cmd_chains(cfg: ExperimentConfig) -> dict:
    out = ensure_writable_dir(cfg.output_dir)
    p = cfg.params
    ns = sorted(set(p["n"]))
    jobs = [(n, i, seed) for n in ns for i, seed in enumerate(cfg.seeds)]
    logger.info("chains: %d chains over n=%s on %s worker(s)", len(jobs), ns, cfg.workers)
    records = _pool(cfg.workers)(
        delayed(_guarded)(_chain_trial, n, p["tol"], p["max_length"], i, seed) for n, i, seed in jobs
    )
    failures = [r for r in records if "error" in r]
    done = [r for r in records if "error" not in r]

    lengths = pd.DataFrame(done, columns=["n", "trial", "seed", "length", "capped", "valid"])
    write_csv(lengths, out / "chains.csv")
    summary = chain_summary(lengths, ns, p["tol"], p["theta"])
    write_csv(summary, out / SUMMARY)
    plots.plot_chain_lengths(
        {n: lengths.loc[lengths["n"] == n, "length"].to_numpy() for n in ns if (lengths["n"] == n).any()},
        summary,
        out / "chains.svg",
    )

    files = ["chains.csv", SUMMARY, "chains.svg"]
    manifest = {**cfg.to_manifest(), "workers": cfg.workers, "files": files, "failures": failures}
    write_manifest(manifest, out / MANIFEST)

    report = {"output": str(out), "chains": len(done), "trial failures": len(failures),
              "capped": int(lengths["capped"].sum()), "invalid": int((~lengths["valid"].astype(bool)).sum())}
    for row in summary.itertuples():
        report[f"n={row.n} median / bound"] = f"{row.median:g} / {row.conservative:.4g}"
    print_report("QUASI-ORTHOGONAL CHAINS", report)
    return manifest


def cmd_angles(cfg: ExperimentConfig) -> dict:
    out = ensure_writable_dir(cfg.output_dir)
    p = cfg.params
    hist = angle_histogram(p["n"], p["count"], p["bins"], make_stream(cfg.base_seed, p["n"]))
    table = pd.DataFrame({"bin_lo": hist.edges[:-1], "bin_hi": hist.edges[1:], "count": hist.counts})
    write_csv(table, out / "angles.csv")
    plots.plot_angle_histogram(hist.edges, hist.counts, out / "angles.svg", p["n"])
    manifest = {**cfg.to_manifest(), "workers": cfg.workers, "files": ["angles.csv", "angles.svg"], "failures": []}
    write_manifest(manifest, out / MANIFEST)
    lo, hi = hist.mode_bin()
    print_report("ANGLE CONCENTRATION", {
        "output": str(out),
        "samples": hist.count,
        "mode bin": f"[{lo:.4f}, {hi:.4f}]",
        "|cos| <= 0.1": f"{hist.fraction_abs_cos_le(0.1):.4f}",
    })
    return manifest


def run_experiment(cfg: ExperimentConfig) -> dict:
    if cfg.command in TRACE_COMMANDS:
        return cmd_traces(cfg)
    if cfg.command == "bounds":
        return cmd_bounds(cfg)
    if cfg.command == "chains":
        return cmd_chains(cfg)
    return cmd_angles(cfg)


def cmd_replay(manifest_path, args) -> dict:
    manifest_path = Path(manifest_path)
    out = args.out or str(manifest_path.parent / "replay")
    cfg = ExperimentConfig.from_manifest(read_manifest(manifest_path), output_dir=out, workers=args.workers)
    logger.info("replaying %s into %s", manifest_path, out)
    return run_experiment(cfg)


# =========================================================
# ENTRY POINT
# =========================================================

def build_parser() -> argparse.ArgumentParser:
    verbosity = argparse.ArgumentParser(add_help=False)
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    # replay takes seeds, trials and settings from the manifest
    output = argparse.ArgumentParser(add_help=False, parents=[verbosity])
    output.add_argument("--out", help="output directory")
    output.add_argument("--workers", type=int, help="worker processes (-1 = all cores)")

    common = argparse.ArgumentParser(add_help=False, parents=[output])
    common.add_argument("--config", help="flat TOML experiment file")
    common.add_argument("--seed", type=int, help="base seed; trial i uses seed + i")
    common.add_argument("--trials", type=int, help="number of seeded trials")

    parser = argparse.ArgumentParser(
        prog="basis_approx",
        description="Greedy vs. random-basis approximation and measure-concentration experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "greedy": "greedy approximation of the three-bump target",
        "random": "random-basis least squares approximation",
        "const-blowup": "random indicators against the constant function",
        "bounds": "quasi-orthogonality bounds over an (n, eps, theta) grid",
        "chains": "quasi-orthogonal chain lengths against dimension",
        "angles": "histogram of angles between hypercube vectors",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    replay = sub.add_parser("replay", parents=[output], help="re-run an experiment from its manifest")
    replay.add_argument("manifest")
    verify = sub.add_parser("verify", parents=[verbosity], help="re-check an output directory")
    verify.add_argument("directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config.configure_logging(args.verbose)
    try:
        if args.command == "verify":
            return 0 if verify_output(args.directory) else 1
        if args.command == "replay":
            cmd_replay(args.manifest, args)
            return 0
        run_experiment(build_config(args.command, args))
        return 0
    except BasisApproxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
