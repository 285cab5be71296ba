"""Command-line front end: reproducible experiments emitting figure-ready data.

Subcommands map one-to-one onto the library stages:

  spectrum   analytic vs discretized eigenvalues of the kernel operator
  diagram    critical points plus continued branches over a beta window
  solve      one self-consistent profile u = tanh(beta W u) with stability
  sample     one W-random graph, saved with its descriptor and degree data
  mc         Metropolis quench on a sampled (or loaded) graph

Every run resolves its configuration (JSON, versioned; flags override the
file) and writes it next to the outputs, so a results directory is a
complete record: feeding config.json back in reproduces every file byte
for byte.  Floats are written with repr, which round-trips exactly, and
no timestamps or hostnames enter the outputs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bifurcation as bif
from . import kernels
from . import meanfield as mf
from . import montecarlo
from . import wrandom

CONFIG_VERSION = 1

_DEFAULTS = {
    "version": CONFIG_VERSION,
    "graphon": {"variant": "er", "parameters": {"p": 0.5}, "domain": "interval"},
    "n": 256,
    "k_max": 8,
    "beta_min": 1.0,
    "beta_max": 4.0,
    "beta_step": 0.05,
    "init_mode": 0,
    "init_amplitude": 0.5,
    "mc": {
        "n": 1000,
        "J": 1,
        "T": 0.2,
        "sweeps": 200,
        "measure_every": 10,
        "init": "random",
        "seed": 0,
        "burn_in": 0,
        "bins": 50,
        "graph": None,
    },
    "out_dir": "out",
}


class ConfigError(ValueError):
    """Unparseable or invalid configuration; maps to exit code 2."""


class NumericalError(RuntimeError):
    """A command could not produce its result; maps to exit code 3."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved run description.

    graphon holds the kernel descriptor (variant, parameters, domain); n is
    the discretization grid, k_max the mode cutoff for spectra, diagrams
    and recorded overlaps.  The beta window [beta_min, beta_max] with
    beta_step drives diagram continuation, and solve targets the window
    end of largest magnitude seeded with init_amplitude times mode
    init_mode.  mc carries the finite-graph block (n, J, T, sweeps,
    measure_every, init, seed, burn_in, bins, graph path or null).
    """

    graphon: dict
    n: int
    k_max: int
    beta_min: float
    beta_max: float
    beta_step: float
    init_mode: int
    init_amplitude: float
    mc: dict
    out_dir: str

    def resolved(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "graphon": copy.deepcopy(self.graphon),
            "n": self.n,
            "k_max": self.k_max,
            "beta_min": self.beta_min,
            "beta_max": self.beta_max,
            "beta_step": self.beta_step,
            "init_mode": self.init_mode,
            "init_amplitude": self.init_amplitude,
            "mc": copy.deepcopy(self.mc),
            "out_dir": self.out_dir,
        }


def parse_init(value):
    """Config form of a chain init: "random" or "from_mode(k)" / "from_mode:k"."""
    if value == "random":
        return "random"
    if isinstance(value, str):
        m = re.fullmatch(r"from_mode[:(](\d+)\)?", value)
        if m:
            return ("from_mode", int(m.group(1)))
    raise ConfigError(f"mc.init {value!r} is neither 'random' nor 'from_mode(k)'")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config dict, filling defaults; raises ConfigError."""
    _require(isinstance(raw, dict), "config root must be a JSON object")
    unknown = set(raw) - set(_DEFAULTS)
    _require(not unknown, f"unknown config keys {sorted(unknown)}")
    merged = copy.deepcopy(_DEFAULTS)
    mc_part = raw.get("mc", {})
    _require(isinstance(mc_part, dict), "mc must be a JSON object")
    unknown = set(mc_part) - set(_DEFAULTS["mc"])
    _require(not unknown, f"unknown mc keys {sorted(unknown)}")
    merged["mc"].update(mc_part)
    merged.update({k: v for k, v in raw.items() if k != "mc"})

    _require(merged["version"] == CONFIG_VERSION,
             f"config version {merged['version']!r} is not {CONFIG_VERSION}")
    try:
        g = kernels.from_config(merged["graphon"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad graphon descriptor: {exc}") from None
    _require(isinstance(merged["n"], int) and merged["n"] >= 1,
             "n must be a positive integer")
    _require(isinstance(merged["k_max"], int) and merged["k_max"] >= 0,
             "k_max must be a nonnegative integer")
    for key in ("beta_min", "beta_max", "beta_step", "init_amplitude"):
        _require(isinstance(merged[key], (int, float)), f"{key} must be a number")
    _require(merged["beta_min"] < merged["beta_max"],
             "beta_min must be below beta_max")
    _require(merged["beta_step"] > 0, "beta_step must be positive")
    _require(isinstance(merged["init_mode"], int) and merged["init_mode"] >= 0,
             "init_mode must be a nonnegative integer")
    _require(0 < merged["init_amplitude"] <= 1, "init_amplitude must be in (0, 1]")

    m = merged["mc"]
    _require(isinstance(m["n"], int) and m["n"] >= 2, "mc.n must be an integer >= 2")
    _require(m["J"] in (1, -1), "mc.J must be +1 or -1")
    _require(isinstance(m["T"], (int, float)) and m["T"] > 0,
             "mc.T must be a positive temperature")
    for key in ("sweeps", "measure_every", "bins"):
        _require(isinstance(m[key], int) and m[key] >= 1,
                 f"mc.{key} must be a positive integer")
    _require(isinstance(m["burn_in"], int) and m["burn_in"] >= 0,
             "mc.burn_in must be a nonnegative integer")
    _require(isinstance(m["seed"], int) and 0 <= m["seed"] < 2**64,
             "mc.seed must fit in an unsigned 64-bit integer")
    parse_init(m["init"])
    _require(m["graph"] is None or isinstance(m["graph"], str),
             "mc.graph must be a path string or null")

    merged["graphon"] = kernels.to_config(g)
    return ExperimentConfig(
        graphon=merged["graphon"],
        n=merged["n"],
        k_max=merged["k_max"],
        beta_min=float(merged["beta_min"]),
        beta_max=float(merged["beta_max"]),
        beta_step=float(merged["beta_step"]),
        init_mode=merged["init_mode"],
        init_amplitude=float(merged["init_amplitude"]),
        mc=merged["mc"],
        out_dir=str(merged["out_dir"]),
    )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    # repr round-trips doubles exactly, so re-runs diff clean
    return repr(float(value))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _json_default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def cmd_spectrum(cfg: ExperimentConfig, out: Path, threads: int = 1) -> None:
    """Analytic and discretized spectra side by side with deviations.

    Modes are matched to numeric eigenvalues greedily by closeness, largest
    magnitude first, consuming multiplicity-many values per mode; for a
    tabulated kernel only the numeric column is filled.  Truncation moves
    the power-law eigenvalue, and the deviation column carries exactly
    that discrepancy.
    """
    g = kernels.from_config(cfg.graphon)
    kernel = kernels.discretize(g, cfg.n)
    numeric = kernels.numeric_spectrum(kernel, count=cfg.n).values()
    rows = []
    if g.variant == "tabulated":
        for rank, value in enumerate(numeric[: cfg.k_max + 1]):
            rows.append((rank, 1, None, value, None, "grid"))
    else:
        analytic = kernels.analytic_spectrum(g, cfg.k_max)
        used = np.zeros(len(numeric), dtype=bool)
        matched = {}
        for pair in sorted(analytic.pairs, key=lambda p: -abs(p.value)):
            order = np.argsort(np.abs(numeric - pair.value), kind="stable")
            take = [i for i in order if not used[i]][: pair.multiplicity]
            used[take] = True
            matched[pair.k] = numeric[take]
        for pair in sorted(analytic.pairs, key=lambda p: p.k):
            got = matched[pair.k]
            rows.append((pair.k, pair.multiplicity, pair.value,
                         float(np.mean(got)),
                         float(np.max(np.abs(got - pair.value))),
                         pair.descriptor))
    write_csv(out / "spectrum.csv",
              ["mode", "multiplicity", "analytic", "numeric", "deviation",
               "eigenfunction"],
              rows)


def _trace_branch(bp, kernel, window, step, tol):
    lo, hi = window
    target = hi if bp.beta_c > 0 else lo
    room = (target - bp.beta_c) / bp.beta_c
    if room <= 1e-6:
        return None, "critical point sits at the window edge"
    delta = min(0.02, 0.5 * room)
    try:
        state = bif.branch_switch(bp, kernel, delta=delta, tol=tol)
        branch = bif.continue_branch(state, (bp.beta_c, target),
                                     initial_step=step, max_step=5.0 * step,
                                     tol=tol, origin=bp)
    except (bif.BranchNotFoundError, mf.SingularJacobianError) as exc:
        return None, str(exc)
    return branch, None


def cmd_diagram(cfg: ExperimentConfig, out: Path, threads: int = 1) -> None:
    """Continue every branch whose critical point lies in the beta window.

    Each bifurcation point yields two arms relating by u -> -u; both are
    written so a plotted diagram shows the full pitchfork.  Branches are
    independent, so they run on a worker pool; files are written by this
    thread alone, in critical-point order.  Continuation truncation is
    surfaced per branch in diagram.json, never raised.
    """
    g = kernels.from_config(cfg.graphon)
    kernel = kernels.discretize(g, cfg.n)
    if g.variant == "tabulated":
        spectrum = kernels.numeric_spectrum(kernel, count=cfg.k_max + 1)
    else:
        spectrum = kernels.analytic_spectrum(g, cfg.k_max)
    window = (cfg.beta_min, cfg.beta_max)
    points = [bp for bp in bif.critical_points(spectrum, count=2 * len(spectrum.pairs))
              if window[0] <= bp.beta_c <= window[1]]

    tol = 1e-10
    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda bp: _trace_branch(bp, kernel, window, cfg.beta_step, tol),
                points))
    else:
        results = [_trace_branch(bp, kernel, window, cfg.beta_step, tol)
                   for bp in points]

    manifest = {
        "version": CONFIG_VERSION,
        "graphon": copy.deepcopy(cfg.graphon),
        "n": cfg.n,
        "k_max": cfg.k_max,
        "beta_range": [cfg.beta_min, cfg.beta_max],
        "beta_step": cfg.beta_step,
        "bifurcation_points": [
            {"k": bp.k, "eigenvalue": bp.eigenvalue, "beta_c": bp.beta_c,
             "mode": bp.mode, "regime": bp.regime}
            for bp in points
        ],
        "branches": [],
        "skipped": [],
    }
    for bp, (branch, reason) in zip(points, results):
        if branch is None:
            manifest["skipped"].append({"k": bp.k, "reason": reason})
            continue
        for sign, tag in ((1.0, "plus"), (-1.0, "minus")):
            branch_id = f"k{bp.k}{'+' if sign > 0 else '-'}"
            name = f"branch_k{bp.k}_{tag}.csv"
            write_csv(out / name,
                      ["branch_id", "k", "beta", "amplitude", "probe_value",
                       "stability"],
                      [(branch_id, bp.k, p.beta, p.amplitude,
                        sign * p.u[0], p.stability)
                       for p in branch.points])
            manifest["branches"].append({
                "branch_id": branch_id,
                "k": bp.k,
                "regime": bp.regime,
                "beta_c": bp.beta_c,
                "file": name,
                "points": len(branch.points),
                "truncated": branch.truncated,
                "accepted": branch.accepted,
                "rejected": branch.rejected,
                "final_step": branch.final_step,
            })
    write_json(out / "diagram.json", manifest)
    if points and not manifest["branches"]:
        reasons = "; ".join(s["reason"] for s in manifest["skipped"])
        raise NumericalError(f"no branch could be continued: {reasons}")


def cmd_solve(cfg: ExperimentConfig, out: Path, threads: int = 1) -> None:
    """One profile at the far end of the beta window, with its stability."""
    g = kernels.from_config(cfg.graphon)
    kernel = kernels.discretize(g, cfg.n)
    beta = cfg.beta_max if abs(cfg.beta_max) >= abs(cfg.beta_min) else cfg.beta_min
    xi = kernels.mode_profile(g, cfg.init_mode, cfg.n)
    state, record = mf.solve(kernel, beta, cfg.init_amplitude * xi)
    report = mf.stability(state)
    x = kernels.grid(cfg.n)
    write_csv(out / "solution.csv", ["x", "u"], zip(x, state.u))
    write_json(out / "convergence.json", {
        "beta": beta,
        "method": record.method,
        "iterations": record.iterations,
        "final_residual": record.final_residual,
        "converged": record.converged,
        "amplitude": float(np.abs(state.u).max()),
        "stability": report.classification,
        "leading_multiplier": float(report.leading_multiplier),
    })
    if not record.converged:
        raise NumericalError(
            f"solve stalled at residual {record.final_residual:.3e} "
            f"after {record.iterations} iterations")


def cmd_sample(cfg: ExperimentConfig, out: Path, threads: int = 1) -> None:
    """Draw one graph at mc.n spins, saving bits, edges and degree data."""
    g = kernels.from_config(cfg.graphon)
    a = wrandom.sample(g, cfg.mc["n"], cfg.mc["seed"])
    wrandom.save(a, out / "graph.wrg")
    wrandom.write_edge_list(a, out / "edges.txt")
    empirical, expected = wrandom.degree_profile(a)
    write_csv(out / "degrees.csv", ["index", "empirical", "expected"],
              zip(range(a.n), empirical, expected))
    write_json(out / "sample.json", {
        "n": a.n,
        "seed": a.seed,
        "edges": a.edge_count(),
        "density": a.density(),
        "operator_deviation": wrandom.empirical_operator_check(a, g),
    })


def cmd_mc(cfg: ExperimentConfig, out: Path, threads: int = 1) -> None:
    """Quench one chain; trajectory, binned profiles and a final snapshot."""
    g = kernels.from_config(cfg.graphon)
    m = cfg.mc
    if m["graph"] is not None:
        path = Path(m["graph"])
        if not path.exists():
            raise ConfigError(f"graph file {path} does not exist")
        a = wrandom.load(path)
    else:
        a = wrandom.sample(g, m["n"], m["seed"])
    modes = tuple(range(cfg.k_max + 1))
    traj = montecarlo.quench(
        a, J=m["J"], T=float(m["T"]), init=parse_init(m["init"]),
        sweeps=m["sweeps"], measure_every=m["measure_every"], modes=modes,
        bins=m["bins"], seed=m["seed"], burn_in=m["burn_in"])
    q_cols = [f"q_{k}" for k in modes]
    write_csv(out / "trajectory.csv",
              ["sweep", "energy_per_spin", *q_cols, "acceptance"],
              [(traj.sweeps[i], traj.energy[i], *traj.q[i], traj.acceptance[i])
               for i in range(len(traj.sweeps))])
    nbins = traj.profiles.shape[1]
    write_csv(out / "profiles.csv",
              ["sweep", *(f"m_{b}" for b in range(nbins))],
              [(traj.sweeps[i], *traj.profiles[i])
               for i in range(len(traj.sweeps))])
    write_csv(out / "snapshot.csv", ["x", "sigma"],
              zip(kernels.grid(a.n), traj.final_sigma))


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "diagram": cmd_diagram,
    "solve": cmd_solve,
    "sample": cmd_sample,
    "mc": cmd_mc,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="JSON experiment config; defaults apply if omitted")
    common.add_argument("--seed", type=int, default=None,
                        help="override mc.seed (sampling and chain stream)")
    common.add_argument("--out-dir", default=None,
                        help="override the output directory")
    common.add_argument("--threads", type=int, default=1,
                        help="worker pool size for independent branches")
    parser = argparse.ArgumentParser(
        prog="graphon-ising",
        description="Kernel spectra, bifurcation diagrams and Monte Carlo "
                    "runs as plain CSV/JSON.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        sub.add_parser(name, parents=[common],
                       help=fn.__doc__.splitlines()[0].rstrip("."))
    return parser


def _load_config(args) -> ExperimentConfig:
    raw = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    if args.seed is not None:
        if not isinstance(raw.get("mc"), dict):
            raw["mc"] = {}
        raw["mc"]["seed"] = args.seed
    if args.out_dir is not None:
        raw["out_dir"] = args.out_dir
    return parse_config(raw)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        cfg = _load_config(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "config.json", cfg.resolved())
        _COMMANDS[args.command](cfg, out, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, bif.BranchNotFoundError,
            mf.SingularJacobianError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
