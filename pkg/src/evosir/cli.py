"""Command-line entry point: ``evosir <subcommand> [options]``.

Settings come from built-in defaults, then an optional ``--config`` JSON file,
then explicit flags. Exit status is 0 on success, 2 for a bad configuration
and 3 for a numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import analytic, ode, percolation, sim
from .errors import NoEpidemicError, NumericError, ParameterError
from .graph import components, generate_er
from .params import EpidemicParams
from .tables import write_table

log = logging.getLogger("evosir")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SWEEPABLE = {"mu": float, "lambda": float, "rho": float, "n": int}

TRIAL_COLUMNS = ["trial", "seed", "n", "mu", "lambda", "rho", "model", "variant", "final_removed",
                 "peak_infected", "rewires", "deletions", "extinction_time"]
TRAJECTORY_COLUMNS = ["trial", "t", "S", "I", "R"]
TRACE_COLUMNS = ["step", "U", "A", "R", "v"]
SWEEP_COLUMNS = ["point", "n", "mu", "lambda", "rho", "model", "variant", "trials", "threshold", "n_large",
                 "p_large", "p_large_se", "large_mean", "large_se", "mean_fraction", "analytic_p_large",
                 "analytic_final_size", "analytic_evo_final_size", "status"]
ANALYTIC_COLUMNS = ["mu", "lam", "rho", "model", "variant", "tau", "alpha", "lambda_c", "z0", "p_large",
                    "final_size", "evo_final_size"]
ODE_SYSTEMS = ("homogeneous", "sk", "sk_rewire", "miller_volz", "ml_pair")
EXPLORE_KINDS = ("fixed", "exponential", "rewiring")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepAxis:
    name: str
    lo: float
    hi: float
    steps: int

    @classmethod
    def parse(cls, text: str) -> "SweepAxis":
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"sweep axis must look like name:min:max:steps, got {text!r}")
        name, lo, hi, steps = parts
        if name not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {name!r}; choose from {sorted(SWEEPABLE)}")
        try:
            lo_f, hi_f, k = float(lo), float(hi), int(steps)
        except ValueError as exc:
            raise ConfigError(f"bad sweep axis {text!r}: {exc}") from None
        if not (math.isfinite(lo_f) and math.isfinite(hi_f)) or k < 1:
            raise ConfigError("sweep bounds must be finite and steps >= 1")
        return cls(name, lo_f, hi_f, k)

    def values(self) -> List[float]:
        if self.steps == 1:
            vals = [self.lo]
        else:
            vals = np.linspace(self.lo, self.hi, self.steps).tolist()
        cast = SWEEPABLE[self.name]
        return [cast(round(v)) if cast is int else v for v in vals]

    def __str__(self) -> str:
        return f"{self.name}:{self.lo!r}:{self.hi!r}:{self.steps}"


@dataclass
class RunConfig:
    command: str = "analytic"
    mu: float = 5.0
    lam: float = 2.0
    rho: float = 4.0
    model: str = "exponential"
    variant: str = "evo"
    n: int = 10_000
    trials: int = 200
    base_seed: int = 0
    sweep: Optional[SweepAxis] = None
    out: Optional[str] = None
    trials_out: Optional[str] = None
    trajectory_out: Optional[str] = None
    threshold: Optional[float] = None
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    fmt: str = "csv"
    record: str = "auto"
    # ode
    system: str = "sk"
    beta: float = 2.0
    gamma: float = 1.0
    i0: Optional[float] = None
    dt: float = 1e-3
    t_end: float = 30.0
    k_max: Optional[int] = None
    record_every: int = 10
    tau: Optional[float] = None
    alpha: Optional[float] = None
    # explore
    kind: str = "fixed"
    mu_bar: Optional[float] = None
    stop_rule: str = "giant"

    def params(self, **override) -> EpidemicParams:
        values = dict(mu=self.mu, lam=self.lam, rho=self.rho, infection_model=self.model,
                      variant=self.variant, n=self.n)
        values.update(override)
        return EpidemicParams(**values)

    def echo(self) -> dict:
        d = asdict(self)
        d["sweep"] = None if self.sweep is None else str(self.sweep)
        # output locations and worker count do not affect results
        for k in ("out", "trials_out", "trajectory_out", "jobs", "fmt"):
            d.pop(k)
        return d

    def points(self) -> List[Dict[str, float]]:
        if self.sweep is None:
            return [{}]
        return [{self.sweep.name: v} for v in self.sweep.values()]


_FILE_ALIASES = {"lambda": "lam", "seed": "base_seed", "format": "fmt", "infection_model": "model"}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in raw.items():
        key = _FILE_ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = value
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {"command": args.command}
    if args.config:
        values.update(load_config(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "command":
            values[f.name] = v
    sweep = values.get("sweep")
    if isinstance(sweep, str):
        values["sweep"] = SweepAxis.parse(sweep)
    elif sweep is not None and not isinstance(sweep, SweepAxis):
        raise ConfigError("sweep must be a string name:min:max:steps")
    cfg = RunConfig(**values)
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {cfg.fmt!r}")
    if cfg.trials < 1:
        raise ConfigError("trials must be at least 1")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be at least 1")
    return cfg


# -- commands ----------------------------------------------------------------

def cmd_analytic(cfg: RunConfig) -> int:
    rows = []
    for point in cfg.points():
        p = cfg.params(**_param_keys(point))
        rows.append(analytic.analyze(p).to_dict())
    write_table(cfg.out, ANALYTIC_COLUMNS, rows, cfg.echo(), cfg.fmt)
    return EXIT_OK


def _param_keys(point: Dict[str, float]) -> dict:
    return {("lam" if k == "lambda" else k): v for k, v in point.items()}


def _trial_rows(summary: sim.TrialSummary, offset: int = 0):
    p = summary.params
    for i, o in enumerate(summary.outcomes):
        yield {
            "trial": offset + i, "seed": o.seed, "n": o.n, "mu": p.mu, "lambda": p.lam, "rho": p.rho,
            "model": p.infection_model.value, "variant": p.variant.value,
            "final_removed": o.final_removed, "peak_infected": o.peak_infected,
            "rewires": o.rewire_events, "deletions": o.delete_events, "extinction_time": o.extinction_time,
        }


def _sibling(path: Optional[str], suffix: str) -> Optional[str]:
    if path is None or path == "-":
        return None
    p = Path(path)
    return str(p.with_name(p.stem + suffix + (p.suffix or ".csv")))


def cmd_sweep(cfg: RunConfig) -> int:
    summary_rows, trial_rows = [], []
    failures = 0
    points = cfg.points()
    for k, point in enumerate(points):
        row = {"point": k}
        try:
            p = cfg.params(**_param_keys(point))
            row.update(n=p.n, mu=p.mu, rho=p.rho, model=p.infection_model.value, variant=p.variant.value)
            row["lambda"] = p.lam
            # common random numbers: every point reuses the same trial seeds
            ts = sim.run_trials(p, p.n, cfg.trials, cfg.base_seed, cfg.threshold, jobs=cfg.jobs)
            row.update(ts.summary())
            row["analytic_p_large"] = analytic.epidemic_probability(p)
            row["analytic_final_size"] = analytic.final_size(p)
            row["analytic_evo_final_size"] = analytic.evo_final_size_approx(p).size
            row["status"] = "ok"
            trial_rows.extend(_trial_rows(ts, offset=len(trial_rows)))
        except (ParameterError, NumericError) as exc:
            failures += 1
            row["status"] = f"failed: {exc}"
            log.warning("sweep point %d failed: %s", k, exc)
        summary_rows.append(row)
    write_table(cfg.out, SWEEP_COLUMNS, summary_rows, cfg.echo(), cfg.fmt)
    trials_path = cfg.trials_out or _sibling(cfg.out, "_trials")
    if trials_path is not None:
        write_table(trials_path, TRIAL_COLUMNS, trial_rows, cfg.echo(), cfg.fmt)
    if failures == len(points):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    p = cfg.params()
    record = "none" if cfg.trajectory_out is None else cfg.record
    ts = sim.run_trials(p, p.n, cfg.trials, cfg.base_seed, cfg.threshold, record=record, jobs=cfg.jobs)
    write_table(cfg.out, TRIAL_COLUMNS, _trial_rows(ts), cfg.echo(), cfg.fmt)
    if cfg.trajectory_out is not None:
        rows = ({"trial": i, "t": t, "S": s, "I": inf, "R": r}
                for i, o in enumerate(ts.outcomes) for (t, s, inf, r) in o.trajectory)
        write_table(cfg.trajectory_out, TRAJECTORY_COLUMNS, rows, cfg.echo(), cfg.fmt)
    print(json.dumps(ts.summary(), sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_ode(cfg: RunConfig) -> int:
    system = cfg.system
    if system == "homogeneous":
        i0 = 1e-4 * cfg.n if cfg.i0 is None else cfg.i0
        traj = ode.integrate_homogeneous(cfg.beta, cfg.n, i0, cfg.t_end, cfg.dt, cfg.record_every)
    elif system in ("sk", "sk_rewire"):
        fn = ode.integrate_sk if system == "sk" else ode.integrate_sk_rewire
        traj = fn(cfg.params(), cfg.i0, cfg.k_max, cfg.dt, cfg.t_end, cfg.record_every)
    elif system == "miller_volz":
        i0 = 1e-4 if cfg.i0 is None else cfg.i0
        traj = ode.integrate_miller_volz(cfg.beta, cfg.gamma, None, i0, cfg.dt, cfg.t_end, cfg.record_every,
                                         mu=cfg.mu)
    elif system == "ml_pair":
        p = cfg.params()
        tau = analytic.base_transmissibility(p) if cfg.tau is None else cfg.tau
        alpha = analytic.rewiring_loss(p) if cfg.alpha is None else cfg.alpha
        s, u, v = ode.integrate_ml_pair(cfg.mu, tau, alpha, cfg.dt)
        keep = slice(None, None, max(1, cfg.record_every))
        rows = ({"s": a, "u": b, "v": c} for a, b, c in zip(s[keep], u[keep], v[keep]))
        write_table(cfg.out, ["s", "u", "v"], rows, cfg.echo(), cfg.fmt)
        return EXIT_OK
    else:
        raise ConfigError(f"unknown ODE system {system!r}; choose from {ODE_SYSTEMS}")
    cols = traj.columns()
    if system == "sk":
        cols.pop("F_tracked", None)
    names = list(cols)
    rows = ({k: cols[k][j] for k in names} for j in range(len(traj.t)))
    write_table(cfg.out, names, rows, cfg.echo(), cfg.fmt)
    return EXIT_OK


def cmd_explore(cfg: RunConfig) -> int:
    p = cfg.params()
    if cfg.kind == "fixed":
        mu_bar = cfg.mu * analytic.transmissibility(p) if cfg.mu_bar is None else cfg.mu_bar
        trace = percolation.explore_fixed(cfg.n, mu_bar, cfg.base_seed, cfg.stop_rule)
    elif cfg.kind == "exponential":
        trace = percolation.explore_exponential(cfg.n, cfg.mu, cfg.lam, cfg.base_seed, cfg.stop_rule)
    elif cfg.kind == "rewiring":
        tau = analytic.base_transmissibility(p) if cfg.tau is None else cfg.tau
        alpha = analytic.rewiring_loss(p) if cfg.alpha is None else cfg.alpha
        trace = percolation.explore_rewiring(cfg.n, cfg.mu, tau, alpha, cfg.base_seed, cfg.stop_rule)
    else:
        raise ConfigError(f"unknown exploration {cfg.kind!r}; choose from {EXPLORE_KINDS}")
    v = trace.v
    rows = ({"step": t, "U": int(trace.U[t]), "A": int(trace.A[t]), "R": t,
             "v": None if v is None else float(v[t])} for t in range(len(trace.U)))
    write_table(cfg.out, TRACE_COLUMNS, rows, cfg.echo(), cfg.fmt)
    return EXIT_OK


def cmd_percolate(cfg: RunConfig) -> int:
    """Cluster size of a random vertex in a percolated G(n, mu/n), one fresh graph per trial."""
    p = cfg.params()
    tau = analytic.transmissibility(p) if cfg.tau is None else cfg.tau
    rows = []
    for i in range(cfg.trials):
        seed = sim.derive_seed(cfg.base_seed, i)
        rng = np.random.default_rng(seed)
        h = percolation.percolate(generate_er(cfg.n, cfg.mu, rng), tau, rng)
        rows.append({
            "trial": i, "seed": seed, "n": cfg.n, "mu": cfg.mu, "tau": tau,
            "cluster_size": percolation.cluster_size_of_random_vertex(h, rng),
            "giant_fraction": components(h).giant_fraction,
        })
    write_table(cfg.out, ["trial", "seed", "n", "mu", "tau", "cluster_size", "giant_fraction"], rows,
                cfg.echo(), cfg.fmt)
    return EXIT_OK


COMMANDS = {
    "analytic": cmd_analytic,
    "sweep": cmd_sweep,
    "run": cmd_run,
    "ode": cmd_ode,
    "explore": cmd_explore,
    "percolate": cmd_percolate,
}


# -- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--seed", dest="base_seed", type=int, help="base seed (default 0)")
    g.add_argument("--out", help="output path; '-' or omitted writes to stdout")
    g.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    g.add_argument("--format", dest="fmt", choices=("csv", "json"))
    g.add_argument("--config", help="JSON file of settings; flags override it")
    g.add_argument("-v", "--verbose", action="store_true")

    model = argparse.ArgumentParser(add_help=False)
    m = model.add_argument_group("model")
    m.add_argument("--mu", type=float)
    m.add_argument("--lambda", dest="lam", type=float)
    m.add_argument("--rho", type=float)
    m.add_argument("--model", choices=("fixed", "exponential"))
    m.add_argument("--variant", choices=("static", "del", "evo"))
    m.add_argument("--n", type=int)

    trials = argparse.ArgumentParser(add_help=False)
    t = trials.add_argument_group("trials")
    t.add_argument("--trials", type=int)
    t.add_argument("--threshold", type=float, help="large-epidemic cut-off as a fraction of n")

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--sweep", help="axis as name:min:max:steps (name in mu, lambda, rho, n)")

    parser = _Parser(prog="evosir", description="SIR epidemics on evolving Erdős–Rényi graphs")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("analytic", parents=[common, model, sweep], help="analytic table")
    sp = sub.add_parser("sweep", parents=[common, model, trials, sweep], help="Monte Carlo sweep")
    sp.add_argument("--trials-out", help="per-trial table (default: <out>_trials.csv)")
    rp = sub.add_parser("run", parents=[common, model, trials], help="trials at one parameter point")
    rp.add_argument("--trajectory-out", help="write per-trial trajectories here")
    rp.add_argument("--record", choices=("auto", "events", "grid"))
    op = sub.add_parser("ode", parents=[common, model], help="integrate a deterministic system")
    op.add_argument("--system", choices=ODE_SYSTEMS)
    op.add_argument("--beta", type=float)
    op.add_argument("--gamma", type=float)
    op.add_argument("--i0", type=float)
    op.add_argument("--dt", type=float)
    op.add_argument("--t-end", type=float)
    op.add_argument("--k-max", type=int)
    op.add_argument("--record-every", type=int)
    op.add_argument("--tau", type=float)
    op.add_argument("--alpha", type=float)
    ep = sub.add_parser("explore", parents=[common, model], help="exploration process trace")
    ep.add_argument("--kind", choices=EXPLORE_KINDS)
    ep.add_argument("--mu-bar", type=float)
    ep.add_argument("--tau", type=float)
    ep.add_argument("--alpha", type=float)
    ep.add_argument("--stop-rule", choices=("giant", "full"))
    pp = sub.add_parser("percolate", parents=[common, model, trials], help="percolated cluster sizes")
    pp.add_argument("--tau", type=float)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        try:
            cfg = build_config(args)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, ParameterError, NoEpidemicError) as exc:
        print(f"evosir: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"evosir: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
