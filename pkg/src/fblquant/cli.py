"""Command-line sweep runner.

Every subcommand reads an optional INI-style config file, expands the sweep
axes into points, solves the points (optionally in a process pool) and writes
one CSV plus, where a scheme exists, one scheme file per row.  Output order
follows the sweep order, so the files do not depend on ``--jobs``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .asymptotic import asymptotic_quantizer, ergodic_capacity, fixed_rate_optimum
from .channel import ChannelModel, Rayleigh, Rician, load_table
from .constrained import ConstrainedConfig, run_algorithm2
from .fbl import LOG2E, LinkParams, QuantizationScheme, omega, region_success_curve, scheme_totals
from .numerics import QuadratureSpec
from .oracle import GridSpec, McSpec, check_grid_cost, grid_search, monte_carlo_goodput
from .unconstrained import SolverConfig, optimal_rate, run_algorithm1

__all__ = ["ConfigError", "ExperimentConfig", "CSV_HEADER", "load_config", "format_value", "main"]

CSV_HEADER = (
    "experiment_id", "channel", "K", "n", "P_dB", "Phi", "eps_m",
    "total_goodput_bpcu", "total_cep", "flag", "iterations", "wall_time_ms",
)
VALIDATE_EXTRA = (
    "oracle_goodput_bpcu", "gap_bpcu", "mc_goodput_bpcu", "mc_std_error_bpcu", "mc_cep", "mc_cep_std_error",
)
CURVE_HEADER = ("experiment_id", "curve", "channel", "K", "n", "P_dB", "gamma", "region", "rate_bpcu", "value")

CONFIG_TEMPLATE = """\
config file (all keys optional, defaults shown):

  [experiment]
  id = run
  channel = rician        # rayleigh | rician | table
  K = 10                  # Rician factor
  k_unit = linear         # linear | dB
  mean = 1.0              # Rayleigh mean power
  table =                 # two-column "gamma pdf" file for channel = table
  n = 128                 # comma list; inf allowed for curves and optimize
  P_dB = 10               # comma list
  Phi = 4                 # comma list of region counts
  eps_m = 1e-3            # comma list; "none" = unconstrained (validate only)
  seed = 0
  jobs = 1
  out = results

  [solver]
  conv_tol = 1e-4
  max_outer_iters = 500
  rate_tol = 1e-8
  boundary_tol = 1e-8
  rel_tol = 1e-10
  abs_tol = 1e-12
  tail_mass = 1e-12
  rho_init = 1.0
  warm_rho = 1e-4
  max_restarts = 5
  accelerate = yes
  init =                  # interior starting boundaries (Phi - 1 gains);
                          # default: equal-probability split

  [curves]
  gamma = 1.0             # comma list of gains for the error curves
  boundaries = 0, 0.9, 1.2, inf
  rate_max_bpcu = 4.0
  rate_points = 201

  [validate]
  mode = grid             # grid | mc | both
  boundary_grid = 60
  rate_grid = 200
  refine_levels = 2
  refine_points = 15
  draws = 1000000

exit codes: 0 success, 1 a sweep point failed or did not converge,
2 usage or config error
"""


class ConfigError(ValueError):
    """Bad config file or flag combination."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: channel, axes, solver overrides and output settings."""

    exp_id: str = "run"
    channel: str = "rician"
    k: float = 10.0
    k_unit: str = "linear"
    mean: float = 1.0
    table: str = ""
    n: tuple = (128.0,)
    p_db: tuple = (10.0,)
    phi: tuple = (4,)
    eps_m: tuple = (1e-3,)
    seed: int = 0
    jobs: int = 1
    out: str = "results"
    solver: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    validate: dict = field(default_factory=dict)
    paper_exact: bool = False
    timing: bool = False

    def __post_init__(self):
        if self.channel not in ("rayleigh", "rician", "table"):
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.k_unit not in ("linear", "db"):
            raise ConfigError("k_unit must be linear or dB")
        if self.channel == "table" and not self.table:
            raise ConfigError("channel = table needs a table path")
        if not (self.n and self.p_db and self.phi and self.eps_m):
            raise ConfigError("sweep lists must be nonempty")
        if any(not x >= 1 for x in self.n):
            raise ConfigError("blocklengths must be >= 1")
        if any(k < 1 for k in self.phi):
            raise ConfigError("Phi must be >= 1")
        if any(e is not None and not 0 < e < 1 for e in self.eps_m):
            raise ConfigError("eps_m must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @property
    def k_linear(self) -> float:
        return self.k if self.k_unit == "linear" else 10.0 ** (self.k / 10.0)

    def build_channel(self) -> ChannelModel:
        if self.channel == "rayleigh":
            return Rayleigh(self.mean)
        if self.channel == "rician":
            return Rician(self.k_linear)
        return load_table(self.table, label="table")

    def quadrature(self) -> QuadratureSpec:
        q = QuadratureSpec()
        keys = {"rel_tol", "abs_tol", "tail_mass"} & self.solver.keys()
        return replace(q, **{k: float(self.solver[k]) for k in keys})

    def solver_config(self) -> SolverConfig:
        kw = {"quadrature": self.quadrature(), "paper_exact": self.paper_exact}
        for k in ("conv_tol", "rate_tol", "boundary_tol"):
            if k in self.solver:
                kw[k] = float(self.solver[k])
        if "max_outer_iters" in self.solver:
            kw["max_outer_iters"] = int(self.solver["max_outer_iters"])
        return SolverConfig(**kw)

    def constrained_config(self) -> ConstrainedConfig:
        kw = {}
        for k in ("rho_init", "warm_rho", "rate_step"):
            if k in self.solver:
                kw[k] = float(self.solver[k])
        if "max_restarts" in self.solver:
            kw["max_restarts"] = int(self.solver["max_restarts"])
        base = self.solver_config()
        if self.paper_exact:
            return ConstrainedConfig.literal(base=base, **kw)
        if "accelerate" in self.solver:
            kw["accelerate"] = _boolean(self.solver["accelerate"])
        return ConstrainedConfig(base=base, **kw)

    def init_boundaries(self, size: int):
        if not self.solver.get("init", "").strip():
            return None
        inner = _floats(self.solver["init"])
        if len(inner) != size - 1:
            raise ConfigError(f"init lists {len(inner)} boundaries but Phi = {size} needs {size - 1}")
        return inner


def _boolean(text) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _floats(text, allow_none=False):
    out = []
    for tok in str(text).replace(",", " ").split():
        if allow_none and tok.lower() in ("none", "na"):
            out.append(None)
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise ConfigError(f"not a number: {tok!r}") from None
    return tuple(out)


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"expected integers: {text!r}")
    return tuple(int(v) for v in vals)


def load_config(path: str | None, **overrides) -> ExperimentConfig:
    """Read a config file (or only defaults when ``path`` is None).

    Keyword overrides with value None are ignored.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    unknown = set(cp.sections()) - {"experiment", "solver", "curves", "validate"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    ex = cp["experiment"] if cp.has_section("experiment") else {}
    kw = {}
    try:
        simple = {"id": ("exp_id", str), "channel": ("channel", str.lower), "k": ("k", float),
                  "k_unit": ("k_unit", str.lower), "mean": ("mean", float), "table": ("table", str),
                  "seed": ("seed", int), "jobs": ("jobs", int), "out": ("out", str)}
        for key, (name, conv) in simple.items():
            if key in ex:
                kw[name] = conv(ex[key])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if "n" in ex:
        kw["n"] = _floats(ex["n"])
    if "p_db" in ex:
        kw["p_db"] = _floats(ex["p_db"])
    if "phi" in ex:
        kw["phi"] = _ints(ex["phi"])
    if "eps_m" in ex:
        kw["eps_m"] = _floats(ex["eps_m"], allow_none=True)
    for sec in ("solver", "curves", "validate"):
        if cp.has_section(sec):
            kw[sec] = dict(cp[sec])
    kw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def format_value(x) -> str:
    """CSV cell text: 9 significant digits, ``NA`` for missing values."""
    if x is None:
        return "NA"
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NA"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".9g")


def _scheme_text(header: str, scheme: QuantizationScheme) -> str:
    rates_bpcu = " ".join(format_value(r * LOG2E) for r in scheme.rates)
    return (
        f"# {header} rates_bpcu= {rates_bpcu}\n"
        + " ".join(repr(float(b)) for b in scheme.boundaries) + "\n"
        + " ".join(repr(float(r)) for r in scheme.rates) + "\n"
    )


def read_scheme(path) -> QuantizationScheme:
    """Load a scheme file written by this tool."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) != 2:
        raise ValueError(f"{path}: expected a boundaries line and a rates line")
    return QuantizationScheme(tuple(float(x) for x in lines[0].split()), tuple(float(x) for x in lines[1].split()))


# --------------------------------------------------------------------------
# sweep points
# --------------------------------------------------------------------------


@dataclass
class PointResult:
    rows: list
    files: list  # (name, text)
    failed: bool = False
    message: str = ""


def _base_row(cfg: ExperimentConfig, method, n, p_db, phi, eps):
    return {
        "experiment_id": f"{cfg.exp_id}:{method}",
        "channel": cfg.channel,
        "K": cfg.k_linear if cfg.channel == "rician" else None,
        "n": n,
        "P_dB": p_db,
        "Phi": phi,
        "eps_m": eps,
        "total_goodput_bpcu": None,
        "total_cep": None,
        "flag": None,
        "iterations": None,
        "wall_time_ms": None,
    }


def _file_name(cfg, method, n, p_db, phi, eps):
    parts = [cfg.exp_id, method, f"n{format_value(n)}", f"P{format_value(p_db)}"]
    if phi is not None:
        parts.append(f"Phi{phi}")
    if eps is not None:
        parts.append(f"eps{format_value(eps)}")
    return "_".join(parts).replace("/", "-") + ".txt"


def _header(cfg, method, n, p_db, phi, eps, goodput_bpcu):
    vals = [("id", cfg.exp_id), ("method", method), ("channel", cfg.channel),
            ("K", cfg.k_linear if cfg.channel == "rician" else None), ("n", n), ("P_dB", p_db),
            ("Phi", phi), ("eps_m", eps), ("goodput_bpcu", goodput_bpcu)]
    return " ".join(f"{k}={format_value(v)}" for k, v in vals)


def _finish(cfg, row, method, scheme, rep, t0):
    row["total_goodput_bpcu"] = rep.total_goodput * LOG2E
    row["total_cep"] = rep.total_cep
    row["wall_time_ms"] = (time.perf_counter() - t0) * 1e3
    files = []
    if scheme is not None:
        name = _file_name(cfg, method, row["n"], row["P_dB"], row["Phi"], row["eps_m"])
        head = _header(cfg, method, row["n"], row["P_dB"], row["Phi"], row["eps_m"], row["total_goodput_bpcu"])
        files.append((name, _scheme_text(head, scheme)))
    return files


def _optimize_point(task) -> PointResult:
    cfg, method, n, p_db, phi = task
    row = _base_row(cfg, method, n, p_db, phi, None)
    t0 = time.perf_counter()
    try:
        ch = cfg.build_channel()
        lp = LinkParams.from_db(n, p_db)
        scfg = cfg.solver_config()
        q = scfg.quadrature
        top = ch.upper_truncation(q.tail_mass)
        scheme = None
        if method == "ergodic":
            g = ergodic_capacity(ch, lp, q)
            row.update(total_goodput_bpcu=g * LOG2E, total_cep=0.0, flag="ok",
                       wall_time_ms=(time.perf_counter() - t0) * 1e3)
            return PointResult([row], [])
        if method == "fixed-rate":
            if lp.infinite:
                r, _ = fixed_rate_optimum(ch, lp, q)
            else:
                r = optimal_rate(0.0, top, ch, lp, scfg).rate
            scheme = QuantizationScheme((0.0, top), (r,))
            rep = scheme_totals(scheme, ch, lp, q)
            row["flag"] = "ok"
        elif method == "asymptotic":
            a = asymptotic_quantizer(ch, lp, phi)
            scheme = QuantizationScheme((0.0,) + a.boundaries[:-1] + (top,), (0.0,) + a.rates)
            rep = scheme_totals(scheme, ch, lp, q)
            row["flag"] = "ok"
        else:
            scheme, rep = run_algorithm1(ch, lp, phi, cfg.init_boundaries(phi), scfg)
            row["iterations"] = rep.iterations
            row["flag"] = "converged" if rep.converged else "not-converged"
        files = _finish(cfg, row, method, scheme, rep, t0)
        return PointResult([row], files, failed=not rep.converged)
    except Exception as exc:  # a failed point must not stop the sweep
        row["flag"] = "failed"
        return PointResult([row], [], True, f"{row['experiment_id']} n={n} P={p_db} Phi={phi}: {exc}")


def _constrained_point(task) -> PointResult:
    cfg, n, p_db, phi, eps = task
    row = _base_row(cfg, "alg2", n, p_db, phi, eps)
    t0 = time.perf_counter()
    try:
        ch = cfg.build_channel()
        lp = LinkParams.from_db(n, p_db)
        ccfg = cfg.constrained_config()
        scheme, _, rep, feasible = run_algorithm2(ch, lp, phi, eps, ccfg, cfg.init_boundaries(phi))
        row["iterations"] = rep.iterations
        stalled = not rep.converged and rep.iterations >= ccfg.base.max_outer_iters
        row["flag"] = "feasible" if feasible else ("not-converged" if stalled else "infeasible")
        files = _finish(cfg, row, "alg2", scheme, rep, t0)
        return PointResult([row], files, failed=stalled)
    except Exception as exc:
        row["flag"] = "failed"
        return PointResult([row], [], True, f"alg2 n={n} P={p_db} Phi={phi} eps={eps}: {exc}")


def _grid_spec(cfg) -> GridSpec:
    v = cfg.validate
    kw = {k: int(v[k]) for k in ("boundary_grid", "rate_grid", "refine_levels", "refine_points") if k in v}
    return GridSpec(**kw)


def _validate_point(task) -> PointResult:
    cfg, n, p_db, phi, eps = task
    method = "alg1" if eps is None else "alg2"
    row = _base_row(cfg, method, n, p_db, phi, eps)
    row.update({k: None for k in VALIDATE_EXTRA})
    mode = cfg.validate.get("mode", "grid").lower()
    t0 = time.perf_counter()
    try:
        ch = cfg.build_channel()
        lp = LinkParams.from_db(n, p_db)
        if eps is None:
            scheme, rep = run_algorithm1(ch, lp, phi, cfg.init_boundaries(phi), cfg.solver_config())
            ok = rep.converged
            row["flag"] = "converged" if ok else "not-converged"
        else:
            scheme, _, rep, feasible = run_algorithm2(
                ch, lp, phi, eps, cfg.constrained_config(), cfg.init_boundaries(phi)
            )
            ok = rep.converged
            row["flag"] = "feasible" if feasible else "infeasible"
        row["iterations"] = rep.iterations
        q = cfg.quadrature()
        if mode in ("grid", "both"):
            g = grid_search(ch, lp, phi, _grid_spec(cfg), eps_m=eps, quad=q)
            row["oracle_goodput_bpcu"] = g.goodput * LOG2E
            row["gap_bpcu"] = (g.goodput - rep.total_goodput) * LOG2E
        if mode in ("mc", "both"):
            mc = monte_carlo_goodput(scheme, ch, lp, McSpec(int(cfg.validate.get("draws", 10**6)), cfg.seed))
            row.update(mc_goodput_bpcu=mc.goodput * LOG2E, mc_std_error_bpcu=mc.std_error * LOG2E,
                       mc_cep=mc.cep, mc_cep_std_error=mc.cep_std_error)
        files = _finish(cfg, row, method, scheme, rep, t0)
        return PointResult([row], files, failed=not ok)
    except Exception as exc:
        row["flag"] = "failed"
        return PointResult([row], [], True, f"validate n={n} P={p_db} Phi={phi} eps={eps}: {exc}")


def _curve_rows(cfg: ExperimentConfig) -> list:
    """Error probability versus rate at fixed gains, and per-region goodput versus rate."""
    cv = cfg.curves
    gammas = _floats(cv.get("gamma", "1.0"))
    bounds = _floats(cv.get("boundaries", "0, 0.9, 1.2, inf"))
    r_max = float(cv.get("rate_max_bpcu", 4.0))
    count = int(cv.get("rate_points", 201))
    if count < 2 or r_max <= 0 or any(g < 0 for g in gammas):
        raise ConfigError("curves need rate_points >= 2, rate_max_bpcu > 0 and gains >= 0")
    if len(bounds) < 2 or bounds[0] != 0 or any(b <= a for a, b in zip(bounds, bounds[1:])):
        raise ConfigError("curve boundaries must start at 0 and increase")
    rates_bpcu = np.linspace(0.0, r_max, count)
    rates = rates_bpcu / LOG2E
    ch = cfg.build_channel()
    q = cfg.quadrature()
    top = ch.upper_truncation(q.tail_mass)
    k = cfg.k_linear if cfg.channel == "rician" else None
    rows = []
    for n in cfg.n:
        for p_db in cfg.p_db:
            lp = LinkParams.from_db(n, p_db)
            for g in gammas:
                om = np.atleast_1d(omega(g, rates, lp))
                for rb, v in zip(rates_bpcu, om):
                    rows.append([f"{cfg.exp_id}:omega", "omega", cfg.channel, k, n, p_db, g, None, rb, v])
            for i, (lo, hi) in enumerate(zip(bounds, bounds[1:])):
                hi = min(hi, top)
                s = region_success_curve(lo, hi, rates, ch, lp, q) if hi > lo else np.zeros_like(rates)
                good = rates * s * LOG2E
                for rb, v in zip(rates_bpcu, good):
                    rows.append([f"{cfg.exp_id}:region_goodput", "region_goodput", cfg.channel, k, n, p_db,
                                 None, i + 1, rb, v])
    return rows


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------


def _run_pool(fn, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_value(x) for x in r])
    return buf.getvalue()


def _emit(cfg, name, header, results) -> int:
    out = Path(cfg.out)
    (out / "schemes").mkdir(parents=True, exist_ok=True)
    rows = []
    failed = False
    for res in results:
        for row in res.rows:
            if not cfg.timing:
                row["wall_time_ms"] = None
            rows.append([row[h] for h in header])
        for fname, text in res.files:
            (out / "schemes" / fname).write_text(text)
        if res.failed:
            failed = True
            if res.message:
                print(f"warning: {res.message}", file=sys.stderr)
    (out / name).write_text(_csv_text(header, rows))
    return 1 if failed else 0


def _check_sweep(cfg, what, finite=True):
    if finite and any(math.isinf(n) for n in cfg.n):
        raise ConfigError(f"{what} needs finite blocklengths")
    for phi in cfg.phi:
        cfg.init_boundaries(phi)


def cmd_curves(cfg: ExperimentConfig) -> int:
    rows = _curve_rows(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "curves.csv").write_text(_csv_text(CURVE_HEADER, rows))
    return 0


def cmd_optimize(cfg: ExperimentConfig) -> int:
    _check_sweep(cfg, "optimize", finite=False)
    tasks = {}
    finite = [n for n in cfg.n if not math.isinf(n)]
    for p in cfg.p_db:
        tasks[("ergodic", math.inf, p, None)] = None
        tasks[("fixed-rate", math.inf, p, None)] = None
        for phi in cfg.phi:
            tasks[("asymptotic", math.inf, p, phi)] = None
        for n in finite:
            tasks[("fixed-rate", n, p, None)] = None
            for phi in cfg.phi:
                tasks[("alg1", n, p, phi)] = None
    results = _run_pool(_optimize_point, [(cfg,) + t for t in tasks], cfg.jobs)
    return _emit(cfg, "optimize.csv", CSV_HEADER, results)


def cmd_optimize_constrained(cfg: ExperimentConfig) -> int:
    _check_sweep(cfg, "optimize-constrained")
    if any(e is None for e in cfg.eps_m):
        raise ConfigError("optimize-constrained needs numeric eps_m values")
    tasks = [(cfg, n, p, phi, e) for n in cfg.n for p in cfg.p_db for phi in cfg.phi for e in cfg.eps_m]
    return _emit(cfg, "optimize_constrained.csv", CSV_HEADER, _run_pool(_constrained_point, tasks, cfg.jobs))


def cmd_validate(cfg: ExperimentConfig) -> int:
    _check_sweep(cfg, "validate")
    mode = cfg.validate.get("mode", "grid").lower()
    if mode not in ("grid", "mc", "both"):
        raise ConfigError("validate mode must be grid, mc or both")
    if mode != "mc":
        spec = _grid_spec(cfg)
        for phi in cfg.phi:
            for e in cfg.eps_m:
                check_grid_cost(phi, spec, e)
    tasks = [(cfg, n, p, phi, e) for n in cfg.n for p in cfg.p_db for phi in cfg.phi for e in cfg.eps_m]
    return _emit(cfg, "validate.csv", CSV_HEADER + VALIDATE_EXTRA, _run_pool(_validate_point, tasks, cfg.jobs))


COMMANDS = {
    "curves": cmd_curves,
    "optimize": cmd_optimize,
    "optimize-constrained": cmd_optimize_constrained,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fblquant",
        description="Rate and feedback-quantizer design for short packets over quasi-static fading.",
        epilog=CONFIG_TEMPLATE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "curves": "error probability and per-region goodput versus rate",
        "optimize": "unconstrained schemes plus ergodic, fixed-rate and asymptotic baselines",
        "optimize-constrained": "schemes under a total error budget",
        "validate": "optimizer against the grid oracle and/or Monte Carlo",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text, epilog=CONFIG_TEMPLATE,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="PATH", help="INI-style config file")
        p.add_argument("--out", metavar="DIR", help="output directory (default: results)")
        p.add_argument("--jobs", type=int, metavar="N", help="worker processes (default: 1)")
        p.add_argument("--seed", type=int, metavar="U64", help="Monte-Carlo seed (default: 0)")
        p.add_argument("--paper-exact", action="store_true", help="use every literal variant of the algorithms")
        p.add_argument("--timing", action="store_true", help="fill wall_time_ms (makes output run-dependent)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(
            args.config, out=args.out, jobs=args.jobs, seed=args.seed,
            paper_exact=args.paper_exact or None, timing=args.timing or None,
        )
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # cost guard and other argument-level rejections
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
