"""
Command-line driver.

    decoherent-walk unitary    --steps 500
    decoherent-walk trajectory --theta 0.39269908169872414 --steps 500 --runs 10000 --seed 1
    decoherent-walk density    --p 1 --steps 50
    decoherent-walk moments    --theta 0.39269908169872414 --steps 500
    decoherent-walk sweep trajectory --theta 0.19634954084936207,0.39269908169872414 --steps 500
    decoherent-walk compare    --theta 0.39269908169872414 --steps 40 --runs 10000 --seed 7

Angles are radians; the reference values are pi/16, pi/8, 3pi/16 and pi/4.
Failures exit nonzero and print one JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bloch import (
    asymptotic_slope,
    crossover_time,
    first_moment_asymptotic,
    moment_series,
    second_moment_asymptotic,
)
from .coin import ChannelModel, CoinState, KrausChannel, equivalent_parameters, make_channel
from .density import DEFAULT_ORACLE_LIMIT, decoherent_step, initial_density, position_marginal
from .errors import OracleLimitError, ParameterDomainError, SingularityError
from .stats import (
    MomentSeries,
    PositionDistribution,
    classical_binomial,
    export,
    total_variation,
)
from .walk import DEFAULT_CHUNK, run_ensemble, unitary_series

OUTDIR_ENV = "DECOHERENT_WALK_OUTDIR"
COMMANDS = ("unitary", "trajectory", "density", "moments", "sweep", "compare")
DECOHERENT = ("trajectory", "density", "moments", "compare")


class ConfigError(ValueError):
    pass


class CheckFailed(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    steps: int = 500
    runs: int = 10000
    model: ChannelModel | None = None
    strength: float | None = None
    coin: CoinState = CoinState.right()
    seed: int | None = None
    out: Path = Path(".")
    format: str = "csv"
    quad_nodes: int | None = None
    oracle_limit: int = DEFAULT_ORACLE_LIMIT
    workers: int = 1
    chunk_size: int = DEFAULT_CHUNK
    epsilon: float = 1e-3
    asymptotic: bool = True
    sigma: float = 4.0
    exact_tol: float = 1e-8

    @property
    def channel(self) -> KrausChannel:
        return make_channel(self.model, self.strength)

    @property
    def p(self) -> float:
        return self.channel.parameters.p

    def meta(self, method: str, runs: int | None = None) -> dict:
        if self.model is None:
            channel, p, theta, q = "none", 0.0, 0.0, 0.5
        else:
            s = equivalent_parameters(self.strength, self.model)
            channel, p, theta, q = self.model.value, s.p, s.theta, s.q
        return {
            "channel": channel,
            "p": p,
            "theta": theta,
            "q": q,
            "coin": self.coin.components(),
            "steps": self.steps,
            "runs": runs,
            "seed": self.seed,
            "method": method,
            "version": __version__,
        }


# ------------------------------------------------------------------ parsing


def _coin(text: str) -> CoinState:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--coin expects re,im,re,im (got {text!r})") from None
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("--coin expects four numbers re_a,im_a,re_b,im_b")
    try:
        return CoinState.from_components(*parts)
    except ParameterDomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(sp: argparse.ArgumentParser, command: str, sweep: bool = False) -> None:
    sp.add_argument("--steps", type=int, default=500, help="number of walk steps t (default 500)")
    sp.add_argument("--coin", type=_coin, default=CoinState.right(), help="initial coin re_a,im_a,re_b,im_b (default |R>)")
    sp.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUTDIR_ENV} or .)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    if command != "unitary":
        g = sp.add_mutually_exclusive_group()
        kind = _float_list if sweep else float
        g.add_argument("--p", type=kind, help="measurement probability per step, [0, 1]")
        g.add_argument("--theta", type=kind, help="dephasing angle in radians, [0, pi/4]")
        g.add_argument("--q", type=kind, help="weak-measurement bias, [1/2, 1]")
    if command in ("trajectory", "compare"):
        sp.add_argument("--runs", type=int, default=10000)
        sp.add_argument("--seed", type=int, default=None, help="master seed (recorded in output; random if omitted)")
        sp.add_argument("--workers", type=int, default=1, help="parallel worker processes (results do not depend on it)")
        sp.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK)
    if command in ("density", "compare"):
        sp.add_argument("--oracle-limit", type=int, default=DEFAULT_ORACLE_LIMIT)
    if command in ("moments", "compare"):
        sp.add_argument("--quad-nodes", type=int, default=None, help="quadrature nodes (default max(64, 4t+8))")
    if command == "moments":
        sp.add_argument("--epsilon", type=float, default=1e-3, help="crossover threshold (default 1e-3)")
        sp.add_argument("--no-asymptotic", dest="asymptotic", action="store_false")
    if command == "compare":
        sp.add_argument("--sigma", type=float, default=4.0, help="MC tolerance in standard errors (default 4)")
        sp.add_argument("--exact-tol", type=float, default=1e-8, help="exact-vs-exact tolerance (default 1e-8)")


COMMAND_HELP = {
    "unitary": "noiseless walk: exact distribution and moments",
    "trajectory": "Monte Carlo ensemble of pure-state trajectories",
    "density": "exact mixed-state evolution on the lattice",
    "moments": "exact and long-time moments from the transfer-matrix formulas",
    "compare": "cross-check all methods and report pass/fail",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decoherent-walk", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in COMMAND_HELP.items():
        _add_common(sub.add_parser(name, help=text, description=text), name)
    sweep = sub.add_parser("sweep", help="repeat a command over a comma-separated strength list")
    inner = sweep.add_subparsers(dest="inner", required=True)
    for name in DECOHERENT:
        _add_common(inner.add_parser(name), name, sweep=True)
    return parser


def config_from_args(args: argparse.Namespace, command: str | None = None) -> RunConfig:
    command = command or args.command
    out = args.out if args.out is not None else Path(os.environ.get(OUTDIR_ENV, "."))
    cfg = RunConfig(command=command, steps=args.steps, coin=args.coin, out=out, format=args.format)
    if cfg.steps < 0:
        raise ConfigError("--steps must be >= 0")
    if command != "unitary":
        given = [(m, getattr(args, m.parameter)) for m in ChannelModel if getattr(args, m.parameter) is not None]
        if len(given) != 1:
            raise ConfigError(f"{command} needs exactly one of --p, --theta, --q")
        cfg.model, cfg.strength = given[0]
        if not isinstance(cfg.strength, list):
            equivalent_parameters(cfg.strength, cfg.model)
    for name in ("runs", "seed", "workers", "chunk_size", "oracle_limit", "quad_nodes", "epsilon", "asymptotic", "sigma", "exact_tol"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if cfg.runs < 1:
        raise ConfigError("--runs must be >= 1")
    if cfg.workers < 1 or cfg.chunk_size < 1:
        raise ConfigError("--workers and --chunk-size must be >= 1")
    if cfg.quad_nodes is not None and cfg.quad_nodes < 1:
        raise ConfigError("--quad-nodes must be >= 1")
    if command in ("trajectory", "compare") and cfg.seed is None:
        cfg.seed = int(np.random.SeedSequence().entropy)
    return cfg


# ------------------------------------------------------------------ outputs


def _write(cfg: RunConfig, method: str, runs: int | None, meta_extra: dict | None = None, **data) -> list[Path]:
    cfg.out.mkdir(parents=True, exist_ok=True)
    meta = cfg.meta(method, runs) | (meta_extra or {})
    if cfg.format == "json":
        return [export(data, "json", cfg.out / f"{cfg.command}.json", meta=meta)]
    paths = []
    for key, value in data.items():
        if isinstance(value, (PositionDistribution, MomentSeries)):
            paths.append(export(value, "csv", cfg.out / f"{cfg.command}_{key}.csv"))
    (cfg.out / f"{cfg.command}_meta.json").write_text(json.dumps(meta, indent=1) + "\n")
    paths.append(cfg.out / f"{cfg.command}_meta.json")
    return paths


def _density_series(cfg: RunConfig):
    if cfg.steps > cfg.oracle_limit:
        raise OracleLimitError(cfg.steps, cfg.oracle_limit)
    rho = initial_density(cfg.coin)
    channel = cfg.channel
    means, variances = [0.0], [0.0]
    for _ in range(cfg.steps):
        rho = decoherent_step(rho, channel)
        d = position_marginal(rho)
        means.append(d.mean)
        variances.append(d.variance)
    return position_marginal(rho), MomentSeries(np.arange(cfg.steps + 1), means, variances)


def cmd_unitary(cfg: RunConfig) -> list[Path]:
    dist, series = unitary_series(cfg.coin, cfg.steps)
    return _write(cfg, "unitary", None, distribution=dist, moments=series)


def cmd_trajectory(cfg: RunConfig) -> list[Path]:
    result = run_ensemble(cfg.coin, cfg.channel, cfg.steps, cfg.runs, cfg.seed, cfg.workers, cfg.chunk_size)
    return _write(cfg, "trajectory", cfg.runs, distribution=result.distribution, moments=result.moments)


def cmd_density(cfg: RunConfig) -> list[Path]:
    dist, series = _density_series(cfg)
    return _write(cfg, "density", None, distribution=dist, moments=series)


def _exact_series(cfg: RunConfig) -> MomentSeries:
    series = moment_series(cfg.coin, cfg.p, max(cfg.steps, 1), nodes=cfg.quad_nodes)
    series.extra["second_moment"] = series.second_moment
    return series


def cmd_moments(cfg: RunConfig) -> list[Path]:
    p = cfg.p
    if cfg.asymptotic and p <= 0.0:
        raise ParameterDomainError("asymptotic columns are undefined at p = 0; pass --no-asymptotic")
    series = _exact_series(cfg)
    meta_extra = {}
    if cfg.asymptotic:
        t = series.t.astype(np.float64)
        m_inf = first_moment_asymptotic(cfg.coin, p)
        series.extra["mean_asymptotic"] = np.full(len(t), m_inf)
        series.extra["second_moment_asymptotic"] = second_moment_asymptotic(p, t)
        series.extra["variance_asymptotic"] = series.extra["second_moment_asymptotic"] - m_inf**2
        meta_extra = {
            "crossover_time": crossover_time(p, cfg.epsilon),
            "epsilon": cfg.epsilon,
            "asymptotic_slope": asymptotic_slope(p),
        }
    return _write(cfg, "moments", None, meta_extra, moments=series)


# ------------------------------------------------------------------ compare


def cmd_compare(cfg: RunConfig) -> list[Path]:
    """
    Cross-validate the engines at shared parameters.

    Writes ``compare_table.csv`` (per-t values and discrepancies) and
    ``compare_report.json``; raises CheckFailed if any check fails.
    """
    p = cfg.p
    t = cfg.steps
    dens_dist, dens = _density_series(cfg)
    cols: dict[str, np.ndarray] = {"t": dens.t, "density_mean": dens.mean, "density_variance": dens.variance}
    checks: list[dict] = []

    def check(name, value, tol):
        checks.append({"name": name, "value": float(value), "tolerance": float(tol), "passed": bool(value <= tol)})

    if p == 0.0:
        uni_dist, uni = unitary_series(cfg.coin, cfg.steps)
        cols.update(unitary_mean=uni.mean, unitary_variance=uni.variance)
        check("unitary_vs_density_distribution_maxabs",
              np.abs(uni_dist.probabilities - dens_dist.probabilities).max(), 1e-10)
        check("unitary_vs_density_mean_maxabs", np.abs(uni.mean - dens.mean).max(), 1e-10)
        check("unitary_vs_density_variance_maxabs", np.abs(uni.variance - dens.variance).max(), 1e-10)
    else:
        exact = moment_series(cfg.coin, p, max(t, 1), nodes=cfg.quad_nodes)
        e_mean = np.concatenate([[0.0], exact.mean])[: t + 1]
        e_var = np.concatenate([[0.0], exact.variance])[: t + 1]
        cols.update(exact_mean=e_mean, exact_variance=e_var)
        check("exact_vs_density_mean_maxabs", np.abs(e_mean - dens.mean).max(), cfg.exact_tol)
        check("exact_vs_density_variance_maxabs", np.abs(e_var - dens.variance).max(), cfg.exact_tol)

        mc = run_ensemble(cfg.coin, cfg.channel, t, cfg.runs, cfg.seed, cfg.workers, cfg.chunk_size)
        m = mc.moments
        cols.update(mc_mean=m.mean, mc_variance=m.variance)
        if m.has_errors:
            cols.update(mc_stderr_mean=m.stderr_mean, mc_stderr_variance=m.stderr_variance)
            z_mean = np.abs(m.mean - dens.mean) / np.maximum(m.stderr_mean, 1e-300)
            z_var = np.abs(m.variance - dens.variance) / np.maximum(m.stderr_variance, 1e-300)
            exact_rows = (m.stderr_mean == 0) & (np.abs(m.mean - dens.mean) <= 1e-9)
            z_mean[exact_rows] = 0.0
            exact_rows = (m.stderr_variance == 0) & (np.abs(m.variance - dens.variance) <= 1e-9)
            z_var[exact_rows] = 0.0
            cols.update(mc_z_mean=z_mean, mc_z_variance=z_var)
            check("mc_vs_density_mean_max_z", z_mean.max(), cfg.sigma)
            check("mc_vs_density_variance_max_z", z_var.max(), cfg.sigma)
            tv = total_variation(mc.distribution, dens_dist)
            check("mc_vs_density_tv_over_noise", tv / max(mc.expected_tv_noise(), 1e-300), 3.0)
        if p == 1.0:
            binom = classical_binomial(t)
            check("density_vs_binomial_maxabs",
                  np.abs(dens_dist.probabilities - binom.probabilities).max(), 1e-10)
            if m.has_errors:
                check("mc_vs_binomial_tv_over_noise",
                      total_variation(mc.distribution, binom) / max(mc.expected_tv_noise(), 1e-300), 3.0)

    series = MomentSeries(cols.pop("t"), cols.pop("density_mean"), cols.pop("density_variance"), extra=cols)
    cfg.out.mkdir(parents=True, exist_ok=True)
    table = export(series, "csv", cfg.out / "compare_table.csv")
    passed = all(c["passed"] for c in checks)
    report = {"meta": cfg.meta("compare", cfg.runs if p > 0 else None), "checks": checks, "passed": passed}
    report_path = cfg.out / "compare_report.json"
    report_path.write_text(json.dumps(report, indent=1) + "\n")
    if not passed:
        failed = [c["name"] for c in checks if not c["passed"]]
        raise CheckFailed("checks failed: " + ", ".join(failed))
    return [table, report_path]


HANDLERS = {
    "unitary": cmd_unitary,
    "trajectory": cmd_trajectory,
    "density": cmd_density,
    "moments": cmd_moments,
    "compare": cmd_compare,
}


def cmd_sweep(args: argparse.Namespace) -> list[Path]:
    cfg = config_from_args(args, command=args.inner)
    values = cfg.strength
    paths: list[Path] = []
    for value in values:
        sub = replace(cfg, strength=value, out=cfg.out / f"{cfg.model.parameter}={value!r}")
        equivalent_parameters(value, cfg.model)
        paths += HANDLERS[args.inner](sub)
    return paths


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"status": "error", "reason": kind, "message": message}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            paths = cmd_sweep(args)
        else:
            paths = HANDLERS[args.command](config_from_args(args))
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        return _fail("config", str(exc), 2)
    except (ParameterDomainError, SingularityError) as exc:
        return _fail("domain", str(exc), 3)
    except OracleLimitError as exc:
        return _fail("oracle_limit", str(exc), 4)
    except CheckFailed as exc:
        return _fail("check_failed", str(exc), 1)
    except OSError as exc:
        return _fail("io", str(exc), 5)
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
