"""Command-line driver: run certificates and write reports and CSV tables.

    bowlcert certify {all,envelope,delta,tail,barrier,identities}
    bowlcert table
    bowlcert plot-data {K,delta}

Settings come from flags, then ``BOWLCERT_*`` environment variables, then
built-in defaults.  Exit status: 0 pass, 1 some verdict failed, 2 bad
configuration, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
ENV_PREFIX = "BOWLCERT_"
SELECTORS = ("all", "envelope", "delta", "tail", "barrier", "identities")
BARRIER_TARGETS = ("p", "p1", "p2", "pbar")


class ConfigError(ValueError):
    pass


def _fraction(text) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _float(text) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _int(text) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"not an integer: {text!r}") from exc


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class RunConfig:
    h: Fraction = Fraction(1, 10)
    n: int = 40
    r_cap: float = 100.0
    grid_step: float = 1e-3
    quad_tol: float = 1e-10
    ode_tol: float = 1e-10
    seed: int = 20251016
    trials: int = 1000
    out_dir: str = "."
    delta_h: Fraction = Fraction(1, 200)
    no_timings: bool = False

    def validate(self) -> "RunConfig":
        if self.h <= 0:
            raise ConfigError("h must be positive")
        if self.delta_h <= 0 or self.delta_h > Fraction(1, 10):
            raise ConfigError("delta-h must lie in (0, 1/10]")
        if self.n < 0:
            raise ConfigError("n must be non-negative")
        if not self.r_cap >= 3.9:
            raise ConfigError("r-cap must be at least 3.9")
        for name in ("grid_step", "quad_tol", "ode_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name.replace('_', '-')} must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        return self

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, Fraction) else v
        return out


_PARSERS = {
    "h": _fraction,
    "n": _int,
    "r_cap": _float,
    "grid_step": _float,
    "quad_tol": _float,
    "ode_tol": _float,
    "seed": _int,
    "trials": _int,
    "out_dir": str,
    "delta_h": _fraction,
    "no_timings": _bool,
}

_ENV_NAMES = {"out_dir": "OUT"}


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    """Merge flags over environment over defaults."""
    environ = os.environ if environ is None else environ
    values = {}
    for name, parse in _PARSERS.items():
        flag = getattr(args, name, None)
        env = environ.get(ENV_PREFIX + _ENV_NAMES.get(name, name.upper()))
        if flag is not None and flag is not False:
            values[name] = parse(flag)
        elif env is not None:
            values[name] = parse(env)
    return RunConfig(**values).validate()


# -- output ------------------------------------------------------------


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# -- sections ----------------------------------------------------------


def _profile(cfg: RunConfig, r_max: float):
    from bowlcert.profile import solve_profile

    return solve_profile(r_max=r_max, tol=cfg.ode_tol)


def section_envelope(cfg: RunConfig, cache: dict) -> list:
    from bowlcert import bounds

    r_max = max(float(cfg.n * cfg.h), 1.0) + 1.0
    if "profile" not in cache or cache["profile"].r_max < r_max:
        cache["profile"] = _profile(cfg, max(r_max, 31.0))
    return [
        bounds.certify_envelope(cfg.h, cfg.n, cache["profile"]),
        bounds.certify_a34(),
        bounds.certify_upper_closed_form(),
        bounds.certify_lower_closed_form(),
    ]


def section_delta(cfg: RunConfig, cache: dict) -> list:
    from bowlcert.bounds import certify_delta

    return [certify_delta(cfg.delta_h, raise_on_fail=False)]


def section_tail(cfg: RunConfig, cache: dict) -> list:
    from bowlcert.bounds import tail_channel_certificates

    return tail_channel_certificates(cfg.r_cap)


def section_barrier(cfg: RunConfig, cache: dict) -> list:
    from bowlcert import barrier

    if "profile" not in cache or cache["profile"].r_max < 30.0:
        cache["profile"] = _profile(cfg, 31.0)
    bar = barrier.build_barrier(quad_tol=cfg.quad_tol)
    cache["barrier"] = bar
    certs = []
    for target in BARRIER_TARGETS:
        lo, hi = barrier._default_domain(bar, target)
        grid = barrier.default_grid(bar, r_end=hi, step=cfg.grid_step)
        certs.append(barrier.verify_supersolution(bar, cache["profile"], grid[grid >= lo], target))
    return certs


def section_identities(cfg: RunConfig, cache: dict) -> list:
    from bowlcert.barrier import build_barrier
    from bowlcert.identities import barrier_profile, run_all

    if "profile" not in cache or cache["profile"].r_max < 30.0:
        cache["profile"] = _profile(cfg, 31.0)
    if "barrier" not in cache:
        cache["barrier"] = build_barrier(quad_tol=cfg.quad_tol)
    return run_all(cfg.trials, cfg.seed, cache["profile"], barrier_profile(cache["barrier"]))


SECTIONS = {
    "envelope": section_envelope,
    "delta": section_delta,
    "tail": section_tail,
    "barrier": section_barrier,
    "identities": section_identities,
}


def build_report(selector: str, cfg: RunConfig) -> dict:
    from bowlcert.identities import IdentityReport

    names = list(SECTIONS) if selector == "all" else [selector]
    cache: dict = {}
    certificates, identities, timings = [], [], {}
    for name in names:
        t0 = time.perf_counter()
        for item in SECTIONS[name](cfg, cache):
            (identities if isinstance(item, IdentityReport) else certificates).append(item)
        timings[name] = round(time.perf_counter() - t0, 6)
    verdicts = [c.verdict for c in certificates] + [r.verdict for r in identities]
    return {
        "config": cfg.echo(),
        "certificates": [c.to_dict() for c in certificates],
        "identities": [r.to_dict() for r in identities],
        "overall": "pass" if all(v == "pass" for v in verdicts) else "fail",
        "timings": {} if cfg.no_timings else timings,
    }


def cmd_certify(selector: str, cfg: RunConfig) -> int:
    report = build_report(selector, cfg)
    path = Path(cfg.out_dir) / f"report_{selector}.json"
    write_atomic(path, json.dumps(report, indent=2, sort_keys=False) + "\n")
    for c in report["certificates"]:
        print(f"{c['verdict']:4}  {c['name']:28} margin={c['margin']:.6g}  {c['inequality']}")
    for r in report["identities"]:
        extra = f"  fitted={r['fitted_constants']}" if r["fitted_constants"] else ""
        print(f"{r['verdict']:4}  {r['name']:28} residual={r['max_residual']:.3g}{extra}")
    print(f"overall: {report['overall']}  ({path})")
    return EXIT_PASS if report["overall"] == "pass" else EXIT_FAIL


def cmd_table(cfg: RunConfig) -> int:
    from bowlcert.bounds import envelope_table

    path = Path(cfg.out_dir) / "bound_table.csv"
    write_atomic(path, envelope_table(cfg.h, cfg.n).to_csv())
    print(path)
    return EXIT_PASS


def k_plot_rows(cfg: RunConfig, profile=None, per_step: int = 10):
    """Rows (r, K, lower_env, upper_env) on (0, n h].

    At r the lower envelope is a_i for the last r_i <= r and the upper
    envelope is b_i for the first r_i >= r.
    """
    from bowlcert.bounds import envelope_table
    from bowlcert.profile import K_at

    table = envelope_table(cfg.h, cfg.n)
    if profile is None:
        profile = _profile(cfg, float(cfg.n * cfg.h) + 1.0)
    rows = []
    for j in range(1, cfg.n * per_step + 1):
        r = Fraction(j, per_step) * cfg.h
        lo_i = int(r // cfg.h)
        hi_i = lo_i if lo_i * cfg.h == r else lo_i + 1
        rows.append((float(r), float(K_at(profile, float(r))), table.a_lo(lo_i), table.b_hi(hi_i)))
    return rows


def delta_plot_rows(cfg: RunConfig, profile=None, step: float = 1e-3, r_end: float = 4.0):
    import numpy as np

    from bowlcert.profile import coefficients_at

    if profile is None:
        profile = _profile(cfg, r_end + 1.0)
    r = np.arange(1, int(round(r_end / step)) + 1) * step
    d = coefficients_at(profile, r).delta
    return [(float(x), float(y), 0.01) for x, y in zip(r, d)]


def cmd_plot_data(figure: str, cfg: RunConfig) -> int:
    if figure == "K":
        header, rows = "r,K,lower_env,upper_env", k_plot_rows(cfg)
    else:
        header, rows = "r,delta,threshold", delta_plot_rows(cfg)
    lines = [header] + [",".join(repr(float(v)) for v in row) for row in rows]
    path = Path(cfg.out_dir) / f"figure_{figure}.csv"
    write_atomic(path, "\n".join(lines) + "\n")
    print(path)
    return EXIT_PASS


# -- argument parsing --------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    p.add_argument("--h", dest="h", help="recursion step (e.g. 0.1 or 1/10)")
    p.add_argument("--n", dest="n", help="number of recursion steps")
    p.add_argument("--r-cap", dest="r_cap", help="cell cover limit for the tail coefficients")
    p.add_argument("--grid-step", dest="grid_step", help="barrier verification grid spacing")
    p.add_argument("--quad-tol", dest="quad_tol", help="absolute quadrature tolerance")
    p.add_argument("--ode-tol", dest="ode_tol", help="profile residual tolerance")
    p.add_argument("--seed", dest="seed", help="seed for the identity samplers")
    p.add_argument("--trials", dest="trials", help="samples per identity check")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--delta-h", dest="delta_h", help="cell width for the delta bracket")
    p.add_argument("--no-timings", dest="no_timings", action="store_true",
                   help="omit wall-clock timings so reports are byte-identical")
    return p


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="bowlcert", description="Certified bounds and barrier checks for the bowl profile.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("certify", parents=[common], help="run certificates and write a JSON report")
    c.add_argument("selector", choices=SELECTORS)
    sub.add_parser("table", parents=[common], help="write the envelope table as CSV")
    pd = sub.add_parser("plot-data", parents=[common], help="write figure data as CSV")
    pd.add_argument("figure", choices=("K", "delta"))
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "certify":
            return cmd_certify(args.selector, cfg)
        if args.command == "table":
            return cmd_table(cfg)
        return cmd_plot_data(args.figure, cfg)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
