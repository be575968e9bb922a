"""Command-line surface.

Evaluation commands print CSV rows (inputs..., value, err_bound) to stdout;
sampling commands write CSV files with a provenance header; ``verify`` runs
the acceptance suite and emits a deterministic JSON report.

Configuration precedence: command-line flags override ``--config`` file
entries (``key=value`` lines), which override ``STABLETREES_*`` environment
variables.  Exit codes: 0 success, 1 verification failure, 2 usage,
3 numeric failure, 4 missing artifact.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import laplace, sampler, tails, verify
from . import kappa as kp
from ._io import atomic_write_text, fmt
from .errors import ConfigurationError, DomainError, NumericError
from .index import MU_INF, KappaQuery, StableIndex

_ENV_PREFIX = "STABLETREES_"
_CONFIG_KEYS = {"gamma", "seed", "profile", "out", "threads", "tol"}

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_MISSING = 4


def _load_config(path: str | None) -> dict:
    cfg = {}
    if not path:
        return cfg
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{line_no}: expected key=value")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise DomainError(f"{path}:{line_no}: unknown config key {key!r}")
            cfg[key] = val
    return cfg


def _setting(args, cfg: dict, key: str, default=None):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    env = os.environ.get(_ENV_PREFIX + key.upper())
    if env is not None:
        return env
    return default


def _need_gamma(args, cfg) -> StableIndex:
    g = _setting(args, cfg, "gamma")
    if g is None:
        raise DomainError("gamma is required (flag, config or STABLETREES_GAMMA)")
    return StableIndex(float(g))


def _parse_mu(text: str) -> float:
    if text.lower() in ("inf", "infinity", "+inf"):
        return MU_INF
    return float(text)


def _csv_row(headers, values):
    print(",".join(headers))
    print(",".join(fmt(v) if isinstance(v, float) else str(v) for v in values))


# ---------------------------------------------------------------------------
# eval commands
# ---------------------------------------------------------------------------

def _cmd_kappa(args, cfg):
    idx = _need_gamma(args, cfg)
    mu = _parse_mu(args.mu)
    if mu == MU_INF:
        value = kp.kappa_at_infinity(idx, args.a, args.lam)
    else:
        value = kp.kappa_solve(idx, KappaQuery(a=args.a, lam=args.lam, mu=mu))
    _csv_row(["gamma", "a", "lambda", "mu", "value", "err_bound"],
             [idx.gamma, args.a, args.lam, args.mu, value, 5e-13 * max(1.0, abs(value))])
    return EXIT_OK


def _cmd_phi(args, cfg):
    idx = _need_gamma(args, cfg)
    value = kp.phi_ball_transform(idx, args.a, args.b, args.lam)
    _csv_row(["gamma", "a", "b", "lambda", "value", "err_bound"],
             [idx.gamma, args.a, args.b, args.lam, value, 5e-13 * max(1.0, abs(value))])
    return EXIT_OK


def _cmd_tails(args, cfg):
    y = args.y
    c = args.c if args.c is not None else 0.0
    tol = float(_setting(args, cfg, "tol", 1e-12))
    if args.kind == "mstar_tail":
        acc = tails.brownian_mstar_tail(y, tol)
        value, bound = acc.value, acc.remainder_bound
    elif args.kind == "mstar_cdf":
        value, bound = tails.brownian_mstar_cdf_small(y, tol), tol
    elif args.kind == "ball_tail":
        acc = tails.brownian_ball_tail(c, y, tol)
        value, bound = acc.value, acc.remainder_bound
    elif args.kind == "ball_cdf":
        acc = tails.brownian_ball_cdf(c, y, tol)
        value, bound = acc.value, acc.remainder_bound
    else:  # pragma: no cover - argparse restricts choices
        raise DomainError(f"unknown tails kind {args.kind!r}")
    _csv_row(["kind", "c", "y", "value", "err_bound"], [args.kind, c, y, value, bound])
    return EXIT_OK


def _cmd_cgamma(args, cfg):
    idx = _need_gamma(args, cfg)
    tol = float(_setting(args, cfg, "tol", 1e-10))
    value = tails.c_gamma(idx, tol)
    ser, tail = tails.c_gamma_series(idx)
    _csv_row(["gamma", "value", "err_bound"],
             [idx.gamma, value, abs(value - ser) + tail])
    return EXIT_OK


def _cmd_gauge(args, cfg):
    idx = None
    if args.kind in ("g_gamma", "f_gamma"):
        idx = _need_gamma(args, cfg)
    value = tails.gauge_eval(args.kind, idx, args.r)
    _csv_row(["kind", "gamma", "r", "value", "err_bound"],
             [args.kind, idx.gamma if idx else "", args.r, value, 4e-16 * abs(value)])
    return EXIT_OK


# ---------------------------------------------------------------------------
# sampling commands
# ---------------------------------------------------------------------------

def _need_seed(args, cfg) -> int:
    seed = _setting(args, cfg, "seed")
    if seed is None:
        raise DomainError("seed is required for sampling commands")
    return int(seed)


def _resolve_table(args, idx: StableIndex):
    if args.table:
        return laplace.CdfTable.from_csv(args.table)
    if idx.is_brownian:
        return None        # sampler builds the series table itself
    raise ConfigurationError(
        f"no CDF table for gamma={idx.gamma:g}: run "
        f"`stabletrees build-table --gamma {idx.gamma:g} --out <path>` first")


def _cmd_mstar(args, cfg):
    idx = _need_gamma(args, cfg)
    seed = _need_seed(args, cfg)
    table = _resolve_table(args, idx)
    batch = sampler.sample_mstar(idx, sampler.RngStream(seed, args.stream), args.n, table)
    batch.to_csv(args.out)
    return EXIT_OK


def _cmd_shells(args, cfg):
    idx = _need_gamma(args, cfg)
    seed = _need_seed(args, cfg)
    table = _resolve_table(args, idx)
    radii = np.array([float(tok) for tok in args.radii.split(",")])
    batch = sampler.sample_shell_masses(idx, radii, args.a,
                                        sampler.RngStream(seed, args.stream), table)
    batch.to_csv(args.out)
    return EXIT_OK


def _cmd_subordinator(args, cfg):
    idx = _need_gamma(args, cfg)
    seed = _need_seed(args, cfg)
    grid = np.array([float(tok) for tok in args.grid.split(",")])
    path = sampler.sample_subordinator_path(idx, grid, sampler.RngStream(seed, args.stream))
    lines = [
        "# stabletrees subordinator v1",
        f"# gamma={fmt(idx.gamma)} seed={seed} stream={args.stream}",
        "t,value",
    ]
    lines.extend(f"{fmt(t)},{fmt(v)}" for t, v in zip(grid, path))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_build_table(args, cfg):
    idx = _need_gamma(args, cfg)
    if args.y_min is not None and args.y_max is not None:
        table = laplace.build_cdf_table(kp.mstar_transform(idx), args.y_min,
                                        args.y_max, args.points)
    else:
        table = sampler.default_mstar_table(idx, n_points=args.points)
    table.to_csv(args.out)
    print(f"wrote {args.out}: {table.grid.size} nodes, method={table.method}, "
          f"max disagreement {table.max_abs_disagreement:.2e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _cmd_verify(args, cfg):
    name = str(_setting(args, cfg, "profile", "smoke"))
    if name not in ("smoke", "desk"):
        raise DomainError(f"profile must be smoke or desk, got {name!r}")
    profile = verify.SMOKE if name == "smoke" else verify.DESK
    threads = int(_setting(args, cfg, "threads", 1))
    profile = replace(profile, threads=threads)
    seed = int(_setting(args, cfg, "seed", 20240801))
    criteria = None
    if args.criteria:
        criteria = tuple(int(tok) for tok in args.criteria.split(","))
        bad = [c for c in criteria if not 1 <= c <= 11]
        if bad:
            raise DomainError(f"unknown criterion ids {bad}; valid range is 1..11")
    report = verify.run_verification(profile, seed=seed, criteria=criteria)
    text = verify.report_to_json(report)
    out = _setting(args, cfg, "out")
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)
    if not report["all_pass"]:
        failing = [c["id"] for c in report["criteria"] if not c["passed"]]
        print(f"FAILED criteria: {failing}", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="stabletrees",
        description="Numerics and Monte Carlo for stable-tree mass measures.")
    top.add_argument("--config", help="key=value configuration file")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kappa", help="evaluate the branching Laplace exponent")
    p.add_argument("--gamma", type=float)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--mu", default="0", help="nonnegative float or 'inf'")
    p.set_defaults(fn=_cmd_kappa)

    p = sub.add_parser("phi", help="centred-ball mass transform")
    p.add_argument("--gamma", type=float)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(fn=_cmd_phi)

    p = sub.add_parser("tails", help="Brownian-case tail/CDF series")
    p.add_argument("--kind", required=True,
                   choices=["mstar_tail", "mstar_cdf", "ball_tail", "ball_cdf"])
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--c", type=float)
    p.add_argument("--tol", type=float)
    p.set_defaults(fn=_cmd_tails)

    p = sub.add_parser("cgamma", help="the coefficient constant C_gamma")
    p.add_argument("--gamma", type=float)
    p.add_argument("--tol", type=float)
    p.set_defaults(fn=_cmd_cgamma)

    p = sub.add_parser("gauge", help="evaluate a normalizing gauge function")
    p.add_argument("--kind", required=True, choices=list(tails.GAUGE_KINDS))
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--gamma", type=float)
    p.set_defaults(fn=_cmd_gauge)

    p = sub.add_parser("mstar", help="sample the unit spinal ball mass")
    p.add_argument("--gamma", type=float)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--table", help="CDF table CSV (required for gamma != 2)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_mstar)

    p = sub.add_parser("shells", help="sample independent spinal shell masses")
    p.add_argument("--gamma", type=float)
    p.add_argument("--radii", required=True, help="comma list, strictly decreasing")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--table")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_shells)

    p = sub.add_parser("subordinator", help="sample the spinal subordinator path")
    p.add_argument("--gamma", type=float)
    p.add_argument("--grid", required=True, help="comma list of times from 0")
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_subordinator)

    p = sub.add_parser("build-table", help="build and store a CDF table")
    p.add_argument("--gamma", type=float)
    p.add_argument("--y-min", type=float)
    p.add_argument("--y-max", type=float)
    p.add_argument("--points", type=int, default=120)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_build_table)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--profile", choices=["smoke", "desk"])
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--criteria", help="comma list of criterion ids to run")
    p.set_defaults(fn=_cmd_verify)

    return top


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return args.fn(args, cfg)
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except NumericError as exc:
        print(f"numeric failure: {exc} detail={exc.detail}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
