"""Command line interface: ``pg-gibbs {check,sample,certify,pg-sample}``.

Exit codes: 0 success, 1 input or usage error, 2 improper posterior,
3 certificate failure. Reports are JSON documents on stdout (and in ``--out``
when given); progress goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import CSVFormatError, read_dataset, write_draws
from .drift import CertificatePolicy, certify
from .errors import CertificateError, ImproperPosteriorError, InsufficientDataError, PGGibbsError
from .gibbs import SamplerConfig, run_chains
from .mcse import report as mcse_report
from .pg_dist import pg_sample
from .propriety import check_propriety
from .rng import make_rng

SCHEMA = "pg-gibbs/1"
EXIT_OK, EXIT_INPUT, EXIT_IMPROPER, EXIT_CERT = 0, 1, 2, 3

log = logging.getLogger("pg_gibbs")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for improper posteriors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    input_path: str | None = None
    y_column: str = "y"
    covariate_columns: list[str] | str = "all-others"
    add_intercept: bool = False
    seed: int = 0
    n_iterations: int = 10_000
    n_burnin: int | None = None
    n_chains: int = 1
    thin: int = 1
    output_dir: str | None = None
    budget: int = 20
    test_points: int = 50
    mc_draws: int = 2000
    allow_improper: bool = False


# flag dest -> RunConfig field, with a converter for config-file text
_KEYS = {
    "input": ("input_path", str),
    "y": ("y_column", str),
    "covariates": ("covariate_columns", str),
    "intercept": ("add_intercept", "bool"),
    "seed": ("seed", int),
    "iters": ("n_iterations", int),
    "burnin": ("n_burnin", int),
    "chains": ("n_chains", int),
    "thin": ("thin", int),
    "out": ("output_dir", str),
    "budget": ("budget", int),
    "test_points": ("test_points", int),
    "mc_draws": ("mc_draws", int),
    "allow_improper": ("allow_improper", "bool"),
}


def _to_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment. Keys use flag names."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for k, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {k}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise UsageError(f"config line {k}: unknown key {key!r}")
        conv = _KEYS[key][1]
        try:
            out[key] = _to_bool(value) if conv == "bool" else conv(value)
        except ValueError:
            raise UsageError(f"config line {k}: bad value {value!r} for {key}") from None
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    """Flags override config-file keys override defaults; the seed falls back to PG_GIBBS_SEED."""
    merged = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in _KEYS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    if "seed" not in merged and os.environ.get("PG_GIBBS_SEED"):
        try:
            merged["seed"] = int(os.environ["PG_GIBBS_SEED"])
        except ValueError:
            raise UsageError("PG_GIBBS_SEED must be an integer") from None
    cfg = RunConfig()
    for key, value in merged.items():
        setattr(cfg, _KEYS[key][0], value)
    if isinstance(cfg.covariate_columns, str) and cfg.covariate_columns != "all-others":
        cfg.covariate_columns = [c.strip() for c in cfg.covariate_columns.split(",") if c.strip()]
    if cfg.seed < 0:
        raise UsageError("seed must be nonnegative")
    return cfg


def _load(cfg: RunConfig):
    if not cfg.input_path:
        raise UsageError("--input is required")
    if not Path(cfg.input_path).is_file():
        raise UsageError(f"input file not found: {cfg.input_path}")
    return read_dataset(cfg.input_path, cfg.y_column, cfg.covariate_columns, cfg.add_intercept)


def _emit(doc: dict, cfg: RunConfig | None, filename: str) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    sys.stdout.write(text)
    if cfg is not None and cfg.output_dir:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(text, encoding="utf-8")


def _dataset_doc(ds, cfg) -> dict:
    return {"input": cfg.input_path, "n": ds.n, "p": ds.p, "columns": list(ds.names)}


def cmd_check(cfg: RunConfig) -> int:
    ds = _load(cfg)
    rep = check_propriety(ds)
    _emit({"schema": SCHEMA, "command": "check", "dataset": _dataset_doc(ds, cfg), "propriety": rep.to_dict()}, cfg, "check.json")
    return EXIT_OK if rep.proper else EXIT_IMPROPER


def cmd_sample(cfg: RunConfig) -> int:
    ds = _load(cfg)
    try:
        sc = SamplerConfig(
            n_iterations=cfg.n_iterations,
            n_burnin=cfg.n_burnin,
            n_chains=cfg.n_chains,
            seed=cfg.seed,
            thin=cfg.thin,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    prop = check_propriety(ds)
    if not prop.proper and not cfg.allow_improper:
        raise ImproperPosteriorError(
            "posterior is improper: the chain is not positive recurrent and the usual sample "
            "average estimator is inconsistent (pass --allow-improper to sample anyway)"
        )
    draws = run_chains(ds, sc, allow_improper=True)
    out = Path(cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    draws_path = out / "draws.csv"
    write_draws(draws_path, draws, ds.names, sc.n_burnin, sc.thin)
    doc = {
        "schema": SCHEMA,
        "command": "sample",
        "dataset": _dataset_doc(ds, cfg),
        "sampler": {
            "seed": sc.seed,
            "n_iterations": sc.n_iterations,
            "n_burnin": sc.n_burnin,
            "n_chains": sc.n_chains,
            "thin": sc.thin,
            "n_kept_per_chain": sc.n_kept,
        },
        "propriety": prop.to_dict(),
        "draws_file": draws_path.name,  # relative to the report directory
        "coefficients": list(ds.names),
    }
    if not prop.proper:
        doc["warning"] = "posterior is improper; averages below do not estimate anything"
    try:
        doc["mcse"] = mcse_report(draws).to_dict()
    except InsufficientDataError as exc:
        doc["mcse"] = None
        doc["mcse_error"] = str(exc)
    cfg_out = RunConfig(**{**cfg.__dict__, "output_dir": str(out)})
    _emit(doc, cfg_out, "report.json")
    return EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    ds = _load(cfg)
    if cfg.budget < 1:
        raise UsageError("--budget must be a positive integer (number of optimizer starts)")
    if cfg.test_points < 1 or cfg.mc_draws < 2:
        raise UsageError("--test-points must be >= 1 and --mc-draws >= 2")
    cert, check = certify(
        ds,
        budget=cfg.budget,
        n_test_points=cfg.test_points,
        mc_draws=cfg.mc_draws,
        seed=cfg.seed,
        policy=CertificatePolicy(),
    )
    doc = {
        "schema": SCHEMA,
        "command": "certify",
        "dataset": _dataset_doc(ds, cfg),
        "settings": {"seed": cfg.seed, "budget": cfg.budget, "test_points": cfg.test_points, "mc_draws": cfg.mc_draws},
        "certificate": cert.to_dict(),
        "verification": check.to_dict(),
    }
    _emit(doc, cfg, "certificate.json")
    return EXIT_OK if check.violations == 0 else EXIT_CERT


def cmd_pg_sample(b: float, count: int, seed: int) -> int:
    if not b >= 0:
        raise UsageError("b must be nonnegative")
    if count < 1:
        raise UsageError("count must be >= 1")
    draws = pg_sample(np.full(count, b), make_rng(seed))
    sys.stdout.write("".join(f"{float(v)!r}\n" for v in draws))
    return EXIT_OK


def _data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="CSV file with a header row")
    p.add_argument("--y", help="response column (default: y)")
    p.add_argument("--covariates", help="comma-separated covariate columns (default: all others)")
    p.add_argument("--intercept", action="store_const", const=True, default=None, help="prepend an intercept column")
    p.add_argument("--seed", type=int, help="RNG seed (fallback: $PG_GIBBS_SEED, then 0)")
    p.add_argument("--out", help="directory for report and output files")
    p.add_argument("--config", help="flat key = value file; flags take precedence")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pg-gibbs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="posterior propriety check")
    _data_flags(p)

    p = sub.add_parser("sample", help="run the Gibbs sampler; writes draws.csv and report.json (default dir: .)")
    _data_flags(p)
    p.add_argument("--iters", type=int)
    p.add_argument("--burnin", type=int, help="default: 10%% of --iters")
    p.add_argument("--chains", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--allow-improper", action="store_const", const=True, default=None)

    p = sub.add_parser("certify", help="geometric-ergodicity drift certificate")
    _data_flags(p)
    p.add_argument("--budget", type=int, help="optimizer starts for rho1 (default 20)")
    p.add_argument("--test-points", type=int, help="drift test points (default 50)")
    p.add_argument("--mc-draws", type=int, help="Monte Carlo draws per test point (default 2000)")

    p = sub.add_parser("pg-sample", help="print PG(1, b) draws, one per line")
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "pg-sample":
            seed = args.seed
            if seed is None:
                seed = int(os.environ.get("PG_GIBBS_SEED", "0"))
            return cmd_pg_sample(args.b, args.count, seed)
        cfg = build_config(args)
        return {"check": cmd_check, "sample": cmd_sample, "certify": cmd_certify}[args.command](cfg)
    except ImproperPosteriorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IMPROPER
    except CertificateError as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (UsageError, CSVFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PGGibbsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
