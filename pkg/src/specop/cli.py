"""Command-line interface: ``specop {test,cv,diagnose,simulate,replay}``.

Every run writes a manifest of the resolved parameters and input digests.
``specop replay MANIFEST`` re-executes a run from it.

Exit codes: 0 success, 2 usage or parse error, 3 scope violation,
4 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bandwidth, bootstrap, simulate, teststat
from .errors import ContractViolation, ScopeError, SpecopError
from .fdata import center, fourier_smooth, load_csv
from .spectral import estimate, get_kernel, kernel_names, pooled

logger = logging.getLogger("specop")

EXIT_USAGE, EXIT_SCOPE, EXIT_DEGENERATE = 2, 3, 4

# Parameters recorded in the manifest, per subcommand.
_MANIFEST_KEYS = {
    "test": ["x_csv", "y_csv", "b", "B", "alpha", "seed", "kernel", "wrap_frequencies",
             "studentization", "n_basis", "grid", "calibration", "delimiter", "d_norm"],
    "cv": ["x_csv", "y_csv", "b_grid", "kernel", "wrap_frequencies", "n_basis", "grid", "delimiter"],
    "diagnose": ["x_csv", "y_csv", "b", "kernel", "wrap_frequencies", "n_basis", "grid",
                 "delimiter", "d_norm"],
    "simulate": ["mode", "T", "a2", "b", "alpha", "R", "B", "seed", "n_basis", "k", "grid",
                 "kernel", "studentization", "n_datasets"],
}


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed_default() -> int:
    env = os.environ.get("SPECOP_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"specop: SPECOP_SEED must be an integer, got {env!r}")


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _common(p: argparse.ArgumentParser, with_b: bool = True) -> None:
    p.add_argument("x_csv")
    p.add_argument("y_csv")
    if with_b:
        p.add_argument("--b", type=float, default=None,
                       help="bandwidth in (0, pi); chosen by cross-validation when omitted")
    p.add_argument("--kernel", default="epanechnikov-2pi", choices=kernel_names())
    p.add_argument("--wrap-frequencies", action="store_true",
                   help="wrap the smoothing window periodically at +-pi")
    p.add_argument("--n-basis", type=int, default=21,
                   help="Fourier basis size for pre-smoothing curves; 0 disables")
    p.add_argument("--grid", choices=["midpoint", "endpoint"], default="midpoint")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--out", default=None, help="directory for CSV/JSON artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"specop {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="bootstrap test of equal spectral density operators")
    _common(p)
    p.add_argument("--B", type=int, default=1000, help="bootstrap replicates")
    p.add_argument("--alpha", type=_floats, default=[0.01, 0.05, 0.10])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--studentization", choices=["full", "plugin"], default="full")
    p.add_argument("--calibration", choices=["bootstrap", "gaussian"], default="bootstrap")
    p.add_argument("--d-norm", choices=["k", "T"], default="k")
    p.add_argument("--dump-bootstrap", default=None, help="write the t* draws to this CSV")

    p = sub.add_parser("cv", help="cross-validated bandwidth")
    _common(p, with_b=False)
    p.add_argument("--b-grid", type=_floats, default=None,
                   help="comma-separated ascending bandwidths (default: 25 log-spaced in [0.02, 0.6])")

    p = sub.add_parser("diagnose", help="frequency and grid decompositions of the statistic")
    _common(p)
    p.add_argument("--d-norm", choices=["k", "T"], default="k")

    p = sub.add_parser("simulate", help="size/power table or null density study on FMA models")
    p.add_argument("--config", default=None, help="flat key = value file; flags override it")
    p.add_argument("--mode", choices=["table", "density"], default=None)
    p.add_argument("--T", type=_ints, default=None)
    p.add_argument("--a2", type=_floats, default=None)
    p.add_argument("--b", type=_floats, default=None)
    p.add_argument("--alpha", type=_floats, default=None)
    p.add_argument("--R", type=int, default=None, help="repetitions (exact draws in density mode)")
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--n-basis", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--grid", choices=["midpoint", "endpoint"], default=None)
    p.add_argument("--kernel", choices=kernel_names(), default=None)
    p.add_argument("--studentization", choices=["full", "plugin"], default=None)
    p.add_argument("--n-datasets", type=int, default=None, help="bootstrapped datasets in density mode")
    p.add_argument("--out", default=None)

    p = sub.add_parser("replay", help="re-run from a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=1)
    return parser


# -- helpers -------------------------------------------------------------------

def _load_pair(args):
    x = load_csv(args.x_csv, args.delimiter, args.grid)
    y = load_csv(args.y_csv, args.delimiter, args.grid)
    if x.T != y.T:
        raise ScopeError(f"samples must have equal length: {args.x_csv} has T={x.T}, "
                         f"{args.y_csv} has T={y.T}; unequal lengths are not supported")
    if x.k != y.k or x.grid != y.grid:
        raise ScopeError(f"samples must share one grid: k={x.k} vs k={y.k}")
    x, y = center(x), center(y)
    if args.n_basis:
        x, y = fourier_smooth(x, args.n_basis), fourier_smooth(y, args.n_basis)
    return x, y


def _resolve_b(args, x, y, kernel) -> float:
    if args.b is not None:
        return float(args.b)
    cv = bandwidth.select(x, y, None, kernel, args.wrap_frequencies)
    logger.info("cross-validated bandwidth b=%g", cv.b_cv)
    return cv.b_cv


def _manifest(command: str, args) -> dict:
    params = {key: getattr(args, key) for key in _MANIFEST_KEYS[command]}
    inputs = {}
    for key in ("x_csv", "y_csv"):
        if key in params:
            params[key] = str(params[key])
            inputs[params[key]] = _digest(params[key])
    return {"subcommand": command, "parameters": params, "inputs": inputs, "version": __version__}


def _prepare_out(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


# -- subcommands ---------------------------------------------------------------

def cmd_test(args) -> int:
    if args.seed is None:
        args.seed = _seed_default()
    kernel = get_kernel(args.kernel)
    x, y = _load_pair(args)
    args.b = _resolve_b(args, x, y, kernel)
    fx = estimate(x, args.b, kernel, args.wrap_frequencies)
    fy = estimate(y, args.b, kernel, args.wrap_frequencies)
    result = teststat.compute(fx, fy, args.d_norm)
    dist = None
    if args.calibration == "bootstrap":
        plan = bootstrap.BootstrapPlan(B=args.B, master_seed=args.seed, workers=args.workers,
                                       studentization=args.studentization)
        dist = bootstrap.bootstrap_distribution(pooled(fx, fy), plan, result.mu0_hat, result.theta0_hat)
        result.p_value = dist.p_value(result.t_stat)
        result.t_star = dist.t_star
    else:
        result.p_value = bootstrap.gaussian_p_value(result.t_stat)
    manifest = _manifest("test", args)
    payload = result.to_dict()
    payload["calibration"] = args.calibration
    payload["reject"] = {f"{a:g}": bool(result.p_value <= a) for a in args.alpha}
    payload["manifest"] = manifest
    out = _prepare_out(args)
    if out is not None:
        _write_json(out / "result.json", result.to_dict(include_bootstrap=True))
        _write_json(out / "manifest.json", manifest)
        result.write_q_csv(out / "q_profile.csv")
        result.write_d_csv(out / "d_map.csv")
    if args.dump_bootstrap and dist is not None:
        with open(args.dump_bootstrap, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "t_star"])
            for i, t in enumerate(dist.t_star):
                w.writerow([i, repr(float(t))])
    _emit(payload)
    return 0


def cmd_cv(args) -> int:
    kernel = get_kernel(args.kernel)
    x, y = _load_pair(args)
    res = bandwidth.select(x, y, args.b_grid, kernel, args.wrap_frequencies)
    args.b_grid = res.b_grid.tolist()
    manifest = _manifest("cv", args)
    out = _prepare_out(args)
    if out is not None:
        with (out / "cv.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["b", "cv"])
            for b, s in zip(res.b_grid, res.scores):
                w.writerow([repr(float(b)), repr(float(s))])
        _write_json(out / "cv.json", {"b_cv": res.b_cv})
        _write_json(out / "manifest.json", manifest)
    payload = res.to_dict()
    payload["manifest"] = manifest
    _emit(payload)
    return 0


def cmd_diagnose(args) -> int:
    kernel = get_kernel(args.kernel)
    x, y = _load_pair(args)
    args.b = _resolve_b(args, x, y, kernel)
    fx = estimate(x, args.b, kernel, args.wrap_frequencies)
    fy = estimate(y, args.b, kernel, args.wrap_frequencies)
    result = teststat.compute(fx, fy, args.d_norm)
    manifest = _manifest("diagnose", args)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    result.write_q_csv(out / "q_profile.csv")
    result.write_d_csv(out / "d_map.csv")
    (out / "spectral_x.json").write_text(fx.to_json() + "\n", encoding="utf-8")
    (out / "spectral_y.json").write_text(fy.to_json() + "\n", encoding="utf-8")
    _write_json(out / "manifest.json", manifest)
    _emit({"u_stat": result.u_stat, "t_stat": result.t_stat, "theta0_hat": result.theta0_hat,
           "b": result.b, "argmax_lambda_index": int(np.argmax(result.q_profile)),
           "manifest": manifest})
    return 0


_SIM_DEFAULTS = {
    "mode": "table", "T": [100], "a2": [0.0], "b": [0.2], "alpha": [0.01, 0.05, 0.10],
    "R": 500, "B": 1000, "seed": 0, "workers": 1, "n_basis": 21, "k": 21, "grid": "midpoint",
    "kernel": "epanechnikov-2pi", "studentization": "full", "n_datasets": 3,
}
_SIM_PARSERS = {"T": _ints, "a2": _floats, "b": _floats, "alpha": _floats, "R": int, "B": int,
                "seed": int, "workers": int, "n_basis": int, "k": int, "n_datasets": int}


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, lists are comma-separated."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractViolation(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _SIM_DEFAULTS:
            raise ContractViolation(f"{path}:{lineno}: unknown key {key!r}")
        try:
            cfg[key] = _SIM_PARSERS.get(key, str)(value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ContractViolation(f"{path}:{lineno}: {exc}") from None
    return cfg


def cmd_simulate(args) -> int:
    resolved = dict(_SIM_DEFAULTS)
    if os.environ.get("SPECOP_SEED") is not None:
        resolved["seed"] = _seed_default()
    if args.config:
        resolved.update(read_config(args.config))
    for key in _SIM_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            resolved[key] = val
    for key, val in resolved.items():
        setattr(args, key, val)
    n_basis = args.n_basis or None
    cfg = simulate.ExperimentConfig(
        T=tuple(args.T), a2=tuple(args.a2), b=tuple(args.b), alpha=tuple(args.alpha), R=args.R,
        B=args.B, master_seed=args.seed, n_basis=n_basis, k=args.k, grid_policy=args.grid,
        kernel=args.kernel, studentization=args.studentization, workers=args.workers)
    manifest = _manifest("simulate", args)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    if args.mode == "table":
        rows = simulate.run_table(cfg)
        simulate.write_table_csv(rows, cfg.alpha, out / "table.csv")
        simulate.write_pvalues_csv(rows, out / "pvalues.csv")
        summary = [{"T": r.T, "b": r.b, "a2": r.a2, "rates": {f"{a:g}": v for a, v in r.rates.items()}}
                   for r in rows]
    else:
        t_exact, t_star = simulate.run_null_density(cfg.T[0], cfg.b[0], cfg.R, cfg.B, cfg.master_seed,
                                                    args.n_datasets, cfg)
        simulate.write_density_csv(t_exact, t_star, out)
        summary = {"n_exact": int(t_exact.size), "n_bootstrap": int(t_star.size)}
    _write_json(out / "manifest.json", manifest)
    _emit({"summary": summary, "manifest": manifest})
    return 0


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    command = manifest["subcommand"]
    if manifest.get("version") != __version__:
        logger.warning("manifest written by specop %s, running %s", manifest.get("version"), __version__)
    for path, digest in manifest.get("inputs", {}).items():
        if _digest(path) != digest:
            raise ContractViolation(f"input {path} changed since the manifest was written")
    ns = argparse.Namespace(**manifest["parameters"])
    ns.out = args.out
    ns.workers = args.workers
    if command == "test":
        ns.dump_bootstrap = None
        return cmd_test(ns)
    if command == "cv":
        return cmd_cv(ns)
    if command == "diagnose":
        return cmd_diagnose(ns)
    ns.config = None
    return cmd_simulate(ns)


_COMMANDS = {"test": cmd_test, "cv": cmd_cv, "diagnose": cmd_diagnose,
             "simulate": cmd_simulate, "replay": cmd_replay}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except SpecopError as exc:
        print(f"specop: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"specop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
