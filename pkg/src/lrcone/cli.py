"""Command-line entry point: ``lrcone {bound,fixpoint,simulate,verify,compare}``.

Exit codes: 0 success, 1 domain error, 2 configuration error, 3 failed
verification checks.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from lrcone import __version__, bounds
from lrcone.dynamics import EvolutionContext, NORM_KINDS, format_float, leakage_curve
from lrcone.errors import ConfigError, ConvergenceError, DomainError
from lrcone.harness import CHECK_NAMES, SweepConfig, run_verification, write_run
from lrcone.lattice import ENSEMBLES, PowerLawHamiltonian, build_lattice, sample_hamiltonian, site_operator

EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2, 3
DEFAULT_OUT = "lrcone-out"
OUT_ENV = "LRCONE_OUT"
SMOKE_CONFIG = "smoke"


# --------------------------------------------------------------------------
# helpers


def parse_grid(grid) -> list[float]:
    """``start:stop:count`` (inclusive, linear), ``log:start:stop:count``, a number, or a list."""
    if isinstance(grid, (list, tuple)):
        return [float(x) for x in grid]
    if isinstance(grid, (int, float)):
        return [float(grid)]
    text = str(grid).strip()
    log = text.startswith("log:")
    if log:
        text = text[4:]
    parts = text.split(":")
    try:
        if len(parts) == 1 and not log:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"bad grid {grid!r}; expected start:stop:count or log:start:stop:count") from None
    if count < 1:
        raise ConfigError(f"grid count must be >= 1 in {grid!r}")
    if log:
        if start <= 0 or stop <= 0:
            raise ConfigError(f"log grid needs positive endpoints: {grid!r}")
        return [float(x) for x in np.geomspace(start, stop, count)]
    return [float(x) for x in np.linspace(start, stop, count)]


def out_dir(args) -> Path:
    """--out beats $LRCONE_OUT beats ./lrcone-out."""
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def bundled_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("lrcone.configs").iterdir() if p.name.endswith(".json"))


def load_json(ref: str) -> dict:
    """Read a JSON config from a path, or by name from the bundled configs."""
    path = Path(ref)
    if not path.exists():
        bundled = resources.files("lrcone.configs") / f"{ref}.json"
        if not bundled.is_file():
            raise ConfigError(f"config file not found: {ref} (bundled configs: {', '.join(bundled_names())})")
        text = bundled.read_text()
    else:
        text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {ref} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {ref} must be a JSON object")
    return doc


def merge(doc: dict, args, keys) -> dict:
    """Config file values, then command-line overrides; unknown file keys are an error."""
    unknown = set(doc) - set(keys)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = dict(doc)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_json(path: Path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def offsets_tau(d: int, radius: float, alpha: float) -> float:
    """Sum of |x|^-alpha over nonzero integer offsets with |x| <= radius.

    Upper-bounds tau for any lattice whose diameter is at most ``radius``.
    """
    m = int(math.floor(radius))
    axes = np.meshgrid(*[np.arange(-m, m + 1)] * d, indexing="ij")
    dist = np.sqrt(sum(a.astype(float) ** 2 for a in axes))
    keep = (dist > 0) & (dist <= radius)
    return float(np.sum(dist[keep] ** (-alpha)))


# --------------------------------------------------------------------------
# subcommands

BOUND_KEYS = ("alpha", "d", "r", "t", "epsilon", "C1", "C2", "c", "eta", "tau", "r_star", "nu", "shell_epsilon")


def cmd_bound(args) -> int:
    doc = load_json(args.config) if args.config else {}
    cfg = merge(doc, args, BOUND_KEYS)
    if cfg.get("alpha") is None:
        raise ConfigError("--alpha is required")
    alpha, d = float(cfg["alpha"]), int(cfg.get("d", 1))
    r_grid = parse_grid(cfg.get("r", "1:100:10"))
    t_grid = parse_grid(cfg.get("t", "0.1:10:20"))
    top = bounds.epsilon_domain(alpha, d) if 2 * d < alpha < 2 * d + 1 else None
    if top is None:
        raise DomainError(f"alpha must lie in the open interval (2d, 2d+1) = ({2 * d}, {2 * d + 1}); got {alpha}")
    eps = cfg.get("epsilon", top / 2)
    C1, C2, c = cfg.get("C1", 1.0), cfg.get("C2", 1.0), cfg.get("c", 1.0)

    rows = []
    for r in r_grid:
        for t in t_grid:
            env = bounds.theorem_envelope(r, t, alpha, d, eps, C1, C2, c)
            rows.append([format_float(r), format_float(t), format_float(env.value), str(int(env.valid))])
    dest = out_dir(args)
    write_csv(dest / "bound_envelope.csv", ("r", "t", "envelope", "valid"), rows)

    eta = float(cfg.get("eta", 0.1))
    r_star = float(cfg.get("r_star", max(r_grid)))
    nu = float(cfg.get("nu", bounds.DEFAULT_NU))
    shell_eps = float(cfg.get("shell_epsilon", 0.5))
    tau = float(cfg["tau"]) if cfg.get("tau") is not None else offsets_tau(d, r_star, alpha)
    xi = bounds.xi_constant(d)
    lam = bounds.lambda_constant(shell_eps, d)
    trace_doc = {
        "inputs": {"alpha": alpha, "d": d, "epsilon": eps, "C1": C1, "C2": C2, "c": c, "eta": eta, "r_star": r_star,
                   "nu": nu, "shell_epsilon": shell_eps, "tau": tau, "xi": xi, "lambda": lam},
        "epsilon_domain": [0.0, top],
    }
    if math.log(r_star) < 1:
        trace_doc["recursion"] = None
        trace_doc["note"] = f"r* = {r_star} < e: log r* < 1, recursion not evaluated"
    else:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", bounds.DegenerateScaleWarning)
            L = bounds.choose_L(r_star, xi, alpha, d)
        if caught or L <= 1:
            trace_doc["recursion"] = None
            trace_doc["note"] = f"L = {L} <= 1: outside the asymptotic regime"
        else:
            r_ref, t_ref = max(r_grid), max(t_grid)
            choice = bounds.choose_n(r_ref, t_ref, alpha, d, eta, L, detail=True)
            tr = bounds.run_recursion(tau, L, choice.n, xi, nu, lam, alpha, d, r_star)
            closed = bounds.vn_closed_form(tr.velocities[0], L, choice.n, xi, nu, lam, d, r_star)
            trace_doc["recursion"] = tr.to_dict()
            trace_doc["n_choice"] = {"r": r_ref, "t": t_ref, "raw": choice.raw, "n": choice.n, "clamped": choice.clamped}
            trace_doc["v_n_closed_form"] = closed
            trace_doc["relative_difference"] = abs(tr.v_n - closed) / abs(closed)
    write_json(dest / "bound_trace.json", trace_doc)
    print(f"wrote {len(rows)} envelope rows to {dest / 'bound_envelope.csv'}")
    print(f"wrote recursion trace to {dest / 'bound_trace.json'}")
    return EXIT_OK


def cmd_fixpoint(args) -> int:
    dest = out_dir(args)
    try:
        tr = bounds.fixpoint_gamma(args.alpha, args.d, args.eta, args.tol, args.max_iter)
    except ConvergenceError as exc:
        write_json(dest / "fixpoint_trace.json", exc.trace.to_dict())
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    write_json(dest / "fixpoint_trace.json", tr.to_dict())
    print(f"limit {tr.limit:.12g} (closed form {tr.closed_form:.12g}) after {len(tr.gammas) - 1} steps")
    return EXIT_OK


SIMULATE_KEYS = ("lattice", "alpha", "ensemble", "seed", "hamiltonian", "center", "operator", "r_grid", "t_grid", "norm_kind")


def cmd_simulate(args) -> int:
    cfg = merge(load_json(args.config), args, SIMULATE_KEYS)
    if cfg.get("hamiltonian") is not None:
        h = PowerLawHamiltonian.from_dict(cfg["hamiltonian"])
        if h.seed is None and cfg.get("seed") is not None:
            h = dataclasses.replace(h, seed=int(cfg["seed"]))
    else:
        lat_doc = cfg.get("lattice")
        if not isinstance(lat_doc, dict):
            raise ConfigError("config needs either 'hamiltonian' or 'lattice'")
        ensemble = cfg.get("ensemble", "ising_zz")
        if ensemble not in ENSEMBLES:
            raise ConfigError(f"ensemble must be one of {ENSEMBLES}, got {ensemble!r}")
        if cfg.get("alpha") is None or cfg.get("seed") is None:
            raise ConfigError("sampling a Hamiltonian needs 'alpha' and 'seed'")
        lat = build_lattice(lat_doc["d"], lat_doc["extents"], lat_doc.get("metric", "euclidean"))
        h = sample_hamiltonian(lat, float(cfg["alpha"]), ensemble, int(cfg["seed"]))
    norm_kind = cfg.get("norm_kind", "operator")
    if norm_kind not in NORM_KINDS:
        raise ConfigError(f"norm_kind must be one of {NORM_KINDS}")
    center = int(cfg.get("center", 0))
    O = site_operator(cfg.get("operator", "X"), center, h.n_qubits)
    ctx = EvolutionContext.from_hamiltonian(h)
    curve = leakage_curve(ctx, O, center, parse_grid(cfg.get("r_grid", [1.0])), parse_grid(cfg.get("t_grid", "0:1:11")), norm_kind)
    dest = out_dir(args)
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "simulate.csv").write_text(curve.to_csv())
    write_json(dest / "simulate.json", {"seed": cfg.get("seed", h.seed), "config": cfg, "hamiltonian": h.to_dict(),
                                        "csv": "simulate.csv", "version": __version__})
    print(f"wrote {len(curve.r_grid) * len(curve.t_grid)} leakage rows to {dest / 'simulate.csv'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.list_checks:
        for name in CHECK_NAMES:
            print(name)
        return EXIT_OK
    config = SweepConfig.from_dict(load_json(args.config))
    report = run_verification(config, jobs=args.jobs)
    run_dir = write_run(report, out_dir(args))
    for sec in report.sections:
        if sec.skipped:
            state = "skipped"
        elif not sec.checks:
            state = "report"
        else:
            state = "pass" if sec.passed else "FAIL"
        print(f"{sec.name:12s} {state}")
    print(f"report: {run_dir / 'report.json'}")
    if not report.passed:
        print(f"checks failed: {', '.join(report.failures)}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_compare(args) -> int:
    cmp = bounds.compare_bounds(args.alpha, args.d)
    if args.format == "json":
        print(json.dumps(cmp.to_dict(exact=True), indent=2))
        return EXIT_OK
    print(f"alpha = {cmp.alpha}, d = {cmp.d}")
    print(f"{'bound':6s} {'gamma':>10s} {'beta':>10s} {'gamma_p':>10s} {'beta_p':>10s} {'phi':>10s}")
    for name, row in cmp.rows.items():
        cells = " ".join(f"{float(row[k]):10.6g}" for k in ("gamma", "beta", "gamma_prime", "beta_prime", "phi"))
        print(f"{name:6s} {cells}")
    for key, diff in cmp.differences.items():
        flag = "DISCREPANCY" if diff["discrepancy"] else "agree"
        print(f"phi {key}: direct {diff['direct']} vs closed-form formula {diff['formula']}  [{flag}]")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="lrcone", description="Light-cone bounds for power-law interactions", formatter_class=fmt)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help=f"output directory (else ${OUT_ENV}, else ./{DEFAULT_OUT})")
        p.add_argument("-v", "--verbose", action="store_true", help="print tracebacks on errors")

    p = sub.add_parser("bound", help="evaluate the envelope and velocity recursion", formatter_class=fmt)
    p.add_argument("--config", default=None, help="JSON file with any of the flags below as keys")
    p.add_argument("--alpha", type=float, default=None, help="power-law exponent, 2d < alpha < 2d+1")
    p.add_argument("--d", type=int, default=None, help="lattice dimension [default 1]")
    p.add_argument("--r", default=None, help="distance grid [default 1:100:10]")
    p.add_argument("--t", default=None, help="time grid [default 0.1:10:20]")
    p.add_argument("--epsilon", type=float, default=None, help="envelope epsilon [default half the domain endpoint]")
    p.add_argument("--C1", type=float, default=None, help="first-term constant [default 1]")
    p.add_argument("--C2", type=float, default=None, help="tail-term constant [default 1]")
    p.add_argument("--c", type=float, default=None, help="validity constant in t <= c r^(alpha-2d-eps) [default 1]")
    p.add_argument("--eta", type=float, default=None, help="recursion eta [default 0.1]")
    p.add_argument("--tau", type=float, default=None, help="tau [default: offset sum within r*]")
    p.add_argument("--r-star", dest="r_star", type=float, default=None, help="lattice diameter [default max r]")
    p.add_argument("--nu", type=float, default=None, help="short-range velocity constant [default 4e]")
    p.add_argument("--shell-epsilon", dest="shell_epsilon", type=float, default=None, help="shell epsilon for lambda [default 0.5]")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("fixpoint", help="iterate the exponent tightening map", formatter_class=fmt)
    p.add_argument("--alpha", type=float, required=True, help="power-law exponent, 2d < alpha < 2d+1")
    p.add_argument("--d", type=int, default=1, help="lattice dimension")
    p.add_argument("--eta", type=float, default=0.01, help="tightening eta in [0, 1/(alpha-d))")
    p.add_argument("--tol", type=float, default=1e-12, help="stop once successive gammas differ by less")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=10_000, help="iteration cap")
    common(p)
    p.set_defaults(func=cmd_fixpoint)

    p = sub.add_parser("simulate", help="exact leakage curve for one Hamiltonian", formatter_class=fmt)
    p.add_argument("--config", required=True, help="JSON path or bundled name (e.g. ising2)")
    p.add_argument("--alpha", type=float, default=None, help="override the config alpha")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the verification sweep", formatter_class=fmt)
    p.add_argument("--config", default=SMOKE_CONFIG, help="JSON path or bundled name")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")
    p.add_argument("--list-checks", action="store_true", help="print check names and exit")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="exponent table of the three bounds", formatter_class=fmt)
    p.add_argument("--alpha", type=float, required=True, help="power-law exponent, 2d < alpha < 2d+1")
    p.add_argument("--d", type=int, default=1, help="lattice dimension")
    p.add_argument("--format", choices=("table", "json"), default="table", help="output format")
    common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        if args.verbose:
            raise
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        if args.verbose:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
