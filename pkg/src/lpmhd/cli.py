"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 numerical blow-up (non-finite state, monitor bound or CFL loss mid-run).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .besov import BesovParams, NormLedger, band_lp_norms, besov_report, chemin_lerner_norm
from .estimates import (
    Ensemble,
    gronwall_bound,
    verify_bernstein,
    verify_commutator_new,
    verify_commutator_transport,
    verify_heat_smoothing,
    verify_product_law,
)
from .grid import VectorField, lp_norm, sobolev_norm
from .littlewood_paley import default_partition
from .solver import (
    CFLViolation,
    GalerkinRun,
    InitialDataError,
    SolverConfig,
    cauchy_study,
    perturbation_study,
)
from .spf import SPFError, atomic_write, read_field

log = logging.getLogger("lpmhd")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3


class UsageError(Exception):
    pass


# output ---------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class Output:
    """Writes reports into one directory; run metadata goes to a sidecar file."""

    def __init__(self, directory):
        self.dir = Path(directory)
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create output directory {self.dir}: {exc.strerror}") from None
        if not os.access(self.dir, os.W_OK):
            raise UsageError(f"output directory {self.dir} is not writable")

    def json(self, name: str, payload: dict, argv) -> Path:
        path = self.dir / f"{name}.json"
        text = json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"
        atomic_write(path, text.encode())
        meta = {"metadata": {"created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                             "version": __version__, "argv": list(argv)}}
        atomic_write(self.dir / f"{name}.meta.json", (json.dumps(meta, sort_keys=True, indent=2) + "\n").encode())
        log.info("wrote %s", path)
        return path

    def text(self, name: str, body: str) -> Path:
        path = self.dir / name
        atomic_write(path, body.encode())
        log.info("wrote %s", path)
        return path


# helpers --------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _exponent(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"override {item!r} is not of the form key=value")
        out[key.strip()] = value.strip()
    return out


def _load_config(args) -> SolverConfig:
    if args.config is None:
        cfg = SolverConfig()
    else:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot parse config file {path}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError(f"config file {path} must hold a JSON object")
        cfg = SolverConfig.from_dict(data)
    overrides = _overrides(args.set)
    if args.seed is not None:
        overrides.setdefault("seed", str(args.seed))
    return cfg.with_overrides(overrides) if overrides else cfg


def _ensemble(args) -> Ensemble:
    return Ensemble(size=args.ensemble, resolutions=tuple(args.N), d=args.d,
                    seed0=0 if args.seed is None else args.seed)


# subcommands ----------------------------------------------------------------

def cmd_simulate(args, out: Output) -> int:
    cfg = _load_config(args)
    snap = out.dir if cfg.snapshot_every > 0 else None
    rec = GalerkinRun(cfg, snapshot_dir=snap).run()
    out.json("run", rec.to_json(), args.argv)
    out.text("ledger_u.csv", rec.ledger_u.to_csv())
    out.text("ledger_b.csv", rec.ledger_b.to_csv())
    rows = ["t, energy_u, energy_b, grad_u2, hs1_u, hs_b"]
    for row in zip(rec.times, rec.energy_u, rec.energy_b, rec.grad_u2, rec.hs1_u, rec.hs_b):
        rows.append(", ".join(repr(float(x)) for x in row))
    out.text("series.csv", "\n".join(rows) + "\n")
    log.info("termination: %s %s", rec.termination, rec.message)
    return EXIT_OK if rec.termination == "completed" else EXIT_BLOWUP


def cmd_cauchy(args, out: Output) -> int:
    cfg = _load_config(args)
    table = cauchy_study(cfg, args.n)
    out.json("cauchy", table.to_json(), args.argv)
    lines = ["n, D"] + [f"{n}, {float(table.D[n])!r}" for n in table.n_list]
    out.text("cauchy.csv", "\n".join(lines) + "\n")
    return EXIT_BLOWUP if table.flags else EXIT_OK


def cmd_perturb(args, out: Output) -> int:
    cfg = _load_config(args)
    reports = [perturbation_study(cfg, d) for d in args.delta]
    amp = [r.amplification for r in reports if r.delta > 0]
    payload = {"config": cfg.to_dict(), "runs": [r.to_json() for r in reports],
               "linear_within_3x": bool(amp) and max(amp) <= 3.0 * min(amp)}
    out.json("perturb", payload, args.argv)
    return EXIT_BLOWUP if any(r.termination != "completed" for r in reports) else EXIT_OK


def _analyze_field(path: Path, args, out: Output) -> dict:
    f = read_field(path)
    part = default_partition(f.grid)
    entry = {"file": path.name, "grid": {"d": f.grid.d, "N": f.grid.N, "B": f.grid.B},
             "vector": isinstance(f, VectorField), "L2": lp_norm(f, 2.0)}
    for hom in (True, False):
        rep = besov_report(f, BesovParams(args.s, args.p, args.r, hom), part)
        entry[rep.norm_kind] = rep.to_json()
    entry["sobolev_s"] = sobolev_norm(f, args.s)
    entry["sobolev_s-1"] = sobolev_norm(f, args.s - 1.0)
    bands, vals = band_lp_norms(f, part, False, args.p)
    rows = ["j, lp_norm"] + [f"{j}, {float(v)!r}" for j, v in zip(bands, vals)]
    out.text(f"bands_{path.stem}.csv", "\n".join(rows) + "\n")
    return entry


def _analyze_ledger(path: Path, args) -> dict:
    try:
        ledger = NormLedger.from_csv(path.read_text(), p=args.p, homogeneous=False)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"malformed ledger CSV {path}: {exc}") from None
    return {"file": path.name, "T": ledger.T, "q": args.q,
            "chemin_lerner": chemin_lerner_norm(ledger, args.q, args.s, args.r)}


def cmd_analyze(args, out: Output) -> int:
    entries = []
    for name in args.files:
        path = Path(name)
        if not path.is_file():
            raise UsageError(f"input file not found: {path}")
        if path.suffix == ".csv":
            entries.append(_analyze_ledger(path, args))
        else:
            try:
                entries.append(_analyze_field(path, args, out))
            except SPFError as exc:
                raise UsageError(f"{path}: {exc}") from None
    out.json("analysis", {"params": {"s": args.s, "p": args.p, "r": args.r}, "results": entries}, args.argv)
    return EXIT_OK


def _verify(args, out: Output, name: str, report) -> int:
    out.json(name, report.to_json(), args.argv)
    log.info("%s: constant=%.4g slope=%.4g pass=%s", name, report.constant, report.slope, report.passed)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify_bernstein(args, out):
    return _verify(args, out, "bernstein", verify_bernstein(_ensemble(args), args.k, args.p, args.q,
                                                             args.support, args.slope_tol, args.cap))


def cmd_verify_product(args, out):
    return _verify(args, out, "product_law", verify_product_law(args.s1, args.s2, _ensemble(args), args.p,
                                                                args.r, args.form, args.slope_tol, args.cap))


def cmd_verify_commutator(args, out):
    return _verify(args, out, "commutator_new", verify_commutator_new(args.s, args.p, args.q, _ensemble(args),
                                                                      args.slope_tol, args.cap))


def cmd_verify_transport(args, out):
    return _verify(args, out, "commutator_transport",
                   verify_commutator_transport(args.s, args.p, _ensemble(args), args.p1, args.r,
                                               args.slope_tol, args.cap))


def cmd_verify_heat(args, out):
    return _verify(args, out, "heat_smoothing",
                   verify_heat_smoothing(args.rho, args.rho1, args.s, _ensemble(args), args.nu, args.T,
                                         args.r, not args.no_forcing, args.slope_tol, args.cap))


def cmd_gronwall(args, out: Output) -> int:
    t = np.linspace(0.0, args.T, args.points)
    res = gronwall_bound(args.x0, args.c, args.e, args.p, t)
    out.json("gronwall", {"x0": args.x0, "c": args.c, "e": args.e, "p": args.p, "t": t, "bound": res.bound,
                          "blowup_time": res.blowup_time}, args.argv)
    return EXIT_OK


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--output-dir", default=".", help="directory for all outputs (default: .)")
    common.add_argument("--seed", type=int, default=None, help="base seed (ensembles, random presets)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="lpmhd", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, allow_abbrev=False)
        p.set_defaults(func=func)
        return p

    p = add("simulate", cmd_simulate, "run the Galerkin solver")
    p.add_argument("--config", default=None)

    p = add("cauchy-study", cmd_cauchy, "compare runs at cutoffs n and 2n")
    p.add_argument("--config", default=None)
    p.add_argument("--n", type=_int_list, default=[8, 16, 32])

    p = add("perturb", cmd_perturb, "separation of perturbed runs")
    p.add_argument("--config", default=None)
    p.add_argument("--delta", type=_float_list, default=[1e-5])

    p = add("analyze", cmd_analyze, "norms of stored SPF1 fields or ledger CSVs")
    p.add_argument("files", nargs="+")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--p", type=_exponent, default=2.0)
    p.add_argument("--r", type=_exponent, default=2.0)
    p.add_argument("--q", type=_exponent, default=math.inf, help="time exponent for ledger CSVs")

    def verifier(name, func, help_):
        p = add(name, func, help_)
        p.add_argument("--N", type=_int_list, default=[64, 128, 256])
        p.add_argument("--ensemble", type=int, default=100)
        p.add_argument("--d", type=int, default=2)
        p.add_argument("--slope-tol", type=float, default=0.1)
        p.add_argument("--cap", type=float, default=100.0)
        return p

    p = verifier("verify-bernstein", cmd_verify_bernstein, "Bernstein ratios")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--p", type=_exponent, default=2.0)
    p.add_argument("--q", type=_exponent, default=2.0)
    p.add_argument("--support", choices=("annulus", "ball"), default="annulus")

    p = verifier("verify-product", cmd_verify_product, "Besov product laws")
    p.add_argument("--s1", type=float, default=1.0)
    p.add_argument("--s2", type=float, default=1.0)
    p.add_argument("--p", type=_exponent, default=2.0)
    p.add_argument("--r", type=_exponent, default=2.0)
    p.add_argument("--form", choices=("besov", "linf"), default="besov")

    p = verifier("verify-commutator", cmd_verify_commutator, "commutator estimate, homogeneous blocks")
    p.add_argument("--s", type=float, default=1.5)
    p.add_argument("--p", type=_exponent, default=2.0)
    p.add_argument("--q", type=_exponent, default=2.0)

    p = verifier("verify-transport", cmd_verify_transport, "transport commutator, inhomogeneous blocks")
    p.add_argument("--s", type=float, default=1.2)
    p.add_argument("--p", type=_exponent, default=2.0)
    p.add_argument("--p1", type=_exponent, default=2.0)
    p.add_argument("--r", type=_exponent, default=2.0)

    p = verifier("verify-heat", cmd_verify_heat, "heat maximal regularity")
    p.set_defaults(N=[64, 128])
    p.add_argument("--rho", type=_exponent, default=1.0)
    p.add_argument("--rho1", type=_exponent, default=1.0)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--r", type=_exponent, default=2.0)
    p.add_argument("--no-forcing", action="store_true")

    p = add("gronwall", cmd_gronwall, "nonlinear Gronwall bound with constant c, e")
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--e", type=float, default=0.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--T", type=float, default=0.99)
    p.add_argument("--points", type=int, default=100)
    return parser


def dispatch(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    args.argv = argv
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        out = Output(args.output_dir)
        return args.func(args, out)
    except (UsageError, CFLViolation, InitialDataError, ValueError) as exc:
        print(f"lpmhd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
