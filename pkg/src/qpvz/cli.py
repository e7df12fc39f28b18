"""Command-line entry point: ``qpvz {example,expand,verify,compare}``.

Exit status is 0 when every recorded check passed, 1 when any failed and 2
on invalid input.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .core import BasisError, HermiticityError, max_abs
from .invariants import SLOPE_MARGIN, Check, expansion_checks, order2_equivalence, run_suite
from .models import ModelFileError, anharmonic, henon_heiles, load_model, random_model
from .oracle import default_grid, fit_slope, SlopeFitError
from .pvz import eigen_report, expand
from .report import Report, render

MAX_ORDER = 12
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _epsilons(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid epsilon list {text!r}") from None
    if not values or not all(np.isfinite(values)):
        raise argparse.ArgumentTypeError(f"invalid epsilon list {text!r}")
    return values


def _orders(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid order list {text!r}") from None
    if not values or any(not 0 <= v <= MAX_ORDER for v in values):
        raise argparse.ArgumentTypeError(f"orders must lie in 0..{MAX_ORDER}")
    return values


def _order(text):
    v = int(text)
    if not 0 <= v <= MAX_ORDER:
        raise argparse.ArgumentTypeError(f"order must lie in 0..{MAX_ORDER}")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _check_rows(report, checks, **extra):
    for c in checks:
        report.add("checks", {**extra, **c.as_dict()})


def _state_rows(report, exp, epsilons, levels=None, exact=False):
    for eps in epsilons:
        rep = eigen_report(exp, eps, exact=exact)
        k = 0
        for lv in rep.levels:
            for a, value in enumerate(lv.eigenvalues):
                if levels is None or lv.level in levels:
                    row = {"epsilon": eps, "level": lv.level, "slot": a,
                           "energy0": lv.energy0, "eigenvalue": float(value),
                           "residual": float(lv.residuals[a])}
                    if exact:
                        row["exact"] = float(rep.exact.exact_eigenvalues[k])
                        row["error"] = float(rep.exact.errors[k])
                        row["overlap"] = float(rep.exact.pairing.subspace_overlaps[k])
                    report.add("states", row)
                k += 1


def _coefficient_rows(report, exp, levels):
    from .pvz import polynomial_coefficients

    for j in levels:
        if len(exp.basis.positions[j]) != 1:
            continue
        c = polynomial_coefficients(exp, j)
        report.add("coefficients", {"level": j, **{f"c{p}": float(v) for p, v in enumerate(c)}})


def _example_model(args):
    if args.name == "anharmonic":
        n_max = args.nmax or max(60, args.jmax + 8 * args.order + 8)
        return anharmonic(n_max), list(range(args.jmax + 1))
    cutoff = args.cutoff or max(14, args.kmax + 3 * args.order + 6)
    return henon_heiles(cutoff, args.alpha, args.beta), list(range(args.kmax + 1))


def cmd_example(args) -> Report:
    if args.name not in ("anharmonic", "henon-heiles"):
        raise InputError(f"unknown example {args.name!r}")
    if args.name == "anharmonic" and (args.alpha is not None or args.beta is not None):
        raise InputError("--alpha/--beta apply to henon-heiles only")
    if args.alpha is None:
        args.alpha = 0.1
    if args.beta is None:
        args.beta = 0.1
    model, levels = _example_model(args)
    epsilons = args.epsilon or ([0.01] if args.name == "anharmonic" else [1.0])
    exp = expand(model.h_series, model.basis, args.order)
    report = Report({"command": "example", "model": model.name, "order": args.order,
                     "dim": model.dim, **model.params})
    _state_rows(report, exp, epsilons, set(levels), exact=args.exact)
    _coefficient_rows(report, exp, levels)
    _check_rows(report, expansion_checks(exp, label=model.name))
    return report


def cmd_expand(args) -> Report:
    try:
        model = load_model(args.model)
    except FileNotFoundError as err:
        raise InputError(f"model file not found: {args.model}") from err
    except (ModelFileError, BasisError, HermiticityError) as err:
        raise InputError(str(err)) from err
    exp = expand(model.h_series, model.basis, args.order)
    trivial = all(max_abs(model.h_series[p]) == 0 for p in range(1, model.h_series.order + 1))
    report = Report({"command": "expand", "model": model.name, "order": args.order,
                     "dim": model.dim, "exact": trivial})
    _state_rows(report, exp, args.epsilon or [0.0, 0.1], exact=args.exact)
    _coefficient_rows(report, exp, range(model.basis.n_levels))
    _check_rows(report, expansion_checks(exp, label=model.name))
    return report


def cmd_verify(args) -> Report:
    if not args.dim >= args.levels >= 2:
        raise InputError("need dim >= levels >= 2")
    report = Report({"command": "verify", "seed": args.seed, "dim": args.dim,
                     "levels": args.levels, "order": args.order, "trials": args.trials})
    worst = 0.0
    for trial in range(args.trials):
        model = random_model(args.seed, args.dim, args.levels, trial)
        checks = run_suite(model, args.order, args.seed)
        worst = max([worst] + [c.residual for c in checks if c.name.startswith("homological")])
        _check_rows(report, checks, trial=trial)
    report.meta["max_homological_residual"] = worst
    report.meta["failed"] = sum(not row["passed"] for row in report.checks)
    return report


def _compare_model(args):
    if args.model in ("anharmonic", "henon-heiles"):
        if args.model == "anharmonic":
            return anharmonic(args.nmax or max(60, 8 * max(args.orders) + 16))
        return henon_heiles(args.cutoff or max(14, 3 * max(args.orders) + 8), args.alpha, args.beta)
    try:
        return load_model(args.model)
    except FileNotFoundError as err:
        raise InputError(f"model file not found: {args.model}") from err
    except (ModelFileError, BasisError, HermiticityError) as err:
        raise InputError(str(err)) from err


def cmd_compare(args) -> Report:
    if args.alpha is None:
        args.alpha = 0.1
    if args.beta is None:
        args.beta = 0.1
    epsilons = args.epsilon or default_grid().tolist()
    if len(set(epsilons)) < 3 or min(epsilons) <= 0:
        raise InputError("compare needs >= 3 distinct positive epsilons")
    model = _compare_model(args)
    report = Report({"command": "compare", "model": model.name, "dim": model.dim,
                     "orders": ",".join(map(str, args.orders)), "points": len(epsilons)})
    n_states = min(args.states, model.dim)

    exp2 = expand(model.h_series, model.basis, 2)
    eq = order2_equivalence(exp2, model.basis, model.h_series)
    _check_rows(report, [Check("order2_rs_equivalence", eq, 1e-12, note="exact" if eq < 1e-12 else "")])

    for N in args.orders:
        exp = expand(model.h_series, model.basis, N)
        errors = np.zeros((len(epsilons), n_states))
        conflicts = 0
        for i, eps in enumerate(epsilons):
            rep = eigen_report(exp, eps, exact=True)
            errors[i] = rep.exact.errors[:n_states]
            conflicts += sum(any(i < n_states for i in claim)
                             for _, claim in rep.exact.pairing.conflicts)
        report.add("checks", {"order": N, **Check("pairing_conflicts", float(conflicts), 0.0).as_dict()})
        labels = eigen_report(exp, 0.0).state_labels[:n_states]
        for s, (j, a) in enumerate(labels):
            row = {"order": N, "level": j, "slot": a}
            target = N + 1 - SLOPE_MARGIN
            if not np.any(errors[:, s]):
                report.add("slopes", {**row, "slope": float("inf"), "intercept": 0.0, "exact": True})
                check = Check("error_order", float("inf"), target, ">=", note="exact")
            else:
                try:
                    fit = fit_slope(epsilons, errors[:, s])
                    slope, intercept = fit.slope, fit.intercept
                except SlopeFitError as err:
                    slope, intercept = float("nan"), float("nan")
                    row["note"] = str(err)
                report.add("slopes", {**row, "slope": slope, "intercept": intercept, "exact": False})
                check = Check("error_order", slope, target, ">=")
            report.add("checks", {"order": N, **check.as_dict()})
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpvz", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, order=True):
        if order:
            sp.add_argument("--order", type=_order, default=2)
        sp.add_argument("--epsilon", type=_epsilons, default=None, help="comma-separated list")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv", "table"), default="json")
        sp.add_argument("--seed", type=int, default=0)

    ex = sub.add_parser("example", help="run a built-in model")
    ex.add_argument("name", help="anharmonic or henon-heiles")
    common(ex)
    ex.add_argument("--jmax", type=int, default=4)
    ex.add_argument("--kmax", type=int, default=2)
    ex.add_argument("--nmax", type=int, default=None)
    ex.add_argument("--cutoff", type=int, default=None)
    ex.add_argument("--alpha", type=float, default=None)
    ex.add_argument("--beta", type=float, default=None)
    ex.add_argument("--exact", action="store_true", help="also compare with dense diagonalization")

    exq = sub.add_parser("expand", help="run a model file")
    exq.add_argument("model")
    common(exq)
    exq.add_argument("--exact", action="store_true")

    ve = sub.add_parser("verify", help="invariant suite on seeded random models")
    common(ve)
    ve.add_argument("--dim", type=_positive, default=16)
    ve.add_argument("--levels", type=_positive, default=5)
    ve.add_argument("--trials", type=_positive, default=10)

    co = sub.add_parser("compare", help="error orders against exact diagonalization")
    co.add_argument("model", help="model file, anharmonic or henon-heiles")
    common(co, order=False)
    co.add_argument("--orders", type=_orders, default=[1, 2, 3, 4])
    co.add_argument("--epsilons", dest="epsilon", type=_epsilons)
    co.add_argument("--states", type=_positive, default=3)
    co.add_argument("--nmax", type=int, default=None)
    co.add_argument("--cutoff", type=int, default=None)
    co.add_argument("--alpha", type=float, default=None)
    co.add_argument("--beta", type=float, default=None)
    return p


COMMANDS = {"example": cmd_example, "expand": cmd_expand, "verify": cmd_verify, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = COMMANDS[args.command](args)
    except (InputError, ValueError) as err:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {err}", file=sys.stderr)
        return EXIT_INPUT
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
