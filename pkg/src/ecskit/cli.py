"""Command-line front end.

Exit codes: 0 when every check passes, 1 on a verification failure, 2 on
invalid input.  Reports go to stdout as JSON (or to ``--out``); progress is
logged to stderr, one line per stage.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import chartcalc, d1family, d2family, lattice, olszak, riccati

log = logging.getLogger("ecskit")

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


class InputError(ValueError):
    pass


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ecskit",
        description="Verify essentially conformally symmetric metrics and certify compact quotients.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid_default, grid_help="grid points per axis"):
        p.add_argument("--grid", type=_positive(int), default=grid_default, help=grid_help)
        p.add_argument("--tol-first", type=_positive(float), default=1e-8)
        p.add_argument("--tol-second", type=_positive(float), default=1e-6)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path, default=None, help="write the report here")

    def pipeline(p):
        p.add_argument("--k", type=int, default=5)
        p.add_argument("--l", type=int, default=6)
        p.add_argument("--period", type=_positive(float), default=1.0)

    p = sub.add_parser("verify-d1", help="invariant suite for the d = 1 family")
    common(p, 3)
    p.add_argument("--fixture", default="random", help="random, sine, constant or a JSON file")
    p.add_argument("--n", type=int, default=None, help="dimension for random data")
    p.add_argument("--count", type=_positive(int), default=1, help="number of random data")

    p = sub.add_parser("verify-d2", help="invariant suite for the d = 2 family")
    common(p, 3)
    p.add_argument("--fixture", default="nonflat", help="flat, nonflat or a JSON file")
    p.add_argument("--n", type=int, default=4)

    p = sub.add_parser("olszak", help="Olszak distribution of a fixture metric")
    common(p, 2)
    p.add_argument("--fixture", default="d1", help="d1, d2-flat, d2, flat or a JSON file")

    p = sub.add_parser("riccati", help="roots of P, a septuple and its spectrum")
    common(p, riccati.GRID, "samples per period")
    pipeline(p)

    p = sub.add_parser("certify", help="compactness certificate")
    common(p, 8, "random metric sample points")
    pipeline(p)
    p.add_argument("--j", type=_positive(int), default=1)

    p = sub.add_parser("plotdata", help="CSV tables of the septuple and residuals")
    common(p, riccati.GRID, "samples per period")
    pipeline(p)
    return parser


def _dump(report, out):
    text = json.dumps(lattice._plain(report), sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        log.info("wrote %s", out)


def _load_json(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"unknown fixture {str(path)!r}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _d1_fixtures(args):
    fx = args.fixture
    if fx == "random":
        rng = np.random.default_rng(args.seed)
        return [d1family.random_d1data(rng, args.n) for _ in range(args.count)]
    if fx == "sine":
        return [d1family.sine_example(args.n or 4)]
    if fx == "constant":
        return [d1family.sine_example(args.n or 4, constant=1.0)]
    try:
        return [d1family.D1Data.from_dict(_load_json(fx))]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed D1 data: {exc}") from exc


def _d2_fixture(args):
    fx = args.fixture
    if fx == "flat":
        return d2family.flat_fixture(args.n)
    if fx == "nonflat":
        return d2family.nonflat_fixture(args.n)
    try:
        return d2family.D2Data.from_dict(_load_json(fx))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed D2 data: {exc}") from exc


def _profile(args, grid):
    return chartcalc.ToleranceProfile(grid, tol_first=args.tol_first, tol_second=args.tol_second)


def cmd_verify_d1(args):
    reports = []
    for i, data in enumerate(_d1_fixtures(args)):
        problems = d1family.validate(data)
        if problems:
            raise InputError("; ".join(problems))
        prof = _profile(args, d1family.default_grid(data, per_axis=args.grid))
        rep = d1family.run_suite(data, prof)
        log.info(
            "d1[%d] n=%d  nabla W %.2e  tol %.0e  %s  %s",
            i, data.n, rep["checks"]["nabla_weyl"]["value"], args.tol_second,
            rep["classification"], "ok" if rep["passed"] else "FAIL",
        )
        reports.append(rep)
    passed = all(r["passed"] for r in reports)
    _dump({"command": "verify-d1", "passed": passed, "reports": reports}, args.out)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_verify_d2(args):
    data = _d2_fixture(args)
    problems = d2family.validate(data)
    if problems:
        raise InputError("; ".join(problems))
    prof = _profile(args, d2family.default_grid(data, per_axis=args.grid))
    rep = d2family.run_suite(data, prof)
    log.info(
        "d2 n=%d  nabla W %.2e  tol %.0e  %s  %s",
        data.n, rep["checks"]["nabla_weyl"]["value"], args.tol_second,
        rep["classification"], "ok" if rep["passed"] else "FAIL",
    )
    _dump({"command": "verify-d2", "fixture": data.name, **rep}, args.out)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_olszak(args):
    fx = args.fixture
    if fx == "d1":
        data = d1family.sine_example(5)
        field_, grid, expected = d1family.build_metric(data), d1family.default_grid(data, args.grid), 1
    elif fx in ("d2", "d2-flat"):
        data = d2family.nonflat_fixture() if fx == "d2" else d2family.flat_fixture()
        field_, grid, expected = d2family.build_d2_metric(data), d2family.default_grid(data, args.grid), 2
    elif fx == "flat":
        field_ = chartcalc.flat_metric((2, 2))
        grid, expected = chartcalc.box_grid(np.zeros(4), 0.5, args.grid), 4
    else:
        data = d1family.D1Data.from_dict(_load_json(fx))
        problems = d1family.validate(data)
        if problems:
            raise InputError("; ".join(problems))
        field_, grid, expected = d1family.build_metric(data), d1family.default_grid(data, args.grid), 1
    prof = _profile(args, grid)
    fibers = olszak.fibers_on_grid(field_, prof)
    check = olszak.nullity_parallel_check(field_, fibers[:2], prof)
    dims = check["dimensions"]
    passed = dims == [expected] and (check["skipped"] or check["nullity"] < args.tol_first)
    log.info("olszak  dimensions %s  nullity %s  %s", dims, check["nullity"], "ok" if passed else "FAIL")
    _dump({"command": "olszak", "fixture": fx, "expected": expected, **check, "passed": passed}, args.out)
    return EXIT_OK if passed else EXIT_FAIL


def _pipeline_inputs(args):
    problem = riccati.validate_kl(args.k, args.l)
    if problem:
        raise InputError(problem)
    return riccati.roots_of_P(args.k, args.l)


def cmd_riccati(args):
    roots = _pipeline_inputs(args)
    log.info("roots   %s  product-1 %.1e", roots.as_array(), abs(np.prod(roots.as_array()) - 1))
    sept = riccati.solve_septuple(roots, args.period)
    res = sept.residuals(args.grid)
    sp = riccati.spec(sept, args.grid)
    err = float(np.abs(sp.triple.as_array() - roots.as_array()).max())
    passed = max(res) < riccati.RESIDUAL_TOL and err < 1e-8
    log.info("septuple residual %.2e  tol %.0e  spec error %.2e  %s", max(res), riccati.RESIDUAL_TOL, err, "ok" if passed else "FAIL")
    _dump(
        {
            "command": "riccati",
            "kl": [args.k, args.l],
            "roots": roots.as_array(),
            "margins": roots.margins(),
            "septuple": sept.to_dict(),
            "residuals": res,
            "spec": sp.triple.as_array(),
            "spec_error": err,
            "quadrature_error": sp.error_estimate,
            "passed": passed,
        },
        args.out,
    )
    return EXIT_OK if passed else EXIT_FAIL


def cmd_certify(args):
    _pipeline_inputs(args)
    tol = lattice.CertifyTolerances(first=args.tol_first, second=args.tol_second)
    cert = lattice.certify_compact(
        args.k, args.l, args.j, args.period, tol=tol, seed=args.seed, metric_points=args.grid,
    )
    text = cert.to_json()
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
        log.info("wrote %s", args.out)
    log.info("verdict %s", cert.verdict)
    return EXIT_OK if cert.verdict == "pass" else EXIT_FAIL


def cmd_plotdata(args):
    roots = _pipeline_inputs(args)
    sept = riccati.solve_septuple(roots, args.period)
    N = args.grid
    t = np.arange(N) * (args.period / N)
    cols = {n: getattr(sept, n).samples(N) for n in ("alpha", "beta", "gamma", "f")}
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "septuple.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "alpha", "beta", "gamma", "f"])
        for i in range(N):
            w.writerow([repr(float(t[i]))] + [repr(float(cols[n][i])) for n in ("alpha", "beta", "gamma", "f")])
    with open(out / "residuals.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "r_alpha", "r_beta", "r_gamma"])
        res = [
            getattr(sept, n).deriv().samples(N) + cols[n] ** 2 - cols["f"] - c
            for n, c in (("alpha", sept.a), ("beta", sept.b), ("gamma", sept.c))
        ]
        for i in range(N):
            w.writerow([repr(float(t[i]))] + [repr(float(r[i])) for r in res])
    worst = float(max(np.abs(r).max() for r in res))
    log.info("plotdata  %d rows  residual %.2e  tol %.0e", N, worst, riccati.RESIDUAL_TOL)
    return EXIT_OK if worst < riccati.RESIDUAL_TOL else EXIT_FAIL


COMMANDS = {
    "verify-d1": cmd_verify_d1,
    "verify-d2": cmd_verify_d2,
    "olszak": cmd_olszak,
    "riccati": cmd_riccati,
    "certify": cmd_certify,
    "plotdata": cmd_plotdata,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (
        InputError,
        d1family.InvalidDataError,
        riccati.InvalidKLError,
        riccati.NotInUError,
        chartcalc.ChartDomainError,
        chartcalc.DegenerateMetricError,
    ) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    except (riccati.SolverFailure, lattice.IntegrationError, d1family.ConsistencyError) as exc:
        log.error("verification failed: %s", exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
