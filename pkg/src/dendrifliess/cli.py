"""Batch command-line front end.

Subcommands: ``trees``, ``algebra``, ``eval``, ``fliess``, ``magnus``,
``verify``.  Output is CSV/JSON on stdout or files; identical argv and seed
give identical output.  Exit codes: 0 success, 1 computation or verification
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

import numpy as np

from . import algebra, integrals, operators, signals, trees

SIGNAL_SPEC_HELP = "signal spec: csv:<path> | const:<matrix like '0,1;-1,0'> | spin:<Bmag>,<schedule>"


class CliError(Exception):
    pass


def _parse_matrix(text: str) -> np.ndarray:
    try:
        rows = [[float(v) for v in row.split(",")] for row in text.split(";")]
        mat = np.array(rows)
    except ValueError as exc:
        raise CliError(f"bad matrix literal {text!r}: {exc}") from exc
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise CliError(f"matrix literal {text!r} is not square")
    return mat


def _parse_signal(spec: str, grid: int, horizon: float) -> signals.MatrixSignal:
    kind, _, rest = spec.partition(":")
    if kind == "csv":
        return signals.signal_from_csv(rest)
    if kind == "const":
        return signals.constant_signal(_parse_matrix(rest), horizon, grid)
    if kind == "spin":
        mag_text, _, schedule = rest.partition(",")
        if not schedule:
            raise CliError("spin spec needs 'spin:<Bmag>,<schedule>'")
        return signals.spin_field(float(mag_text), schedule, horizon, grid)
    raise CliError(f"unknown signal spec {spec!r} ({SIGNAL_SPEC_HELP})")


def _print_polynomial(p: algebra.TreePolynomial, as_json: bool) -> None:
    if as_json:
        print(json.dumps(p.to_json()))
    else:
        print(algebra.render_polynomial(p))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_trees(args) -> int:
    if args.tree_cmd != "enum":
        raise CliError("unknown trees subcommand")
    ts = trees.enumerate_trees(args.order)
    word = trees.parse_word(args.decorate) if args.decorate else None
    records = []
    for skel in ts:
        if word is not None:
            dec = trees.decorate(word, skel)
            records.append(trees.tree_to_json(dec) if args.json
                           else algebra.render_tree_expr(dec))
        else:
            records.append(trees.skeleton_string(skel))
    if args.json:
        print(json.dumps({"order": args.order, "count": len(ts), "trees": records}))
    else:
        for rec in records:
            print(rec)
    return 0


def _cmd_algebra(args) -> int:
    if args.algebra_cmd == "char":
        letter_word = trees.parse_word(args.letter)
        if len(letter_word) != 1:
            raise CliError("--letter takes a single letter like x1")
        _print_polynomial(algebra.char_trees(args.order, letter_word[0]), args.json)
        return 0
    ops = {
        "shuffle": algebra.shuffle,
        "prec": algebra.prec,
        "succ": algebra.succ,
        "prelie": algebra.pre_lie,
    }
    p = algebra.parse_dendriform_expr(args.expr1)
    q = algebra.parse_dendriform_expr(args.expr2)
    _print_polynomial(ops[args.algebra_cmd](p, q), args.json)
    return 0


def _cmd_eval(args) -> int:
    if args.eval_cmd != "tree":
        raise CliError("unknown eval subcommand")
    p = algebra.parse_dendriform_expr(args.expr)
    u = _parse_signal(args.signal, args.grid, args.horizon)
    result = integrals.evaluate_polynomial(p, u)
    if args.out:
        result.to_csv(args.out)
    elif args.json:
        print(result.to_json())
    else:
        print(f"value at horizon t = {u.horizon}:")
        print(result.at_horizon)
    return 0


def _load_series(spec: str) -> operators.GeneratingSeries:
    if spec.startswith("dyson:"):
        return operators.dyson_series(int(spec.split(":", 1)[1]))
    with open(spec) as fh:
        data = json.load(fh)
    if isinstance(data, dict) and data.get("rule", "").startswith("dyson:"):
        return operators.dyson_series(int(data["rule"].split(":", 1)[1]))
    poly = algebra.TreePolynomial.from_json(data)
    m = max((max(trees.foliation(t), default=0) for t, _ in poly.items()), default=1)
    return operators.finite_series(poly, max(m, 1))


def _cmd_fliess(args) -> int:
    if args.fliess_cmd != "eval":
        raise CliError("unknown fliess subcommand")
    series = _load_series(args.series)
    u = _parse_signal(args.signal, args.grid, args.horizon)
    geometric = series.growth_regime == "geometric"
    out = operators.evaluate_fliess(series, u, args.order,
                                    with_certificate=args.certificate and geometric)
    if args.certificate:
        if geometric:
            print(operators.convergence_certificate(series, u, args.order).to_json())
        else:
            print(json.dumps({"certificate": "not available",
                              "reason": f"growth regime {series.growth_regime}"}))
    if args.out:
        integrals.EvaluationResult(out.grid, out.values).to_csv(args.out)
    elif args.json:
        print(json.dumps({"t": out.grid.tolist(), "values": out.values.tolist()}))
    else:
        print(f"y(T) =\n{out.at_horizon}")
    return 0


def _cmd_magnus(args) -> int:
    u = _parse_signal(args.signal, args.grid, args.horizon)
    series = operators.magnus_generating_series(args.order)
    omega, z = operators.magnus_evaluate(series, u)
    payload: dict = {
        "order": args.order,
        "orientation": series.orientation,
        "generating_series": series.poly.to_json(),
        "omega_T": omega.at_horizon.tolist(),
        "z_T": z[-1].tolist(),
    }
    if args.compare_rk4:
        ref = operators.rk4_reference(u, args.refine)
        payload["rk4_T"] = ref[-1].tolist()
        payload["deviation"] = float(signals.stack_norm1(z[-1] - ref[-1]))
    if args.json:
        print(json.dumps(payload))
    else:
        print(f"orientation: {payload['orientation']}")
        print(f"omega(T) =\n{omega.at_horizon}")
        print(f"z(T) =\n{z[-1]}")
        if args.compare_rk4:
            print(f"deviation vs RK4: {payload['deviation']:.3e}")
    return 0


# ---------------------------------------------------------------------------
# verification suites (seeded, desk scale)

def _random_homogeneous(rng: random.Random, order: int, m: int = 2) -> algebra.TreePolynomial:
    skel = rng.choice(trees.enumerate_trees(order))
    word = tuple(rng.randint(0, m) for _ in range(order))
    coeff = Fraction(rng.randint(1, 5), rng.randint(1, 5))
    return algebra.TreePolynomial.single(trees.decorate(word, skel), coeff)


def _verify_axioms(seed: int) -> list[str]:
    rng = random.Random(seed)
    failures = []
    for k in range(100):
        a, b, c = (_random_homogeneous(rng, rng.randint(1, 3)) for _ in range(3))
        checks = {
            "(a<b)<c = a<(b sh c)":
                algebra.prec(algebra.prec(a, b), c)
                == algebra.prec(a, algebra.shuffle(b, c)),
            "(a>b)<c = a>(b<c)":
                algebra.prec(algebra.succ(a, b), c)
                == algebra.succ(a, algebra.prec(b, c)),
            "a>(b>c) = (a sh b)>c":
                algebra.succ(a, algebra.succ(b, c))
                == algebra.succ(algebra.shuffle(a, b), c),
            "< + > = sh":
                algebra.prec(a, b) + algebra.succ(a, b) == algebra.shuffle(a, b),
            "sh associative":
                algebra.shuffle(algebra.shuffle(a, b), c)
                == algebra.shuffle(a, algebra.shuffle(b, c)),
        }
        failures += [f"case {k}: {name}" for name, ok in checks.items() if not ok]
    return failures


def _verify_catalan(seed: int) -> list[str]:
    failures = []
    for n in range(11):
        if len(trees.enumerate_trees(n)) != trees.catalan(n):
            failures.append(f"count mismatch at order {n}")
    for n in range(9):
        import math
        if trees.tree_factorial(trees.left_comb_skeleton(n)) != math.factorial(n):
            failures.append(f"left comb factorial at order {n}")
        if trees.tree_factorial(trees.right_comb_skeleton(n)) != math.factorial(n):
            failures.append(f"right comb factorial at order {n}")
    return failures


def _verify_product_theorem(seed: int) -> list[str]:
    rng = random.Random(seed)
    nprng = np.random.default_rng(seed)
    failures = []
    for k in range(10):
        n1, n2 = rng.randint(1, 2), rng.randint(1, 2)
        t1 = trees.decorate(tuple(rng.randint(0, 2) for _ in range(n1)),
                            rng.choice(trees.enumerate_trees(n1)))
        t2 = trees.decorate(tuple(rng.randint(0, 2) for _ in range(n2)),
                            rng.choice(trees.enumerate_trees(n2)))
        coarse = signals.random_smooth_signal(nprng, 2, 2, 1.0, 256)
        fine = signals.MatrixSignal(
            _refine_samples(coarse.samples), coarse.horizon)
        r1 = integrals.check_product_identity(t1, t2, coarse)
        r2 = integrals.check_product_identity(t1, t2, fine)
        if r2 > 1e-4:
            failures.append(f"case {k}: fine residual {r2:.2e}")
        if r1 > 1e-12 and not 3.0 <= r1 / max(r2, 1e-300) <= 5.5:
            failures.append(f"case {k}: ratio {r1 / r2:.2f}")
    return failures


def _refine_samples(samples: np.ndarray) -> np.ndarray:
    mid = 0.5 * (samples[:, :-1] + samples[:, 1:])
    m, nodes = samples.shape[0], samples.shape[1]
    out = np.empty((m, 2 * nodes - 1) + samples.shape[2:])
    out[:, 0::2] = samples
    out[:, 1::2] = mid
    return out


def _verify_bounds(seed: int) -> list[str]:
    rng = random.Random(seed)
    nprng = np.random.default_rng(seed)
    failures = []
    u = signals.random_smooth_signal(nprng, 2, 2, 1.0, 256)
    for k in range(50):
        n = rng.randint(1, 4)
        t = trees.decorate(tuple(rng.randint(0, 2) for _ in range(n)),
                           rng.choice(trees.enumerate_trees(n)))
        lhs, rhs = integrals.check_ubar_domination(t, u)
        if lhs > rhs * (1 + 1e-6) + 1e-9:
            failures.append(f"case {k}: domination {lhs:.3e} > {rhs:.3e}")
    one = signals.constant_signal(np.array([[1.0]]), 1.0, 1000)
    for n in range(1, 5):
        for skel in trees.enumerate_trees(n):
            t = trees.decorate((1,) * n, skel)
            got = integrals.evaluate_tree(t, one).at_horizon[0, 0]
            want = 1.0 / trees.tree_factorial(skel)
            if abs(got - want) > 1e-6:
                failures.append(f"closed form at order {n}: {got} vs {want}")
        if integrals.check_factorial_identity(n, one) > 1e-6:
            failures.append(f"factorial identity at n={n}")
    return failures


def _verify_magnus(seed: int) -> list[str]:
    failures = []
    u = signals.spin_field(1.0, "rot", 1.0, 512)
    u = u.scaled(0.5 / signals.signal_norm(u))
    ref = operators.rk4_reference(u, 4)
    errs = []
    for n in (1, 2, 3, 4):
        series = operators.magnus_generating_series(n)
        _, z = operators.magnus_evaluate(series, u)
        errs.append(float(signals.stack_norm1(z[-1] - ref[-1])))
    if not all(a > b for a, b in zip(errs, errs[1:])):
        failures.append(f"errors not decreasing: {errs}")
    if errs[-1] > 1e-4:
        failures.append(f"error at order 4 is {errs[-1]:.2e}")
    if operators.resolve_pre_lie_orientation(u) != "standard":
        failures.append("orientation resolution did not pick 'standard'")
    return failures


_SUITES = {
    "axioms": _verify_axioms,
    "catalan": _verify_catalan,
    "product-theorem": _verify_product_theorem,
    "bounds": _verify_bounds,
    "magnus": _verify_magnus,
}


def _cmd_verify(args) -> int:
    names = list(_SUITES) if args.suite == "all" else [args.suite]
    all_failures: dict[str, list[str]] = {}
    for name in names:
        failures = _SUITES[name](args.seed)
        all_failures[name] = failures
        status = "ok" if not failures else f"FAILED ({len(failures)})"
        if not args.json:
            print(f"{name}: {status}")
            for f in failures:
                print(f"  {f}")
    if args.json:
        print(json.dumps({"seed": args.seed, "results": all_failures}))
    return 0 if not any(all_failures.values()) else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dendrifliess",
        description="trees, dendriform products, iterated integrals and "
                    "operator evaluation on matrix signals")
    parser.add_argument("--json", action="store_true",
                        help="machine-readable output (and JSON errors on stderr)")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("trees", help="enumerate/inspect trees")
    tsub = p.add_subparsers(dest="tree_cmd", required=True)
    enum = tsub.add_parser("enum")
    enum.add_argument("--order", type=int, required=True)
    enum.add_argument("--decorate", help="word like x1x2x1 to decorate with")
    enum.set_defaults(func=_cmd_trees)

    p = sub.add_parser("algebra", help="symbolic products")
    asub = p.add_subparsers(dest="algebra_cmd", required=True)
    for name in ("shuffle", "prec", "succ", "prelie"):
        ap = asub.add_parser(name)
        ap.add_argument("expr1")
        ap.add_argument("expr2")
        ap.set_defaults(func=_cmd_algebra)
    ap = asub.add_parser("char")
    ap.add_argument("--order", type=int, required=True)
    ap.add_argument("--letter", default="x1")
    ap.set_defaults(func=_cmd_algebra)

    p = sub.add_parser("eval", help="evaluate iterated integrals")
    esub = p.add_subparsers(dest="eval_cmd", required=True)
    ep = esub.add_parser("tree")
    ep.add_argument("--expr", required=True)
    ep.add_argument("--signal", required=True, help=SIGNAL_SPEC_HELP)
    ep.add_argument("--grid", type=int, default=256)
    ep.add_argument("--horizon", type=float, default=1.0)
    ep.add_argument("--out", help="CSV output path")
    ep.set_defaults(func=_cmd_eval)

    p = sub.add_parser("fliess", help="truncated operator evaluation")
    fsub = p.add_subparsers(dest="fliess_cmd", required=True)
    fp = fsub.add_parser("eval")
    fp.add_argument("--series", required=True, help="JSON file or dyson:<N>")
    fp.add_argument("--signal", required=True, help=SIGNAL_SPEC_HELP)
    fp.add_argument("--order", type=int, required=True)
    fp.add_argument("--grid", type=int, default=256)
    fp.add_argument("--horizon", type=float, default=1.0)
    fp.add_argument("--certificate", action="store_true")
    fp.add_argument("--out", help="CSV output path")
    fp.set_defaults(func=_cmd_fliess)

    p = sub.add_parser("magnus", help="exponent recursion vs the ODE oracle")
    p.add_argument("--signal", required=True, help=SIGNAL_SPEC_HELP)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--compare-rk4", action="store_true")
    p.add_argument("--refine", type=int, default=4)
    p.set_defaults(func=_cmd_magnus)

    p = sub.add_parser("verify", help="run seeded verification suites")
    p.add_argument("suite", choices=list(_SUITES) + ["all"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        if getattr(args, "json", False):
            print(json.dumps({"error": str(exc)}), file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
