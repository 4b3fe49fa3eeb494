"""Command-line front end: analyze, predict, lpseries, converge, compare."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .asymptotics import PhaseChoice, lp_solve_quadratic
from .corrector import NoConvergenceError, convergence_study, ConvergenceRecord
from .linalg import NotBTError
from .model import ModelError, builtin_model, parse_model, HH_BT_STATE, HH_BT_ALPHA
from .nfcoeffs import NonGenericBTError, analyze_bt
from .predictor import Method, make_mesh, sample_predictor, lift_parameters

EXIT_USAGE = 2
EXIT_NUMERIC = 3

_BUILTIN_POINTS = {
    "hh": (HH_BT_STATE, HH_BT_ALPHA),
}


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _load_model(args):
    name = args.model
    coeffs = {}
    for item in args.coeff or []:
        key, _, val = item.partition("=")
        if not _:
            raise SystemExit(f"bad --coeff {item!r}; expected KEY=VALUE")
        coeffs[key] = float(val)
    if name in ("bt_nf", "hh"):
        return builtin_model(name, **coeffs)
    with open(name, encoding="utf-8") as fh:
        return parse_model(fh.read(), name=name)


def _bt_point(args, model):
    if args.x0 is not None:
        x0 = np.array([float(v) for v in args.x0.split(",")])
        alpha0 = np.array([float(v) for v in args.alpha0.split(",")])
        return x0, alpha0
    if model.name in _BUILTIN_POINTS:
        return _BUILTIN_POINTS[model.name]
    if model.name == "bt_nf":
        return np.zeros(2), np.zeros(2)
    raise SystemExit("need --x0 and --alpha0 for a user model")


def _add_point_args(p):
    p.add_argument("--model", required=True,
                   help="model file path or builtin name (bt_nf, hh)")
    p.add_argument("--coeff", action="append", metavar="KEY=VALUE",
                   help="builtin bt_nf coefficient (a, b, c1, d, e, a1, b1)")
    p.add_argument("--x0", help="comma-separated approximate BT state")
    p.add_argument("--alpha0", help="comma-separated BT parameter values")


def _method(args) -> Method:
    phase = PhaseChoice(args.phase)
    return Method(kind=args.method, phase=phase, order=args.order,
                  lp_xi_identity=getattr(args, "lp_xi_identity", False))


def cmd_analyze(args) -> int:
    model = _load_model(args)
    x0, alpha0 = _bt_point(args, model)
    variants = [args.variant] if args.variant != "all" else ["orbital", "smooth", "hyper"]
    out = {}
    for var in variants:
        oracle, ex = analyze_bt(model, x0, alpha0, var)
        eig = ex.eig
        report = ex.as_dict()
        report["x0"] = eig.x0.tolist()
        report["alpha0"] = eig.alpha0.tolist()
        report["q0"] = eig.q0.tolist()
        report["q1"] = eig.q1.tolist()
        report["p0"] = eig.p0.tolist()
        report["p1"] = eig.p1.tolist()
        report["eig_residuals"] = eig.residuals(oracle.A)
        out[var] = report
        print(f"variant {var}: a = {_fmt(ex.a)}  b = {_fmt(ex.b)}  "
              f"theta1000 = {_fmt(ex.theta1000)}  theta0001 = {_fmt(ex.theta0001)}")
        if var != "orbital":
            print(f"  a1 = {_fmt(ex.a1)}  b1 = {_fmt(ex.b1)}  "
                  f"d = {_fmt(ex.d)}  e = {_fmt(ex.e)}")
        print(f"  max bordered-solve residual: {_fmt(ex.max_solve_residual)}")
    if args.coeffs or args.out:
        payload = json.dumps(out, indent=2, sort_keys=True)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(payload + "\n")
        else:
            print(payload)
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args)
    x0, alpha0 = _bt_point(args, model)
    _, ex = analyze_bt(model, x0, alpha0, args.variant)
    mesh = make_mesh(args.ntst, args.ncol)
    method = _method(args)
    pred = sample_predictor(ex, method, args.eps, mesh,
                            k=args.k if args.k is not None else args.eps * 1e-4)
    payload = json.dumps(pred.as_dict(), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_lpseries(args) -> int:
    series = lp_solve_quadratic(args.order)
    lines = ["i,tau_i,sigma_i"]
    for i in range(args.order):
        tau = series.tau[i]
        sig = series.sigma[i] if i < len(series.sigma) else ""
        lines.append(f"{i},{tau},{sig}")
    csv = "\n".join(lines) + "\n"
    omega = {f"omega{i}": [str(c) for c in p] for i, p in enumerate(series.omega)}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
        side = args.out.rsplit(".", 1)[0] + ".json"
        with open(side, "w", encoding="utf-8") as fh:
            json.dump(omega, fh, indent=2)
        print(f"wrote {args.out} and {side}")
    else:
        print(csv, end="")
        print(json.dumps(omega, indent=2))
    return 0


def _parse_amplitudes(spec: str):
    if ":" in spec:
        lo, hi, cnt = spec.split(":")
        return np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(cnt))
    return np.array([float(v) for v in spec.split(",")])


def cmd_converge(args) -> int:
    model = _load_model(args)
    x0, alpha0 = _bt_point(args, model)
    _, ex = analyze_bt(model, x0, alpha0, args.variant)
    methods = []
    for name in args.methods.split(","):
        name = name.strip()
        if name == "rp":
            methods.append(Method("rp"))
        elif name == "rp-l2":
            methods.append(Method("rp", phase=PhaseChoice.L2))
        elif name == "lp":
            methods.append(Method("lp"))
        elif name == "lp-alt":
            methods.append(Method("lp", phase=PhaseChoice.ALTGAMMA))
        elif name == "lp-xid":
            methods.append(Method("lp", lp_xi_identity=True))
        else:
            raise SystemExit(f"unknown method {name!r}")
    orders = [int(v) for v in args.orders.split(",")]
    amplitudes = _parse_amplitudes(args.amplitudes)
    mesh = make_mesh(args.ntst, args.ncol)
    records = convergence_study(model, ex, methods, orders, amplitudes,
                                mesh=mesh, k_factor=args.k_factor)
    lines = [ConvergenceRecord.CSV_HEADER] + [r.csv_row() for r in records]
    csv = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
        print(f"wrote {args.out} ({len(records)} rows)")
    else:
        print(csv, end="")
    return 0


def cmd_compare(args) -> int:
    model = _load_model(args)
    x0, alpha0 = _bt_point(args, model)
    import copy

    expansions = {var: analyze_bt(model, x0, alpha0, var)[1]
                  for var in ("orbital", "smooth", "hyper")}
    wrong = copy.deepcopy(expansions["orbital"])
    wrong.K["K11"] = np.zeros(2)
    wrong.K["K03"] = np.zeros(2)
    expansions["orbital-wrongK"] = wrong

    eps_values = _parse_amplitudes(args.eps_range)
    lines = ["variant,order,eps,alpha1,alpha2"]
    for var, ex in expansions.items():
        for order in (2, 3):
            for eps in eps_values:
                al = lift_parameters(ex, Method("lp", order=order), float(eps))
                lines.append(f"{var},{order},{_fmt(float(eps))},{_fmt(al[0])},{_fmt(al[1])}")
    csv = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
        print(f"wrote {args.out}")
    else:
        print(csv, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bthom",
        description="Third-order homoclinic predictors near Bogdanov-Takens points")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="BT eigendata and center-manifold coefficients")
    _add_point_args(p)
    p.add_argument("--variant", default="orbital",
                   choices=["orbital", "smooth", "hyper", "all"])
    p.add_argument("--coeffs", action="store_true", help="print the JSON coefficient dump")
    p.add_argument("--out", help="write the JSON dump to this path")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("predict", help="emit a collocation-ready homoclinic predictor")
    _add_point_args(p)
    p.add_argument("--variant", default="orbital", choices=["orbital", "smooth", "hyper"])
    p.add_argument("--method", default="lp", choices=["rp", "lp"])
    p.add_argument("--phase", default="vzero", choices=["vzero", "l2", "altgamma"])
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--k", type=float, help="end distance (default eps*1e-4)")
    p.add_argument("--ntst", type=int, default=40)
    p.add_argument("--ncol", type=int, default=4)
    p.add_argument("--out", help="predictor JSON path")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("lpseries", help="exact-rational Lindstedt-Poincare series")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--out", help="CSV path (omega polynomials go to a .json sidecar)")
    p.set_defaults(fn=cmd_lpseries)

    p = sub.add_parser("converge", help="predictor-vs-corrected convergence study")
    _add_point_args(p)
    p.add_argument("--variant", default="orbital", choices=["orbital", "smooth", "hyper"])
    p.add_argument("--methods", default="rp,lp",
                   help="comma list from rp, rp-l2, lp, lp-alt, lp-xid")
    p.add_argument("--orders", default="0,1,2,3")
    p.add_argument("--amplitudes", default="1e-3:1e-1:8",
                   help="lo:hi:count (log-spaced) or comma list")
    p.add_argument("--ntst", type=int, default=40)
    p.add_argument("--ncol", type=int, default=4)
    p.add_argument("--k-factor", type=float, default=1e-4)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("compare", help="parameter predictors across variants and orders")
    _add_point_args(p)
    p.add_argument("--eps-range", default="1e-2:2e-1:9")
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(fn=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (NotBTError, NonGenericBTError, NoConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
