"""Command-line front end.

Exit codes: 0 success, 1 error, 2 certificate or audit failure. Machine
readable output goes to stdout, diagnostics to stderr.
"""
import argparse
import json
import logging
import os
import sys

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

log = logging.getLogger("dpje")


def _float_list(text):
    return [int(float(x)) for x in text.split(",") if x.strip()]


def _add_input(p):
    p.add_argument("--input", required=True, help="constraint matrix, one row per line")
    p.add_argument("--format", choices=["csv", "whitespace"], default=None,
                   help="file format (default: from extension)")


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="RNG seed (fallback: $DPJE_SEED)")
    p.add_argument("--config", default=None, help="key=value file; flags take precedence")
    p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="dpje", description="Approximate John ellipsoids of symmetric polytopes.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="approximate John ellipsoid")
    _add_input(c)
    _add_common(c)
    c.add_argument("--xi", type=float, default=None)
    c.add_argument("--private", action="store_true", default=None)
    c.add_argument("--eps", type=float, default=None)
    c.add_argument("--delta", type=float, default=None)
    c.add_argument("--eps0", type=float, default=None)
    c.add_argument("--L", type=float, default=None, help="Lipschitz constant (default: derived)")
    c.add_argument("--iters", type=int, default=None)
    c.add_argument("--s", type=int, default=None, help="sketch rows")
    c.add_argument("--n-samples", type=int, default=None, help="row sampling budget N")
    c.add_argument("--xi0", type=float, default=None)
    c.add_argument("--sigma", type=float, default=None, help="noise scale override")
    c.add_argument("--delta0", type=float, default=None)
    c.add_argument("--delta1", type=float, default=None)
    c.add_argument("--sampling", choices=["leverage", "full"], default=None)
    c.add_argument("--sketch", choices=["gaussian", "isometry"], default=None)
    c.add_argument("--c1", type=float, default=None)
    c.add_argument("--c2", type=float, default=None)
    c.add_argument("--max-iters", type=int, default=None)
    c.add_argument("--out", default=None, help="write result JSON here instead of stdout")
    c.add_argument("--trace", default=None, help="write weight trace CSV here")
    c.set_defaults(func=cmd_compute)

    e = sub.add_parser("exact", help="exact fixed-point iteration")
    _add_input(e)
    _add_common(e)
    e.add_argument("--iters", type=int, default=None)
    e.add_argument("--xi", type=float, default=None, help="sets the default --iters")
    e.add_argument("--tol", type=float, default=None, help="optimality tolerance")
    e.add_argument("--out", default=None)
    e.add_argument("--trace", default=None)
    e.set_defaults(func=cmd_exact)

    k = sub.add_parser("calibrate", help="noise scale for an (eps, delta) budget")
    _add_common(k)
    k.add_argument("--eps", type=float, required=True)
    k.add_argument("--delta", type=float, required=True)
    k.add_argument("--eps0", type=float, required=True)
    k.add_argument("--L", type=float, required=True)
    k.add_argument("--iters", type=int, required=True)
    k.add_argument("--c1", type=float, default=None)
    k.add_argument("--c2", type=float, default=None)
    k.add_argument("--table", default=None, help="write the composed moment table CSV here")
    k.set_defaults(func=cmd_calibrate)

    a = sub.add_parser("audit", help="Lipschitz or moment-bound audit")
    a.add_argument("--input", default=None)
    a.add_argument("--format", choices=["csv", "whitespace"], default=None)
    _add_common(a)
    a.add_argument("--eps0", type=float, default=None)
    a.add_argument("--trials", type=int, default=None)
    a.add_argument("--moments", action="store_true", default=None)
    a.add_argument("--grid", choices=["default"], default=None)
    a.set_defaults(func=cmd_audit)

    b = sub.add_parser("bench", help="runtime scaling in n and T")
    _add_common(b)
    b.add_argument("--n-list", type=_float_list, default=None)
    b.add_argument("--d", type=int, default=None)
    b.add_argument("--xi", type=float, default=None)
    b.add_argument("--iters", type=int, default=None)
    b.add_argument("--t-list", type=_float_list, default=None)
    b.add_argument("--repeats", type=int, default=None)
    b.add_argument("--kernels", action="store_true", default=None,
                   help="also compare numba and numpy kernels")
    b.set_defaults(func=cmd_bench)
    return ap


_SHARED = {"xi": 0.1, "c1": 1.0, "c2": 2.0}
DEFAULTS = {
    "compute": {**_SHARED, "private": False, "delta0": 0.05, "delta1": 0.01,
                "sampling": "leverage", "sketch": "gaussian", "max_iters": 1_000_000},
    "exact": {**_SHARED, "tol": 1e-6},
    "calibrate": _SHARED,
    "audit": {"trials": 1000, "moments": False, "grid": "default"},
    "bench": {"xi": 0.2, "n_list": [1000, 2000, 4000], "d": 20, "iters": 50,
              "repeats": 3, "kernels": False},
}


def read_config(path):
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _convert(parser, dest, text):
    for action in parser._actions:
        if action.dest == dest:
            if isinstance(action, (argparse._StoreTrueAction,)):
                return text.lower() in {"1", "true", "yes", "on"}
            return action.type(text) if action.type else text
    raise ValueError(f"unknown config key {dest!r}")


def resolve(args, subparser):
    """Apply config-file values and defaults to options not given as flags."""
    cfg = read_config(args.config) if args.config else {}
    for key, text in cfg.items():
        if getattr(args, key, None) is None:
            setattr(args, key, _convert(subparser, key, text))
    if args.seed is None and os.environ.get("DPJE_SEED"):
        args.seed = int(os.environ["DPJE_SEED"])
    for key, val in DEFAULTS[args.command].items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, val)
    return args


def _emit(obj, path=None):
    text = json.dumps(obj, indent=None if path is None else 2)
    if path is None:
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _load(args):
    from .polytope import load_polytope
    return load_polytope(args.input, args.format)


def cmd_compute(args):
    from .exact_je import write_trace
    from .solver import RunConfig, run

    p = _load(args)
    cfg = RunConfig(
        xi=args.xi, delta0=args.delta0, delta1=args.delta1, private=bool(args.private),
        eps=args.eps, delta=args.delta, eps0=args.eps0, L=args.L, seed=args.seed,
        s=args.s, iters=args.iters, xi0=args.xi0, n_samples=args.n_samples,
        sigma=args.sigma, sampling=args.sampling, sketch=args.sketch,
        keep_trace=args.trace is not None, c1=args.c1, c2=args.c2,
        max_iters=args.max_iters,
    )
    res = run(p, cfg)
    if args.trace:
        write_trace(args.trace, res.trace.w)
    cert = res.certificate
    if args.out:
        _emit(res.to_json(), args.out)
        _emit({"max_h": cert.max_h, "sum_v": cert.sum_v, "target": cert.target,
               "ok": cert.ok})
    else:
        _emit(res.to_json())
    print(f"max_h={cert.max_h:.6f} sum_v={cert.sum_v:.12g} target={cert.target:.4f} "
          f"{'OK' if cert.ok else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if cert.ok else EXIT_FAIL


def cmd_exact(args):
    import numpy as np

    from .exact_je import check_optimality, default_iterations, exact_iterate, write_trace
    from .numerics import leverage

    p = _load(args)
    T = args.iters if args.iters is not None else default_iterations(p.n, p.d, args.xi)
    res = exact_iterate(p, T, keep_trace=args.trace is not None)
    v = p.d * res.u / np.sum(res.u)
    cert = check_optimality(p, res.w_last, args.tol)
    if args.trace:
        write_trace(args.trace, res.trace)
    _emit({"schema": "dpje/1", "T": T, "v": v.tolist(), "w_last": res.w_last.tolist(),
           "max_h_v": float(np.max(leverage(p, v))), "optimality": cert.as_dict()}, args.out)
    print(f"active_residual={cert.active_residual:.3e} "
          f"inactive_excess={cert.inactive_excess:.3e} "
          f"{'OPTIMAL' if cert.optimal else 'NOT OPTIMAL'}", file=sys.stderr)
    return EXIT_OK if cert.optimal else EXIT_FAIL


def cmd_calibrate(args):
    from pathlib import Path

    from .accountant import PrivacySpec, calibrate_sigma

    spec = PrivacySpec(args.eps, args.delta, args.eps0, args.L, args.iters,
                       c1=args.c1, c2=args.c2)
    try:
        rep = calibrate_sigma(spec)
    except Exception as exc:
        from .errors import BudgetError, InfeasibleError
        if isinstance(exc, (BudgetError, InfeasibleError)):
            print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_FAIL
        raise
    if args.table:
        Path(args.table).write_text(rep.table.to_csv(), encoding="utf-8")
    _emit(rep.as_dict())
    return EXIT_OK


def cmd_audit(args):
    if args.moments:
        from .accountant import audit_moments
        rep = audit_moments()
        rep["schema"] = "dpje/1"
        _emit(rep)
        print(f"moment bound audit: {rep['points']} points, "
              f"{len(rep['violations'])} violations", file=sys.stderr)
        return EXIT_FAIL if rep["violations"] else EXIT_OK
    if args.input is None or args.eps0 is None:
        raise ValueError("Lipschitz audit needs --input and --eps0 (or use --moments)")
    from .lipschitz import audit_lipschitz

    p = _load(args)
    rep = audit_lipschitz(p, args.eps0, args.trials, args.seed)
    _emit(rep.as_dict())
    print(f"Lipschitz audit: L={rep.L:.4g} max_ratio={rep.max_ratio:.4g} "
          f"violations={len(rep.violations)}", file=sys.stderr)
    return EXIT_FAIL if rep.violations else EXIT_OK


def cmd_bench(args):
    import csv

    from .bench import growth_ratios, kernel_comparison, per_iteration_spread, scaling_in_n, scaling_in_T

    seed = args.seed or 0
    rows = scaling_in_n(args.n_list, args.d, args.iters, args.xi, args.repeats, seed)
    if args.t_list:
        rows += scaling_in_T(args.t_list, args.n_list[0], args.d, args.xi, args.repeats, seed)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["n", "d", "T", "nnz", "seconds"])
    for r in rows:
        out.writerow([r["n"], r["d"], r["T"], r["nnz"], f"{r['seconds']:.6f}"])
    n_rows = rows[:len(args.n_list)]
    ratios = growth_ratios(n_rows)
    ok = all(g <= 1.5 for g in ratios)
    print("time growth / nnz growth per step: "
          + ", ".join(f"{g:.3f}" for g in ratios) + (" OK" if ok else " FAIL"), file=sys.stderr)
    if args.t_list:
        spread = per_iteration_spread(rows[len(args.n_list):])
        ok = ok and spread <= 0.2
        print(f"per-iteration time spread over T: {spread:.3f}", file=sys.stderr)
    if args.kernels:
        for rec in kernel_comparison():
            print(json.dumps(rec), file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def _cap_threads(n):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMBA_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(name)s: %(message)s")
    try:
        resolve(args, sub)
        if args.threads:
            # only effective before numpy is first imported
            _cap_threads(args.threads)
        return args.func(args)
    except Exception as exc:  # every failure maps to exit code 1
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
