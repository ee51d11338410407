"""Command-line entry point.

Subcommands: generate (write an instance file), solve (run the iteration and
certify it), simulate (discrete / low-resolution / high-resolution runs side
by side), verify (full acceptance suite), report (summarize a certificate
file). All outputs are a pure function of the instance file and the manifest;
wall-clock timestamps go only into a sidecar metadata file.

Manifests are flat key=value files with [section] headers (configparser
syntax); command-line flags override manifest values.
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import json
import os
import sys

import numpy as np

from . import acceptance, library
from .diagnostics import certify_general, certify_standard
from .errors import AdmmError
from .ode import ContinuousState, IntegratorConfig, simulate_high_res, simulate_low_res
from .oracle import saddle_point_oracle
from .problems import build_basis_pursuit, build_generalized_lasso, load_instance, save_instance
from .solver import GENERAL, SolverConfig, run, zero_state

EXIT_PASS = 0
EXIT_CERT_FAIL = 1
EXIT_USAGE = 2


def _difference_matrix(d, order):
    """Rows like (1, -1, 0, ...) for order 1 and (1, -2, 1, 0, ...) for order 2."""
    D = np.eye(d)
    for _ in range(order):
        D = -np.diff(D, axis=0)
    return D


def _write_sidecar(outdir, note):
    path = os.path.join(outdir, "metadata.txt")
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(path, "w") as fh:
        fh.write(f"created: {stamp}\n{note}\n")


def _load_manifest(path):
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(f"manifest {path!r} not found")
    return cp


def _manifest_get(cp, section, key, fallback=None):
    if cp is None:
        return fallback
    return cp.get(section, key, fallback=fallback)


def _resolve(args, cp, section, key, cast, fallback):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    raw = _manifest_get(cp, section, key, None)
    if raw is None:
        return fallback
    return cast(raw)


def _load_spec(args, cp):
    spec_path = args.spec or _manifest_get(cp, "instance", "spec")
    if spec_path is None:
        raise FileNotFoundError("no instance given: pass --spec or set [instance] spec")
    if spec_path in library.INSTANCES:
        return spec_path, library.get_instance(spec_path)
    return spec_path, load_instance(spec_path)


def _outdir(args, cp):
    out = args.out or _manifest_get(cp, "output", "dir") or "out"
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args):
    rng = np.random.default_rng(args.seed)
    dims = [int(v) for v in args.dims.split(",")]
    kind = args.kind
    if any(d < 1 for d in dims):
        raise ValueError("dimensions must be positive")
    if kind == "lasso":
        if len(dims) != 2:
            raise ValueError("lasso needs dims m,d")
        m, d = dims
        A = rng.standard_normal((m, d))
        b = rng.standard_normal(m)
        spec = build_generalized_lasso(A, b, np.eye(d), 0.5)
    elif kind in ("tv", "trend"):
        if len(dims) != 1:
            raise ValueError(f"{kind} needs a single dimension d")
        d = dims[0]
        order = 1 if kind == "tv" else 2
        if d < order + 1:
            raise ValueError(f"{kind} filtering needs d >= {order + 1}")
        A = np.eye(d)
        b = rng.standard_normal(d)
        spec = build_generalized_lasso(A, b, _difference_matrix(d, order), 0.5)
    elif kind == "basis_pursuit":
        if len(dims) != 2:
            raise ValueError("basis_pursuit needs dims m,d")
        m, d = dims
        if m > d:
            raise ValueError("basis_pursuit needs m <= d")
        A = rng.standard_normal((m, d))
        x0 = np.zeros(d)
        x0[rng.choice(d, size=max(1, m // 3), replace=False)] = rng.standard_normal(max(1, m // 3))
        spec = build_basis_pursuit(A, A @ x0)
    else:
        raise ValueError(f"unknown kind {args.kind!r}")
    out = args.out or f"{kind}_instance.txt"
    save_instance(spec, out)
    print(f"wrote {out}")
    return EXIT_PASS


def cmd_solve(args):
    cp = _load_manifest(args.manifest) if args.manifest else None
    name, spec = _load_spec(args, cp)
    out = _outdir(args, cp)
    s = float(_resolve(args, cp, "solver", "s", float, 1.0))
    N = int(_resolve(args, cp, "solver", "N", int, 1000))
    variant = _resolve(args, cp, "solver", "variant", str, "standard")
    r = _resolve(args, cp, "solver", "r", float, None)
    tol = float(_resolve(args, cp, "diagnostics", "tol", float, 1e-8))
    if r is not None:
        r = float(r)

    saddle = saddle_point_oracle(spec, tol)
    config = SolverConfig(s=s, N=N, variant=variant, r=r)
    trace = run(spec, config, saddle=saddle)
    trace.to_csv(os.path.join(out, "trace.csv"))
    trace.to_json(os.path.join(out, "trace.json"))
    if variant == GENERAL:
        report = certify_general(trace, spec, s,
                                 r if r is not None else 1.5 * spec.FtF_norm, saddle)
    else:
        report = certify_standard(trace, spec, s, saddle)
    report.save(os.path.join(out, "certificates.json"))
    _write_sidecar(out, f"solve {name} variant={variant} s={s!r} N={N}")
    for entry in report.entries:
        print(f"{entry.theorem}: {'pass' if entry.passed else 'FAIL'} "
              f"(worst slack {entry.worst_slack!r})")
    if not report.all_pass:
        print("failing: " + ", ".join(report.failing()), file=sys.stderr)
        return EXIT_CERT_FAIL
    return EXIT_PASS


def cmd_simulate(args):
    cp = _load_manifest(args.manifest) if args.manifest else None
    name, spec = _load_spec(args, cp)
    out = _outdir(args, cp)
    s = float(_resolve(args, cp, "solver", "s", float, 1.0))
    delta = float(_resolve(args, cp, "simulate", "delta", float, s / 100.0))
    T = float(_resolve(args, cp, "simulate", "horizon", float, 20.0 * s))
    tol = float(_resolve(args, cp, "diagnostics", "tol", float, 1e-8))

    if delta < s and not spec.g.smooth:
        spec = spec.smoothed(library.HUBER_DELTA)
    saddle = saddle_point_oracle(spec, tol)
    ref = (saddle.y_star, saddle.lambda_star)

    config = IntegratorConfig(s=s, delta=delta, T=T)
    init = ContinuousState(np.zeros(spec.d1), np.zeros(spec.d2), np.zeros(spec.m), 0.0)
    high = simulate_high_res(spec, config, init, ref=ref)
    high.to_csv(os.path.join(out, "high_res.csv"))

    solver_cfg = SolverConfig(s=s, N=max(1, int(round(T / s))))
    trace = run(spec, solver_cfg, saddle=saddle)
    trace.to_csv(os.path.join(out, "discrete.csv"))

    rows = [["t", "deviation_high_res", "deviation_low_res", "deviation_discrete",
             "lyapunov_high_res", "lyapunov_discrete"]]
    low = None
    if spec.f.smooth and spec.g.smooth and spec.d2 == spec.m:
        low = simulate_low_res(spec, T, delta, np.zeros(spec.d1), ref=ref, s=s)
        low.to_csv(os.path.join(out, "low_res.csv"))
    dev_h, lyap_h = high.deviations(), high.lyapunov_values()
    dev_l = low.deviations() if low is not None else None
    per = max(1, int(round(s / delta)))
    for k in range(len(trace)):
        j = k * per
        if j >= len(high):
            break
        st = trace.states[k]
        dev_d = float(np.linalg.norm(spec.constraint_residual(st.x, st.y)))
        rows.append([high.times[j], dev_h[j],
                     dev_l[j] if dev_l is not None else float("nan"),
                     dev_d, lyap_h[j], trace.diagnostics["lyapunov"][k]])
    with open(os.path.join(out, "comparison.csv"), "w") as fh:
        fh.write("\n".join(
            ",".join(str(v) if isinstance(v, str) else repr(float(v)) for v in row)
            for row in rows) + "\n")
    _write_sidecar(out, f"simulate {name} s={s!r} delta={delta!r} T={T!r}")
    print(f"wrote {out}/high_res.csv, {out}/discrete.csv, {out}/comparison.csv")
    return EXIT_PASS


def cmd_verify(args):
    out = args.out or "verify_out"
    os.makedirs(out, exist_ok=True)
    results = acceptance.run_all()
    path = os.path.join(out, "verify_report.json")
    with open(path, "wb") as fh:
        fh.write(acceptance.report_bytes(results))
    _write_sidecar(out, "verify")
    ok = True
    for crit in results["criteria"]:
        status = "pass" if crit["pass"] else "FAIL"
        print(f"criterion {crit['id']}: {status} — {crit['title']}")
        ok = ok and crit["pass"]
    print(f"report: {path}")
    return EXIT_PASS if ok else EXIT_CERT_FAIL


def cmd_report(args):
    path = args.spec
    if path is None:
        raise FileNotFoundError("report needs --spec pointing at a certificate JSON")
    with open(path) as fh:
        payload = json.load(fh)
    entries = payload["certificates"] if isinstance(payload, dict) and "certificates" in payload \
        else payload
    ok = True
    for e in entries:
        status = "pass" if e["pass"] else "FAIL"
        print(f"{e['theorem']}: {status} worst_slack={e['worst_slack']!r} "
              f"tol={e['tolerance']!r}")
        ok = ok and e["pass"]
    return EXIT_PASS if ok else EXIT_CERT_FAIL


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="admmcert",
                                description="solve, simulate and certify the two-block iteration")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--spec", help="instance file path or built-in instance name")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--manifest", help="key=value manifest file")
        sp.add_argument("--s", type=float, dest="s", help="step/penalty parameter")
        sp.add_argument("--N", type=int, dest="N", help="iteration count")
        sp.add_argument("--variant", choices=["standard", "general"])
        sp.add_argument("--r", type=float, help="proximal weight for the general variant")
        sp.add_argument("--delta", type=float, help="integrator micro-step")
        sp.add_argument("--horizon", type=float, help="integration horizon T")
        sp.add_argument("--seed", type=int, default=0, help="generator seed")
        sp.add_argument("--tol", type=float, help="saddle/certificate tolerance")

    for name, fn in (("generate", cmd_generate), ("solve", cmd_solve),
                     ("simulate", cmd_simulate), ("verify", cmd_verify),
                     ("report", cmd_report)):
        sp = sub.add_parser(name)
        common(sp)
        if name == "generate":
            sp.add_argument("kind", choices=["lasso", "tv", "trend", "basis_pursuit"])
            sp.add_argument("--dims", required=True, help="comma-separated dimensions")
        sp.set_defaults(func=fn)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AdmmError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
