"""Certificate checks for every per-iteration inequality and rate bound.

Each check walks a recorded trace, evaluates the left- and right-hand side
of one proved inequality at every index (or every prefix), and reports the
worst slack lhs - rhs. A check passes when the worst slack stays below its
tolerance: 1e-9 absolute for per-step inequalities and rate bounds, 1e-12
for monotonicity deltas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .functions import AffineIndicator, Quadratic

TOL_STEP = 1e-9
TOL_RATE = 1e-9
TOL_MONO = 1e-12

_PROBE_SEED = 12345


@dataclass
class CertificateEntry:
    theorem: str
    passed: bool
    worst_slack: float
    worst_index: int
    tolerance: float
    constants: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "theorem": self.theorem,
            "pass": bool(self.passed),
            "worst_slack": float(self.worst_slack),
            "worst_index": int(self.worst_index),
            "tolerance": float(self.tolerance),
            "constants": {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                          for k, v in sorted(self.constants.items())},
        }


@dataclass
class CertificateReport:
    entries: list = field(default_factory=list)

    @property
    def all_pass(self):
        return all(e.passed for e in self.entries)

    def extend(self, entries):
        self.entries.extend(entries)

    def failing(self):
        return [e.theorem for e in self.entries if not e.passed]

    def to_json_bytes(self):
        payload = {
            "all_pass": self.all_pass,
            "certificates": [e.as_dict() for e in self.entries],
        }
        return (json.dumps(payload, sort_keys=True) + "\n").encode()

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_json_bytes())


def _entry(name, slacks, tolerance, constants=None):
    slacks = np.asarray(slacks, dtype=float)
    if slacks.size == 0:
        return CertificateEntry(name, True, float("-inf"), -1, tolerance, constants or {})
    worst = int(np.argmax(slacks))
    return CertificateEntry(
        name, bool(slacks[worst] <= tolerance), float(slacks[worst]), worst,
        tolerance, constants or {},
    )


def _energy(y, lam, ref_y, ref_lam, G, s):
    dy = G @ (y - ref_y)
    dl = lam - ref_lam
    return float(dy @ dy) / (2.0 * s) + s * float(dl @ dl) / 2.0


def discrete_lyapunov(state, ref, spec, s):
    """E(k) = (1/2s)||G(y_k - y)||^2 + (s/2)||lam_k - lam||^2 for a reference (y, lam)."""
    if s <= 0:
        raise ParameterError("s must be positive")
    ref_y, ref_lam = ref
    return _energy(state.y, state.lam, np.asarray(ref_y, dtype=float),
                   np.asarray(ref_lam, dtype=float), spec.G, s)


def numerical_error(state_k, state_k1, spec, s):
    """Implicit-scheme error NE(k) = (1/2s)||G dy||^2 + (s/2)||dlam||^2 between steps k, k+1."""
    if state_k1.k != state_k.k + 1:
        raise ParameterError("numerical_error needs consecutive states")
    return _energy(state_k1.y, state_k1.lam, state_k.y, state_k.lam, spec.G, s)


def extended_lyapunov(state, saddle, spec, s, r):
    """Lyapunov function of the r-proximal variant; adds (r||x-x*||^2 - ||F(x-x*)||^2)/(2s)."""
    if not r > spec.FtF_norm:
        raise ParameterError("extended Lyapunov requires r above the spectral norm of F^T F")
    dx = state.x - saddle.x_star
    Fdx = spec.F @ dx
    extra = (r * float(dx @ dx) - float(Fdx @ Fdx)) / (2.0 * s)
    return extra + _energy(state.y, state.lam, saddle.y_star, saddle.lambda_star, spec.G, s)


def _trace_arrays(trace):
    return trace.xs(), trace.ys(), trace.lams()


def _ne_series(trace, spec, s):
    ys, ls = trace.ys(), trace.lams()
    dy = (ys[1:] - ys[:-1]) @ spec.G.T
    dl = ls[1:] - ls[:-1]
    return np.sum(dy * dy, axis=1) / (2.0 * s) + s * np.sum(dl * dl, axis=1) / 2.0


def _u_series(trace, spec, s):
    """||G(y_{k+1}-y_k)||^2 + s^2 ||lam_{k+1}-lam_k||^2, i.e. 2s * NE(k)."""
    return 2.0 * s * _ne_series(trace, spec, s)


def _rate_constant(trace, saddle, spec, s):
    y0, l0 = trace.states[0].y, trace.states[0].lam
    gy = spec.G @ (y0 - saddle.y_star)
    dl = l0 - saddle.lambda_star
    return float(gy @ gy) + s * s * float(dl @ dl)


def canonical_probes(saddle, spec):
    """The two probe points used by the theorem derivations: (x*, y*, 0) and (x*, y*, lam*)."""
    zero = np.zeros(spec.m)
    return [
        (saddle.x_star, saddle.y_star, zero),
        (saddle.x_star, saddle.y_star, saddle.lambda_star),
    ]


def check_lemma_iterative_inequality(trace, spec, s, saddle, probes=None):
    """Per-step Lyapunov difference inequality for arbitrary probe points."""
    xs, ys, ls = _trace_arrays(trace)
    ne = _ne_series(trace, spec, s)
    all_probes = canonical_probes(saddle, spec) + list(probes or [])
    slacks = np.full(len(trace) - 1, -np.inf)
    for px, py, plam in all_probes:
        px, py, plam = (np.asarray(v, dtype=float) for v in (px, py, plam))
        fp, gp = spec.f.value(px), spec.g.value(py)
        if not np.isfinite(fp) or not np.isfinite(gp):
            continue  # infinite probe value makes the inequality vacuous
        disp = spec.F @ (px - saddle.x_star) + spec.G @ (py - saddle.y_star)
        for k in range(len(trace) - 1):
            lhs = _energy(ys[k + 1], ls[k + 1], py, plam, spec.G, s) \
                - _energy(ys[k], ls[k], py, plam, spec.G, s)
            mult = ls[k + 1] - spec.G @ (ys[k + 1] - ys[k]) / s
            rhs = (fp - spec.f.value(xs[k + 1]) + gp - spec.g.value(ys[k + 1])
                   + float(mult @ disp)
                   - float(plam @ (spec.F @ (xs[k + 1] - saddle.x_star)
                                   + spec.G @ (ys[k + 1] - saddle.y_star)))
                   - ne[k])
            slacks[k] = max(slacks[k], lhs - rhs)
    return _entry("lemma_iterative_inequality", slacks, TOL_STEP,
                  {"probes": len(all_probes), "s": s})


def check_convergence1(trace, saddle, spec, s):
    """E(k+1) - E(k) + NE(k) <= 0 with the saddle as reference (energy decay)."""
    ys, ls = trace.ys(), trace.lams()
    ne = _ne_series(trace, spec, s)
    e = np.array([_energy(ys[k], ls[k], saddle.y_star, saddle.lambda_star, spec.G, s)
                  for k in range(len(trace))])
    slacks = np.diff(e) + ne
    return _entry("energy_decay_with_ne", slacks, TOL_STEP, {"E0": e[0], "s": s})


def check_lyapunov_monotone(trace, saddle, spec, s):
    ys, ls = trace.ys(), trace.lams()
    e = np.array([_energy(ys[k], ls[k], saddle.y_star, saddle.lambda_star, spec.G, s)
                  for k in range(len(trace))])
    return _entry("lyapunov_monotone", np.diff(e), TOL_STEP, {"E0": e[0], "s": s})


def check_rate_theorem_4_3(trace, saddle, spec, s):
    """Average and min of ||G dy||^2 + s^2 ||dlam||^2 over each prefix, against C/(N+1)."""
    u = _u_series(trace, spec, s)
    C = _rate_constant(trace, saddle, spec, s)
    n = np.arange(1, u.size + 1)
    bound = C / n
    avg = np.cumsum(u) / n
    mn = np.minimum.accumulate(u)
    slacks = np.maximum(avg - bound, mn - bound)
    return _entry("theorem_4_3_rate", slacks, TOL_RATE, {"C": C, "s": s})


def _prefix_means(arr):
    """Means of arr[1..N+1] for each prefix N = 0..len-2 (the derivation indexing)."""
    n = np.arange(1, arr.shape[0]).reshape(-1, 1)
    return np.cumsum(arr[1:], axis=0) / n


def default_weak_probes(saddle, spec):
    rng = np.random.default_rng(_PROBE_SEED)
    if isinstance(spec.f, AffineIndicator):
        # zeros/random x would leave the indicator set; probe at x* instead
        x_zero, x_rand = saddle.x_star, saddle.x_star
    else:
        x_zero = np.zeros(spec.d1)
        x_rand = rng.standard_normal(spec.d1)
    return [
        (saddle.x_star, saddle.y_star),
        (x_zero, np.zeros(spec.d2)),
        (x_rand, rng.standard_normal(spec.d2)),
    ]


def check_weak_rate_theorem_4_2(trace, saddle, spec, s, probes=None):
    """Duality-gap-like quantity at averaged iterates, bounded by C_probe/(2s(N+1)).

    Averages run over iterates 1..N+1, matching the telescoped derivation;
    the averaged-difference multiplier term telescopes to
    G(y_{N+1} - y_0)/(s(N+1)).
    """
    xs, ys, ls = _trace_arrays(trace)
    xbar, ybar, lbar = _prefix_means(xs), _prefix_means(ys), _prefix_means(ls)
    n = np.arange(1, len(trace))
    y0, l0 = ys[0], ls[0]
    all_probes = list(probes) if probes is not None else default_weak_probes(saddle, spec)
    slacks = np.full(len(trace) - 1, -np.inf)
    consts = {"s": s}
    for i, (px, py) in enumerate(all_probes):
        px, py = np.asarray(px, dtype=float), np.asarray(py, dtype=float)
        fp, gp = spec.f.value(px), spec.g.value(py)
        if not np.isfinite(fp) or not np.isfinite(gp):
            continue
        gy0 = spec.G @ (y0 - py)
        C = float(gy0 @ gy0) + s * s * float(l0 @ l0)
        consts[f"C_probe{i}"] = C
        disp = spec.F @ (px - saddle.x_star) + spec.G @ (py - saddle.y_star)
        for k in range(len(trace) - 1):
            mult = lbar[k] - spec.G @ (ys[k + 1] - y0) / (s * n[k])
            # summing the per-step inequality puts the multiplier term on the
            # bound side, so it enters the gap with a minus sign
            lhs = (spec.f.value(xbar[k]) - fp + spec.g.value(ybar[k]) - gp
                   - float(mult @ disp))
            rhs = C / (2.0 * s * n[k])
            slacks[k] = max(slacks[k], lhs - rhs)
    return _entry("theorem_4_2_weak_rate", slacks, TOL_RATE, consts)


def strong_convexity_modulus(spec):
    if not isinstance(spec.f, Quadratic):
        raise ParameterError("strong convexity certificate unavailable: f is not quadratic")
    mu = spec.f.strong_convexity_modulus()
    if mu <= 1e-10:
        raise ParameterError("strong convexity certificate unavailable: A^T A is singular")
    return mu


def check_strong_avg_theorem_4_4(trace, saddle, spec, s, mu=None):
    """Printed strong-average bound ||xbar_{N+1} - x*||^2 <= C/(mu s (N+1)).

    The literal reading averages x_0..x_{N+1}; the shifted reading (what the
    telescoped derivation yields) averages x_1..x_{N+1}. Both slacks are
    recorded; pass/fail follows the literal printed bound.
    """
    mu = mu if mu is not None else strong_convexity_modulus(spec)
    xs = trace.xs()
    x0, l0 = trace.states[0].x, trace.states[0].lam
    dx0 = x0 - saddle.x_star
    dl0 = l0 - saddle.lambda_star
    C = float(dx0 @ dx0) + s * s * float(dl0 @ dl0)
    n = np.arange(1, xs.shape[0])
    bound = C / (mu * s * n)

    lit = np.cumsum(xs, axis=0)[1:] / (n + 1).reshape(-1, 1)  # mean of x_0..x_{N+1}
    shift = _prefix_means(xs)                                 # mean of x_1..x_{N+1}
    lit_sq = np.sum((lit - saddle.x_star) ** 2, axis=1)
    shift_sq = np.sum((shift - saddle.x_star) ** 2, axis=1)
    slacks = lit_sq - bound
    return _entry("theorem_4_4_strong_avg", slacks, TOL_RATE,
                  {"C": C, "mu": mu, "s": s,
                   "worst_slack_shifted": float(np.max(shift_sq - bound))})


def check_ne_telescoping(trace, saddle, spec, s):
    """Telescoped numerical error: sum_{k<=N} NE(k) <= E(0) for every prefix."""
    ne = _ne_series(trace, spec, s)
    e0 = _energy(trace.states[0].y, trace.states[0].lam,
                 saddle.y_star, saddle.lambda_star, spec.G, s)
    slacks = np.cumsum(ne) - e0
    return _entry("ne_telescoping", slacks, TOL_STEP, {"E0": e0, "s": s})


def check_ne_monotone_theorem_5(trace, spec, s, saddle):
    """NE monotonicity, the last-iterate rate bound, and the supporting triple inequality."""
    if len(trace) < 3:
        raise ParameterError("NE monotonicity needs a trace of length >= 3")
    xs, ys, ls = _trace_arrays(trace)
    ne = _ne_series(trace, spec, s)
    mono = _entry("theorem_5_1_ne_monotone", np.diff(ne), TOL_MONO, {"s": s})

    u = _u_series(trace, spec, s)
    C = _rate_constant(trace, saddle, spec, s)
    n = np.arange(1, u.size + 1)
    last = _entry("theorem_5_1_last_iterate", u - C / n, TOL_RATE, {"C": C, "s": s})

    # triple inequality: <G ddy, F dx_{k+2}> >= s^2 <dlam_{k+1}, dlam_{k+1} - dlam_k>
    gdy = (ys[1:] - ys[:-1]) @ spec.G.T
    fdx = (xs[1:] - xs[:-1]) @ spec.F.T
    dl = ls[1:] - ls[:-1]
    lhs = np.sum((gdy[1:] - gdy[:-1]) * fdx[1:], axis=1)
    rhs = s * s * np.sum(dl[1:] * (dl[1:] - dl[:-1]), axis=1)
    triple = _entry("supporting_triple_inequality", rhs - lhs, TOL_STEP, {"s": s})
    return [mono, last, triple]


def check_general_rates_theorems_6(trace, saddle, spec, s, r):
    """x-difference rate bounds and extended Lyapunov/NE monotonicity (r-proximal runs)."""
    if trace.config.variant != "general":
        raise ParameterError("general-rate certificates require an r-proximal trace")
    if not r > spec.FtF_norm:
        raise ParameterError("r must exceed the spectral norm of F^T F")
    xs, ys, ls = _trace_arrays(trace)
    dx0 = xs[0] - saddle.x_star
    C = (r * float(dx0 @ dx0) + _rate_constant(trace, saddle, spec, s))
    denom = r - spec.FtF_norm
    dxsq = np.sum(np.diff(xs, axis=0) ** 2, axis=1)
    n = np.arange(1, dxsq.size + 1)
    bound = C / (n * denom)
    avgmin = np.maximum(np.cumsum(dxsq) / n - bound, np.minimum.accumulate(dxsq) - bound)
    e61 = _entry("theorem_6_1_x_diff_rate", avgmin, TOL_RATE,
                 {"C": C, "r": r, "s": s, "FtF_norm": spec.FtF_norm})
    e62 = _entry("theorem_6_2_x_diff_last", dxsq - bound, TOL_RATE,
                 {"C": C, "r": r, "s": s, "FtF_norm": spec.FtF_norm})

    fdx = np.diff(xs, axis=0) @ spec.F.T
    ext_ne = (r * dxsq - np.sum(fdx * fdx, axis=1)) / (2.0 * s) + _ne_series(trace, spec, s)
    mono_ne = _entry("theorem_6_extended_ne_monotone", np.diff(ext_ne), TOL_MONO,
                     {"r": r, "s": s})

    e = np.array([extended_lyapunov(st, saddle, spec, s, r) for st in trace.states])
    mono_e = _entry("theorem_6_extended_lyapunov_monotone", np.diff(e), TOL_STEP,
                    {"E0": e[0], "r": r, "s": s})
    return [e61, e62, mono_ne, mono_e]


def step_inclusion_residuals(trace, spec, s, r=None):
    """Subgradient-membership residuals of the defining optimality inclusions per step."""
    xs, ys, ls = _trace_arrays(trace)
    res_x, res_y = [], []
    for k in range(len(trace) - 1):
        target = spec.FtG @ (ys[k + 1] - ys[k]) / s - spec.F.T @ ls[k + 1]
        if r is not None:
            dx = xs[k + 1] - xs[k]
            target = target - (r * dx - spec.FtF @ dx) / s
        res_x.append(spec.f.subgrad_distance(target, xs[k + 1]))
        res_y.append(spec.g.subgrad_distance(-(spec.G.T @ ls[k + 1]), ys[k + 1]))
    return np.array(res_x), np.array(res_y)


def certify_standard(trace, spec, s, saddle, weak_probes=None):
    """Full certificate bundle for a standard-ADMM trace."""
    report = CertificateReport()
    report.entries.append(check_convergence1(trace, saddle, spec, s))
    report.entries.append(check_lyapunov_monotone(trace, saddle, spec, s))
    report.entries.append(check_lemma_iterative_inequality(trace, spec, s, saddle))
    report.entries.append(check_rate_theorem_4_3(trace, saddle, spec, s))
    report.entries.append(check_weak_rate_theorem_4_2(trace, saddle, spec, s, weak_probes))
    report.entries.append(check_ne_telescoping(trace, saddle, spec, s))
    report.extend(check_ne_monotone_theorem_5(trace, spec, s, saddle))
    if isinstance(spec.f, Quadratic) and spec.f.strong_convexity_modulus() > 1e-10:
        report.entries.append(check_strong_avg_theorem_4_4(trace, saddle, spec, s))
    return report


def certify_general(trace, spec, s, r, saddle):
    """Certificate bundle for an r-proximal trace."""
    report = CertificateReport()
    report.extend(check_general_rates_theorems_6(trace, saddle, spec, s, r))
    return report
