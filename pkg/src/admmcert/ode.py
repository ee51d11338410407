"""High- and low-resolution continuous models of the iteration.

The high-resolution system

    F^T G dY/dt = F^T Lam + grad f(X)
    0           = G^T Lam + grad g(Y)
    s^2 dLam/dt = F X + G Y - h

is integrated by implicit Euler only: with step delta = s each implicit
step coincides with one discrete ADMM step, and for delta < s (with the
regularizer Huber-smoothed) the coupled piecewise-linear step equations
are solved exactly by an active-pattern Newton iteration. The
low-resolution flow eliminates Y through the constraint and therefore
never leaves the hyperplane F x + G y = h; the deviation columns of the
two trajectories make the dual-correction effect measurable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import CertificateReport, _energy, _entry
from .errors import InnerSolveError, ParameterError, UnsupportedProblemError
from .functions import AffineIndicator, HuberSmoothedL1, Quadratic
from .prox import FactorizationCache, x_update, y_update

ALGEBRAIC_TOL = 1e-11

CONT_SCALAR_COLUMNS = ["deviation", "lyapunov", "ne_continuous"]


@dataclass
class ContinuousState:
    X: np.ndarray
    Y: np.ndarray
    Lam: np.ndarray
    t: float

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.Y = np.asarray(self.Y, dtype=float)
        self.Lam = np.asarray(self.Lam, dtype=float)


@dataclass
class IntegratorConfig:
    s: float
    delta: float
    T: float
    inner_tol: float = 1e-12
    inner_max: int = 500

    def __post_init__(self):
        if self.s <= 0 or self.delta <= 0 or self.T <= 0:
            raise ParameterError("s, delta and T must be positive")
        if self.delta > self.s:
            raise ParameterError("micro-step delta must not exceed s")
        if self.inner_tol > 1e-10:
            raise ParameterError("inner tolerance must be at most 1e-10")


class ContinuousTrace:
    def __init__(self, spec, times, Xs, Ys, Ls, s, ref=None):
        self.spec = spec
        self.s = float(s)
        self.times = np.asarray(times, dtype=float)
        self.Xs = np.asarray(Xs, dtype=float)
        self.Ys = np.asarray(Ys, dtype=float)
        self.Ls = np.asarray(Ls, dtype=float)
        self.ref = ref

    def __len__(self):
        return self.times.size

    def state(self, j):
        return ContinuousState(self.Xs[j], self.Ys[j], self.Ls[j], self.times[j])

    def deviations(self):
        r = self.Xs @ self.spec.F.T + self.Ys @ self.spec.G.T - self.spec.h
        return np.linalg.norm(r, axis=1)

    def lyapunov_values(self):
        if self.ref is None:
            return np.full(len(self), np.nan)
        ry, rl = self.ref
        return np.array([
            _energy(self.Ys[j], self.Ls[j], ry, rl, self.spec.G, self.s)
            for j in range(len(self))
        ])

    def gydot(self):
        """G * dY/dt estimated by central differences (one-sided at the ends)."""
        d = np.gradient(self.Ys, self.times, axis=0)
        return d @ self.spec.G.T

    def columns(self):
        cols = ["t"]
        cols += [f"X{i}" for i in range(self.spec.d1)]
        cols += [f"Y{i}" for i in range(self.spec.d2)]
        cols += [f"Lambda{i}" for i in range(self.spec.m)]
        cols += CONT_SCALAR_COLUMNS
        return cols

    def to_csv(self, path):
        cols = self.columns()
        dev = self.deviations()
        lyap = self.lyapunov_values()
        lines = [",".join(cols)]
        for j in range(len(self)):
            if 0 < j < len(self) - 1:
                ne = continuous_ne_lyapunov(self, j, self.spec, self.s)
            else:
                ne = float("nan")
            row = [self.times[j], *self.Xs[j], *self.Ys[j], *self.Ls[j],
                   dev[j], lyap[j], ne]
            lines.append(",".join(repr(float(v)) for v in row))
        text = "\n".join(lines) + "\n"
        if text.split("\n", 1)[0].split(",") != cols:
            raise RuntimeError("continuous trace CSV schema mismatch")
        with open(path, "w") as fh:
            fh.write(text)


def hyperplane_deviation(state, spec):
    """||F X + G Y - h||: how far the pair (X, Y) sits off the constraint hyperplane."""
    return float(np.linalg.norm(spec.F @ state.X + spec.G @ state.Y - spec.h))


def continuous_lyapunov(state, ref, spec, s):
    """Same energy as the discrete Lyapunov function, evaluated on a continuous state."""
    ry, rl = ref
    return _energy(state.Y, state.Lam, np.asarray(ry, float), np.asarray(rl, float), spec.G, s)


def continuous_ne_lyapunov(trace, index, spec, s):
    """(s/2)||G Ydot||^2 + (s^3/2)||Lamdot||^2 at an interior node.

    Lamdot comes from the dual ODE (exact, no differencing); Ydot from a
    central difference. Reported only: its continuous monotonicity is not
    certified.
    """
    if index <= 0 or index >= len(trace) - 1:
        raise ParameterError("continuous NE needs an interior node")
    dt = trace.times[index + 1] - trace.times[index - 1]
    ydot = (trace.Ys[index + 1] - trace.Ys[index - 1]) / dt
    gyd = spec.G @ ydot
    lamdot = (spec.F @ trace.Xs[index] + spec.G @ trace.Ys[index] - spec.h) / (s * s)
    return s * float(gyd @ gyd) / 2.0 + s ** 3 * float(lamdot @ lamdot) / 2.0


# ---------------------------------------------------------------------------
# implicit Euler for the high-resolution system


def _grad_f(spec, x):
    return spec.f.grad(x)


def _implicit_residual(spec, s, delta, Y_old, L_old, X1, Y1, L1):
    vx = spec.FtG @ (Y1 - Y_old) / delta - spec.F.T @ L1
    if isinstance(spec.f, AffineIndicator):
        rA = spec.f.subgrad_distance(vx, X1)
        if not np.isfinite(rA):
            rA = float(np.linalg.norm(spec.f.A @ X1 - spec.f.b))
    else:
        rA = float(np.linalg.norm(vx - _grad_f(spec, X1)))
    rB = spec.g.subgrad_distance(-(spec.G.T @ L1), Y1)
    rc = s * s * (L1 - L_old) / delta - (spec.F @ X1 + spec.G @ Y1 - spec.h)
    rC = float(np.linalg.norm(rc))
    scale = 1.0 + np.linalg.norm(X1) + np.linalg.norm(Y1) + np.linalg.norm(L1)
    return max(rA, rB, rC) / scale


def _pattern(Y, g):
    out = np.zeros(Y.shape[0], dtype=int)
    out[Y > g.delta] = 1
    out[Y < -g.delta] = -1
    return out


def _pattern_newton(spec, s, delta, Y_old, L_old, X, Y, L, inner_tol, inner_max):
    """Solve the implicit-Euler step equations exactly for Huber g.

    The system is piecewise linear in (X, Y, Lam); each Newton pass fixes
    the quadratic/saturated region of every Y coordinate, solves the
    resulting linear system, and repeats until the region pattern is
    self-consistent.
    """
    g = spec.g
    if not isinstance(g, HuberSmoothedL1):
        raise UnsupportedProblemError(
            "implicit micro-steps (delta < s) need the Huber-smoothed regularizer"
        )
    f = spec.f
    indicator = isinstance(f, AffineIndicator)
    d1, d2, m = spec.d1, spec.d2, spec.m
    m1 = f.A.shape[0] if indicator else 0
    n = d1 + d2 + m + m1
    sx, sy, sl = 0, d1, d1 + d2

    base = np.zeros((n, n))
    rhs = np.zeros(n)
    if indicator:
        base[sx:sy, sy:sl] = spec.FtG
        base[sx:sy, sl:sl + m] = -delta * spec.F.T
        base[sx:sy, sl + m:] = -f.A.T
        rhs[sx:sy] = spec.FtG @ Y_old
        base[sl + m:, sx:sy] = f.A
        rhs[sl + m:] = f.b
    else:
        base[sx:sy, sx:sy] = -2.0 * delta * f.gram
        base[sx:sy, sy:sl] = spec.FtG
        base[sx:sy, sl:sl + m] = -delta * spec.F.T
        rhs[sx:sy] = spec.FtG @ Y_old - 2.0 * delta * f.gram_rhs
    base[sl:sl + m, sx:sy] = -delta * spec.F
    base[sl:sl + m, sy:sl] = -delta * spec.G
    base[sl:sl + m, sl:sl + m] = s * s * np.eye(m)
    rhs[sl:sl + m] = s * s * L_old - delta * spec.h

    pattern = _pattern(Y, g)
    seen = set()
    for _ in range(inner_max):
        M = base.copy()
        v = rhs.copy()
        for i in range(d2):
            row = sy + i
            M[row, sl:sl + m] = spec.G.T[i, :]
            if pattern[i] == 0:
                M[row, sy + i] += g.w / g.delta
                v[row] = 0.0
            else:
                v[row] = -g.w * pattern[i]
        try:
            z = np.linalg.solve(M, v)
        except np.linalg.LinAlgError:
            z, *_ = np.linalg.lstsq(M, v, rcond=None)
        X, Y, L = z[sx:sy], z[sy:sl], z[sl:sl + m]
        new_pattern = _pattern(Y, g)
        if np.array_equal(new_pattern, pattern):
            res = _implicit_residual(spec, s, delta, Y_old, L_old, X, Y, L)
            if res <= inner_tol:
                return X, Y, L
            raise InnerSolveError(
                f"implicit step solved its pattern system but residual {res:.3e} "
                f"exceeds {inner_tol!r}"
            )
        key = tuple(new_pattern)
        if key in seen:
            raise InnerSolveError("implicit step pattern iteration is cycling")
        seen.add(key)
        pattern = new_pattern
    raise InnerSolveError(f"implicit step did not settle within {inner_max} passes")


def high_res_implicit_step(state, spec, s, delta, cache=None, inner_tol=1e-12, inner_max=500):
    """One implicit-Euler step of the high-resolution system.

    With delta = s the first ADMM-shaped sweep already satisfies the step
    equations, so the output is exactly one ADMM step from (Y, Lam).
    """
    if delta <= 0 or delta > s:
        raise ParameterError("need 0 < delta <= s")
    if delta != s and not spec.g.smooth:
        raise ParameterError("delta < s requires a smoothed (differentiable) regularizer")
    cache = cache if cache is not None else FactorizationCache()

    s_eff = s if delta == s else s * s / delta
    X1 = x_update(spec, state.Y, state.Lam, s_eff, cache)
    Y1 = y_update(spec, X1, state.Lam, s_eff)
    resid = spec.F @ X1 + spec.G @ Y1 - spec.h
    if delta == s:
        L1 = state.Lam + resid / s
    else:
        L1 = state.Lam + (delta / (s * s)) * resid

    if _implicit_residual(spec, s, delta, state.Y, state.Lam, X1, Y1, L1) <= inner_tol:
        return ContinuousState(X1, Y1, L1, state.t + delta)

    X1, Y1, L1 = _pattern_newton(spec, s, delta, state.Y, state.Lam,
                                 X1, Y1, L1, inner_tol, inner_max)
    return ContinuousState(X1, Y1, L1, state.t + delta)


def simulate_high_res(spec, config, init, ref=None, cache=None):
    """Integrate the high-resolution system over [0, T] from init."""
    cache = cache if cache is not None else FactorizationCache()
    steps = int(round(config.T / config.delta))
    state = ContinuousState(init.X, init.Y, init.Lam, 0.0)
    times = [0.0]
    Xs, Ys, Ls = [state.X], [state.Y], [state.Lam]
    for _ in range(steps):
        state = high_res_implicit_step(state, spec, config.s, config.delta, cache,
                                       config.inner_tol, config.inner_max)
        times.append(state.t)
        Xs.append(state.X)
        Ys.append(state.Y)
        Ls.append(state.Lam)
    trace = ContinuousTrace(spec, times, Xs, Ys, Ls, config.s, ref=ref)
    # the algebraic leg G^T Lam + grad g(Y) = 0 must hold at every node
    if spec.g.smooth:
        for j in range(1, len(trace)):
            alg = np.linalg.norm(spec.G.T @ trace.Ls[j] + spec.g.grad(trace.Ys[j]))
            if alg > ALGEBRAIC_TOL * (1.0 + np.linalg.norm(trace.Ls[j])):
                raise InnerSolveError(f"algebraic constraint violated at node {j}: {alg:.3e}")
    return trace


def simulate_low_res(spec, T, delta, init_x, ref=None, s=1.0):
    """Classical RK4 for the continuous-limit flow, confined to the hyperplane.

    Y is eliminated through the constraint (G must be square and
    invertible), so the deviation is zero by construction at every node.
    """
    if spec.d2 != spec.m:
        raise ParameterError("low-resolution flow needs a square, invertible G")
    if not (spec.f.smooth and spec.g.smooth):
        raise ParameterError("low-resolution flow needs differentiable f and g")
    Ginv_cond = np.linalg.cond(spec.G)
    if not np.isfinite(Ginv_cond) or Ginv_cond > 1e12:
        raise ParameterError("G is numerically singular")
    FtF_cond = np.linalg.cond(spec.FtF)
    if not np.isfinite(FtF_cond) or FtF_cond > 1e12:
        raise ParameterError("F^T F is numerically singular")

    def y_of(x):
        return np.linalg.solve(spec.G, spec.h - spec.F @ x)

    def field(x):
        rhs = -spec.f.grad(x) - spec.F.T @ spec.g.grad(y_of(x))
        return np.linalg.solve(spec.FtF, rhs)

    steps = int(round(T / delta))
    x = np.asarray(init_x, dtype=float)
    times, Xs = [0.0], [x]
    for j in range(steps):
        k1 = field(x)
        k2 = field(x + 0.5 * delta * k1)
        k3 = field(x + 0.5 * delta * k2)
        k4 = field(x + delta * k3)
        x = x + (delta / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        times.append((j + 1) * delta)
        Xs.append(x)
    Xs = np.array(Xs)
    Ys = np.array([y_of(xj) for xj in Xs])
    # the algebraic leg defines a multiplier surrogate along the flow
    Ls = np.array([-np.linalg.solve(spec.G.T, spec.g.grad(yj)) for yj in Ys])
    return ContinuousTrace(spec, times, Xs, Ys, Ls, s, ref=ref)


# ---------------------------------------------------------------------------
# continuous certificates (tolerance 10*delta: node values carry O(delta) error)


def _trapezoid_prefix_mean(values, times, j):
    if j == 0:
        raise ParameterError("prefix mean needs t > 0")
    dt = np.diff(times[:j + 1])
    v = np.asarray(values[:j + 1])
    integral = np.sum(0.5 * dt.reshape(-1, 1) * (v[1:] + v[:-1]), axis=0)
    return integral / (times[j] - times[0])


def _sample_indices(trace, fracs=(0.25, 0.5, 1.0)):
    last = len(trace) - 1
    return sorted({max(1, int(round(f * last))) for f in fracs})


def check_theorem_3_3_monotone(trace, saddle, spec, s, delta):
    """Continuous Lyapunov (saddle reference) nonincreasing along the trajectory."""
    e = np.array([_energy(trace.Ys[j], trace.Ls[j], saddle.y_star, saddle.lambda_star,
                          spec.G, s) for j in range(len(trace))])
    return _entry("theorem_3_3_lyapunov_monotone", np.diff(e), 10.0 * delta,
                  {"E0": e[0], "s": s, "delta": delta})


def check_theorem_3_2_weak(trace, saddle, spec, s, delta, probes=None):
    """Time-average weak gap at sampled times against C/(2t)."""
    if probes is None:
        probes = [(saddle.x_star, saddle.y_star), (np.zeros(spec.d1), np.zeros(spec.d2))]
    mult_nodes = trace.Ls - trace.gydot()
    idxs = _sample_indices(trace)
    slacks = []
    for px, py in probes:
        px, py = np.asarray(px, float), np.asarray(py, float)
        fp, gp = spec.f.value(px), spec.g.value(py)
        if not np.isfinite(fp) or not np.isfinite(gp):
            continue
        gy0 = spec.G @ (trace.Ys[0] - py)
        C = float(gy0 @ gy0) + s * s * float(trace.Ls[0] @ trace.Ls[0])
        disp = spec.F @ (px - saddle.x_star) + spec.G @ (py - saddle.y_star)
        for j in idxs:
            xbar = _trapezoid_prefix_mean(trace.Xs, trace.times, j)
            ybar = _trapezoid_prefix_mean(trace.Ys, trace.times, j)
            mbar = _trapezoid_prefix_mean(mult_nodes, trace.times, j)
            # as in the discrete weak-rate check, integrating the derivative
            # inequality puts the multiplier term on the bound side
            lhs = spec.f.value(xbar) - fp + spec.g.value(ybar) - gp - float(mbar @ disp)
            slacks.append(lhs - C / (2.0 * trace.times[j]))
    return _entry("theorem_3_2_weak_rate", slacks, 10.0 * delta, {"s": s, "delta": delta})


def check_continuous_strong_avg(trace, saddle, spec, s, delta, mu=None):
    """Strong time-average bound ||Xbar - x*||^2 <= C/(mu t) at sampled times."""
    if mu is None:
        if not isinstance(spec.f, Quadratic):
            raise ParameterError("strong continuous certificate needs a quadratic f")
        mu = spec.f.strong_convexity_modulus()
    if mu <= 1e-10:
        raise ParameterError("strong convexity modulus is zero")
    dx0 = trace.Xs[0] - saddle.x_star
    dl0 = trace.Ls[0] - saddle.lambda_star
    C = float(dx0 @ dx0) + s * s * float(dl0 @ dl0)
    slacks = []
    for j in _sample_indices(trace):
        xbar = _trapezoid_prefix_mean(trace.Xs, trace.times, j)
        d = xbar - saddle.x_star
        slacks.append(float(d @ d) - C / (mu * trace.times[j]))
    return _entry("theorem_3_4_strong_avg", slacks, 10.0 * delta,
                  {"C": C, "mu": mu, "s": s, "delta": delta})


def certify_continuous(trace, saddle, spec, s, delta, strong=True):
    report = CertificateReport()
    report.entries.append(check_theorem_3_3_monotone(trace, saddle, spec, s, delta))
    report.entries.append(check_theorem_3_2_weak(trace, saddle, spec, s, delta))
    if strong and isinstance(spec.f, Quadratic) and spec.f.strong_convexity_modulus() > 1e-10:
        report.entries.append(check_continuous_strong_avg(trace, saddle, spec, s, delta))
    return report
