"""ADMM driver: the three-step iteration, the r-proximal variant, and traces.

The dual step is lam_{k+1} = lam_k + (F x_{k+1} + G y_{k+1} - h)/s, so
s*(lam_{k+1} - lam_k) equals the constraint violation at every iterate;
that identity is what pushes the trajectory off the constraint hyperplane
and is recorded per step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as diag
from .errors import ParameterError
from .problems import kkt_residuals
from .prox import FactorizationCache, proximal_x_update_general, x_update, y_update

STANDARD = "standard"
GENERAL = "general"

TRACE_SCALAR_COLUMNS = ["primal_res", "dual_x_res", "dual_y_res", "objective", "lyapunov", "ne"]


@dataclass
class IterateState:
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    k: int
    residual: np.ndarray | None = None  # F x + G y - h, as used by the dual step

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)


@dataclass
class SolverConfig:
    s: float = 1.0
    N: int = 100
    variant: str = STANDARD
    r: float | None = None
    record_every: int = 1
    stop_tol: float | None = None  # optional early stop on all KKT residuals

    def __post_init__(self):
        if self.s <= 0:
            raise ParameterError("step size s must be positive")
        if self.N < 1:
            raise ParameterError("iteration count N must be at least 1")
        if self.record_every < 1:
            raise ParameterError("record_every must be positive")
        if self.variant not in (STANDARD, GENERAL):
            raise ParameterError(f"unknown variant {self.variant!r}")


@dataclass
class Trace:
    spec: object
    config: SolverConfig
    states: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    stop_reason: str = "completed"

    def __len__(self):
        return len(self.states)

    def xs(self):
        return np.array([st.x for st in self.states])

    def ys(self):
        return np.array([st.y for st in self.states])

    def lams(self):
        return np.array([st.lam for st in self.states])

    def columns(self):
        d1, d2, m = self.spec.d1, self.spec.d2, self.spec.m
        cols = ["k"]
        cols += [f"x{i}" for i in range(d1)]
        cols += [f"y{i}" for i in range(d2)]
        cols += [f"lambda{i}" for i in range(m)]
        cols += TRACE_SCALAR_COLUMNS
        return cols

    def _rows(self):
        for idx, st in enumerate(self.states):
            row = [st.k]
            row += [float(v) for v in st.x]
            row += [float(v) for v in st.y]
            row += [float(v) for v in st.lam]
            row += [float(self.diagnostics[name][idx]) for name in TRACE_SCALAR_COLUMNS]
            yield row

    def to_csv(self, path):
        cols = self.columns()
        lines = [",".join(cols)]
        for row in self._rows():
            lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
        text = "\n".join(lines) + "\n"
        header = text.split("\n", 1)[0].split(",")
        if header != cols:  # schema check on every write
            raise RuntimeError("trace CSV schema mismatch")
        with open(path, "w") as fh:
            fh.write(text)

    def to_json(self, path):
        payload = {
            "columns": self.columns(),
            "rows": [row for row in self._rows()],
            "stop_reason": self.stop_reason,
            "config": {
                "s": self.config.s,
                "N": self.config.N,
                "variant": self.config.variant,
                "r": self.config.r,
            },
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")


def admm_step(state, spec, s, cache=None):
    """One standard ADMM step: x-minimization, y-minimization, dual ascent."""
    x1 = x_update(spec, state.y, state.lam, s, cache)
    y1 = y_update(spec, x1, state.lam, s)
    res = spec.constraint_residual(x1, y1)
    lam1 = state.lam + res / s
    return IterateState(x1, y1, lam1, state.k + 1, residual=res)


def general_admm_step(state, spec, s, r, cache=None):
    """One r-proximal ADMM step (general x-update, standard y and dual steps)."""
    x1 = proximal_x_update_general(spec, state.x, state.y, state.lam, s, r, cache)
    y1 = y_update(spec, x1, state.lam, s)
    res = spec.constraint_residual(x1, y1)
    lam1 = state.lam + res / s
    return IterateState(x1, y1, lam1, state.k + 1, residual=res)


def default_r(spec):
    """Margin above the spectral norm of F^T F required by the r-proximal variant."""
    return 1.5 * spec.FtF_norm


def zero_state(spec):
    return IterateState(np.zeros(spec.d1), np.zeros(spec.d2), np.zeros(spec.m), 0)


def _record(trace, state, spec, s, saddle):
    primal, dual_x, dual_y = kkt_residuals(spec, state.x, state.y, state.lam)
    d = trace.diagnostics
    d["primal_res"].append(primal)
    d["dual_x_res"].append(dual_x)
    d["dual_y_res"].append(dual_y)
    d["objective"].append(spec.objective(state.x, state.y))
    if saddle is not None:
        d["lyapunov"].append(
            diag.discrete_lyapunov(state, (saddle.y_star, saddle.lambda_star), spec, s)
        )
    else:
        d["lyapunov"].append(float("nan"))
    d["ne"].append(float("nan"))  # filled once the next state exists
    return primal, dual_x, dual_y


def run(spec, config, init=None, saddle=None, cache=None):
    """Run N steps from init (zeros by default), recording per-step diagnostics.

    Deterministic given its inputs. When config.stop_tol is set the run stops
    early once all three KKT residuals fall below it.
    """
    state = init if init is not None else zero_state(spec)
    if state.x.shape[0] != spec.d1 or state.y.shape[0] != spec.d2 or state.lam.shape[0] != spec.m:
        raise ParameterError("initial state dimensions do not match the problem")
    cache = cache if cache is not None else FactorizationCache()
    if config.variant == GENERAL:
        r = config.r if config.r is not None else default_r(spec)
    else:
        r = None

    trace = Trace(spec=spec, config=config,
                  diagnostics={name: [] for name in TRACE_SCALAR_COLUMNS})
    trace.states.append(state)
    _record(trace, state, spec, config.s, saddle)

    for _ in range(config.N):
        prev = state
        if config.variant == GENERAL:
            state = general_admm_step(prev, spec, config.s, r, cache)
        else:
            state = admm_step(prev, spec, config.s, cache)
        trace.diagnostics["ne"][-1] = diag.numerical_error(prev, state, spec, config.s)
        trace.states.append(state)
        primal, dual_x, dual_y = _record(trace, state, spec, config.s, saddle)
        if config.stop_tol is not None and max(primal, dual_x, dual_y) <= config.stop_tol:
            trace.stop_reason = f"kkt residuals below {config.stop_tol!r} at k={state.k}"
            break
    return trace


def running_average(trace):
    """Incremental running averages (x_bar_N, y_bar_N, lam_bar_N) for N = 0..len-1."""
    if len(trace) == 0:
        raise ParameterError("cannot average an empty trace")
    xs, ys, ls = trace.xs(), trace.ys(), trace.lams()
    out = []
    for arr in (xs, ys, ls):
        avg = np.empty_like(arr)
        acc = arr[0].copy()
        avg[0] = acc
        for k in range(1, arr.shape[0]):
            acc = acc + (arr[k] - acc) / (k + 1)
            avg[k] = acc
        out.append(avg)
    return tuple(out)
