"""Equations of motion, fixed-step RK4 integration, and drift measurement."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import sympy as sp

from .conservation import EPSILON, FirstIntegral, NumericOnly, accelerations
from .lagrangian import PerturbedLagrangian


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 2n): x then xdot
    epsilon: float
    step: float
    method: str = "rk4"

    @property
    def dimension(self) -> int:
        return self.states.shape[1] // 2


@dataclass(frozen=True)
class DriftRecord:
    name: str
    epsilon: float
    max_abs_drift: float
    final_drift: float
    t_span: tuple[float, float]


def euler_lagrange(L: PerturbedLagrangian) -> list[sp.Expr]:
    """Acceleration expressions in (t, x, xdot, epsilon)."""
    return accelerations(L)


def _rhs_function(L: PerturbedLagrangian, epsilon: float):
    ctx = L.ctx
    n = ctx.dimension
    try:
        accel = euler_lagrange(L)
    except NumericOnly as exc:
        raise IntegrationError(
            f"mass matrix not symbolically invertible: {exc}"
        ) from exc
    accel = [a.subs(EPSILON, sp.Rational(str(epsilon))) for a in accel]
    args = (ctx.t, *ctx.xs, *ctx.vs)
    fns = [sp.lambdify(args, a, modules=["math"]) for a in accel]

    def rhs(t, state):
        out = [0.0] * (2 * n)
        out[:n] = state[n:]
        for i, fn in enumerate(fns):
            out[n + i] = fn(t, *state)
        return out

    return rhs


def integrate(
    L: PerturbedLagrangian,
    initial: Sequence[float],
    t_end: float,
    dt: float,
    epsilon: float = 0.0,
    t_start: float = 0.0,
) -> Trajectory:
    """Classical fixed-step RK4 from t_start to t_end.

    Deterministic bit-for-bit given identical inputs; aborts on a non-finite
    state.  Negative dt is allowed for reverse integration (t_end < t_start).
    """
    if dt == 0:
        raise IntegrationError("dt must be nonzero")
    if (t_end - t_start) * dt <= 0:
        raise IntegrationError("dt sign must match the integration direction")
    n = L.ctx.dimension
    state = [float(v) for v in initial]
    if len(state) != 2 * n:
        raise IntegrationError(f"initial state needs {2*n} entries, got {len(state)}")
    rhs = _rhs_function(L, epsilon)
    steps = max(1, int(round((t_end - t_start) / dt)))
    # keep the grid uniform AND land exactly on t_end
    dt = (t_end - t_start) / steps
    times = np.empty(steps + 1)
    states = np.empty((steps + 1, 2 * n))
    times[0] = t_start
    states[0] = state
    t = t_start
    for k in range(steps):
        try:
            k1 = rhs(t, state)
            k2 = rhs(t + dt / 2, [s + dt / 2 * d for s, d in zip(state, k1)])
            k3 = rhs(t + dt / 2, [s + dt / 2 * d for s, d in zip(state, k2)])
            k4 = rhs(t + dt, [s + dt * d for s, d in zip(state, k3)])
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise IntegrationError(f"step {k} at t={t}: {exc}; state={state}") from exc
        state = [
            s + dt / 6 * (a + 2 * b + 2 * c + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)
        ]
        if not all(math.isfinite(s) for s in state):
            raise IntegrationError(f"non-finite state at step {k+1}, t={t+dt}")
        t = t_start + (k + 1) * dt
        times[k + 1] = t
        states[k + 1] = state
    return Trajectory(times, states, float(epsilon), float(dt))


def _integral_function(L: PerturbedLagrangian, I: FirstIntegral, epsilon: float):
    ctx = L.ctx
    expr = I.folded().subs(EPSILON, sp.Rational(str(epsilon)))
    args = (ctx.t, *ctx.xs, *ctx.vs)
    return sp.lambdify(args, expr, modules=["math"])


def evaluate_integral(
    L: PerturbedLagrangian, integrals: Sequence[FirstIntegral],
    traj: Trajectory,
) -> np.ndarray:
    """Folded value of a conservation law along a trajectory."""
    fns = [_integral_function(L, I, traj.epsilon) for I in integrals]
    out = np.empty(len(traj.times))
    for k, (t, state) in enumerate(zip(traj.times, traj.states)):
        try:
            out[k] = sum(fn(t, *state) for fn in fns)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise IntegrationError(f"integral evaluation failed at t={t}: {exc}") from exc
    return out


def drift(
    L: PerturbedLagrangian,
    integrals: Sequence[FirstIntegral] | FirstIntegral,
    traj: Trajectory,
    name: Optional[str] = None,
) -> DriftRecord:
    if isinstance(integrals, FirstIntegral):
        integrals = [integrals]
    values = evaluate_integral(L, integrals, traj)
    deltas = values - values[0]
    return DriftRecord(
        name or integrals[0].source,
        traj.epsilon,
        float(np.max(np.abs(deltas))),
        float(deltas[-1]),
        (float(traj.times[0]), float(traj.times[-1])),
    )


@dataclass(frozen=True)
class ScalingResult:
    exponent: Optional[float]
    records: tuple[DriftRecord, ...]
    excluded: tuple[float, ...]
    note: str = ""


def scaling_exponent(
    L: PerturbedLagrangian,
    integrals: Sequence[FirstIntegral] | FirstIntegral,
    epsilons: Sequence[float],
    initial: Sequence[float],
    t_end: float,
    dt: float,
    t_start: float = 0.0,
    noise_floor: float = 1e-12,
) -> ScalingResult:
    """Least-squares slope of log max drift against log epsilon.

    For a valid order-gamma law the slope is about gamma + 1.  Drifts at the
    integrator noise floor are excluded; with fewer than two usable points the
    exponent is None.
    """
    if isinstance(integrals, FirstIntegral):
        integrals = [integrals]
    if len(epsilons) < 2:
        raise ValueError("need at least two epsilon values")
    records = []
    for eps in epsilons:
        traj = integrate(L, initial, t_end, dt, eps, t_start)
        records.append(drift(L, integrals, traj))
    return fit_slope(records, noise_floor)


def fit_slope(records: Sequence[DriftRecord], noise_floor: float = 1e-12) -> ScalingResult:
    """Log-log slope of max drift against epsilon from existing records."""
    kept = [(r.epsilon, r.max_abs_drift) for r in records if r.max_abs_drift > noise_floor]
    excluded = tuple(r.epsilon for r in records if r.max_abs_drift <= noise_floor)
    if len(kept) < 2:
        note = "all drifts at or below the integrator noise floor; slope indeterminate"
        return ScalingResult(None, tuple(records), excluded, note)
    xs = np.log([e for e, _ in kept])
    ys = np.log([d for _, d in kept])
    slope = float(np.polyfit(xs, ys, 1)[0])
    note = f"excluded {len(excluded)} epsilon(s) at the noise floor" if excluded else ""
    return ScalingResult(slope, tuple(records), excluded, note)


def write_csv(
    path,
    L: PerturbedLagrangian,
    traj: Trajectory,
    integrals: Optional[dict[str, Sequence[FirstIntegral]]] = None,
) -> None:
    """Trajectory (and optional integral columns) with 17 significant digits."""
    ctx = L.ctx
    n = ctx.dimension
    header = ["t"] + [f"x{i+1}" for i in range(n)] + [f"v{i+1}" for i in range(n)]
    columns = [traj.times] + [traj.states[:, j] for j in range(2 * n)]
    if integrals:
        for name in integrals:
            header.append(name)
            columns.append(evaluate_integral(L, integrals[name], traj))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
