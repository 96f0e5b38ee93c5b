"""Fed-batch yeast fermentation: an 11-D design input, 20-D output model.

State: biomass concentration y1 and substrate concentration y2 [g/l] over
t in [0, 20] h, driven by piecewise-constant dilution u1 [1/h] and feed
substrate concentration u2 [g/l] (five 4-hour pieces each):

    dy1/dt = (r - u1 - theta4) * y1,      r = theta1 * y2 / (theta2 + y2)
    dy2/dt = -r * u1 / theta3 + u1 * (u2 - y2)        ("as-printed")
    dy2/dt = -r * y1 / theta3 + u1 * (u2 - y2)        ("classical")

The substrate consumption term is configurable because the printed source
divides the Monod rate by theta3 against the dilution rather than the biomass
as the classical fed-batch form does; the default keeps the printed form.
Integration is classical fixed-step RK4 with h = 0.025 h (chosen so halving
the step moves no output by more than 1e-6 relative), steps aligned with the
control discontinuities; outputs are y1 then y2 sampled at t = 2, 4, ...,
20 h. The unknown parameters are theta1..theta4.
"""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidInputError, NonFiniteModelError
from .models import Box, ModelHandle

T_END_H = 20.0
PIECE_H = 4.0
SAMPLE_EVERY_H = 2.0
DEFAULT_STEP_H = 0.025
DEFAULT_Y2_0 = 0.1
SUBSTRATE_FORMS = ("as-printed", "classical")


def control_at(u_steps, t: float) -> float:
    """Step-function control value at time t: piece j covers [4j, 4(j+1))."""
    u = np.asarray(u_steps, dtype=float).ravel()
    if u.shape[0] != 5:
        raise InvalidInputError(f"expected 5 control steps, got {u.shape[0]}")
    if not 0.0 <= t <= T_END_H:
        raise InvalidInputError(f"t={t} outside [0, {T_END_H}] h")
    j = 4 if t == T_END_H else int(t // PIECE_H)
    return float(u[j])


def rk4_step(f, t, y, h):
    """One classical Runge-Kutta step for dy/dt = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_step(h: float) -> tuple[int, int, int]:
    """Steps per sample interval / control piece / total; h must tile both."""
    per_sample = round(SAMPLE_EVERY_H / h)
    per_piece = round(PIECE_H / h)
    total = round(T_END_H / h)
    if not (np.isclose(per_sample * h, SAMPLE_EVERY_H)
            and np.isclose(per_piece * h, PIECE_H)
            and np.isclose(total * h, T_END_H)):
        raise InvalidInputError(
            f"step {h} must divide the 2 h sampling and 4 h control intervals"
        )
    return per_sample, per_piece, total


def simulate_batch(xs, thetas, *, y2_0: float = DEFAULT_Y2_0,
                   substrate_form: str = "as-printed",
                   step: float = DEFAULT_STEP_H) -> np.ndarray:
    """Vectorized simulation: (m, 11) inputs x (m, 4) thetas -> (m, 20) outputs."""
    if substrate_form not in SUBSTRATE_FORMS:
        raise InvalidInputError(
            f"substrate_form must be one of {SUBSTRATE_FORMS}, got {substrate_form!r}"
        )
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if xs.shape[1] != 11:
        raise InvalidInputError(f"design points must have 11 coordinates, got {xs.shape[1]}")
    if thetas.shape[1] != 4:
        raise InvalidInputError(f"expected 4 model parameters, got {thetas.shape[1]}")
    if thetas.shape[0] == 1 and xs.shape[0] > 1:
        thetas = np.broadcast_to(thetas, (xs.shape[0], 4))
    if xs.shape[0] != thetas.shape[0]:
        raise InvalidInputError("xs and thetas batch sizes differ")
    per_sample, per_piece, total = _check_step(step)

    u1_steps = xs[:, 1:6]
    u2_steps = xs[:, 6:11]
    th1, th2, th3, th4 = thetas.T
    y1 = xs[:, 0].copy()
    y2 = np.full_like(y1, y2_0)
    as_printed = substrate_form == "as-printed"
    out = np.empty((xs.shape[0], 20))

    def rhs(state, u1, u2):
        b, s = state
        r = th1 * s / (th2 + s)
        db = (r - u1 - th4) * b
        consumption = r * (u1 if as_printed else b) / th3
        ds = -consumption + u1 * (u2 - s)
        return np.array([db, ds])

    state = np.array([y1, y2])
    h = step
    # Overflow/zero-division in the RHS is legal input behavior (e.g. a Monod
    # denominator crossing zero); the finiteness check below turns it into a
    # typed error, so silence the intermediate numpy warnings.
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for k in range(total):
            piece = min(k // per_piece, 4)
            u1 = u1_steps[:, piece]
            u2 = u2_steps[:, piece]
            k1 = rhs(state, u1, u2)
            k2 = rhs(state + 0.5 * h * k1, u1, u2)
            k3 = rhs(state + 0.5 * h * k2, u1, u2)
            k4 = rhs(state + h * k3, u1, u2)
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(state)):
                raise NonFiniteModelError(
                    f"yeast state became non-finite at t={(k + 1) * h:.1f} h"
                )
            if (k + 1) % per_sample == 0:
                col = (k + 1) // per_sample - 1
                out[:, col] = state[0]
                out[:, 10 + col] = state[1]
    return out


def yeast_simulate(x, theta, *, y2_0: float = DEFAULT_Y2_0,
                   substrate_form: str = "as-printed",
                   step: float = DEFAULT_STEP_H) -> np.ndarray:
    """Single-point simulation returning the 20-vector (y1 @ 2..20 h, y2 @ 2..20 h)."""
    return simulate_batch(np.asarray(x, float).reshape(1, -1),
                          np.asarray(theta, float).reshape(1, -1),
                          y2_0=y2_0, substrate_form=substrate_form, step=step)[0]


YEAST_LOWER = [1.0] + [0.05] * 5 + [5.0] * 5
YEAST_UPPER = [10.0] + [0.2] * 5 + [35.0] * 5


class YeastModel(ModelHandle):
    """Yeast DoE model; Jacobians via one vectorized FD batch per call."""

    def __init__(self, theta_nominal=(0.5, 0.5, 0.5, 0.5),
                 y2_0: float = DEFAULT_Y2_0, substrate_form: str = "as-printed",
                 step: float = DEFAULT_STEP_H):
        if substrate_form not in SUBSTRATE_FORMS:
            raise InvalidInputError(
                f"substrate_form must be one of {SUBSTRATE_FORMS}, got {substrate_form!r}"
            )
        names = (["y1_0"] + [f"u1{j}" for j in range(5)]
                 + [f"u2{j}" for j in range(5)])
        outputs = [f"y1_t{2 * j + 2}" for j in range(10)] + \
                  [f"y2_t{2 * j + 2}" for j in range(10)]
        super().__init__(Box(YEAST_LOWER, YEAST_UPPER), theta_nominal,
                         coord_names=names, output_names=outputs)
        self.y2_0 = y2_0
        self.substrate_form = substrate_form
        self.step = step

    def _eval_impl(self, x, theta):
        return yeast_simulate(x, theta, y2_0=self.y2_0,
                              substrate_form=self.substrate_form, step=self.step)

    def jacobian(self, x) -> np.ndarray:
        return self.jacobian_batch([x])[0]

    def jacobian_batch(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        n = xs.shape[0]
        d = self.d_theta
        h = 1e-6 * np.maximum(1.0, np.abs(self.theta_nominal))
        thetas = np.vstack([self.theta_nominal + np.diag(h),
                            self.theta_nominal - np.diag(h)])  # (2d, 4)
        xs_rep = np.repeat(xs, 2 * d, axis=0)
        th_rep = np.tile(thetas, (n, 1))
        out = simulate_batch(xs_rep, th_rep, y2_0=self.y2_0,
                             substrate_form=self.substrate_form, step=self.step)
        out = out.reshape(n, 2 * d, 20)
        jac = (out[:, :d, :] - out[:, d:, :]) / (2.0 * h)[None, :, None]
        self._bump(evals=2 * d * n, jacobians=n)
        return jac
