"""Adaptive Dormand-Prince 5(4) stepper with manifold projection and event splitting.

scipy's ``solve_ivp`` cannot re-project the state after each accepted step, so
the embedded pair is written out here.  The stepper is shared by the classical
and the quantum equations of state.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import StepSizeUnderflow

C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension of order 4 (Hairer, Norsett & Wanner)
P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


@dataclass
class StepControls:
    """Tolerances and step limits for :func:`dopri5`."""

    rtol: float = 1e-10
    atol: float = 1e-12
    first_step: Optional[float] = None
    max_step: float = np.inf
    min_step: float = 1e-13
    max_steps: int = 1_000_000
    event_tol: float = 1e-10
    # proportional-integral step control (Gustafsson); 0 gives the plain controller
    pi_beta: float = 0.04
    # start the next step from the last stage, f(y_new), instead of re-evaluating at
    # the projected state; worthwhile when the projection moves y by round-off only
    reuse_last_stage: bool = False


class Step:
    """One accepted step with its dense interpolant."""

    __slots__ = ("s0", "h", "y0", "y1", "K")

    def __init__(self, s0, h, y0, y1, K):
        self.s0, self.h, self.y0, self.y1, self.K = s0, h, y0, y1, K

    def __call__(self, s):
        theta = (s - self.s0) / self.h
        powers = np.array([theta, theta**2, theta**3, theta**4])
        return self.y0 + self.h * (self.K.T @ (P @ powers))


def _rk_step(fun, s, y, f0, h):
    K = np.empty((7, y.size))
    K[0] = f0
    for i in range(1, 7):
        dy = h * (np.asarray(A[i]) @ K[:i])
        K[i] = fun(s + C[i] * h, y + dy)
    y_new = y + h * (B @ K)
    err = h * (E @ K)
    return y_new, err, K


def _error_norm(err, y, y_new, rtol, atol, blocks=None):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    ratio = (err / scale) ** 2
    if blocks is None:
        return float(np.sqrt(np.mean(ratio)))
    # worst block RMS, so a few curve components are not drowned by many field nodes
    return max(float(np.sqrt(np.mean(ratio[b]))) for b in blocks)


def _initial_step(fun, s, y, f0, direction, rtol, atol, block=slice(None)):
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y[block] / scale[block]) ** 2))
    d1 = np.sqrt(np.mean((f0[block] / scale[block]) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y + direction * h0 * f0
    f1 = fun(s + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0)[block] / scale[block]) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def _locate_root(step, event, g0, tol):
    a, b = step.s0, step.s0 + step.h
    ga = g0
    while abs(b - a) > tol:
        m = 0.5 * (a + b)
        gm = event(step(m))
        if gm == 0:
            return m
        if np.sign(gm) == np.sign(ga):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


def dopri5(
    fun: Callable,
    y0,
    s0: float,
    span: float,
    controls: StepControls = StepControls(),
    project: Optional[Callable] = None,
    event: Optional[Callable] = None,
    on_step: Optional[Callable] = None,
    blocks: Optional[list] = None,
    record: Optional[Callable] = None,
    error_norm: Optional[Callable] = None,
):
    """Integrate ``dy/ds = fun(s, y)`` over ``[s0, s0 + span]``.

    ``project(y)`` maps an accepted state back onto the constraint manifold.
    ``event(y)`` is a scalar whose sign changes are located by bisection on the
    dense interpolant; the step is split there so the crossing becomes a sample.
    ``on_step(s, y)`` sees every accepted sample and may raise to abort.

    ``blocks`` is an optional list of index slices; the error norm is then the
    worst per-block RMS.  ``error_norm(err, y, y_new, rtol, atol)`` replaces the
    norm altogether.  ``record(y)`` replaces the stored copy of each accepted
    state (useful when states are large).

    Returns ``(s, y)`` for the accepted samples (including the start point) and
    the list of event locations; ``y`` is an array unless ``record`` is given.
    """
    keep = record if record is not None else (lambda v: v.copy())
    y = np.array(y0, dtype=float)
    if project is not None:
        y = project(y)
    s = float(s0)
    s_end = s0 + span
    direction = 1.0 if span >= 0 else -1.0
    rtol, atol = controls.rtol, controls.atol
    f = fun(s, y)
    if controls.first_step is None:
        h = _initial_step(fun, s, y, f, direction, rtol, atol)
        if blocks is not None:
            h = min(_initial_step(fun, s, y, f, direction, rtol, atol, b) for b in blocks)
    else:
        h = controls.first_step
    h = min(abs(h), controls.max_step)

    ss, ys, events = [s], [keep(y)], []
    if on_step is not None:
        on_step(s, y)
    g_prev = event(y) if event is not None else None
    n_steps = 0
    beta = controls.pi_beta
    expo = 0.2 - 0.75 * beta
    err_old = 1e-4
    rejected = False
    while direction * (s_end - s) > 0:
        if n_steps >= controls.max_steps:
            raise StepSizeUnderflow(f"exceeded {controls.max_steps} steps at s={s:.6g}")
        h = min(h, abs(s_end - s), controls.max_step)
        if h < controls.min_step * max(1.0, abs(s)):
            raise StepSizeUnderflow(f"step size {h:.3g} underflow at s={s:.10g}")
        y_new, err, K = _rk_step(fun, s, y, f, direction * h)
        if not np.all(np.isfinite(y_new)):
            h *= 0.2
            continue
        if error_norm is not None:
            enorm = error_norm(err, y, y_new, rtol, atol)
        else:
            enorm = _error_norm(err, y, y_new, rtol, atol, blocks)
        if enorm > 1.0:
            h *= max(0.2, 0.9 * enorm ** -expo)
            rejected = True
            continue
        n_steps += 1
        step = Step(s, direction * h, y, y_new, K)
        s_next = s + direction * h
        if abs(s_end - s_next) < 1e-12 * max(1.0, abs(s_end)):
            s_next = s_end
        split = False
        if event is not None:
            g_new = event(y_new)
            if g_prev != 0 and g_new != 0 and np.sign(g_new) != np.sign(g_prev):
                s_root = _locate_root(step, event, g_prev, controls.event_tol)
                events.append(s_root)
                if direction * (s_root - s) > controls.event_tol:
                    # accept the step only up to the crossing and restart there
                    s_next = s_root
                    y_new = step(s_root)
                    split = True
            if g_new != 0:
                g_prev = g_new
        if project is not None:
            y_new = project(y_new)
        s, y = s_next, y_new
        f = K[6] if controls.reuse_last_stage and not split else fun(s, y)
        ss.append(s)
        ys.append(keep(y))
        if on_step is not None:
            on_step(s, y)
        factor = 10.0 if enorm == 0 else min(10.0, 0.9 * enorm ** -expo * err_old ** beta)
        if rejected:
            factor = min(factor, 1.0)
        err_old = max(enorm, 1e-4)
        rejected = False
        h *= factor
    return np.array(ss), (ys if record is not None else np.array(ys)), events
