"""Event-driven hybrid simulation of the switched position/force loop.

One fixed-step RK4 core drives every variant.  Within a step the active
mode is frozen (each mode's vector field is smoothly extended across the
switching surface); a sign change of the switching coordinate at the end of
a step triggers bisection on the step fraction until the crossing is
bracketed to ``event_tol``.  Integration then resumes in the new mode up to
the next grid point, so the output grid stays uniform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ZenoGuard
from .model import closed_loop_matrices, reduced_env

FREE, CONTACT = 1, 2


@dataclass(frozen=True)
class SimConfig:
    step: float = 1e-6
    event_tol: float = 1e-10
    min_event_sep: float | None = None
    horizon: float = 0.4
    t0: float = 0.0

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError("step must be > 0")
        if not 0 < self.event_tol < self.step:
            raise DomainError("event_tol must satisfy 0 < event_tol < step")
        if self.min_event_sep is None:
            object.__setattr__(self, "min_event_sep", 10 * self.event_tol)
        if self.min_event_sep < self.event_tol:
            raise DomainError("min_event_sep must be >= event_tol")
        if not self.horizon > 0:
            raise DomainError("horizon must be > 0")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.step))


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    direction: str
    state: tuple


@dataclass(frozen=True)
class SimResult:
    """Uniform-grid samples plus the located switch events.

    ``state`` columns are named by ``labels``.  Reference columns
    (``x_d``, ``xd_dot``, ``F_d``) and forces are NaN-free zeros where they
    do not apply (error-coordinate runs have no physical forces).
    """

    kind: str
    t: np.ndarray
    state: np.ndarray
    labels: tuple
    mode: np.ndarray
    x_d: np.ndarray
    xd_dot: np.ndarray
    F_d: np.ndarray
    F_e: np.ndarray
    F_c: np.ndarray
    events: tuple
    crossing_radii: tuple = ()
    meta: dict = field(default_factory=dict)

    def column(self, name):
        return self.state[:, self.labels.index(name)]

    @property
    def z(self):
        """Tracking error ``(x_d - x, x_d' - x')``, or the state itself for error runs."""
        if self.labels[:2] == ("z1", "z2"):
            return self.state[:, :2]
        return np.column_stack([self.x_d - self.column("x"), self.xd_dot - self.column("xdot")])

    def event_times(self, direction=None):
        return [e.time for e in self.events if direction is None or e.direction == direction]


# ---------------------------------------------------------------- physics

def contact_force(x, xdot, env):
    """Kelvin-Voigt wall at the origin; no force for ``x <= 0``."""
    if x <= 0:
        return 0.0
    return env.k_e * x + env.b_e * xdot


def controller_force(t, x, xdot, F_e, traj, gains):
    x_d, v_d, a_d, F_d = traj.evaluate(t)
    if x <= 0:
        return gains.M_a * a_d + gains.k_d * (v_d - xdot) + gains.k_p * (x_d - x)
    return F_d + gains.k_f * (F_d - F_e) - gains.b_f * xdot


# ---------------------------------------------------------------- core

def _rk4(f, t, y, h, r0, rm, r1):
    k1 = f(t, y, r0)
    y2 = tuple(a + 0.5 * h * b for a, b in zip(y, k1))
    k2 = f(t + 0.5 * h, y2, rm)
    y3 = tuple(a + 0.5 * h * b for a, b in zip(y, k2))
    k3 = f(t + 0.5 * h, y3, rm)
    y4 = tuple(a + h * b for a, b in zip(y, k3))
    k4 = f(t + h, y4, r1)
    return tuple(a + h / 6 * (b + 2 * c + 2 * d + e)
                 for a, b, c, d, e in zip(y, k1, k2, k3, k4))


class _Problem:
    """Hooks consumed by :func:`_run`.

    ``step(t, y, h, mode, j)`` advances one step; ``j`` is the index of the
    step on the uniform grid when the step is a full aligned one, else None.
    ``switch(t, y, j2)`` returns the switching coordinate; mode 2 iff > 0.
    ``j2`` is a half-grid index or None.
    """

    labels = ()
    made = "contact_made"
    broken = "contact_broken"

    def step(self, t, y, h, mode, j):
        raise NotImplementedError

    def switch(self, t, y, j2):
        raise NotImplementedError

    def sample(self, t, y, mode, j2):
        """Return ``(x_d, xd_dot, F_d, F_e, F_c)`` for the output row."""
        return 0.0, 0.0, 0.0, 0.0, 0.0


def _mode_of(s):
    return CONTACT if s > 0 else FREE


def _run(prob, y0, cfg, kind, crossing=None):
    h = cfg.step
    n = cfg.n_steps
    t0 = cfg.t0
    y = tuple(float(v) for v in y0)
    mode = _mode_of(prob.switch(t0, y, 0))

    ts = [t0]
    ys = [y]
    modes = [mode]
    extra = [prob.sample(t0, y, mode, 0)]
    events = []
    radii = []
    last_event = -math.inf

    def finish():
        return _result(kind, prob, ts, ys, modes, extra, events, radii)

    for k in range(n):
        t = t0 + k * h
        t_next = t0 + (k + 1) * h
        t_cur, y_cur, aligned = t, y, True
        while True:
            span = t_next - t_cur
            y_new = prob.step(t_cur, y_cur, span, mode, k if aligned else None)
            s_new = prob.switch(t_next, y_new, 2 * (k + 1))
            if _mode_of(s_new) == mode:
                break
            lo, hi = 0.0, span
            y_hi = y_new
            while hi - lo > cfg.event_tol:
                mid = 0.5 * (lo + hi)
                y_mid = prob.step(t_cur, y_cur, mid, mode, None)
                if _mode_of(prob.switch(t_cur + mid, y_mid, None)) != mode:
                    hi, y_hi = mid, y_mid
                else:
                    lo = mid
            t_ev = t_cur + hi
            new_mode = _mode_of(prob.switch(t_ev, y_hi, None))
            direction = prob.made if new_mode == CONTACT else prob.broken
            ev = SwitchEvent(t_ev, direction, tuple(y_hi))
            if t_ev - last_event < cfg.min_event_sep:
                events.append(ev)
                ts.append(t_ev)
                ys.append(y_hi)
                modes.append(new_mode)
                extra.append(prob.sample(t_ev, y_hi, new_mode, None))
                raise ZenoGuard(
                    f"switch events {t_ev - last_event:.3g} s apart at t={t_ev:.9g} s "
                    f"(minimum separation {cfg.min_event_sep:g} s)", partial=finish())
            events.append(ev)
            if crossing is not None:
                r = crossing(y_cur, y_hi)
                if r is not None:
                    radii.append((t_ev, r))
            last_event = t_ev
            mode = new_mode
            t_cur, y_cur, aligned = t_ev, y_hi, False
            if t_next - t_cur <= 0:
                y_new = y_cur
                break
        y = y_new
        ts.append(t_next)
        ys.append(y)
        modes.append(mode)
        extra.append(prob.sample(t_next, y, mode, 2 * (k + 1)))
    return finish()


def _result(kind, prob, ts, ys, modes, extra, events, radii):
    ex = np.array(extra, dtype=float).reshape(-1, 5)
    return SimResult(
        kind=kind,
        t=np.array(ts),
        state=np.array(ys, dtype=float),
        labels=tuple(prob.labels),
        mode=np.array(modes, dtype=np.int8),
        x_d=ex[:, 0], xd_dot=ex[:, 1], F_d=ex[:, 2], F_e=ex[:, 3], F_c=ex[:, 4],
        events=tuple(events),
        crossing_radii=tuple(radii),
    )


class _RefGrid:
    """Reference sampled once on the half-step grid; off-grid via evaluate."""

    def __init__(self, traj, cfg):
        self.traj = traj
        n = cfg.n_steps
        ts = cfg.t0 + cfg.step * np.arange(2 * n + 1) / 2
        ts[-1] = min(ts[-1], traj.t_end)
        cols = traj.evaluate_many(ts)
        self.rows = list(zip(*(np.asarray(c, dtype=float).tolist() for c in cols)))

    def at(self, t, j2):
        if j2 is not None:
            return self.rows[j2]
        return self.traj.evaluate(min(t, self.traj.t_end))


# ---------------------------------------------------------------- physical loops

class _Rigid(_Problem):
    labels = ("x", "xdot")

    def __init__(self, plant, env, gains, ref):
        self.M, self.b = plant.M, plant.b
        self.ke, self.be = env.k_e, env.b_e
        self.g = gains
        self.ref = ref

    def forces(self, y, mode, r):
        x, v = y[0], y[1]
        x_d, v_d, a_d, F_d = r
        g = self.g
        if mode == FREE:
            return 0.0, g.M_a * a_d + g.k_d * (v_d - v) + g.k_p * (x_d - x)
        Fe = self.ke * x + self.be * v
        return Fe, F_d + g.k_f * (F_d - Fe) - g.b_f * v

    def rhs_factory(self, mode):
        M, b = self.M, self.b

        def f(t, y, r):
            Fe, Fc = self.forces(y, mode, r)
            return (y[1], (Fc - b * y[1] - Fe) / M)
        return f

    def step(self, t, y, h, mode, j):
        f = self.rhs_factory(mode)
        ref = self.ref
        if j is not None:
            r0, rm, r1 = ref.rows[2 * j], ref.rows[2 * j + 1], ref.rows[2 * j + 2]
        else:
            r0, rm, r1 = ref.at(t, None), ref.at(t + h / 2, None), ref.at(t + h, None)
        return _rk4(f, t, y, h, r0, rm, r1)

    def switch(self, t, y, j2):
        return y[0]

    def sample(self, t, y, mode, j2):
        r = self.ref.at(t, j2)
        Fe, Fc = self.forces(y, mode, r)
        return r[0], r[1], r[3], Fe, Fc


class _Compliant(_Rigid):
    labels = ("x", "xdot", "x_t", "xdot_t")

    def __init__(self, plant, wrist, env, gains, ref):
        super().__init__(plant, env, gains, ref)
        self.Mt, self.kt, self.bt = wrist.M_t, wrist.k_t, wrist.b_t

    def forces(self, y, mode, r):
        x, v, xt, vt = y
        x_d, v_d, a_d, F_d = r
        g = self.g
        if mode == FREE:
            return 0.0, g.M_a * a_d + g.k_d * (v_d - v) + g.k_p * (x_d - x)
        Fe = self.ke * xt + self.be * vt
        return Fe, F_d + g.k_f * (F_d - Fe) - g.b_f * v

    def rhs_factory(self, mode):
        M, b, Mt, kt, bt = self.M, self.b, self.Mt, self.kt, self.bt

        def f(t, y, r):
            x, v, xt, vt = y
            Fe, Fc = self.forces(y, mode, r)
            Ft = kt * (x - xt) + bt * (v - vt)
            return (v, (Fc - b * v - Ft) / M, vt, (Ft - Fe) / Mt)
        return f

    def switch(self, t, y, j2):
        return y[2]


def _check_ic(ic, n, name):
    if len(ic) != n:
        raise DomainError(f"{name} needs {n} initial values, got {len(ic)}")
    if not all(math.isfinite(float(v)) for v in ic):
        raise DomainError(f"{name} initial values must be finite")


def simulate_rigid(plant, env, gains, traj, ic, cfg=None):
    """Rigid manipulator against the wall; switches on ``x = 0``."""
    cfg = cfg or SimConfig()
    _check_ic(ic, 2, "rigid model")
    prob = _Rigid(plant, env, gains, _RefGrid(traj, cfg))
    return _run(prob, ic, cfg, "rigid")


def simulate_compliant(plant, wrist, env, gains, traj, ic4, cfg=None):
    """Arm + compliant wrist + tip mass; switches on tip penetration ``x_t = 0``.

    The controller still feeds back the arm position and velocity and the
    measured contact force.
    """
    cfg = cfg or SimConfig()
    _check_ic(ic4, 4, "compliant model")
    prob = _Compliant(plant, wrist, env, gains, _RefGrid(traj, cfg))
    return _run(prob, ic4, cfg, "compliant")


def simulate_reduced(plant, wrist, env, gains, traj, ic, cfg=None):
    """Second-order model against the wall perceived through the wrist."""
    cfg = cfg or SimConfig()
    _check_ic(ic, 2, "reduced model")
    prob = _Rigid(plant, reduced_env(wrist, env), gains, _RefGrid(traj, cfg))
    return _run(prob, ic, cfg, "reduced")


# ---------------------------------------------------------------- error systems

def _rk4_matrix(A, h):
    hA = h * A
    M = np.eye(2)
    term = np.eye(2)
    for k in range(1, 5):
        term = term @ hA / k
        M = M + term
    return M


class _Error(_Problem):
    labels = ("z1", "z2")
    made = "enter_S2"
    broken = "enter_S1"

    def __init__(self, pair, w, ref):
        self.K = {1: pair.K1, 2: pair.K2}
        self.B = {1: pair.B1, 2: pair.B2}
        self.w = w
        self.ref = ref

    def step(self, t, y, h, mode, j):
        K, B, w = self.K[mode], self.B[mode], self.w[mode - 1]

        def f(tt, z, _):
            return (z[1], -K * z[0] - B * z[1] + float(w(tt)))
        return _rk4(f, t, y, h, None, None, None)

    def switch(self, t, y, j2):
        return self.ref.at(t, j2)[0] - y[0]

    def sample(self, t, y, mode, j2):
        r = self.ref.at(t, j2)
        return r[0], r[1], r[3], 0.0, 0.0


def simulate_error(pair, w, traj, z0, cfg=None):
    """Perturbed switched error system; mode 2 while ``x_d(t) - z1 > 0``.

    ``w`` is a pair of callables ``(w1, w2)`` of time.
    """
    cfg = cfg or SimConfig(step=1e-4, event_tol=1e-12, horizon=1.0)
    _check_ic(z0, 2, "error system")
    if len(w) != 2 or not all(callable(f) for f in w):
        raise DomainError("w must be a pair of callables (w1, w2)")
    return _run(_Error(pair, tuple(w), _RefGrid(traj, cfg)), z0, cfg, "error")


class _WorstCase(_Problem):
    labels = ("z1", "z2")
    made = "enter_S2"
    broken = "enter_S1"

    def __init__(self, pair, h):
        self.pair = pair
        self.dK, self.dB = pair.dK, pair.dB
        self.A = {m: pair.matrix(m) for m in (1, 2)}
        self.T = {m: _rk4_matrix(self.A[m], h).tolist() for m in (1, 2)}

    def step(self, t, y, h, mode, j):
        T = self.T[mode] if j is not None else _rk4_matrix(self.A[mode], h).tolist()
        z1, z2 = y
        return (T[0][0] * z1 + T[0][1] * z2, T[1][0] * z1 + T[1][1] * z2)

    def switch(self, t, y, j2):
        return y[1] * (self.dK * y[0] + self.dB * y[1])


def simulate_worst_case(pair, z0, cfg=None):
    """State-switched worst-case system.

    ``crossing_radii`` lists ``(time, |z|)`` at every downward crossing of
    the positive ``z1`` half-axis.
    """
    cfg = cfg or SimConfig(step=1e-5, event_tol=1e-13, horizon=1.0)
    _check_ic(z0, 2, "worst-case system")

    def crossing(y_before, y_after):
        if y_after[0] > 0 and y_before[1] > 0 >= y_after[1]:
            return math.hypot(*y_after)
        return None

    return _run(_WorstCase(pair, cfg.step), z0, cfg, "worst_case", crossing=crossing)


def rigid_pair(plant, env, gains):
    """Convenience: error-system pair of a rigid setup."""
    return closed_loop_matrices(plant, env, gains)
