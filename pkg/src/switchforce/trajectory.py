"""Desired position/force trajectories for the switched controller.

User profiles (a free-motion position profile and a contact force profile)
are glued into one reference whose position and velocity are continuous
across every scheduled contact and detachment:

* in contact, a critically damped filter smooths the force profile and the
  desired position follows from ``k_hat * x_d + b_hat * x_d' = F_d``;
* in free motion, a critically damped filter smooths the position profile.

The filters are integrated with fixed-step RK4 and stored; evaluation in
between nodes is cubic Hermite on the stored derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NegativeForceInContact, OutOfHorizon
from .model import EnvEstimates


# ---------------------------------------------------------------- profiles

class Profile:
    """A scalar function of time with a known derivative.  Accepts arrays."""

    kind = None

    def value(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self.value(t)

    def as_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Profile):
    level: float
    kind = "constant"

    def value(self, t):
        return self.level + 0.0 * np.asarray(t, dtype=float)

    def deriv(self, t):
        return 0.0 * np.asarray(t, dtype=float)

    def as_dict(self):
        return {"kind": self.kind, "value": self.level}


@dataclass(frozen=True)
class Ramp(Profile):
    """Linear from ``v0`` at ``t0`` to ``v1`` at ``t1``, held constant outside."""

    t0: float
    t1: float
    v0: float
    v1: float
    kind = "ramp"

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise DomainError("ramp needs t1 > t0")

    def value(self, t):
        s = np.clip((np.asarray(t, dtype=float) - self.t0) / (self.t1 - self.t0), 0.0, 1.0)
        return self.v0 + (self.v1 - self.v0) * s

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.t0) & (t < self.t1)
        return np.where(inside, (self.v1 - self.v0) / (self.t1 - self.t0), 0.0)

    def as_dict(self):
        return {"kind": self.kind, "t0": self.t0, "t1": self.t1, "v0": self.v0, "v1": self.v1}


@dataclass(frozen=True)
class CubicEase(Ramp):
    """Smoothstep from ``v0`` to ``v1``: zero slope at both ends."""

    kind = "cubic_ease"

    def value(self, t):
        s = np.clip((np.asarray(t, dtype=float) - self.t0) / (self.t1 - self.t0), 0.0, 1.0)
        return self.v0 + (self.v1 - self.v0) * s * s * (3 - 2 * s)

    def deriv(self, t):
        d = self.t1 - self.t0
        s = np.clip((np.asarray(t, dtype=float) - self.t0) / d, 0.0, 1.0)
        return (self.v1 - self.v0) * 6 * s * (1 - s) / d


@dataclass(frozen=True)
class Sinusoid(Profile):
    offset: float
    amplitude: float
    freq: float  # Hz
    phase: float = 0.0
    kind = "sinusoid"

    def value(self, t):
        w = 2 * math.pi * self.freq
        return self.offset + self.amplitude * np.sin(w * np.asarray(t, dtype=float) + self.phase)

    def deriv(self, t):
        w = 2 * math.pi * self.freq
        return self.amplitude * w * np.cos(w * np.asarray(t, dtype=float) + self.phase)

    def as_dict(self):
        return {"kind": self.kind, "offset": self.offset, "amplitude": self.amplitude,
                "freq": self.freq, "phase": self.phase}


@dataclass(frozen=True)
class Series(Profile):
    """Sampled time/value columns, linearly interpolated and held at the ends."""

    times: tuple
    values: tuple
    kind = "series"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2 or len(self.values) != t.size:
            raise DomainError("series needs matching time/value columns of length >= 2")
        if np.any(np.diff(t) <= 0):
            raise DomainError("series times must be strictly increasing")
        object.__setattr__(self, "times", tuple(float(x) for x in self.times))
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))

    def value(self, t):
        return np.interp(t, self.times, self.values)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.asarray(self.times)
        slopes = np.diff(self.values) / np.diff(tt)
        idx = np.searchsorted(tt, t, side="right") - 1
        inside = (idx >= 0) & (idx < len(slopes))
        return np.where(inside, slopes[np.clip(idx, 0, len(slopes) - 1)], 0.0)

    def as_dict(self):
        return {"kind": self.kind, "t": list(self.times), "v": list(self.values)}


_PROFILE_KINDS = {"constant", "ramp", "cubic_ease", "sinusoid", "series"}


def profile_from_dict(d):
    if isinstance(d, (int, float)):
        return Constant(float(d))
    try:
        return _profile_from_dict(d)
    except KeyError as e:
        raise DomainError(f"profile of kind {d.get('kind')!r} needs key {e.args[0]!r}") from None


def _profile_from_dict(d):
    kind = d.get("kind")
    if kind == "constant":
        return Constant(float(d["value"]))
    if kind in ("ramp", "cubic_ease"):
        cls = Ramp if kind == "ramp" else CubicEase
        return cls(float(d["t0"]), float(d["t1"]), float(d["v0"]), float(d["v1"]))
    if kind == "sinusoid":
        return Sinusoid(float(d["offset"]), float(d["amplitude"]), float(d["freq"]),
                        float(d.get("phase", 0.0)))
    if kind == "series":
        return Series(tuple(d["t"]), tuple(d["v"]))
    raise DomainError(f"unknown profile kind {kind!r}; expected one of {sorted(_PROFILE_KINDS)}")


# ---------------------------------------------------------------- spec

@dataclass(frozen=True)
class ContactSchedule:
    intervals: tuple

    def __post_init__(self):
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        prev = -math.inf
        for a, b in iv:
            if not a < b:
                raise DomainError(f"contact interval ({a}, {b}) needs t_c < t_b")
            if not a > prev:
                raise DomainError("contact intervals must be increasing and non-overlapping")
            prev = b
        object.__setattr__(self, "intervals", iv)


@dataclass(frozen=True)
class TrajectorySpec:
    x_free: Profile
    F_contact: Profile
    schedule: ContactSchedule
    estimates: EnvEstimates
    t_start: float
    t_end: float
    gamma1: float | None = None
    gamma2: float | None = None
    x0: float | None = None
    v0: float | None = None
    step: float | None = None

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise DomainError("trajectory horizon needs t_end > t_start")
        for a, b in self.schedule.intervals:
            if a < self.t_start or b > self.t_end:
                raise DomainError(f"contact interval ({a}, {b}) outside the horizon")
        for g in ("gamma1", "gamma2"):
            v = getattr(self, g)
            if v is not None and not v > 0:
                raise DomainError(f"{g} must be > 0")
        if self.step is not None and not self.step > 0:
            raise DomainError("step must be > 0")

    def boundaries(self):
        pts = [self.t_start]
        for a, b in self.schedule.intervals:
            pts += [a, b]
        pts.append(self.t_end)
        return sorted(set(pts))

    def default_gamma(self):
        """10x the inverse of the shortest segment duration."""
        b = self.boundaries()
        return 10.0 / min(np.diff(b))

    @property
    def gammas(self):
        g = self.default_gamma()
        return (self.gamma1 or g, self.gamma2 or g)

    def filter_step(self, contact=True):
        g1, g2 = self.gammas
        h = min(1 / (20 * g1), 1 / (20 * g2))
        if contact:
            # the contact position filter has a pole at -k_hat/b_hat
            h = min(h, 0.1 * self.estimates.b_e / self.estimates.k_e)
        return min(h, self.step) if self.step is not None else h


# ---------------------------------------------------------------- trajectory

def _hermite(h, s, y0, y1, d0, d1):
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1)


@dataclass(frozen=True)
class Segment:
    """One stitched piece of the reference.

    ``kind`` is ``"free"`` (arrays ``y3, dy3, ddy3``) or ``"contact"``
    (arrays ``y1, dy1, ddy1, y2, dy2, ddy2``), sampled at ``t0 + k*h``.
    """

    kind: str
    t0: float
    t1: float
    h: float
    data: dict = field(repr=False)
    gamma: float
    x_free: Profile | None = None
    estimates: EnvEstimates | None = None

    @property
    def n(self):
        return len(next(iter(self.data.values()))) - 1

    def end_state(self):
        """``(x_d, x_d', x_d'', F_d)`` at the right end of the segment."""
        d = self.data
        if self.kind == "free":
            return d["y3"][-1], d["dy3"][-1], d["ddy3"][-1], 0.0
        return d["y2"][-1], d["dy2"][-1], d["ddy2"][-1], d["y1"][-1]

    def start_state(self):
        d = self.data
        if self.kind == "free":
            return d["y3"][0], d["dy3"][0], d["ddy3"][0], 0.0
        return d["y2"][0], d["dy2"][0], d["ddy2"][0], d["y1"][0]

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        u = (t - self.t0) / self.h
        k = np.clip(np.floor(u).astype(int), 0, self.n - 1)
        s = u - k
        d = self.data
        h = self.h
        if self.kind == "free":
            x = _hermite(h, s, d["y3"][k], d["y3"][k + 1], d["dy3"][k], d["dy3"][k + 1])
            v = _hermite(h, s, d["dy3"][k], d["dy3"][k + 1], d["ddy3"][k], d["ddy3"][k + 1])
            g = self.gamma
            a = -2 * g * v - g * g * (x - self.x_free.value(t))
            return x, v, a, 0.0 * x
        F = _hermite(h, s, d["y1"][k], d["y1"][k + 1], d["dy1"][k], d["dy1"][k + 1])
        dF = _hermite(h, s, d["dy1"][k], d["dy1"][k + 1], d["ddy1"][k], d["ddy1"][k + 1])
        x = _hermite(h, s, d["y2"][k], d["y2"][k + 1], d["dy2"][k], d["dy2"][k + 1])
        v = _hermite(h, s, d["dy2"][k], d["dy2"][k + 1], d["ddy2"][k], d["ddy2"][k + 1])
        est = self.estimates
        a = (-est.k_e * v + dF) / est.b_e
        return x, v, a, F


class DesiredTrajectory:
    """Stitched reference ``(x_d, x_d', x_d'', F_d)`` over a finite horizon.

    Segments are half-open on the right, so a scheduled contact time belongs
    to its contact segment; the final segment is closed.
    """

    def __init__(self, segments, estimates=None):
        self.segments = tuple(segments)
        self.estimates = estimates
        self._starts = np.array([s.t0 for s in self.segments])
        for s in self.segments:
            for arr in s.data.values():
                arr.setflags(write=False)

    @property
    def t_start(self):
        return self.segments[0].t0

    @property
    def t_end(self):
        return self.segments[-1].t1

    def stitch_times(self):
        return [s.t0 for s in self.segments[1:]]

    def contact_intervals(self):
        return [(s.t0, s.t1) for s in self.segments if s.kind == "contact"]

    def in_contact(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self._starts, t, side="right") - 1, 0, len(self.segments) - 1)
        kinds = np.array([s.kind == "contact" for s in self.segments])
        return kinds[idx]

    def evaluate(self, t):
        """Reference at scalar time ``t`` as a tuple of floats."""
        if not (self.t_start <= t <= self.t_end):
            raise OutOfHorizon(f"t={t} outside [{self.t_start}, {self.t_end}]")
        i = int(np.searchsorted(self._starts, t, side="right")) - 1
        out = self.segments[i].evaluate(t)
        return tuple(float(v) for v in out)

    def evaluate_many(self, t):
        """Vectorized :meth:`evaluate`; returns four arrays."""
        t = np.asarray(t, dtype=float)
        if t.size and (t.min() < self.t_start or t.max() > self.t_end):
            raise OutOfHorizon("sample times outside the trajectory horizon")
        idx = np.searchsorted(self._starts, t, side="right") - 1
        out = np.zeros((4,) + t.shape)
        for i, seg in enumerate(self.segments):
            m = idx == i
            if np.any(m):
                out[:, m] = np.array(seg.evaluate(t[m]))
        return out[0], out[1], out[2], out[3]


class AnalyticTrajectory:
    """Reference given directly by callables; handy for error-system studies.

    ``F_d`` defaults to zero.  No stitching or validation is implied.
    """

    def __init__(self, x, dx, ddx, F=None, t_start=0.0, t_end=math.inf):
        self._f = (x, dx, ddx, F or (lambda t: 0.0 * np.asarray(t, dtype=float)))
        self.t_start = t_start
        self.t_end = t_end

    def evaluate(self, t):
        return tuple(float(f(t)) for f in self._f)

    def evaluate_many(self, t):
        t = np.asarray(t, dtype=float)
        return tuple(np.broadcast_to(np.asarray(f(t), dtype=float), t.shape).copy()
                     for f in self._f)


def _integrate_free(x_free, gamma, t0, t1, h_max, y, dy):
    n = max(1, math.ceil((t1 - t0) / h_max - 1e-9))
    h = (t1 - t0) / n
    ts = t0 + h * np.arange(2 * n + 1) / 2
    u = np.asarray(x_free.value(ts), dtype=float)
    g, g2 = gamma, gamma * gamma
    Y = np.empty(n + 1)
    D = np.empty(n + 1)
    Y[0], D[0] = y, dy
    for k in range(n):
        u0, um, u1 = u[2 * k], u[2 * k + 1], u[2 * k + 2]
        a1 = -2 * g * dy - g2 * (y - u0)
        ya, va = y + 0.5 * h * dy, dy + 0.5 * h * a1
        a2 = -2 * g * va - g2 * (ya - um)
        yb, vb = y + 0.5 * h * va, dy + 0.5 * h * a2
        a3 = -2 * g * vb - g2 * (yb - um)
        yc, vc = y + h * vb, dy + h * a3
        a4 = -2 * g * vc - g2 * (yc - u1)
        y = y + h / 6 * (dy + 2 * va + 2 * vb + vc)
        dy = dy + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        Y[k + 1], D[k + 1] = y, dy
    A = -2 * g * D - g2 * (Y - u[::2])
    return h, {"y3": Y, "dy3": D, "ddy3": A}


def _integrate_contact(F_contact, gamma, est, t0, t1, h_max, state):
    n = max(1, math.ceil((t1 - t0) / h_max - 1e-9))
    h = (t1 - t0) / n
    ts = t0 + h * np.arange(2 * n + 1) / 2
    u = np.asarray(F_contact.value(ts), dtype=float)
    g, g2 = gamma, gamma * gamma
    kb, bb = est.k_e / est.b_e, 1.0 / est.b_e
    y1, p1, y2, p2 = state
    out = np.empty((4, n + 1))
    out[:, 0] = state
    for k in range(n):
        u0, um, u1 = u[2 * k], u[2 * k + 1], u[2 * k + 2]
        a1 = -2 * g * p1 - g2 * (y1 - u0)
        b1 = -kb * p2 + bb * p1
        q1, r1, s1, w1 = y1 + 0.5 * h * p1, p1 + 0.5 * h * a1, y2 + 0.5 * h * p2, p2 + 0.5 * h * b1
        a2 = -2 * g * r1 - g2 * (q1 - um)
        b2 = -kb * w1 + bb * r1
        q2, r2, s2, w2 = y1 + 0.5 * h * r1, p1 + 0.5 * h * a2, y2 + 0.5 * h * w1, p2 + 0.5 * h * b2
        a3 = -2 * g * r2 - g2 * (q2 - um)
        b3 = -kb * w2 + bb * r2
        q3, r3, s3, w3 = y1 + h * r2, p1 + h * a3, y2 + h * w2, p2 + h * b3
        a4 = -2 * g * r3 - g2 * (q3 - u1)
        b4 = -kb * w3 + bb * r3
        y1 = y1 + h / 6 * (p1 + 2 * r1 + 2 * r2 + r3)
        p1 = p1 + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        y2 = y2 + h / 6 * (p2 + 2 * w1 + 2 * w2 + w3)
        p2 = p2 + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        out[:, k + 1] = (y1, p1, y2, p2)
    Y1, P1, Y2, P2 = out
    A1 = -2 * g * P1 - g2 * (Y1 - u[::2])
    A2 = -kb * P2 + bb * P1
    return h, {"y1": Y1, "dy1": P1, "ddy1": A1, "y2": Y2, "dy2": P2, "ddy2": A2}


def design(spec):
    """Build a stitched :class:`DesiredTrajectory` from user profiles."""
    g1, g2 = spec.gammas
    est = spec.estimates
    contact = dict(spec.schedule.intervals)
    bounds = spec.boundaries()

    t = spec.t_start
    x = float(spec.x_free.value(t)) if spec.x0 is None else spec.x0
    v = float(spec.x_free.deriv(t)) if spec.v0 is None else spec.v0
    a = 0.0
    segments = []
    for t0, t1 in zip(bounds[:-1], bounds[1:]):
        if t0 in contact:
            state = (est.k_e * x + est.b_e * v, est.k_e * v + est.b_e * a, x, v)
            h, data = _integrate_contact(spec.F_contact, g1, est, t0, t1, spec.filter_step(True), state)
            # both the user profile and its filtered version must stay positive
            grid = t0 + h * np.arange(len(data["y1"]))
            raw = np.asarray(spec.F_contact.value(grid), dtype=float)
            bad = np.nonzero((data["y1"] <= 0) | (raw <= 0))[0]
            if bad.size:
                tb = float(grid[bad[0]])
                raise NegativeForceInContact(
                    f"desired force <= 0 at t={tb:.6g} s (profile {raw[bad[0]]:.6g} N, "
                    f"filtered {data['y1'][bad[0]]:.6g} N) in contact interval ({t0:g}, {t1:g})",
                    interval=(t0, t1), time=tb)
            seg = Segment("contact", t0, t1, h, data, g1, estimates=est)
        else:
            h, data = _integrate_free(spec.x_free, g2, t0, t1, spec.filter_step(False), x, v)
            seg = Segment("free", t0, t1, h, data, g2, x_free=spec.x_free)
        segments.append(seg)
        x, v, a, _ = seg.end_state()
    return DesiredTrajectory(segments, est)


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    position_jumps: tuple  # (stitch time, |jump|)
    velocity_jumps: tuple
    max_accel: float
    max_contact_residual: float
    max_force: float
    worst_stitch: float | None

    def as_dict(self):
        return {
            "passed": self.passed,
            "max_position_jump": max((j for _, j in self.position_jumps), default=0.0),
            "max_velocity_jump": max((j for _, j in self.velocity_jumps), default=0.0),
            "worst_stitch_time": self.worst_stitch,
            "max_abs_accel": self.max_accel,
            "max_contact_residual": self.max_contact_residual,
            "max_force": self.max_force,
        }


def validate(traj, continuity_tol=1e-9, residual_rtol=1e-6, accel_bound=1e12,
             samples_per_segment=2000):
    """Check continuity at stitches, bounded acceleration and the contact relation."""
    pos, vel = [], []
    for left, right in zip(traj.segments[:-1], traj.segments[1:]):
        xl, vl, _, _ = left.end_state()
        xr, vr, _, _ = right.start_state()
        pos.append((right.t0, abs(float(xr - xl))))
        vel.append((right.t0, abs(float(vr - vl))))

    max_acc = 0.0
    max_res = 0.0
    max_F = 0.0
    est = traj.estimates
    for seg in traj.segments:
        ts = np.linspace(seg.t0, seg.t1, samples_per_segment + 1)
        x, v, a, F = seg.evaluate(ts)
        max_acc = max(max_acc, float(np.max(np.abs(a))))
        if seg.kind == "contact":
            max_F = max(max_F, float(np.max(np.abs(F))))
            if est is not None:
                max_res = max(max_res, float(np.max(np.abs(est.k_e * x + est.b_e * v - F))))

    jumps = [(t, max(p, q)) for (t, p), (_, q) in zip(pos, vel)]
    worst = max(jumps, key=lambda j: j[1])[0] if jumps else None
    ok = (all(j <= continuity_tol for _, j in jumps)
          and np.isfinite(max_acc) and max_acc <= accel_bound
          and max_res <= residual_rtol * max(max_F, np.finfo(float).tiny))
    return ValidationReport(bool(ok), tuple(pos), tuple(vel), max_acc, max_res, max_F,
                            worst if not ok else None)
