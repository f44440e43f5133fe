"""Physical and controller parameters, and the closed-loop switched error system.

All parameter types are frozen dataclasses validated on construction.  Units
are SI: kg, N/m, N*s/m.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DomainError, ModeOutsideDomain, NonStiffRegime


def _require(cond, msg):
    if not cond:
        raise DomainError(msg)


@dataclass(frozen=True)
class RigidPlant:
    """Contact degree of freedom of the manipulator: ``M x'' + b x' = F_c - F_e``."""

    M: float
    b: float = 0.0

    def __post_init__(self):
        _require(self.M > 0, f"mass M must be > 0, got {self.M}")
        # b = 0 is admitted: the stiff-environment example runs without friction
        _require(self.b >= 0, f"friction b must be >= 0, got {self.b}")


@dataclass(frozen=True)
class Environment:
    """Kelvin-Voigt wall at ``x = 0``; contact for ``x > 0``."""

    k_e: float
    b_e: float

    def __post_init__(self):
        _require(self.k_e > 0, f"stiffness k_e must be > 0, got {self.k_e}")
        _require(self.b_e >= 0, f"damping b_e must be >= 0, got {self.b_e}")


@dataclass(frozen=True)
class ControllerGains:
    M_a: float
    k_p: float
    k_d: float
    k_f: float
    b_f: float

    def __post_init__(self):
        for name in ("M_a", "k_p", "k_d", "k_f", "b_f"):
            v = getattr(self, name)
            _require(v > 0, f"gain {name} must be > 0, got {v}")


@dataclass(frozen=True)
class EnvEstimates:
    """Estimates of the wall parameters used to map desired force to position."""

    k_e: float
    b_e: float

    def __post_init__(self):
        _require(self.k_e > 0, f"estimate k_e must be > 0, got {self.k_e}")
        # b_e divides the contact filter dynamics
        _require(self.b_e > 0, f"estimate b_e must be > 0, got {self.b_e}")

    @classmethod
    def exact(cls, env):
        return cls(env.k_e, env.b_e)


@dataclass(frozen=True)
class WristParams:
    """Compliant wrist between arm and end-effector."""

    M_t: float
    k_t: float
    b_t: float

    def __post_init__(self):
        for name in ("M_t", "k_t", "b_t"):
            v = getattr(self, name)
            _require(v > 0, f"wrist {name} must be > 0, got {v}")

    def scale_warnings(self, plant, env, ratio=0.1):
        """Return messages for violated time-scale separation assumptions.

        A "much smaller than" relation is considered violated when the ratio
        exceeds ``ratio``.
        """
        out = []
        if self.M_t > ratio * plant.M:
            out.append(f"M_t={self.M_t:g} is not << M={plant.M:g}")
        if self.k_t > ratio * env.k_e:
            out.append(f"k_t={self.k_t:g} is not << k_e={env.k_e:g}")
        if env.b_e > ratio * self.b_t:
            out.append(f"b_t={self.b_t:g} is not >> b_e={env.b_e:g}")
        if self.b_t / env.k_e > ratio:
            out.append(f"b_t/k_e={self.b_t / env.k_e:g} s is not << 1 s")
        return out

    def check_scales(self, plant, env, ratio=0.1):
        msgs = self.scale_warnings(plant, env, ratio)
        for m in msgs:
            warnings.warn(m, stacklevel=2)
        return not msgs


@dataclass(frozen=True)
class ConewisePair:
    """The planar switched error system: ``A_i = [[0, 1], [-K_i, -B_i]]``.

    Mode 1 is free motion, mode 2 contact.  Only the stiff regime
    ``K2 > K1`` is representable.
    """

    K1: float
    B1: float
    K2: float
    B2: float

    def __post_init__(self):
        for name in ("K1", "B1", "K2", "B2"):
            v = getattr(self, name)
            _require(v > 0 and math.isfinite(v), f"{name} must be finite and > 0, got {v}")
        if not self.K2 > self.K1:
            raise NonStiffRegime(
                f"K2={self.K2:g} must exceed K1={self.K1:g} (stiff-environment regime)")

    @property
    def dK(self):
        return self.K1 - self.K2

    @property
    def dB(self):
        return self.B1 - self.B2

    @property
    def L(self):
        return math.hypot(self.dK, self.dB)

    def K(self, i):
        return self.K1 if i == 1 else self.K2

    def B(self, i):
        return self.B1 if i == 1 else self.B2

    def matrix(self, i):
        import numpy as np
        return np.array([[0.0, 1.0], [-self.K(i), -self.B(i)]])


def closed_loop_matrices(plant, env, gains):
    """Assemble ``(K1, B1, K2, B2)`` of the closed-loop error dynamics."""
    M, b = plant.M, plant.b
    K1 = gains.k_p / M
    B1 = (gains.k_d + b) / M
    K2 = (1.0 + gains.k_f) * env.k_e / M
    B2 = ((1.0 + gains.k_f) * env.b_e + gains.b_f + b) / M
    return ConewisePair(K1, B1, K2, B2)


def reduced_env(wrist, env):
    """Environment perceived by the arm mass through the compliant wrist."""
    frac = env.k_e / (wrist.k_t + env.k_e)
    return Environment(k_e=wrist.k_t * frac, b_e=wrist.b_t * frac)


def force_mismatch(x_d, xd_dot, est, env_true):
    """Perturbation caused by estimation errors in the force-to-position map."""
    return (est.k_e - env_true.k_e) * x_d + (est.b_e - env_true.b_e) * xd_dot


def perturbation_w(mode, t, traj, plant, gains, est, env_true):
    """Disturbance entering the error dynamics of mode 1 or 2 at time ``t``."""
    x_d, xd_dot, xd_ddot, F_d = traj.evaluate(t)
    M, b = plant.M, plant.b
    if mode == 1:
        return (M - gains.M_a) / M * xd_ddot + b / M * xd_dot
    if mode == 2:
        if not F_d > 0:
            raise ModeOutsideDomain(
                f"contact disturbance undefined at t={t:g}: F_d={F_d:g} <= 0")
        w_f = force_mismatch(x_d, xd_dot, est, env_true)
        return xd_ddot + (gains.b_f + b) / M * xd_dot - w_f / M
    raise ValueError(f"mode must be 1 or 2, got {mode!r}")
