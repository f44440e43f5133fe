"""Damping synthesis: smallest b_f (rigid) or b_t (compliant wrist) that certifies."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .conewise import certify
from .errors import DomainError, NoBracket
from .model import closed_loop_matrices, reduced_env

PARAMETERS = ("b_f", "b_t")
SCAN_POINTS = 64


@dataclass(frozen=True)
class DesignContext:
    plant: object
    env: object
    gains: object
    wrist: object = None

    def with_value(self, name, value):
        if name == "b_f":
            return dataclasses.replace(self, gains=dataclasses.replace(self.gains, b_f=float(value)))
        if name == "b_t":
            if self.wrist is None:
                raise DomainError("searching b_t needs a wrist in the design context")
            return dataclasses.replace(self, wrist=dataclasses.replace(self.wrist, b_t=float(value)))
        raise DomainError(f"unknown design parameter {name!r}; expected one of {PARAMETERS}")

    def pair(self):
        env = self.env if self.wrist is None else reduced_env(self.wrist, self.env)
        return closed_loop_matrices(self.plant, env, self.gains)

    def certificate(self, name, value):
        return certify(self.with_value(name, value).pair())


@dataclass(frozen=True)
class SearchSpec:
    parameter: str
    lo: float
    hi: float
    tol: float
    context: DesignContext

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise DomainError(f"unknown design parameter {self.parameter!r}")
        if not self.lo < self.hi:
            raise DomainError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.lo > 0:
            raise DomainError("damping bracket must be positive")
        if not self.tol > 0:
            raise DomainError("tolerance must be > 0")
        if self.parameter == "b_t" and self.context.wrist is None:
            raise DomainError("searching b_t needs a wrist in the design context")


@dataclass(frozen=True)
class Threshold:
    value: float
    certificate: object
    bracket: tuple  # final (failing, certified) pair


def find_threshold(spec):
    """Smallest certified parameter value in ``[lo, hi]``.

    A coarse scan locates the first certified grid point, so regions where
    the factor is not monotone in the parameter cannot mislead the
    refinement; bisection then narrows the failing/certified pair to ``tol``.
    """
    ctx, name = spec.context, spec.parameter
    cert_lo = ctx.certificate(name, spec.lo)
    cert_hi = ctx.certificate(name, spec.hi)
    if cert_lo.certified == cert_hi.certified:
        state = "certify" if cert_lo.certified else "fail"
        raise NoBracket(f"both ends of [{spec.lo:g}, {spec.hi:g}] {state}; nothing to bracket",
                        lo_certificate=cert_lo, hi_certificate=cert_hi)
    if cert_lo.certified:
        return Threshold(spec.lo, cert_lo, (spec.lo, spec.lo))

    grid = np.linspace(spec.lo, spec.hi, SCAN_POINTS)
    ok = [cert_lo.certified] + [ctx.certificate(name, v).certified for v in grid[1:-1]] + [True]
    i = ok.index(True)
    a, b = float(grid[i - 1]), float(grid[i])
    while b - a > spec.tol:
        m = 0.5 * (a + b)
        if ctx.certificate(name, m).certified:
            b = m
        else:
            a = m
    return Threshold(b, ctx.certificate(name, b), (a, b))


@dataclass(frozen=True)
class SweepRow:
    value: float
    lambda1: float | None
    lambda2: float | None
    Lambda: float | None
    verdict: str


def lambda_sweep(context, parameter, grid):
    """One row per grid value; rows with a visible eigenvector carry no factors."""
    grid = list(grid)
    if not grid:
        raise DomainError("sweep grid is empty")
    rows = []
    for v in grid:
        c = context.certificate(parameter, v)
        rows.append(SweepRow(float(v), c.lambda1, c.lambda2, c.Lambda, c.verdict.value))
    return rows
