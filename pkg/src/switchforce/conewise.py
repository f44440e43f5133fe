"""Stability certification of the planar worst-case switched error system.

The worst-case system switches between ``A_1`` and ``A_2`` on the two lines
``z2 = 0`` and ``dK*z1 + dB*z2 = 0``, which split the plane into four cones.
Either some cone holds a visible eigenvector of a stable mode (trajectories
are trapped and converge), or every trajectory spirals through all four
cones, and the per-cone radius ratios ``Lambda_i`` decide contraction.

Three independent routes to ``Lambda_i`` are provided:

* :func:`lambda_closed_form` for the two cones of a :class:`ConewisePair`,
* :func:`lambda_general` for an arbitrary cone via the real Jordan form,
* :func:`transit_ratio`, a numerical transit used as an oracle.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (DegenerateCone, DomainError, UnsupportedJordanForm,
                     VisibleEigenvector)

# |B^2 - 4K| / max(B^2, 4K) below this counts as a repeated eigenvalue
DISCRIMINANT_RTOL = 1e-9


class EigenClass(enum.Enum):
    COMPLEX_PAIR = "complex_pair"
    REPEATED_REAL = "repeated_real"
    DISTINCT_REAL = "distinct_real"


def classify(K, B):
    disc = B * B - 4.0 * K
    if abs(disc) <= DISCRIMINANT_RTOL * max(B * B, 4.0 * abs(K)):
        return EigenClass.REPEATED_REAL
    return EigenClass.COMPLEX_PAIR if disc < 0 else EigenClass.DISTINCT_REAL


@dataclass(frozen=True)
class Eigenstructure:
    classification: EigenClass
    eigenvalues: tuple
    # real cases: eigenvectors (a, 1) with a = (-B +- sqrt(B^2-4K)) / (2K);
    # eigenvalues[k] belongs to v_{k+1}
    v1: tuple | None = None
    v2: tuple | None = None
    omega: float | None = None


def eigenstructure(K, B):
    """Eigenvalues and eigenvectors of ``[[0, 1], [-K, -B]]``."""
    if not (K > 0 and B > 0):
        raise DomainError(f"need K > 0 and B > 0, got K={K}, B={B}")
    cls = classify(K, B)
    if cls is EigenClass.COMPLEX_PAIR:
        omega = 0.5 * math.sqrt(4.0 * K - B * B)
        return Eigenstructure(cls, (complex(-B / 2, omega), complex(-B / 2, -omega)),
                              omega=omega)
    root = math.sqrt(max(B * B - 4.0 * K, 0.0)) if cls is EigenClass.DISTINCT_REAL else 0.0
    lam_b = (-B + root) / 2.0
    lam_a = (-B - root) / 2.0
    v1 = ((-B + root) / (2.0 * K), 1.0)
    v2 = ((-B - root) / (2.0 * K), 1.0)
    return Eigenstructure(cls, (lam_a, lam_b), v1=v1, v2=v2)


def region_of(z, pair):
    """Active mode of the worst-case system at state ``z``; boundaries go to 1."""
    z1, z2 = z
    return 1 if z2 * (pair.dK * z1 + pair.dB * z2) <= 0 else 2


def worst_case_switching_value(z, pair):
    """Switching function of the worst-case system: mode 2 iff it is positive."""
    return z[1] * (pair.dK * z[0] + pair.dB * z[1])


@dataclass(frozen=True)
class SlidingReport:
    # normal projections N1^T A_i nu1 on z2 = 0, z1 > 0 (both equal -K_i)
    axis_projections: tuple
    # N2^T A_i nu2 on the second switching line
    line_projections: tuple
    line_residual: float
    scale: float

    @property
    def consistent(self):
        same_sign = self.axis_projections[0] * self.axis_projections[1] > 0
        return same_sign and self.line_residual <= 1e-12 * self.scale


def sliding_consistency(pair):
    """Check that no sliding mode can form on either switching surface."""
    A1, A2 = pair.matrix(1), pair.matrix(2)
    N1 = np.array([0.0, 1.0])
    nu1 = np.array([1.0, 0.0])
    axis = (float(N1 @ A1 @ nu1), float(N1 @ A2 @ nu1))
    L = pair.L
    N2 = np.array([pair.dK, pair.dB]) / L
    nu2 = np.array([-pair.dB, pair.dK]) / L
    p1 = float(N2 @ A1 @ nu2)
    p2 = float(N2 @ A2 @ nu2)
    scale = max(pair.K1, pair.K2, abs(p1), abs(p2))
    return SlidingReport(axis, (p1, p2), abs(p1 - p2), scale)


@dataclass(frozen=True)
class VisibleEigen:
    cone: int
    eigenvalue: float
    condition: str


def _visible_in_s1(pair):
    K1, B1 = pair.K1, pair.B1
    dK, dB = pair.dK, pair.dB
    disc = B1 * B1 - 4 * K1
    if dB < 0 and disc >= 0:
        root = math.sqrt(disc)
        if dK / dB < 2 * K1 / (B1 - root):
            return VisibleEigen(1, (-B1 - root) / 2, "i.(a)")
    return None


def _visible_in_s2(pair):
    K2, B2 = pair.K2, pair.B2
    dK, dB = pair.dK, pair.dB
    disc = B2 * B2 - 4 * K2
    if disc < 0:
        return None
    root = math.sqrt(disc)
    slow = (-B2 + root) / 2
    if dB < 0 and dK / dB > 2 * K2 / (B2 + root):
        return VisibleEigen(2, slow, "i.(b).1")
    if dB >= 0:
        return VisibleEigen(2, slow, "i.(b).2")
    return None


def visible_eigenvector_check(pair):
    """Return the visible stable eigen-direction of the worst-case system, if any.

    When both cones qualify the contact cone is reported.
    """
    return _visible_in_s2(pair) or _visible_in_s1(pair)


@dataclass(frozen=True)
class Cone:
    """A cone traversed by ``z' = A z`` from ray ``rho_in`` to ray ``rho_out``."""

    rho_in: tuple
    rho_out: tuple
    A: np.ndarray = field(compare=False)

    def __post_init__(self):
        rin = np.asarray(self.rho_in, dtype=float)
        rout = np.asarray(self.rho_out, dtype=float)
        if np.linalg.norm(rin) == 0 or np.linalg.norm(rout) == 0:
            raise DomainError("cone rays must be nonzero")
        rin = rin / np.linalg.norm(rin)
        rout = rout / np.linalg.norm(rout)
        if abs(rin[0] * rout[1] - rin[1] * rout[0]) < 1e-15 and rin @ rout > 0:
            raise DomainError("cone rays coincide")
        object.__setattr__(self, "rho_in", tuple(rin))
        object.__setattr__(self, "rho_out", tuple(rout))
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))


def theorem_cones(pair):
    """The free-motion and contact cones of the worst-case system (upper half plane)."""
    rho21 = (pair.dB / pair.L, -pair.dK / pair.L)
    return (Cone(rho21, (1.0, 0.0), pair.matrix(1)),
            Cone((-1.0, 0.0), rho21, pair.matrix(2)))


def lambda_closed_form(pair, i):
    """Radius ratio across cone ``i`` of the worst-case system, in closed form."""
    if i not in (1, 2):
        raise ValueError(f"cone index must be 1 or 2, got {i!r}")
    vis = _visible_in_s1(pair) if i == 1 else _visible_in_s2(pair)
    if vis is not None:
        raise DegenerateCone(
            f"cone {i} holds a visible eigenvector (condition {vis.condition}); "
            "its exit ray is only reached asymptotically")
    K, B = pair.K(i), pair.B(i)
    dK, dB, L = pair.dK, pair.dB, pair.L
    sgn = -1.0 if i == 1 else 1.0
    cls = classify(K, B)
    if cls is EigenClass.COMPLEX_PAIR:
        omega = 0.5 * math.sqrt(4 * K - B * B)
        Q = B * dK - 2 * K * dB
        phi = math.fmod(-math.atan(sgn * 2 * omega * dK / Q), math.pi)
        if phi < 0:
            phi += math.pi
        amp = K / omega * (dK ** 2 / L ** 2 + Q ** 2 / (4 * omega ** 2 * L ** 2)) ** -0.5
        return amp ** sgn * math.exp(-B / (2 * omega) * phi)
    if cls is EigenClass.REPEATED_REAL:
        den = 2 * dK - B * dB
        # prefactor carries the same alternating exponent as the complex case
        return abs(B * L / den) ** sgn * math.exp(sgn * 2 * dK / den)
    root = math.sqrt(B * B - 4 * K)
    la = (-B - root) / 2
    lb = (-B + root) / 2
    f1 = abs((dK * lb + K * dB) / (K * L)) ** (sgn * la / (lb - la))
    f2 = abs((dK * la + K * dB) / (K * L)) ** (sgn * lb / (la - lb))
    return f1 * f2


def _eigvec(A, lam):
    """A nonzero vector in the null space of ``A - lam*I`` (complex allowed)."""
    a, b = A[0]
    c, d = A[1]
    u = np.array([b, lam - a])
    v = np.array([lam - d, c])
    return u if np.linalg.norm(u) >= np.linalg.norm(v) else v


def real_jordan(A):
    """Real Jordan decomposition ``A = P J P^-1`` of a 2x2 matrix.

    Returns ``(kind, P, J)`` where ``kind`` is an :class:`EigenClass`.
    """
    A = np.asarray(A, dtype=float)
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    disc = tr * tr - 4 * det
    scale = max(tr * tr, 4 * abs(det), np.finfo(float).tiny)
    if abs(disc) <= DISCRIMINANT_RTOL * scale:
        lam = tr / 2
        N = A - lam * np.eye(2)
        if np.linalg.norm(N) <= 1e-12 * max(np.linalg.norm(A), 1.0):
            raise UnsupportedJordanForm(
                "repeated eigenvalue with geometric multiplicity 2 (A is a multiple of I)")
        p1 = _eigvec(A, lam).astype(float)
        p2 = np.linalg.lstsq(N, p1, rcond=None)[0]
        P = np.column_stack([p1, p2])
        J = np.array([[lam, 1.0], [0.0, lam]])
        return EigenClass.REPEATED_REAL, P, J
    if disc < 0:
        a = tr / 2
        w = math.sqrt(-disc) / 2
        v = _eigvec(A.astype(complex), complex(a, w))
        P = np.column_stack([v.real, -v.imag])
        J = np.array([[a, -w], [w, a]])
        return EigenClass.COMPLEX_PAIR, P, J
    root = math.sqrt(disc)
    la, lb = (tr - root) / 2, (tr + root) / 2
    P = np.column_stack([_eigvec(A, la), _eigvec(A, lb)]).astype(float)
    return EigenClass.DISTINCT_REAL, P, np.diag([la, lb])


def _ccw_angle(r1, r2):
    ang = math.atan2(r1[0] * r2[1] - r1[1] * r2[0], r1[0] * r2[0] + r1[1] * r2[1])
    return ang if ang >= 0 else ang + 2 * math.pi


def lambda_general(cone):
    """Radius ratio for one transit of ``cone`` via the real Jordan form of its matrix."""
    kind, P, J = real_jordan(cone.A)
    Pinv = np.linalg.inv(P)
    rin = Pinv @ np.asarray(cone.rho_in)
    rout = Pinv @ np.asarray(cone.rho_out)
    if kind is EigenClass.COMPLEX_PAIR:
        a, w = J[0, 0], J[1, 0]
        phi = _ccw_angle(rin, rout)
        return float(np.linalg.norm(rin) / np.linalg.norm(rout) * math.exp(a / w * phi))

    if kind is EigenClass.REPEATED_REAL:
        lam = J[0, 0]
        if rin[1] == 0 or rout[1] == 0 or (rin[1] > 0) != (rout[1] > 0):
            raise VisibleEigenvector("eigenvector separates or bounds the cone rays")
        t = rout[0] / rout[1] - rin[0] / rin[1]
        if not t > 0:
            raise VisibleEigenvector("transit time is not positive; exit ray unreachable")
        return float(abs(rin[1] / rout[1]) * math.exp(lam * t))

    la, lb = J[0, 0], J[1, 1]
    if np.any(rin == 0) or np.any(rout == 0):
        raise VisibleEigenvector("a cone ray lies on an eigenvector")
    R = (rout[0] * rin[1]) / (rout[1] * rin[0])
    if not R > 0:
        raise VisibleEigenvector("an eigenvector lies between the cone rays")
    t = math.log(R) / (la - lb)
    scale = math.exp(la * t) * rin[0] / rout[0]
    if not (t > 0 and scale > 0):
        raise VisibleEigenvector("exit ray unreachable from the entry ray")
    return float(abs(rout[1] / rin[1]) ** (la / (lb - la))
                 * abs(rout[0] / rin[0]) ** (lb / (la - lb)))


def transit_ratio(A, rho_in, rho_out, radius=1.0, rtol=1e-12, t_max=None):
    """Numerically integrate ``z' = A z`` from ``radius*rho_in`` to the ray ``rho_out``.

    The flow is integrated in polar coordinates (angle, log radius), which
    keeps the state well scaled however strongly the radius grows or decays.
    Returns ``(exit_radius / radius, transit_time)``.
    """
    A = np.asarray(A, dtype=float)
    rin = np.asarray(rho_in, dtype=float)
    rin = rin / np.linalg.norm(rin)
    rout = np.asarray(rho_out, dtype=float)
    rout = rout / np.linalg.norm(rout)

    def rhs(t, s):
        c, sn = math.cos(s[0]), math.sin(s[0])
        az0 = A[0, 0] * c + A[0, 1] * sn
        az1 = A[1, 0] * c + A[1, 1] * sn
        return [c * az1 - sn * az0, c * az0 + sn * az1]

    th0 = math.atan2(rin[1], rin[0])
    turn = rhs(0.0, [th0, 0.0])[0]
    if turn == 0:
        raise VisibleEigenvector("entry ray is an eigenvector")
    direction = 1.0 if turn > 0 else -1.0
    ang = _ccw_angle(rin, rout) if direction > 0 else _ccw_angle(rout, rin)
    target = th0 + direction * ang

    def hit(t, s):
        return s[0] - target
    hit.terminal = True

    if t_max is None:
        ev = np.linalg.eigvals(A)
        t_max = 200.0 / max(min(abs(ev)), 1e-300)
    sol = solve_ivp(rhs, (0.0, t_max), [th0, math.log(radius)], method="DOP853",
                    rtol=rtol, atol=rtol, events=hit)
    if sol.t_events[0].size == 0:
        raise VisibleEigenvector("transit did not reach the exit ray within t_max")
    log_r = sol.y_events[0][0][1]
    return math.exp(log_r) / radius, float(sol.t_events[0][0])


class Verdict(enum.Enum):
    VISIBLE_EIGENVECTOR_S1 = "VisibleEigenvectorS1"
    VISIBLE_EIGENVECTOR_S2 = "VisibleEigenvectorS2"
    RETURN_MAP_CONTRACTIVE = "ReturnMapContractive"
    NOT_CERTIFIED = "NotCertified"


@dataclass(frozen=True)
class StabilityCertificate:
    """Outcome of :func:`certify`.

    ``Lambda`` is the radius factor of one full rotation, ``(L1*L2)**2``;
    ``product`` is ``L1*L2``, the half-rotation factor that is compared to 1.
    A positive verdict chains to GUAS of the worst-case system, GUES of the
    unperturbed error system and ISS of the perturbed one.
    """

    verdict: Verdict
    pair: object
    decided_by: str
    lambda1: float | None = None
    lambda2: float | None = None
    visible_eigenvalue: float | None = None
    sliding: SlidingReport | None = None

    @property
    def product(self):
        if self.lambda1 is None:
            return None
        return self.lambda1 * self.lambda2

    @property
    def Lambda(self):
        p = self.product
        return None if p is None else p * p

    @property
    def certified(self):
        return self.verdict is not Verdict.NOT_CERTIFIED

    @property
    def guas_worst_case(self):
        return self.certified

    @property
    def gues_unperturbed(self):
        return self.certified

    @property
    def iss_perturbed(self):
        return self.certified

    def as_dict(self):
        p = self.pair
        return {
            "verdict": self.verdict.value,
            "certified": self.certified,
            "decided_by": self.decided_by,
            "K1": p.K1, "B1": p.B1, "K2": p.K2, "B2": p.B2,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "lambda1_lambda2": self.product,
            "Lambda": self.Lambda,
            "visible_eigenvalue": self.visible_eigenvalue,
            "sliding_residual": None if self.sliding is None else self.sliding.line_residual,
            "guas_worst_case": self.guas_worst_case,
            "gues_unperturbed": self.gues_unperturbed,
            "iss_perturbed": self.iss_perturbed,
        }


def certify(pair):
    """Decide stability of the worst-case switched system for ``pair``."""
    sliding = sliding_consistency(pair)
    if not sliding.consistent:
        # identity holds for every valid pair; failure means corrupted input
        raise AssertionError(f"sliding-mode identity violated: {sliding}")
    vis = visible_eigenvector_check(pair)
    if vis is not None:
        verdict = (Verdict.VISIBLE_EIGENVECTOR_S2 if vis.cone == 2
                   else Verdict.VISIBLE_EIGENVECTOR_S1)
        return StabilityCertificate(verdict, pair, vis.condition,
                                    visible_eigenvalue=vis.eigenvalue, sliding=sliding)
    l1 = lambda_closed_form(pair, 1)
    l2 = lambda_closed_form(pair, 2)
    ok = l1 * l2 < 1
    verdict = Verdict.RETURN_MAP_CONTRACTIVE if ok else Verdict.NOT_CERTIFIED
    decided = f"ii: Lambda1*Lambda2 = {l1 * l2:.6g} {'<' if ok else '>='} 1"
    return StabilityCertificate(verdict, pair, decided, lambda1=l1, lambda2=l2,
                                sliding=sliding)
