"""Variational identities for rigidly-rotating patches.

Two exact identities tie the angular velocity to moments of an area-pi
solution patch:

  torsion identity    Omega * (int |x|^2 - pi/2) = (1 - 2 Omega) (pi/4 - int p)
  velocity identity   (1/2 - Omega) (int |x|^2 - pi/2)
                          = (1/2) int_D |x - 2 grad(1_D * N)|^2

with p the torsion function.  Both sides are evaluated independently of any
solver, so the signed residuals act as a solution detector: too-large Omega
gives a positive torsion-identity residual.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import geometry, potential
from .geometry import EllipsePatch, PolarPatch, RotatingState
from .parallel import pmap
from .quadrature import gauss_panel
from .potential import QuadratureConfig, DEFAULT_CFG


@dataclass(frozen=True)
class IdentityReport:
    identity: str
    lhs: float
    rhs: float
    quadrature_error_estimate: float = 0.0

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs

    @property
    def relative_residual(self) -> float:
        return self.residual / max(abs(self.lhs), abs(self.rhs), 1e-300)

    def to_dict(self) -> dict:
        return {"identity": self.identity, "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual,
                "relative_residual": self.relative_residual}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def identity_torsion(state: RotatingState, degree: int | None = None) -> IdentityReport:
    """Both sides of the torsion identity for an area-pi state."""
    patch, omega = state.patch, state.omega
    sme = geometry.second_moment_excess(patch)
    tors = potential.torsion_solve(patch, degree=degree)
    lhs = omega * sme
    rhs = (1.0 - 2.0 * omega) * (np.pi / 4.0 - tors.integral)
    return IdentityReport("torsion", lhs, rhs,
                          quadrature_error_estimate=tors.boundary_residual)


def identity_torsion_ellipse(ellipse: EllipsePatch,
                             omega: float | None = None) -> IdentityReport:
    """Closed-form torsion identity for an area-normalized Kirchhoff ellipse."""
    e = ellipse.normalized()
    om = e.omega_exact if omega is None else omega
    lhs = om * e.second_moment_excess
    rhs = (1.0 - 2.0 * om) * (np.pi / 4.0 - e.torsion_integral)
    return IdentityReport("torsion", lhs, rhs)


def _interior_velocity_integral(patch: PolarPatch, cfg: QuadratureConfig,
                                n_s: int, n_theta: int) -> float:
    """(1/2) int_D |x - 2 grad(1_D*N)|^2 over the patch-adapted polar grid.

    Exploits the dihedral symmetry of the integrand: theta runs over
    (0, pi/m) and the result is scaled by 2m.
    """
    m = patch.m
    s, ws = gauss_panel(0.0, 1.0, n_s)
    th = np.pi / m * (np.arange(n_theta) + 0.5) / n_theta

    def ray(t):
        rt = float(patch.radius(t))
        e_r = np.array([np.cos(t), np.sin(t)])
        acc = 0.0
        for si, wi in zip(s, ws):
            r = si * rt
            x = r * e_r
            v = x - 2.0 * potential.grad_stream(patch, x, cfg)
            acc += wi * float(v @ v) * r * rt
        return acc

    total = sum(pmap(ray, th)) * 2.0 * m * (np.pi / m) / n_theta
    return 0.5 * total


def identity_velocity(state: RotatingState, cfg: QuadratureConfig = DEFAULT_CFG,
                      n_s: int = 20, n_theta: int = 20,
                      estimate_error: bool = False) -> IdentityReport:
    """Both sides of the velocity identity for an area-pi state.

    The right-hand side integrates the squared relative velocity with the
    kernel-assembled gradient; node counts are configurable because gradient
    evaluations dominate the cost.
    """
    patch, omega = state.patch, state.omega
    sme = geometry.second_moment_excess(patch)
    lhs = (0.5 - omega) * sme
    rhs = _interior_velocity_integral(patch, cfg, n_s, n_theta)
    err = 0.0
    if estimate_error:
        coarse = _interior_velocity_integral(patch, cfg, max(6, n_s - 6),
                                             max(6, n_theta - 6))
        err = abs(rhs - coarse)
    return IdentityReport("velocity", lhs, rhs, quadrature_error_estimate=err)


def identity_velocity_ellipse(ellipse: EllipsePatch, omega: float | None = None,
                              n_s: int = 48, n_theta: int = 96) -> IdentityReport:
    """Velocity identity for an ellipse using the exact interior gradient.

    With the exact field, x - 2 grad psi = ((a-b)/(a+b)) (x1, -x2); the
    right-hand side is integrated on a polar grid over the ellipse.
    """
    e = ellipse.normalized()
    om = e.omega_exact if omega is None else omega
    lhs = (0.5 - om) * e.second_moment_excess
    q = (e.a - e.b) / (e.a + e.b)
    s, ws = gauss_panel(0.0, 1.0, n_s)
    th = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    rt = e.radius(th)
    # |q (x1, -x2)|^2 = q^2 |x|^2; integrate r^3 over the ellipse
    radial = float(np.dot(ws, s ** 3))
    rhs = 0.5 * q * q * radial * float(np.mean(rt ** 4)) * 2.0 * np.pi
    return IdentityReport("velocity", lhs, rhs)


@dataclass(frozen=True)
class DeficitReport:
    """Torsion deficit pi/4 - int p against the squared Fraenkel asymmetry."""

    deficit: float
    asymmetry_sq: float

    @property
    def ratio(self) -> float | None:
        """deficit / asymmetry^2; absent for the disk (0/0)."""
        if self.asymmetry_sq < 1e-24:
            return None
        return self.deficit / self.asymmetry_sq


def torsion_deficit_bound(patch: PolarPatch) -> DeficitReport:
    """Empirical lower-bound data for deficit >= sigma * asymmetry^2.

    Returns the deficit (asserted nonnegative: the disk maximizes the torsion
    integral at fixed area), the squared Fraenkel asymmetry, and their ratio
    as a measured candidate for the constant.
    """
    tors = potential.torsion_solve(patch)
    deficit = np.pi / 4.0 - tors.integral
    if deficit < -1e-10:
        raise AssertionError(f"negative torsion deficit {deficit:.3e}")
    asym = geometry.fraenkel_asymmetry(patch)
    return DeficitReport(deficit=float(deficit), asymmetry_sq=asym.value ** 2)
