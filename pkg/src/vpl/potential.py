"""Newtonian potential of a patch: stream function, gradients, torsion.

The stream function is 1_D * N with N(x) = (1/2 pi) log|x|.  It splits into
a radial part phi_r driven by the circular rearrangement g(r) and an m-fold
remainder phi_m driven by h = 1_D - g, which has zero angular mean on every
circle.  Three independent evaluators are provided for grad phi_m:

* `grad_phi_m` -- 2D panel quadrature of h against the closed-form kernels
  obtained by summing the Fourier series of the log kernel;
* `grad_phi_m_monotone` -- single radial integrals of the arctan/log kernels
  valid when u is strictly decreasing on (0, pi/m);
* `grad_stream_direct` -- desingularized boundary-integral reference.

Values 1_D * N itself are evaluated by a divergence-form boundary integral
whose integrand vanishes like t^2 log t at the singular point, so on-boundary
evaluation needs no special treatment beyond placing the nearest boundary
point on the quadrature grid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import (EllipsePatch, NonMonotoneError, PatchError, PolarPatch,
                       _eta_batch, area)
from .quadrature import panel_nodes, split_segments


class QuadratureError(RuntimeError):
    """Estimated quadrature error above the configured tolerance."""


class TorsionFitError(RuntimeError):
    """Harmonic boundary fit is ill-conditioned or inaccurate."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs for the singular quadratures.

    radial_panels / angular_nodes are the Gauss orders per panel; split_depth
    and split_ratio control the geometric grading toward singular points;
    series_truncation is used only by the reference series evaluator in tests.
    """

    radial_panels: int = 10
    angular_nodes: int = 10
    split_depth: int = 12
    split_ratio: float = 0.5
    series_truncation: int = 200
    tolerance: float = 1e-6
    boundary_nodes: int = 2048

    def __post_init__(self):
        for name in ("radial_panels", "angular_nodes", "split_depth",
                     "series_truncation", "boundary_nodes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.split_ratio < 1.0):
            raise ValueError("split_ratio must be in (0, 1)")


DEFAULT_CFG = QuadratureConfig()


# ---------------------------------------------------------------------------
# radial rearrangement
# ---------------------------------------------------------------------------

class RadialProfile:
    """g(r) (vorticity fraction on the circle of radius r) and |D cap B_r|."""

    def __init__(self, patch: PolarPatch):
        self.patch = patch
        self.r_min = patch.r_min
        self.r_max = patch.r_max
        self.area = area(patch)
        self._monotone = patch.is_monotone()

    def g(self, r: float) -> float:
        if r <= self.r_min:
            return 1.0
        if r >= self.r_max:
            return 0.0
        p = self.patch
        if self._monotone:
            eta = float(_eta_batch(p, np.array([r]))[0])
            return p.m * eta / np.pi
        t = p.theta_grid()
        return float(np.mean(r < p.radius(t)))

    def cap(self, r: float) -> float:
        """|D cap B_r|, continuous and nondecreasing in r."""
        if r <= 0.0:
            return 0.0
        if r <= self.r_min:
            return np.pi * r * r
        if r >= self.r_max:
            return self.area
        p = self.patch
        if self._monotone:
            eta = float(_eta_batch(p, np.array([r]))[0])
            # per period: arc inside the circle up to eta, boundary graph beyond
            t, w = panel_nodes([(eta, np.pi / p.m, None)], 48)
            tail = float(np.dot(w, p.radius(t) ** 2))
            return p.m * (eta * r * r + tail)
        t = p.theta_grid()
        return float(np.mean(np.minimum(r, p.radius(t)) ** 2 / 2.0) * 2.0 * np.pi)


class AngularDeviation:
    """h(rho, eta) = 1_D(rho e(eta)) - g(rho); zero angular mean on circles."""

    def __init__(self, patch: PolarPatch):
        self.patch = patch
        self.profile = RadialProfile(patch)

    def values(self, rho: float, eta) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        g = self.profile.g(rho)
        return np.where(rho < self.patch.radius(eta), 1.0, 0.0) - g

    def angular_mean(self, rho: float) -> float:
        """Exact integral of h(rho, .) over the circle, divided by 2 pi.

        For monotone patches the indicator integrates to 2 m eta(rho), which
        cancels g by construction.
        """
        p, prof = self.patch, self.profile
        if rho <= prof.r_min or rho >= prof.r_max:
            return 0.0
        if p.is_monotone():
            eta = float(_eta_batch(p, np.array([rho]))[0])
            return (2.0 * p.m * eta - 2.0 * np.pi * prof.g(rho)) / (2.0 * np.pi)
        t = p.theta_grid()
        return float(np.mean((rho < p.radius(t)).astype(float)) - prof.g(rho))


def g_profile(patch: PolarPatch, r: float) -> float:
    """Fraction of the circle of radius r covered by the patch."""
    return RadialProfile(patch).g(r)


def phi_r_prime(patch: PolarPatch, r: float) -> float:
    """Radial derivative of the rearranged stream: |D cap B_r| / (2 pi r)."""
    if r <= 0.0:
        raise ValueError("radius must be positive")
    return RadialProfile(patch).cap(r) / (2.0 * np.pi * r)


# ---------------------------------------------------------------------------
# closed-form series kernels
# ---------------------------------------------------------------------------

def series_kernel(x: float, y: float):
    """Closed forms of the four geometric series at ratio x and angle y.

    Returns (sum x^n cos(ny)/n, sum x^n sin(ny)/n,
             sum x^n cos(ny),   sum x^n sin(ny)) for 0 <= x < 1.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x >= 1.0) or np.any(x < 0.0):
        raise ValueError("series ratio must satisfy 0 <= x < 1")
    y = np.asarray(y, dtype=float)
    den = (1.0 - x) ** 2 + 2.0 * x * (1.0 - np.cos(y))
    s1 = -0.5 * np.log1p(x * x - 2.0 * x * np.cos(y))
    s2 = np.arctan2(x * np.sin(y), 1.0 - x * np.cos(y))
    s3 = x * (np.cos(y) - x) / den
    s4 = x * np.sin(y) / den
    return s1, s2, s3, s4


# ---------------------------------------------------------------------------
# grad phi_m: general 2D panel evaluator
# ---------------------------------------------------------------------------

def _angular_pieces(patch: PolarPatch, eta_rho: float, theta: float):
    """Sub-intervals of one angular period (-pi/m, pi/m] on which h is
    constant, with the indicator value of each piece.

    The integration variable is the offset s with physical angle s + theta.
    """
    m = patch.m
    per = 2.0 * np.pi / m

    def fold(v):
        return (v + per / 2.0) % per - per / 2.0

    cuts = {-per / 2.0, 0.0, per / 2.0, fold(eta_rho - theta), fold(-eta_rho - theta)}
    brk = sorted(cuts)
    pieces = []
    for a, b in zip(brk[:-1], brk[1:]):
        if b - a < 1e-15:
            continue
        mid_phys = fold(0.5 * (a + b) + theta)
        pieces.append((a, b, abs(mid_phys) < eta_rho))
    return pieces


def _grad_phi_m_panels(patch: PolarPatch, r: float, theta: float,
                       cfg: QuadratureConfig):
    """One pass of the 2D evaluator at the configured resolution."""
    m = patch.m
    prof = RadialProfile(patch)
    rmin, rmax = prof.r_min, prof.r_max
    if rmax - rmin < 1e-15:
        return np.zeros(2)
    r_star = float(patch.radius(theta))
    segs = split_segments(rmin, rmax, interior=(r, r_star))
    rho, w_rho = panel_nodes(segs, cfg.radial_panels,
                             depth=cfg.split_depth, ratio=cfg.split_ratio)
    eta_rho = _eta_batch(patch, np.clip(rho, rmin * (1 + 1e-14), rmax * (1 - 1e-14)))
    acc_r = 0.0
    acc_t = 0.0
    for rh, wr, eh in zip(rho, w_rho, eta_rho):
        inner = rh < r
        x = (rh / r) ** m if inner else (r / rh) ** m
        g = m * eh / np.pi
        sa = sb = 0.0
        for a, b, inside in _angular_pieces(patch, eh, theta):
            hval = (1.0 - g) if inside else -g
            toward = a if abs(a) < abs(b) else b
            s, ws = panel_nodes([(a, b, toward)], cfg.angular_nodes,
                                depth=cfg.split_depth, ratio=cfg.split_ratio)
            _, _, s3, s4 = series_kernel(np.full_like(s, x), m * s)
            sa += hval * np.dot(ws, s3)
            sb += hval * np.dot(ws, s4)
        scale = wr * (rh / r) * m
        acc_r += (scale if inner else -scale) * sa
        acc_t += scale * sb
    d_r = acc_r / (2.0 * np.pi)
    d_theta = -acc_t * r / (2.0 * np.pi)
    return np.array([d_r, d_theta / r])


def grad_phi_m(patch: PolarPatch, r: float, theta: float,
               cfg: QuadratureConfig = DEFAULT_CFG, with_error: bool = False):
    """(d_r phi_m, (1/r) d_theta phi_m) by 2D quadrature of h against the
    closed-form kernels.

    The radial integral is split at rho = r and at the boundary radius along
    the evaluation ray; angular panels are graded toward the kernel peak.
    The result is paired with a coarse/fine error estimate; exceeding
    cfg.tolerance raises QuadratureError.
    """
    if r <= 0.0:
        raise ValueError("radius must be positive")
    fine = _grad_phi_m_panels(patch, r, theta, cfg)
    coarse_cfg = replace(cfg, split_depth=max(4, cfg.split_depth - 3),
                         radial_panels=max(4, cfg.radial_panels - 3),
                         angular_nodes=max(4, cfg.angular_nodes - 3))
    coarse = _grad_phi_m_panels(patch, r, theta, coarse_cfg)
    err = float(np.max(np.abs(fine - coarse)))
    if err > cfg.tolerance:
        raise QuadratureError(
            f"grad_phi_m error estimate {err:.3e} exceeds {cfg.tolerance:.3e}")
    return (fine, err) if with_error else fine


# ---------------------------------------------------------------------------
# grad phi_m: monotone single-integral evaluator
# ---------------------------------------------------------------------------

def _mono_radial_nodes(patch: PolarPatch, r: float, cfg: QuadratureConfig):
    prof = RadialProfile(patch)
    segs = split_segments(prof.r_min, prof.r_max, interior=(r,))
    return panel_nodes(segs, cfg.radial_panels,
                       depth=cfg.split_depth, ratio=cfg.split_ratio)


def grad_phi_m_monotone(patch: PolarPatch, r: float, theta: float,
                        cfg: QuadratureConfig = DEFAULT_CFG) -> np.ndarray:
    """(d_r phi_m, (1/r) d_theta phi_m) as single radial integrals of the
    arctan and log kernels; requires u strictly decreasing on (0, pi/m)."""
    if not patch.is_monotone():
        raise NonMonotoneError("monotone kernel evaluator requires u' < 0 on (0, pi/m)")
    if r <= 0.0:
        raise ValueError("radius must be positive")
    m = patch.m
    rho, w = _mono_radial_nodes(patch, r, cfg)
    if len(rho) == 0:
        return np.zeros(2)
    rmin, rmax = patch.r_min, patch.r_max
    eta = _eta_batch(patch, np.clip(rho, rmin * (1 + 1e-14), rmax * (1 - 1e-14)))
    outer = rho >= r
    x = np.where(outer, (r / np.maximum(rho, 1e-300)) ** m, (rho / r) ** m)

    def atk(yy):
        return np.arctan2(x * np.sin(yy), 1.0 - x * np.cos(yy))

    f1 = np.where(outer,
                  atk(m * (theta - eta)) - atk(m * (theta + eta)),
                  atk(m * (theta + eta)) - atk(m * (theta - eta)))
    f1 = f1 * (rho / r) / (2.0 * np.pi)
    den = 1.0 + x * x - 2.0 * x * np.cos(m * (theta - eta))
    f2 = rho / (4.0 * np.pi) * np.log1p(
        4.0 * x * np.sin(m * eta) * np.sin(m * theta) / den)
    d_r = float(np.dot(w, f1))
    d_theta = float(np.dot(w, f2))
    return np.array([d_r, d_theta / r])


# ---------------------------------------------------------------------------
# stream function and its gradient
# ---------------------------------------------------------------------------

def _boundary_frame(patch: PolarPatch, t: np.ndarray):
    """Boundary points and outward normal times |y'| at parameter t."""
    r = patch.radius(t)
    rp = patch.u_prime(t)
    ct, st = np.cos(t), np.sin(t)
    y = np.stack([r * ct, r * st], axis=-1)
    yp1 = rp * ct - r * st
    yp2 = rp * st + r * ct
    n_ds = np.stack([yp2, -yp1], axis=-1)
    return y, n_ds


def stream_value(patch, x, cfg: QuadratureConfig = DEFAULT_CFG,
                 with_error: bool = False):
    """(1_D * N)(x), N = (1/2 pi) log |.|, via the divergence-form boundary
    integral with the quadrature grid anchored at the nearest boundary angle.

    The reduced integrand behaves like t^2 log t at the closest boundary
    point, so the anchored trapezoid rule stays accurate for x on or near
    the boundary.
    """
    if isinstance(patch, EllipsePatch):
        patch = patch.to_polar_patch()
    x = np.asarray(x, dtype=float)

    def one_pass(k):
        anchor = float(np.arctan2(x[1], x[0])) if np.hypot(*x) > 1e-14 else 0.0
        t = anchor + 2.0 * np.pi * np.arange(k) / k
        y, n_ds = _boundary_frame(patch, t)
        d = y - x[None, :]
        r2 = np.einsum("ij,ij->i", d, d)
        phi = (np.log(np.maximum(r2, 1e-300)) - 1.0) / 4.0
        vals = phi * np.einsum("ij,ij->i", d, n_ds)
        vals[r2 < 1e-26] = 0.0  # t^2 log t limit at the singular node
        return float(vals.mean())

    k = cfg.boundary_nodes
    fine = one_pass(2 * k)
    if with_error:
        return fine, abs(fine - one_pass(k))
    return fine


def grad_stream_direct(patch: PolarPatch, x,
                       cfg: QuadratureConfig = DEFAULT_CFG) -> np.ndarray:
    """grad(1_D * N)(x) = -(1/2 pi) oint n(y) log|x - y| ds(y).

    Reference evaluator; accurate for x away from the boundary curve.
    """
    x = np.asarray(x, dtype=float)
    k = 2 * cfg.boundary_nodes
    anchor = float(np.arctan2(x[1], x[0])) if np.hypot(*x) > 1e-14 else 0.0
    t = anchor + 2.0 * np.pi * (np.arange(k) + 0.5) / k
    y, n_ds = _boundary_frame(patch, t)
    d = x[None, :] - y
    logs = 0.5 * np.log(np.maximum(np.einsum("ij,ij->i", d, d), 1e-300))
    return -(n_ds * logs[:, None]).mean(axis=0)


def grad_stream(patch, x, cfg: QuadratureConfig = DEFAULT_CFG) -> np.ndarray:
    """grad(1_D * N)(x) assembled as grad phi_r + grad phi_m.

    For an EllipsePatch interior point the exact linear field is returned.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(patch, EllipsePatch):
        if (x[0] / patch.a) ** 2 + (x[1] / patch.b) ** 2 <= 1.0:
            return patch.interior_grad_stream(x)
        patch = patch.to_polar_patch()
    r = float(np.hypot(*x))
    if r < 1e-12:
        return np.zeros(2)
    theta = float(np.arctan2(x[1], x[0]))
    radial = phi_r_prime(patch, r)
    if patch.is_disk():
        gm = np.zeros(2)
    elif patch.is_monotone():
        gm = grad_phi_m_monotone(patch, r, theta, cfg)
    else:
        gm = grad_phi_m(patch, r, theta, cfg)
    e_r = np.array([np.cos(theta), np.sin(theta)])
    e_t = np.array([-np.sin(theta), np.cos(theta)])
    return (radial + gm[0]) * e_r + gm[1] * e_t


# ---------------------------------------------------------------------------
# torsion function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TorsionSolution:
    """p = -|x|^2/2 + harmonic part, with the harmonic part expanded in
    r^{nm} cos(n m theta) (plus a constant) fitted at the boundary."""

    patch: PolarPatch
    coeffs: np.ndarray
    r_scale: float
    degree: int
    condition: float
    boundary_residual: float
    integral: float

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        t = np.arctan2(x[..., 1], x[..., 0])
        m = self.patch.m
        h = np.full_like(r, self.coeffs[0])
        for n in range(1, self.degree + 1):
            h = h + self.coeffs[n] * (r / self.r_scale) ** (n * m) * np.cos(n * m * t)
        return -0.5 * r * r + h


def torsion_solve(patch: PolarPatch, degree: int | None = None,
                  cond_guard: float = 1e12,
                  boundary_tol: float = 1e-8) -> TorsionSolution:
    """Solve Laplace(p) = -2 in D, p = 0 on the boundary.

    Writes p = -|x|^2/2 + h with h harmonic and fits h in harmonic
    polynomials at boundary collocation points by least squares.  The degree
    defaults to twice the patch's Fourier degree and is lowered until the
    estimated condition number passes the guard; a boundary residual above
    `boundary_tol` raises TorsionFitError.
    """
    m = patch.m
    if degree is None:
        # twice the patch's Fourier degree, with a floor: the harmonic
        # extension of |x|^2/2 on a wavy boundary carries more modes than
        # the boundary graph itself
        degree = max(32, 2 * patch.n_modes)
    r_scale = patch.r_max
    ncol = max(4 * degree + 16, 256)
    th = np.pi / m * (np.arange(ncol) + 0.5) / ncol
    rb = patch.radius(th)
    target = 0.5 * rb ** 2

    def design(deg):
        a = np.empty((ncol, deg + 1))
        a[:, 0] = 1.0
        for n in range(1, deg + 1):
            a[:, n] = (rb / r_scale) ** (n * m) * np.cos(n * m * th)
        return a

    deg = degree
    cond = np.inf
    mat = None
    while deg >= 1:
        mat = design(deg)
        sv = np.linalg.svd(mat, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        if cond <= cond_guard:
            break
        deg -= max(1, deg // 8)
    if mat is None or cond > cond_guard:
        raise TorsionFitError(
            f"harmonic fit ill-conditioned at every degree (cond {cond:.2e})")
    coeffs, *_ = np.linalg.lstsq(mat, target, rcond=None)
    bres = float(np.max(np.abs(mat @ coeffs - target)))
    if bres > boundary_tol:
        raise TorsionFitError(
            f"boundary residual {bres:.3e} above tolerance {boundary_tol:.3e} "
            f"(degree {deg})")

    kq = max(patch.grid_size, 4096)
    tq = patch.theta_grid(kq)
    rq = patch.radius(tq)
    integral = -np.mean(rq ** 4) * 2.0 * np.pi / 8.0 + coeffs[0] * area(patch)
    for n in range(1, deg + 1):
        prof = rq ** 2 * (rq / r_scale) ** (n * m) * np.cos(n * m * tq)
        integral += coeffs[n] * np.mean(prof) * 2.0 * np.pi / (n * m + 2)

    return TorsionSolution(patch=patch, coeffs=coeffs, r_scale=r_scale,
                           degree=deg, condition=cond,
                           boundary_residual=bres, integral=float(integral))
