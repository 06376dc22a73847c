"""Patch representations and purely geometric functionals.

A star-shaped patch is stored as a cosine polar graph: the boundary is
(1 + u(theta)) (cos theta, sin theta) with

    u(theta) = a0 + sum_{n>=1} a_n cos(n m theta)

for fold symmetry m.  All angular integrals use the uniform trapezoid rule,
which is spectrally accurate for the smooth periodic integrands here.
"""

from __future__ import annotations

import dataclasses
import functools
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

DEFAULT_GRID = 2048


class PatchError(ValueError):
    """Invalid patch data (non-positive radius, bad fold symmetry, ...)."""


class NonMonotoneError(PatchError):
    """Operation requires u strictly decreasing on (0, pi/m)."""


@dataclass(frozen=True)
class PolarPatch:
    """Star-shaped patch as a cosine polar graph.

    m: fold symmetry (>= 1).  coeffs: (a0, a1, ..., aN) so that
    u(theta) = a0 + sum a_n cos(n m theta).  grid_size: uniform theta
    samples per full circle used by quadratures.
    """

    m: int
    coeffs: tuple
    grid_size: int = DEFAULT_GRID

    def __post_init__(self):
        if self.m < 1:
            raise PatchError(f"fold symmetry must be >= 1, got {self.m}")
        if self.grid_size < 16:
            raise PatchError(f"grid_size too small: {self.grid_size}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if len(self.coeffs) == 0:
            raise PatchError("coeffs must contain at least a0")
        if np.min(self.radius(self.theta_grid())) <= 0.0:
            raise PatchError("boundary must enclose the origin: 1 + u > 0 fails")

    # -- evaluation ---------------------------------------------------------

    def _coeff_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def u(self, theta) -> np.ndarray:
        """Radial perturbation u(theta); vectorized."""
        theta = np.asarray(theta, dtype=float)
        c = self._coeff_array()
        n = np.arange(len(c)) * self.m
        return np.cos(np.multiply.outer(theta, n)) @ c

    def u_prime(self, theta) -> np.ndarray:
        """d/dtheta of u."""
        theta = np.asarray(theta, dtype=float)
        c = self._coeff_array()
        n = np.arange(len(c)) * self.m
        return -np.sin(np.multiply.outer(theta, n)) @ (c * n)

    def radius(self, theta) -> np.ndarray:
        """Boundary radius 1 + u(theta)."""
        return 1.0 + self.u(theta)

    def theta_grid(self, size: int | None = None) -> np.ndarray:
        size = size or self.grid_size
        return 2.0 * np.pi * np.arange(size) / size

    # -- derived scalars ----------------------------------------------------

    @property
    def n_modes(self) -> int:
        """Highest cosine mode index N (coefficient of cos(N m theta))."""
        return len(self.coeffs) - 1

    @property
    def r_min(self) -> float:
        return _radius_extrema(self)[0]

    @property
    def r_max(self) -> float:
        return _radius_extrema(self)[1]

    @property
    def u_linf(self) -> float:
        rmin, rmax = _radius_extrema(self)
        return max(abs(rmin - 1.0), abs(rmax - 1.0))

    def is_disk(self, tol: float = 1e-14) -> bool:
        return self.u_linf <= tol

    def is_monotone(self) -> bool:
        """Check u' < 0 strictly at interior sample nodes of (0, pi/m).

        Endpoint nodes are exempt (u' vanishes there by evenness).
        """
        return _is_monotone(self)

    # -- construction helpers -------------------------------------------------

    def with_coeffs(self, coeffs) -> "PolarPatch":
        return dataclasses.replace(self, coeffs=tuple(coeffs))

    def dilate(self, factor: float) -> "PolarPatch":
        """Uniform dilation x -> factor*x of the patch."""
        if factor <= 0:
            raise PatchError("dilation factor must be positive")
        c = self._coeff_array() * factor
        c[0] = factor * (1.0 + self.coeffs[0]) - 1.0
        return self.with_coeffs(c)

    # -- JSON schema: {"m": int, "coeffs": [a0, a1, ...], "grid_size": int} --

    def to_dict(self) -> dict:
        return {"m": self.m, "coeffs": list(self.coeffs), "grid_size": self.grid_size}

    @classmethod
    def from_dict(cls, d: dict) -> "PolarPatch":
        unknown = set(d) - {"m", "coeffs", "grid_size"}
        if unknown:
            raise PatchError(f"unknown patch keys: {sorted(unknown)}")
        return cls(m=int(d["m"]), coeffs=tuple(d["coeffs"]),
                   grid_size=int(d.get("grid_size", DEFAULT_GRID)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "PolarPatch":
        return cls.from_dict(json.loads(s))


@functools.lru_cache(maxsize=512)
def _radius_extrema(patch: PolarPatch):
    r = patch.radius(patch.theta_grid())
    return float(np.min(r)), float(np.max(r))


@functools.lru_cache(maxsize=512)
def _is_monotone(patch: PolarPatch) -> bool:
    k = max(64, patch.grid_size // (2 * patch.m))
    t = np.pi / patch.m * (np.arange(1, k) / k)
    return bool(np.all(patch.u_prime(t) < 0.0))


def disk_patch(m: int = 1, grid_size: int = DEFAULT_GRID) -> PolarPatch:
    return PolarPatch(m=m, coeffs=(0.0,), grid_size=grid_size)


def cosine_patch(m: int, amplitude: float, grid_size: int = DEFAULT_GRID) -> PolarPatch:
    """Single-mode patch u = amplitude * cos(m theta)."""
    return PolarPatch(m=m, coeffs=(0.0, amplitude), grid_size=grid_size)


@dataclass(frozen=True)
class EllipsePatch:
    """Exact Kirchhoff ellipse with semi-axes a >= b > 0.

    Rotates rigidly with angular velocity a*b/(a+b)^2; all moments and the
    torsion function are closed-form, so this type supplies machine-precision
    oracles.
    """

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.b <= self.a):
            raise PatchError(f"need 0 < b <= a, got a={self.a}, b={self.b}")

    @property
    def area(self) -> float:
        return np.pi * self.a * self.b

    @property
    def omega_exact(self) -> float:
        return self.a * self.b / (self.a + self.b) ** 2

    @property
    def r_max(self) -> float:
        return self.a

    @property
    def r_min(self) -> float:
        return self.b

    @property
    def second_moment(self) -> float:
        """integral of |x|^2 over the ellipse: (pi/4) a b (a^2 + b^2)."""
        return np.pi / 4.0 * self.a * self.b * (self.a ** 2 + self.b ** 2)

    @property
    def second_moment_excess(self) -> float:
        """integral |x|^2 - area^2 / (2 pi)."""
        return self.second_moment - self.area ** 2 / (2.0 * np.pi)

    @property
    def torsion_integral(self) -> float:
        """integral of the torsion function: pi a^3 b^3 / (2 (a^2 + b^2))."""
        a, b = self.a, self.b
        return np.pi * a ** 3 * b ** 3 / (2.0 * (a ** 2 + b ** 2))

    def torsion_value(self, x) -> np.ndarray:
        """Torsion function c (1 - x1^2/a^2 - x2^2/b^2), c = a^2 b^2/(a^2+b^2)."""
        x = np.asarray(x, dtype=float)
        c = self.a ** 2 * self.b ** 2 / (self.a ** 2 + self.b ** 2)
        return c * (1.0 - x[..., 0] ** 2 / self.a ** 2 - x[..., 1] ** 2 / self.b ** 2)

    def radius(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        a, b = self.a, self.b
        return a * b / np.sqrt((b * np.cos(theta)) ** 2 + (a * np.sin(theta)) ** 2)

    def interior_grad_stream(self, x) -> np.ndarray:
        """Exact interior gradient of the Newtonian potential of the patch:
        (b x1 / (a+b), a x2 / (a+b))."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        out[..., 0] = self.b * x[..., 0] / (self.a + self.b)
        out[..., 1] = self.a * x[..., 1] / (self.a + self.b)
        return out

    def normalized(self) -> "EllipsePatch":
        """Rescaled to area pi (angular velocity is dilation-invariant)."""
        s = 1.0 / np.sqrt(self.a * self.b)
        return EllipsePatch(a=self.a * s, b=self.b * s)

    def to_polar_patch(self, n_modes: int = 128, grid_size: int = 4096) -> PolarPatch:
        """Project the polar graph onto the cosine basis with m = 2.

        The graph has full cosine spectrum decaying like ((a-b)/(a+b))^(2n);
        n_modes must grow with eccentricity.
        """
        k = 1 << 14
        t = 2.0 * np.pi * np.arange(k) / k
        u = self.radius(t) - 1.0
        spec = np.fft.rfft(u) / k
        c = np.zeros(n_modes + 1)
        c[0] = spec[0].real
        idx = 2 * np.arange(1, n_modes + 1)
        c[1:] = 2.0 * spec[idx].real
        return PolarPatch(m=2, coeffs=tuple(c), grid_size=grid_size)


@dataclass(frozen=True)
class RotatingState:
    """(patch, omega) pair; a candidate or converged rigidly-rotating state."""

    patch: PolarPatch
    omega: float

    @property
    def lambda_(self) -> float:
        """Angular-velocity gap 1/2 - omega."""
        return 0.5 - self.omega

    def to_dict(self) -> dict:
        return {"patch": self.patch.to_dict(), "omega": self.omega}

    @classmethod
    def from_dict(cls, d: dict) -> "RotatingState":
        return cls(patch=PolarPatch.from_dict(d["patch"]), omega=float(d["omega"]))


@dataclass(frozen=True)
class AsymmetryResult:
    """Outcome of the center-optimized symmetric-difference asymmetry."""

    value: float
    center: tuple
    converged: bool = True


# ---------------------------------------------------------------------------
# geometric functionals
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=512)
def area(patch: PolarPatch) -> float:
    """Patch area pi + (1/2) integral (u^2 + 2u) dtheta."""
    u = patch.u(patch.theta_grid())
    return float(np.pi + 0.5 * np.mean(u * u + 2.0 * u) * 2.0 * np.pi)


def normalize_area(patch: PolarPatch) -> PolarPatch:
    """Rescale so the area is pi: 1 + u' = sqrt(pi/area) (1 + u).

    Exact in coefficient space; a0 absorbs the scaling.
    """
    s = np.sqrt(np.pi / area(patch))
    return patch.dilate(s)


def second_moment_excess(patch: PolarPatch, tol: float = 1e-8) -> float:
    """integral_D |x|^2 dx - area^2/(2 pi) for an area-pi patch.

    Evaluates integral_T (u^2 + u^3 + u^4/4) dtheta, which assumes area pi;
    signals if the area deviates by more than `tol` (relative).
    """
    a = area(patch)
    if abs(a - np.pi) > tol * np.pi:
        raise PatchError(f"second_moment_excess requires area pi, got {a!r}")
    u = patch.u(patch.theta_grid())
    return float(np.mean(u ** 2 + u ** 3 + 0.25 * u ** 4) * 2.0 * np.pi)


def _boundary_series_coeffs(patch: PolarPatch, values_of_theta) -> np.ndarray:
    """Cosine coefficients (in multiples of m) of a band-limited functional."""
    # u^2 + 2u has bandwidth 2*N*m; oversample to keep the FFT alias-free.
    need = 4 * max(1, patch.n_modes) * patch.m + 8
    k = max(patch.grid_size, 1 << int(np.ceil(np.log2(need))))
    t = 2.0 * np.pi * np.arange(k) / k
    return np.fft.rfft(values_of_theta(t)) / k


@functools.lru_cache(maxsize=512)
def accumulated_mass_coeffs(patch: PolarPatch):
    """(c0, c[1:]) with u^2 + 2u = c0 + sum_k c_k cos(k m theta)."""
    spec = _boundary_series_coeffs(
        patch, lambda t: patch.u(t) ** 2 + 2.0 * patch.u(t))
    kmax = 2 * patch.n_modes + 1
    c0 = spec[0].real
    ck = np.zeros(kmax + 1)
    for kk in range(1, kmax + 1):
        idx = kk * patch.m
        if idx < len(spec):
            ck[kk] = 2.0 * spec[idx].real
    return c0, ck


def f_accumulated(patch: PolarPatch, theta) -> np.ndarray:
    """Running integral f(theta) = int_0^theta (u^2 + 2u) ds.

    Computed from the exact antiderivative of the cosine series, so f(2 pi)
    vanishes identically for an area-pi patch and f is 2 pi/m periodic.
    """
    theta = np.asarray(theta, dtype=float)
    c0, ck = accumulated_mass_coeffs(patch)
    out = c0 * theta
    m = patch.m
    for kk in range(1, len(ck)):
        if ck[kk] != 0.0:
            out = out + ck[kk] * np.sin(kk * m * theta) / (kk * m)
    return out


def _sgn(x: np.ndarray) -> np.ndarray:
    """Sign with sgn(0) = +1."""
    return np.where(x >= 0.0, 1.0, -1.0)


def asymmetry_origin(patch: PolarPatch) -> float:
    """|D symm-diff B| / pi for the unit disk centered at the origin.

    Equals (1/pi) integral (|u| + sgn(u) u^2/2) dtheta for an area-pi patch.
    """
    # |u| has kinks; oversample the default grid for the trapezoid rule.
    u = patch.u(patch.theta_grid(4 * patch.grid_size))
    vals = np.abs(u) + _sgn(u) * u * u / 2.0
    return float(np.mean(vals) * 2.0)


def _symmdiff_to_disk(patch: PolarPatch, center: np.ndarray, grid: int) -> float:
    """|D symm-diff B(center)| / pi via the per-ray radial formula.

    Both sets are star-shaped about the origin (requires |center| < 1), so
    along each ray the symmetric difference has measure |R^2 - rho^2| / 2.
    """
    t = patch.theta_grid(grid)
    r_patch = patch.radius(t)
    c = center[0] * np.cos(t) + center[1] * np.sin(t)
    disc = c * c + 1.0 - center @ center
    rho = c + np.sqrt(np.maximum(disc, 0.0))
    return float(np.mean(np.abs(r_patch ** 2 - rho ** 2)) * 2.0 * np.pi / (2.0 * np.pi))


def fraenkel_asymmetry(patch: PolarPatch, coarse: int = 5,
                       refine_tol: float = 1e-12) -> AsymmetryResult:
    """Infimum over centers x0 of |D symm-diff B(x0)| / pi.

    Two-stage search: a coarse polar grid of candidate centers |x0| <= 0.5
    seeded at the origin and the centroid, then Nelder-Mead refinement.
    Ties are broken toward the smallest |x0|.
    """
    grid = 4 * patch.grid_size

    def objective(c):
        c = np.asarray(c, dtype=float)
        if c @ c >= 0.98:
            return 2.0 + float(c @ c)  # outside the admissible ball
        return _symmdiff_to_disk(patch, c, grid)

    cands = [np.zeros(2), mass_center(patch)]
    radii = np.linspace(0.1, 0.5, coarse)
    for r in radii:
        for ang in np.linspace(0.0, 2.0 * np.pi, 12, endpoint=False):
            cands.append(np.array([r * np.cos(ang), r * np.sin(ang)]))
    vals = [objective(c) for c in cands]
    order = np.argsort(vals)
    best = None
    converged = True
    for idx in order[:3]:
        res = minimize(objective, cands[idx], method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 400})
        converged = converged and bool(res.success)
        cand = (float(res.fun), np.asarray(res.x))
        if best is None or cand[0] < best[0] - refine_tol or (
                abs(cand[0] - best[0]) <= refine_tol
                and np.hypot(*cand[1]) < np.hypot(*best[1])):
            best = cand
    # the origin is always admissible, so the value never exceeds the
    # origin-centered asymmetry; for flat symmetric minima the center is
    # resolved only to ~sqrt(grid noise / curvature)
    at_origin = objective(np.zeros(2))
    if at_origin <= best[0]:
        best = (at_origin, np.zeros(2))
    return AsymmetryResult(value=best[0], center=tuple(best[1]), converged=converged)


def eta_inverse(patch: PolarPatch, r: float, tol: float = 1e-13) -> float:
    """Unique theta in (0, pi/m) with 1 + u(theta) = r, by bisection.

    Requires u strictly decreasing on (0, pi/m) and r strictly inside
    (r_min, r_max).
    """
    if not patch.is_monotone():
        raise NonMonotoneError("eta_inverse requires u' < 0 on (0, pi/m)")
    rmin, rmax = patch.r_min, patch.r_max
    if not (rmin < r < rmax):
        raise PatchError(f"radius {r} outside ({rmin}, {rmax})")
    return float(_eta_batch(patch, np.array([r]), tol)[0])


@functools.lru_cache(maxsize=256)
def _eta_table(patch: PolarPatch, size: int = 4096):
    """Dense samples of the decreasing boundary graph on [0, pi/m]."""
    theta = np.pi / patch.m * np.arange(size + 1) / size
    return theta, patch.radius(theta)


def _eta_batch(patch: PolarPatch, r: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """Vectorized inverse of the decreasing boundary graph on (0, pi/m).

    A dense table provides the initial bracket; a few Newton steps (with a
    bisection-style clamp into the bracket) polish to full precision.  The
    caller clips r strictly inside (r_min, r_max).
    """
    theta_tab, rho_tab = _eta_table(patch)
    hi_t = np.interp(-r, -rho_tab, theta_tab)  # rho_tab is decreasing
    step = theta_tab[1] - theta_tab[0]
    lo_t = np.clip(hi_t - step, 0.0, np.pi / patch.m)
    hi_t = np.clip(hi_t + step, 0.0, np.pi / patch.m)
    t = 0.5 * (lo_t + hi_t)
    for _ in range(12):
        f = patch.radius(t) - r
        if np.max(np.abs(f)) < tol:
            break
        too_small = f > 0.0  # radius above target: theta still too small
        lo_t = np.where(too_small, t, lo_t)
        hi_t = np.where(too_small, hi_t, t)
        d = patch.u_prime(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_new = t - f / d
        bad = ~np.isfinite(t_new) | (t_new < lo_t) | (t_new > hi_t)
        t = np.where(bad, 0.5 * (lo_t + hi_t), t_new)
    return t


def mass_center(patch: PolarPatch) -> np.ndarray:
    """Centroid (1/area) integral_D x dx by polar quadrature."""
    t = patch.theta_grid()
    r3 = patch.radius(t) ** 3 / 3.0
    cx = np.mean(r3 * np.cos(t)) * 2.0 * np.pi
    cy = np.mean(r3 * np.sin(t)) * 2.0 * np.pi
    return np.array([cx, cy]) / area(patch)
