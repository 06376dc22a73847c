import numpy as np
import pytest

from vpl.geometry import (EllipsePatch, NonMonotoneError, PolarPatch,
                          cosine_patch, disk_patch, normalize_area)
from vpl.potential import (AngularDeviation, QuadratureConfig, RadialProfile,
                           TorsionFitError, g_profile, grad_phi_m,
                           grad_phi_m_monotone, grad_stream,
                           grad_stream_direct, phi_r_prime, series_kernel,
                           stream_value, torsion_solve)


def _grad_phi_m_oracle(patch, r, theta):
    """Desingularized boundary-integral reference for grad phi_m."""
    x = np.array([r * np.cos(theta), r * np.sin(theta)])
    g = grad_stream_direct(patch, x)
    e_r = np.array([np.cos(theta), np.sin(theta)])
    e_t = np.array([-np.sin(theta), np.cos(theta)])
    return np.array([g @ e_r - phi_r_prime(patch, r), g @ e_t])


# ---------------------------------------------------------------------------
# radial profile
# ---------------------------------------------------------------------------

def test_g_profile_disk():
    d = disk_patch()
    assert g_profile(d, 0.5) == 1.0
    assert g_profile(d, 2.0) == 0.0


def test_g_profile_midradius(patch_m3):
    # eta(1) = pi/6 for u = 0.1 cos(3 theta): g(1) = 3 (pi/6) / pi = 1/2
    assert g_profile(patch_m3, 1.0) == pytest.approx(0.5, abs=1e-12)
    # oracle: angular count of the indicator on the circle
    t = patch_m3.theta_grid(1 << 16)
    frac = np.mean(1.0 < patch_m3.radius(t))
    assert g_profile(patch_m3, 1.0) == pytest.approx(frac, abs=1e-4)


def test_g_profile_bounds_and_monotonicity_of_cap(patch_m3):
    prof = RadialProfile(patch_m3)
    rs = np.linspace(0.5, 1.3, 40)
    gs = [prof.g(r) for r in rs]
    caps = [prof.cap(r) for r in rs]
    assert all(0.0 <= g <= 1.0 for g in gs)
    assert np.all(np.diff(caps) >= -1e-13)
    assert caps[-1] == pytest.approx(prof.area, abs=1e-12)


def test_phi_r_prime_disk():
    d = disk_patch()
    assert phi_r_prime(d, 0.5) == pytest.approx(0.25, abs=1e-15)
    assert phi_r_prime(d, 2.0) == pytest.approx(0.25, abs=1e-15)


def test_phi_r_prime_outside_area_pi_patch(patch_m4_norm):
    r = patch_m4_norm.r_max + 0.1
    assert phi_r_prime(patch_m4_norm, r) == pytest.approx(1.0 / (2 * r), rel=1e-10)


def test_phi_r_prime_continuity(patch_m3):
    for r0 in (patch_m3.r_min, patch_m3.r_max):
        lo = phi_r_prime(patch_m3, r0 - 1e-7)
        hi = phi_r_prime(patch_m3, r0 + 1e-7)
        assert lo == pytest.approx(hi, abs=1e-6)


def test_angular_deviation_zero_mean(patch_m3):
    dev = AngularDeviation(patch_m3)
    for rho in np.linspace(patch_m3.r_min + 1e-3, patch_m3.r_max - 1e-3, 7):
        assert abs(dev.angular_mean(rho)) < 1e-12
        # h is even and 2 pi/m periodic
        eta = np.linspace(0.1, 0.6, 5)
        assert np.allclose(dev.values(rho, eta), dev.values(rho, -eta))
        assert np.allclose(dev.values(rho, eta),
                           dev.values(rho, eta + 2 * np.pi / 3))


# ---------------------------------------------------------------------------
# series kernels
# ---------------------------------------------------------------------------

def test_series_kernel_log_value():
    s1, *_ = series_kernel(0.5, 0.0)
    assert s1 == pytest.approx(np.log(2.0), abs=1e-15)


def test_series_kernel_arctan_value():
    _, s2, _, _ = series_kernel(0.5, np.pi / 2)
    assert s2 == pytest.approx(np.arctan(0.5), abs=1e-15)


def test_series_kernel_rejects_bad_ratio():
    with pytest.raises(ValueError):
        series_kernel(1.0, 0.3)
    with pytest.raises(ValueError):
        series_kernel(-0.1, 0.3)


def test_series_kernel_vs_partial_sums():
    n = np.arange(1, 201)
    for x in (0.3,):
        for y in (1.0,):
            ref = (np.sum(x ** n * np.cos(n * y) / n),
                   np.sum(x ** n * np.sin(n * y) / n),
                   np.sum(x ** n * np.cos(n * y)),
                   np.sum(x ** n * np.sin(n * y)))
            got = series_kernel(x, y)
            for a, b in zip(got, ref):
                assert a == pytest.approx(b, abs=1e-14)


# ---------------------------------------------------------------------------
# grad phi_m evaluators
# ---------------------------------------------------------------------------

def test_grad_phi_m_disk_zero():
    d = disk_patch(m=6)
    assert np.allclose(grad_phi_m(d, 0.5, 0.1), 0.0, atol=1e-14)
    assert np.allclose(grad_phi_m_monotone(cosine_patch(6, 1e-15), 0.5, 0.1),
                       0.0, atol=1e-12)


def test_grad_phi_m_vs_direct_oracle():
    p = cosine_patch(6, 0.1)
    vec, err = grad_phi_m(p, 0.5, 0.0, with_error=True)
    oracle = _grad_phi_m_oracle(p, 0.5, 0.0)
    assert np.abs(vec - oracle).max() < 1e-6
    assert err < 1e-6


def test_monotone_vs_2d_evaluator(patch_m3):
    got_m = grad_phi_m_monotone(patch_m3, 0.95, 0.2)
    got_2d = grad_phi_m(patch_m3, 0.95, 0.2)
    assert np.abs(got_m - got_2d).max() < 1e-8


def test_monotone_rejects_non_monotone():
    p = PolarPatch(m=3, coeffs=(0.0, 0.02, 0.08))
    with pytest.raises(NonMonotoneError):
        grad_phi_m_monotone(p, 0.9, 0.1)


GRAD_SCAN_RADII = (0.1, 0.3, 0.5, 0.7, 0.85)   # interior to every family member
GRAD_SCAN_ANGLES = (0.0, 0.3, 0.7, 1.2, 2.0)


def gradient_smallness_constants(ms=(3, 6, 12, 24), amplitude=0.1):
    """max over a fixed interior sample grid of |grad phi_m| m / r, per m,
    for the fixed-amplitude family u = amplitude cos(m theta)."""
    consts = {}
    for m in ms:
        p = cosine_patch(m, amplitude)
        worst = 0.0
        for r in GRAD_SCAN_RADII:
            for t in GRAD_SCAN_ANGLES:
                g = grad_phi_m_monotone(p, r, t)
                worst = max(worst, float(np.hypot(*g)) * m / r)
        consts[m] = worst
    return consts


def test_gradient_smallness_scaling():
    consts = gradient_smallness_constants()
    assert all(np.isfinite(v) and v > 0 for v in consts.values())
    assert consts[24] <= 2.0 * consts[3]


def test_angular_derivative_boundary_structure(patch_m3):
    """Near the inner radius, d_theta phi_m evaluated on the boundary graph
    stays finite and shrinks linearly with the angular gap delta."""
    from vpl.geometry import _eta_batch
    vals = []
    deltas = []
    for eps in (0.02, 0.01, 0.005):
        r = patch_m3.r_min * (1.0 + eps)
        eta = float(_eta_batch(patch_m3, np.array([r]))[0])
        delta = np.pi / patch_m3.m - eta
        g = grad_phi_m_monotone(patch_m3, r, eta)
        vals.append(abs(g[1] * r))  # d_theta phi_m itself
        deltas.append(delta)
    ratios = [v / d for v, d in zip(vals, deltas)]
    assert all(np.isfinite(r) for r in ratios)
    assert max(ratios) <= 4.0 * min(ratios)


# ---------------------------------------------------------------------------
# stream values
# ---------------------------------------------------------------------------

def test_stream_disk_interior():
    d = disk_patch()
    assert stream_value(d, (0.5, 0.0)) == pytest.approx(-0.1875, abs=1e-12)


def test_stream_disk_exterior():
    d = disk_patch()
    assert stream_value(d, (2.0, 0.0)) == pytest.approx(0.5 * np.log(2.0),
                                                        abs=1e-12)


def test_stream_ellipse_center_vs_refined(ellipse_patch_2):
    val, err = stream_value(ellipse_patch_2, (0.0, 0.0), with_error=True)
    ref = stream_value(ellipse_patch_2, (0.0, 0.0),
                       QuadratureConfig(boundary_nodes=8192))
    assert val == pytest.approx(ref, abs=1e-8)
    assert err < 1e-8


def test_laplacian_consistency(patch_m3):
    """FD Laplacian of the stream: 1 inside the patch, 0 outside."""
    h = 1e-3
    for (x, expected) in [((0.4, 0.2), 1.0), ((1.6, 0.3), 0.0)]:
        x = np.array(x)
        vals = [stream_value(patch_m3, x + d) for d in
                (np.array([h, 0]), np.array([-h, 0]),
                 np.array([0, h]), np.array([0, -h]))]
        lap = (sum(vals) - 4 * stream_value(patch_m3, x)) / h ** 2
        assert lap == pytest.approx(expected, abs=1e-4)


def test_grad_stream_matches_fd(patch_m3):
    h = 1e-5
    for x in (np.array([0.4, 0.2]), np.array([0.9, -0.3]), np.array([1.5, 0.4])):
        g = grad_stream(patch_m3, x)
        fd = np.array([
            (stream_value(patch_m3, x + [h, 0]) - stream_value(patch_m3, x - [h, 0])),
            (stream_value(patch_m3, x + [0, h]) - stream_value(patch_m3, x - [0, h])),
        ]) / (2 * h)
        assert np.abs(g - fd).max() < 1e-5


def test_grad_stream_disk_interior():
    d = disk_patch()
    x = np.array([0.3, 0.2])
    assert np.allclose(grad_stream(d, x), x / 2.0, atol=1e-12)


def test_grad_stream_ellipse_exact_interior():
    e = EllipsePatch(2.0, 0.5)
    x = np.array([1.0, 0.2])
    assert np.allclose(grad_stream(e, x), [0.2, 0.16], atol=1e-15)


def test_grad_stream_decomposition_vs_direct(patch_m4_norm):
    for x in (np.array([0.5, 0.1]), np.array([0.8, 0.6])):
        assembled = grad_stream(patch_m4_norm, x)
        direct = grad_stream_direct(patch_m4_norm, x)
        assert np.abs(assembled - direct).max() < 1e-6


def test_gradient_linfty_bound_indicator_difference():
    """sup |grad N * (1_D - 1_B)| <= sqrt(2/pi) sqrt(|f|_1 |f|_inf)."""
    from vpl.geometry import asymmetry_origin
    from vpl.transport import _excess_field
    for m, amp in [(3, 0.1), (4, 0.1), (2, 0.08), (6, 0.05), (5, 0.15)]:
        q = normalize_area(cosine_patch(m, amp))
        prof = RadialProfile(q)
        l1 = np.pi * asymmetry_origin(q)
        bound = np.sqrt(2.0 / np.pi) * np.sqrt(l1 * 1.0)
        worst = 0.0
        for r in (0.3, 0.8, 0.95, 1.0, 1.05, 1.5):
            for t in np.linspace(0, np.pi / m, 4):
                e = _excess_field(q, prof, r, t, QuadratureConfig())
                worst = max(worst, float(np.hypot(*e)))
        assert worst < bound


# ---------------------------------------------------------------------------
# torsion function
# ---------------------------------------------------------------------------

def test_torsion_disk():
    sol = torsion_solve(disk_patch())
    assert sol.integral == pytest.approx(np.pi / 4.0, abs=1e-12)
    x = np.array([[0.3, 0.1], [0.0, 0.0], [0.7, -0.2]])
    expected = (1.0 - (x ** 2).sum(axis=1)) / 2.0
    assert np.allclose(sol.evaluate(x), expected, atol=1e-12)


def test_torsion_ellipse_integral(ellipse_patch_2):
    sol = torsion_solve(ellipse_patch_2)
    # exact: pi a^3 b^3 / (2 (a^2 + b^2)) = pi/8.5
    assert sol.integral == pytest.approx(np.pi / 8.5, rel=1e-10)
    assert sol.boundary_residual < 1e-8


def test_torsion_ellipse_matches_closed_form(ellipse_patch_2):
    e = EllipsePatch(2.0, 0.5)
    sol = torsion_solve(ellipse_patch_2)
    pts = np.array([[0.5, 0.1], [1.2, 0.2], [0.0, 0.3]])
    assert np.allclose(sol.evaluate(pts), e.torsion_value(pts), atol=1e-9)


def test_torsion_nonnegative_inside(patch_m4_norm):
    sol = torsion_solve(patch_m4_norm)
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    for s in (0.2, 0.6, 0.9, 0.99):
        x = np.stack([s * patch_m4_norm.radius(t) * np.cos(t),
                      s * patch_m4_norm.radius(t) * np.sin(t)], axis=-1)
        assert np.all(sol.evaluate(x) >= -1e-10)


def test_torsion_fd_laplacian(patch_m4_norm):
    sol = torsion_solve(patch_m4_norm)
    h = 1e-3
    for x in (np.array([0.3, 0.2]), np.array([0.0, 0.5])):
        vals = [sol.evaluate(np.array([x + d]))[0] for d in
                ([h, 0], [-h, 0], [0, h], [0, -h])]
        lap = (sum(vals) - 4 * sol.evaluate(np.array([x]))[0]) / h ** 2
        assert lap == pytest.approx(-2.0, abs=1e-4)


def test_torsion_condition_guard():
    # absurd cond guard forces rejection at every degree
    with pytest.raises(TorsionFitError):
        torsion_solve(cosine_patch(2, 0.3), degree=64, cond_guard=1.0 + 1e-9)
