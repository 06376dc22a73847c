import numpy as np
import pytest

from vpl.geometry import (EllipsePatch, RotatingState, cosine_patch,
                          disk_patch, normalize_area)
from vpl.identities import (identity_torsion, identity_torsion_ellipse,
                            identity_velocity, identity_velocity_ellipse,
                            torsion_deficit_bound)

SME_ELLIPSE_2 = 1.7671458676442586            # (pi/4) 4.25 - pi/2
TORSION_INTEGRAL_ELLIPSE_2 = np.pi / 8.5      # pi a^3 b^3 / (2 (a^2+b^2))


def test_identity_torsion_disk():
    for om in (0.1, 0.25, 0.4):
        rep = identity_torsion(RotatingState(disk_patch(), om))
        assert rep.lhs == pytest.approx(0.0, abs=1e-12)
        assert rep.rhs == pytest.approx(0.0, abs=1e-12)


def test_identity_torsion_ellipse_numeric(ellipse_patch_2, ellipse_2):
    rep = identity_torsion(RotatingState(ellipse_patch_2, ellipse_2.omega_exact))
    assert rep.lhs == pytest.approx(0.16 * SME_ELLIPSE_2, rel=1e-10)
    assert rep.rhs == pytest.approx(
        0.68 * (np.pi / 4 - TORSION_INTEGRAL_ELLIPSE_2), rel=1e-10)
    assert abs(rep.relative_residual) < 1e-8


def test_identity_torsion_detects_wrong_omega(ellipse_2):
    rep = identity_torsion_ellipse(ellipse_2, omega=0.2)
    # 0.2 * sme - 0.6 * (pi/4 - int p): positive (omega too large)
    expected = 0.2 * SME_ELLIPSE_2 - 0.6 * (np.pi / 4 - TORSION_INTEGRAL_ELLIPSE_2)
    assert expected == pytest.approx(0.10394975692025064, abs=1e-12)
    assert rep.residual == pytest.approx(expected, abs=1e-12)
    assert rep.residual > 0.0


def test_residual_sign_monotone_in_omega(ellipse_2):
    # too-large omega gives positive torsion-identity residual
    lo = identity_torsion_ellipse(ellipse_2, omega=ellipse_2.omega_exact - 0.01)
    hi = identity_torsion_ellipse(ellipse_2, omega=ellipse_2.omega_exact + 0.01)
    assert lo.residual < 0.0 < hi.residual


def test_identity_velocity_disk():
    rep = identity_velocity(RotatingState(disk_patch(), 0.3), n_s=8, n_theta=8)
    assert rep.lhs == pytest.approx(0.0, abs=1e-12)
    assert rep.rhs == pytest.approx(0.0, abs=1e-12)


def test_identity_velocity_ellipse_closed_form(ellipse_2):
    rep = identity_velocity_ellipse(ellipse_2)
    expected = 0.34 * SME_ELLIPSE_2
    assert expected == pytest.approx(0.6008295949990679, abs=1e-12)
    assert rep.lhs == pytest.approx(expected, rel=1e-12)
    # rhs quadrature with the exact interior field
    assert rep.rhs == pytest.approx(
        0.5 * (1.5 / 2.5) ** 2 * np.pi / 4 * 4.25, rel=1e-8)
    assert abs(rep.relative_residual) < 1e-8


def test_identity_velocity_kernel_path(ellipse_patch_2, ellipse_2):
    rep = identity_velocity(RotatingState(ellipse_patch_2, ellipse_2.omega_exact),
                            n_s=20, n_theta=20, estimate_error=True)
    assert abs(rep.relative_residual) < 1e-5
    assert rep.quadrature_error_estimate < 1e-3


def test_identity_velocity_solver_state(branch_m3):
    pt = branch_m3.points[-1]
    rep = identity_velocity(pt.state, n_s=16, n_theta=16)
    assert abs(rep.relative_residual) < 1e-5


def test_velocity_sides_nonnegative():
    # both sides of the velocity identity are nonnegative when omega <= 1/2
    for m, amp, om in [(3, 0.1, 0.2), (4, 0.05, 0.45), (2, 0.1, 0.01)]:
        q = normalize_area(cosine_patch(m, amp))
        rep = identity_velocity(RotatingState(q, om), n_s=10, n_theta=10)
        assert rep.lhs >= 0.0
        assert rep.rhs >= 0.0


def test_deficit_disk():
    rep = torsion_deficit_bound(disk_patch())
    assert rep.deficit == pytest.approx(0.0, abs=1e-10)
    assert rep.asymmetry_sq == pytest.approx(0.0, abs=1e-12)
    assert rep.ratio is None


def test_deficit_positive_patch(patch_m4_norm):
    rep = torsion_deficit_bound(patch_m4_norm)
    assert rep.deficit > 0.0
    assert rep.asymmetry_sq > 0.0
    assert np.isfinite(rep.ratio)


def test_deficit_ratio_family_bounded_below():
    ratios = []
    for eps in (0.05, 0.1, 0.2):
        q = normalize_area(cosine_patch(3, eps))
        rep = torsion_deficit_bound(q)
        assert rep.deficit >= 0.0
        ratios.append(rep.ratio)
    assert min(ratios) > 0.0
    # measured lower-bound candidates stay on one scale across the family
    assert max(ratios) < 50.0 * min(ratios)


def test_report_serialization(ellipse_2):
    rep = identity_torsion_ellipse(ellipse_2)
    d = rep.to_dict()
    assert set(d) == {"identity", "lhs", "rhs", "residual", "relative_residual"}
    assert d["relative_residual"] == rep.relative_residual
