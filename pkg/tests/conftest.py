import numpy as np
import pytest

from vpl.geometry import EllipsePatch, cosine_patch, normalize_area
from vpl.vstates import SolverConfig, continue_branch


@pytest.fixture(scope="session")
def ellipse_2():
    return EllipsePatch(2.0, 0.5)


@pytest.fixture(scope="session")
def ellipse_patch_2(ellipse_2):
    return normalize_area(ellipse_2.to_polar_patch())


@pytest.fixture(scope="session")
def patch_m3():
    """u = 0.1 cos(3 theta), the workhorse test patch."""
    return cosine_patch(3, 0.1)


@pytest.fixture(scope="session")
def patch_m4_norm():
    """u = 0.1 cos(4 theta), area-normalized (transport test family)."""
    return normalize_area(cosine_patch(4, 0.1))


@pytest.fixture(scope="session")
def branch_m3():
    cfg = SolverConfig(modes=12)
    return continue_branch(3, cfg, steps=5)


@pytest.fixture(scope="session")
def branch_m2():
    cfg = SolverConfig(modes=40, continuation_step=0.018, amplitude_cap=0.5,
                       newton_tol=1e-9)
    return continue_branch(2, cfg, steps=10, check_identities=False)


def _high_m_branch(m):
    cap = 0.3 / m
    cfg = SolverConfig(modes=16, continuation_step=cap / 5.0,
                       amplitude_cap=cap, newton_tol=1e-11)
    return continue_branch(m, cfg, steps=8)


@pytest.fixture(scope="session")
def branches_high_m():
    """Branches m in {6, 12, 24} truncated near ||u||_inf ~ 0.3/m."""
    return {m: _high_m_branch(m) for m in (6, 12, 24)}
