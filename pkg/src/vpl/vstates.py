"""m-fold symmetric rotating patches as zeros of the boundary condition.

A rigidly-rotating patch satisfies Psi = 1_D * N - (Omega/2)|x|^2 = const on
the boundary.  The solver collocates Psi (minus its mean) at nodes strictly
inside the fundamental half-sector, pins the first cosine amplitude a1, and
solves for the remaining amplitudes and Omega by damped Gauss-Newton with a
finite-difference Jacobian.  a0 is eliminated exactly by the area-pi
constraint.  Branches start from the disk at the bifurcation value
Omega = (m-1)/(2m) and are continued in a1, falling back to pseudo-arclength
steps when Newton stalls.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import identities
from .geometry import PolarPatch, RotatingState, area, mass_center
from .potential import QuadratureConfig, DEFAULT_CFG, stream_value


class ConvergenceError(RuntimeError):
    """Newton iteration failed to reach the residual tolerance."""


class SingularJacobianError(ConvergenceError):
    """Jacobian rank-deficient beyond the bifurcation-point null direction."""


def burbea_omega(m: int) -> float:
    """Bifurcation angular velocity (m-1)/(2m) of the m-fold branch."""
    if m < 2:
        raise ValueError(f"fold symmetry must be >= 2, got {m}")
    return (m - 1) / (2.0 * m)


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and continuation knobs for the V-state solver."""

    modes: int = 16
    collocation_count: int | None = None
    newton_tol: float = 1e-10
    max_iters: int = 40
    continuation_step: float = 0.02
    amplitude_cap: float = 0.25
    quad_multiplier: int = 9          # odd; boundary grid refinement per node
    fd_step: float = 1e-6
    radius_margin: float = 0.05       # stop when 1 + u <= margin
    validation_tol: float = 1e-4      # identity residuals at accepted points

    def __post_init__(self):
        if self.collocation_count is not None and \
                self.collocation_count < self.modes + 1:
            raise ValueError("collocation_count must be >= modes + 1")
        if self.newton_tol <= 0 or self.fd_step <= 0:
            raise ValueError("tolerances must be positive")
        if self.quad_multiplier % 2 == 0:
            raise ValueError("quad_multiplier must be odd (keeps collocation "
                             "nodes on the quadrature grid)")

    @property
    def n_collocation(self) -> int:
        # modes + 1 makes the mean-subtracted system square (its rows always
        # sum to zero); more nodes turn Newton into least squares with a
        # truncation-limited residual floor.
        return self.collocation_count or (self.modes + 1)


def _a0_from_modes(higher: np.ndarray) -> float:
    """a0 making the area exactly pi: a0 = -1 + sqrt(1 - sum a_n^2 / 2)."""
    s = float(np.sum(higher ** 2))
    if s >= 2.0:
        raise ConvergenceError("mode amplitudes too large for an area-pi patch")
    return float(np.sqrt(1.0 - 0.5 * s) - 1.0)


def _patch_from_modes(m: int, modes: np.ndarray, grid_size: int) -> PolarPatch:
    coeffs = np.concatenate([[_a0_from_modes(modes)], modes])
    return PolarPatch(m=m, coeffs=tuple(coeffs), grid_size=grid_size)


def _collocation_nodes(m: int, count: int) -> np.ndarray:
    """theta_j = (j - 1/2) pi / (m J): interior of the fundamental half-sector,
    avoiding the symmetry axes where the residual derivative degenerates."""
    return (np.arange(1, count + 1) - 0.5) * np.pi / (m * count)


def _psi_minus_mean(patch: PolarPatch, omega: float, nodes: np.ndarray,
                    mult: int) -> np.ndarray:
    """Psi at boundary collocation points minus its mean, by a shared-grid
    boundary quadrature.

    The quadrature grid contains every collocation angle, so the reduced
    integrand (which vanishes like t^2 log t at each node's own boundary
    point) is sampled symmetrically around the singularity.
    """
    m = patch.m
    j = len(nodes)
    k = 2 * m * j * mult
    t = 2.0 * np.pi * (np.arange(k) + 0.5) / k
    r = patch.radius(t)
    rp = patch.u_prime(t)
    ct, st = np.cos(t), np.sin(t)
    y = np.stack([r * ct, r * st], axis=-1)
    n_ds = np.stack([rp * st + r * ct, -(rp * ct - r * st)], axis=-1)
    rj = patch.radius(nodes)
    x = np.stack([rj * np.cos(nodes), rj * np.sin(nodes)], axis=-1)
    d = y[None, :, :] - x[:, None, :]
    r2 = np.einsum("jki,jki->jk", d, d)
    phi = (np.log(np.maximum(r2, 1e-300)) - 1.0) / 4.0
    vals = phi * np.einsum("jki,ki->jk", d, n_ds)
    vals[r2 < 1e-24] = 0.0
    psi = vals.mean(axis=1) - 0.5 * omega * rj ** 2
    return psi - psi.mean()


def boundary_residual(state: RotatingState, nodes=None,
                      cfg: SolverConfig | None = None) -> np.ndarray:
    """Psi minus its mean at boundary collocation nodes."""
    cfg = cfg or SolverConfig()
    patch = state.patch
    if nodes is None:
        nodes = _collocation_nodes(patch.m, cfg.n_collocation)
    else:
        nodes = np.asarray(nodes, dtype=float)
    a = area(patch)
    if abs(a - np.pi) > 1e-6 * np.pi:
        raise ValueError("boundary residual expects an area-pi patch")
    return _psi_minus_mean(patch, state.omega, nodes, cfg.quad_multiplier)


def _solver_residual(m: int, z: np.ndarray, pin_a1: float,
                     cfg: SolverConfig, grid_size: int) -> np.ndarray:
    """Residual for unknowns z = (a2..aN, Omega) with a1 pinned."""
    n = cfg.modes
    modes = np.concatenate([[pin_a1], z[:n - 1]])
    patch = _patch_from_modes(m, modes, grid_size)
    nodes = _collocation_nodes(m, cfg.n_collocation)
    return _psi_minus_mean(patch, z[n - 1], nodes, cfg.quad_multiplier)


def _state_from_solution(m: int, z: np.ndarray, pin_a1: float,
                         cfg: SolverConfig, grid_size: int) -> RotatingState:
    modes = np.concatenate([[pin_a1], z[:cfg.modes - 1]])
    return RotatingState(patch=_patch_from_modes(m, modes, grid_size),
                         omega=float(z[cfg.modes - 1]))


def anchor_omega(m: int, cfg: SolverConfig | None = None,
                 eps: float = 1e-5) -> float:
    """Numerically resolve the bifurcation angular velocity at the disk.

    At the disk the residual vanishes for every Omega, so the anchor is the
    root in Omega of the residual linearized in the a1 direction (projected
    onto the cos(m theta) collocation mode).
    """
    cfg = cfg or SolverConfig(modes=4)
    nodes = _collocation_nodes(m, cfg.n_collocation)
    probe = np.cos(m * nodes)
    grid = max(512, 64 * m)

    def slope(omega: float) -> float:
        patch = _patch_from_modes(m, np.array([eps]), grid)
        res = _psi_minus_mean(patch, omega, nodes, cfg.quad_multiplier)
        return float(res @ probe) / eps

    return brentq(slope, 1e-4, 0.5 - 1e-4, xtol=1e-12)


def newton_solve(initial: RotatingState, pinned_amplitude: float,
                 cfg: SolverConfig | None = None) -> RotatingState:
    """Solve the collocated boundary condition with a1 pinned.

    Unknowns are (a2..aN, Omega); a0 is re-derived from the area constraint
    at every iterate.  Raises ConvergenceError after max_iters, and
    SingularJacobianError when the Gauss-Newton step collapses (the caller
    is expected to switch to arclength continuation).
    """
    cfg = cfg or SolverConfig()
    m = initial.patch.m
    grid_size = initial.patch.grid_size
    if pinned_amplitude == 0.0:
        return RotatingState(patch=_patch_from_modes(m, np.zeros(cfg.modes), grid_size),
                             omega=anchor_omega(m, cfg))
    n = cfg.modes
    z = np.zeros(n)
    init_coeffs = np.asarray(initial.patch.coeffs, dtype=float)
    take = min(len(init_coeffs) - 2, n - 1)
    if take > 0:
        z[:take] = init_coeffs[2:2 + take]
    z[n - 1] = initial.omega
    prev_norm = np.inf
    for _ in range(cfg.max_iters):
        f = _solver_residual(m, z, pinned_amplitude, cfg, grid_size)
        norm = float(np.max(np.abs(f)))
        if norm < cfg.newton_tol:
            return _state_from_solution(m, z, pinned_amplitude, cfg, grid_size)
        jac = np.empty((len(f), n))
        for i in range(n):
            h = cfg.fd_step * max(1.0, abs(z[i]))
            zp = z.copy()
            zp[i] += h
            jac[:, i] = (_solver_residual(m, zp, pinned_amplitude, cfg,
                                          grid_size) - f) / h
        step, _, rank, _ = np.linalg.lstsq(jac, -f, rcond=None)
        if rank < n - 1:
            raise SingularJacobianError(
                f"Jacobian rank {rank} < {n - 1}; switch to arclength")
        if not np.all(np.isfinite(step)):
            raise ConvergenceError("non-finite Newton step")
        # damped update when the full step overshoots
        scale = 1.0
        if norm > prev_norm * 4.0:
            scale = 0.5
        z = z + scale * step
        prev_norm = norm
    raise ConvergenceError(
        f"no convergence after {cfg.max_iters} iterations (residual {norm:.3e})")


# ---------------------------------------------------------------------------
# branch continuation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchPoint:
    state: RotatingState
    s: float                       # continuation parameter (here: pinned a1)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"s": self.s, "omega": self.state.omega,
                "patch": self.state.patch.to_dict(),
                "diagnostics": self.diagnostics}

    @classmethod
    def from_dict(cls, d: dict) -> "BranchPoint":
        return cls(state=RotatingState(patch=PolarPatch.from_dict(d["patch"]),
                                       omega=float(d["omega"])),
                   s=float(d["s"]), diagnostics=dict(d.get("diagnostics", {})))


@dataclass
class Branch:
    m: int
    points: list
    stop_reason: str = "unfinished"

    def omegas(self) -> np.ndarray:
        return np.array([p.state.omega for p in self.points])

    def to_jsonl(self, head_extra: dict | None = None) -> str:
        head = {"m": self.m, "stop_reason": self.stop_reason}
        if head_extra:
            head.update(head_extra)
        lines = [json.dumps(head)]
        lines += [json.dumps(p.to_dict()) for p in self.points]
        return "\n".join(lines) + "\n"

    def save(self, path, head_extra: dict | None = None) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl(head_extra))

    @classmethod
    def from_jsonl(cls, text: str) -> "Branch":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = json.loads(lines[0])
        pts = [BranchPoint.from_dict(json.loads(ln)) for ln in lines[1:]]
        return cls(m=int(head["m"]), points=pts,
                   stop_reason=head.get("stop_reason", "unfinished"))

    @classmethod
    def load(cls, path) -> "Branch":
        with open(path) as fh:
            return cls.from_jsonl(fh.read())


def _validate_point(state: RotatingState, cfg: SolverConfig,
                    quad_cfg: QuadratureConfig, check_identities: bool) -> dict:
    """Diagnostics for an accepted branch point; raises on hard violations."""
    patch = state.patch
    diag = {
        "r_min": patch.r_min,
        "r_max": patch.r_max,
        "u_linf": patch.u_linf,
        "lambda": state.lambda_,
    }
    if not patch.is_disk():
        if not (0.0 < state.omega < 0.5):
            raise ConvergenceError(
                f"omega {state.omega} outside (0, 1/2)")
        if not (patch.r_min < 1.0 < patch.r_max):
            raise ConvergenceError("area-pi non-disk patch must straddle r = 1")
    diag["mass_center_norm"] = float(np.hypot(*mass_center(patch)))
    if check_identities and not patch.is_disk():
        rep_t = identities.identity_torsion(state)
        rep_v = identities.identity_velocity(state, quad_cfg, n_s=16, n_theta=16)
        diag["identity_torsion_rel"] = rep_t.relative_residual
        diag["identity_velocity_rel"] = rep_v.relative_residual
        tol = cfg.validation_tol
        if abs(rep_t.relative_residual) > tol or abs(rep_v.relative_residual) > tol:
            raise ConvergenceError(
                f"identity validation failed: torsion {rep_t.relative_residual:.2e}, "
                f"velocity {rep_v.relative_residual:.2e}")
    return diag


def _arclength_step(m: int, z_prev, z_prev2, cfg: SolverConfig,
                    grid_size: int, ds: float):
    """One pseudo-arclength corrector with unknowns (a1, a2..aN, Omega)."""
    tangent = z_prev - z_prev2
    nrm = np.linalg.norm(tangent)
    if nrm == 0:
        raise SingularJacobianError("degenerate arclength tangent")
    tangent = tangent / nrm
    z_pred = z_prev + ds * tangent
    z = z_pred.copy()
    n = cfg.modes
    for _ in range(cfg.max_iters):
        patch = _patch_from_modes(m, z[:n], grid_size)
        nodes = _collocation_nodes(m, cfg.n_collocation)
        res = _psi_minus_mean(patch, z[n], nodes, cfg.quad_multiplier)
        f = np.concatenate([res, [float((z - z_pred) @ tangent)]])
        if np.max(np.abs(f)) < cfg.newton_tol:
            return z
        jac = np.empty((len(f), n + 1))
        for i in range(n + 1):
            h = cfg.fd_step * max(1.0, abs(z[i]))
            zp = z.copy()
            zp[i] += h
            patch_p = _patch_from_modes(m, zp[:n], grid_size)
            res_p = _psi_minus_mean(patch_p, zp[n], nodes, cfg.quad_multiplier)
            col = np.concatenate([res_p, [float((zp - z_pred) @ tangent)]])
            jac[:, i] = (col - f) / h
        step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
        z = z + step
    raise ConvergenceError("arclength corrector did not converge")


def continue_branch(m: int, cfg: SolverConfig | None = None, steps: int = 10,
                    quad_cfg: QuadratureConfig = DEFAULT_CFG,
                    check_identities: bool = True,
                    grid_size: int = 2048,
                    resume_from: Branch | None = None) -> Branch:
    """Continue the m-fold branch from the disk anchor.

    Natural continuation in the pinned amplitude a1 with step halving, and a
    pseudo-arclength fallback on Jacobian degeneracy.  Stops at the amplitude
    cap, on loss of boundary monotonicity, when 1 + u approaches 0, or after
    the step budget; the reason is recorded on the branch.
    """
    if m < 2:
        raise ValueError("branch continuation needs m >= 2")
    cfg = cfg or SolverConfig()
    if resume_from is not None:
        branch = resume_from
        if branch.m != m:
            raise ValueError("resume branch has different fold symmetry")
    else:
        anchor = RotatingState(
            patch=PolarPatch(m=m, coeffs=(0.0,) * (cfg.modes + 1),
                             grid_size=grid_size),
            omega=burbea_omega(m))
        diag = {"residual_norm": 0.0, "anchor": True}
        diag.update(_validate_point(anchor, cfg, quad_cfg, False))
        branch = Branch(m=m, points=[BranchPoint(anchor, s=0.0, diagnostics=diag)])
    state = branch.points[-1].state
    a1 = branch.points[-1].s
    step = cfg.continuation_step
    done = len(branch.points) - 1
    while done < steps:
        target = a1 + step
        try:
            nxt = newton_solve(state, target, cfg)
        except SingularJacobianError:
            nxt = _fallback_arclength(branch, m, cfg, grid_size, step)
            if nxt is None:
                branch.stop_reason = "newton_failure"
                return branch
            target = float(nxt.patch.coeffs[1])
        except ConvergenceError:
            if step > cfg.continuation_step / 8.0:
                step *= 0.5
                continue
            branch.stop_reason = "newton_failure"
            return branch
        # stopping criteria evaluated before acceptance
        if not nxt.patch.is_monotone():
            branch.stop_reason = "monotonicity_lost"
            return branch
        if nxt.patch.r_min <= cfg.radius_margin:
            branch.stop_reason = "radius_margin"
            return branch
        try:
            res = boundary_residual(nxt, cfg=cfg)
            diag = {"residual_norm": float(np.max(np.abs(res)))}
            diag.update(_validate_point(nxt, cfg, quad_cfg, check_identities))
        except ConvergenceError as exc:
            branch.stop_reason = f"validation_failure: {exc}"
            return branch
        branch.points.append(BranchPoint(nxt, s=target, diagnostics=diag))
        state, a1 = nxt, target
        done += 1
        if nxt.patch.u_linf >= cfg.amplitude_cap:
            branch.stop_reason = "amplitude_cap"
            return branch
        step = cfg.continuation_step
    branch.stop_reason = "step_budget"
    return branch


def _fallback_arclength(branch: Branch, m: int, cfg: SolverConfig,
                        grid_size: int, step: float):
    if len(branch.points) < 2:
        return None
    def pack(point):
        c = np.asarray(point.state.patch.coeffs, dtype=float)
        z = np.zeros(cfg.modes + 1)
        z[:len(c) - 1] = c[1:cfg.modes + 1]
        z[cfg.modes] = point.state.omega
        return z
    z_prev = pack(branch.points[-1])
    z_prev2 = pack(branch.points[-2])
    try:
        z = _arclength_step(m, z_prev, z_prev2, cfg, grid_size, step)
    except ConvergenceError:
        return None
    return RotatingState(patch=_patch_from_modes(m, z[:cfg.modes], grid_size),
                         omega=float(z[cfg.modes]))
