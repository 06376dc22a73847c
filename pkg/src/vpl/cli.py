"""Command-line driver.

Subcommands: verify-identities, solve-branch, transport, bounds-report,
stream-eval.  Every command echoes its fully resolved configuration into the
output header; outputs are deterministic for a fixed configuration.  Exit
codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical-convergence failure.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import bounds, identities, transport, vstates
from .geometry import (EllipsePatch, PatchError, PolarPatch, RotatingState,
                       disk_patch, normalize_area)
from .potential import QuadratureError, TorsionFitError, stream_value, grad_stream
from .transport import TransportError, TransportParams
from .vstates import Branch, ConvergenceError, SolverConfig

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class CliError(click.ClickException):
    exit_code = EXIT_CONFIG


def _load_config(ctx, param, value):
    """--config JSON file: provides defaults; explicit flags win."""
    if value is None:
        return None
    try:
        with open(value) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file: {exc}")
    if not isinstance(data, dict):
        raise CliError("config file must hold a JSON object")
    cmd = ctx.command
    known = {p.name for p in cmd.params}
    unknown = set(data) - known
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    for key, val in data.items():
        src = ctx.get_parameter_source(key)
        if src is None or src.name != "COMMANDLINE":
            ctx.params[key] = val
    return value


def _config_option():
    return click.option("--config", type=click.Path(exists=False), default=None,
                        callback=_load_config, expose_value=False, is_eager=False,
                        help="JSON file of option defaults; unknown keys rejected.")


def _resolved_config(ctx) -> dict:
    return {k: v for k, v in ctx.params.items() if not k.startswith("_")}


def _emit(out_path, payload: str):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(payload)
    else:
        click.echo(payload, nl=False)


def _parse_ellipse(spec: str) -> EllipsePatch:
    try:
        a, b = (float(v) for v in spec.split(","))
        return EllipsePatch(a=a, b=b)
    except (ValueError, PatchError) as exc:
        raise CliError(f"bad --ellipse spec {spec!r}: {exc}")


def _load_patch(path: str) -> PolarPatch:
    try:
        with open(path) as fh:
            return PolarPatch.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, PatchError, KeyError) as exc:
        raise CliError(f"cannot load patch {path!r}: {exc}")


@click.group()
def main():
    """Rotating vortex patch toolkit."""


@main.command("verify-identities")
@click.option("--ellipse", default=None, help="Semi-axes 'a,b' of a Kirchhoff ellipse.")
@click.option("--disk", "disk_flag", is_flag=True, default=False)
@click.option("--patch", "patch_file", type=click.Path(), default=None)
@click.option("--omega", type=float, default=None,
              help="Override the angular velocity (detects non-solutions).")
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@_config_option()
@click.pass_context
def verify_identities(ctx, ellipse, disk_flag, patch_file, omega, tol, out):
    """Evaluate both variational identities, exit 0 iff residuals pass."""
    ellipse = ctx.params["ellipse"]
    omega, tol, out = ctx.params["omega"], ctx.params["tol"], ctx.params["out"]
    sources = [s for s in (ellipse, patch_file) if s] + ([1] if ctx.params["disk_flag"] else [])
    if len(sources) != 1:
        raise CliError("choose exactly one of --ellipse, --disk, --patch")
    reports = []
    try:
        if ellipse:
            ell = _parse_ellipse(ellipse).normalized()
            om = ell.omega_exact if omega is None else omega
            patch = normalize_area(ell.to_polar_patch())
            reports.append(identities.identity_torsion(RotatingState(patch, om)))
            reports.append(identities.identity_velocity_ellipse(ell, omega=om))
        elif ctx.params["disk_flag"]:
            om = 0.25 if omega is None else omega
            state = RotatingState(disk_patch(m=2), om)
            reports.append(identities.identity_torsion(state))
            reports.append(identities.identity_velocity(state, n_s=8, n_theta=8))
        else:
            patch = normalize_area(_load_patch(patch_file))
            if omega is None:
                raise CliError("--patch requires --omega")
            state = RotatingState(patch, omega)
            reports.append(identities.identity_torsion(state))
            reports.append(identities.identity_velocity(state))
    except (QuadratureError, TorsionFitError, ConvergenceError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    payload = json.dumps({"config": _resolved_config(ctx),
                          "reports": [r.to_dict() for r in reports]}, indent=2)
    _emit(out, payload + "\n")
    worst = max(abs(r.relative_residual) for r in reports)
    if worst > tol:
        click.echo(f"identity residual {worst:.3e} above tolerance {tol:.1e}",
                   err=True)
        sys.exit(EXIT_VERIFICATION)


@main.command("solve-branch")
@click.option("--m", "m_fold", type=int, required=True)
@click.option("--steps", type=int, default=10, show_default=True)
@click.option("--modes", type=int, default=16, show_default=True)
@click.option("--step", "cont_step", type=float, default=0.02, show_default=True)
@click.option("--amplitude-cap", type=float, default=0.25, show_default=True)
@click.option("--newton-tol", type=float, default=1e-10, show_default=True)
@click.option("--collocation", type=int, default=None)
@click.option("--no-identities", is_flag=True, default=False,
              help="Skip per-point identity validation (faster).")
@click.option("--out", type=click.Path(), default=None)
@click.option("--resume", is_flag=True, default=False,
              help="Continue from the last line of --out.")
@_config_option()
@click.pass_context
def solve_branch(ctx, m_fold, steps, modes, cont_step, amplitude_cap,
                 newton_tol, collocation, no_identities, out, resume):
    """Continue an m-fold branch from the disk; write JSON lines."""
    p = ctx.params
    try:
        cfg = SolverConfig(modes=p["modes"], collocation_count=p["collocation"],
                           newton_tol=p["newton_tol"],
                           continuation_step=p["cont_step"],
                           amplitude_cap=p["amplitude_cap"])
    except ValueError as exc:
        raise CliError(str(exc))
    if p["m_fold"] < 2:
        raise CliError("--m must be >= 2")
    prev = None
    if p["resume"]:
        if not p["out"]:
            raise CliError("--resume requires --out")
        try:
            prev = Branch.load(p["out"])
        except OSError as exc:
            raise CliError(f"cannot resume: {exc}")
    branch = vstates.continue_branch(p["m_fold"], cfg, steps=p["steps"],
                                     check_identities=not p["no_identities"],
                                     resume_from=prev)
    payload = branch.to_jsonl(head_extra={"config": _resolved_config(ctx)})
    _emit(p["out"], payload)
    if branch.stop_reason.startswith(("newton_failure", "validation_failure")):
        click.echo(f"branch stopped: {branch.stop_reason}", err=True)
        sys.exit(EXIT_NUMERICAL)


@main.command("transport")
@click.option("--patch", "patch_file", type=click.Path(), required=True)
@click.option("--a", "--transport-a", "a_param", type=float, default=None,
              help="Shell parameter; default is the admissible midpoint.")
@click.option("--grid", type=int, default=128, show_default=True)
@click.option("--ot-grid", type=int, default=0,
              help="If > 0, also compute the discrete OT lower bound on an "
                   "ot-grid x ot-grid decomposition.")
@click.option("--out", type=click.Path(), default=None)
@_config_option()
@click.pass_context
def transport_cmd(ctx, patch_file, a_param, grid, ot_grid, out):
    """Build the patch-to-disk transport map and its report."""
    p = ctx.params
    patch = normalize_area(_load_patch(p["patch_file"]))
    params = TransportParams(p["a_param"]) if p["a_param"] is not None \
        else transport.default_params(patch)
    try:
        params.validate(patch)
    except TransportError as exc:
        raise CliError(str(exc))
    try:
        report = transport.loeper_check(patch, params,
                                        grid=(p["grid"], p["grid"]))
    except RuntimeError as exc:
        click.echo(f"verification failure: {exc}", err=True)
        sys.exit(EXIT_VERIFICATION)
    body = report.to_dict()
    if p["ot_grid"]:
        lb, info = transport.discrete_ot_lower_bound(patch, p["ot_grid"],
                                                     p["ot_grid"])
        body["ot_lower_bound"] = lb
        body.update({f"ot_{k}": v for k, v in info.items()})
        if report.cost < lb:
            click.echo("verification failure: cost below OT lower bound",
                       err=True)
            sys.exit(EXIT_VERIFICATION)
    payload = json.dumps({"config": _resolved_config(ctx), "report": body},
                         indent=2)
    _emit(p["out"], payload + "\n")


@main.command("bounds-report")
@click.option("--scan", type=click.Choice(["outmost", "omega-gap", "linfty",
                                           "appendix"]), required=True)
@click.option("--ellipses", default=None,
              help="Comma-separated semi-major axes for the outmost scan.")
@click.option("--branch", "branch_files", multiple=True, type=click.Path())
@click.option("--out", type=click.Path(), default=None)
@_config_option()
@click.pass_context
def bounds_report(ctx, scan, ellipses, branch_files, out):
    """Emit plot-ready CSV for one of the inequality scans."""
    p = ctx.params
    scan = p["scan"]
    if scan == "outmost":
        if not p["ellipses"]:
            raise CliError("outmost scan needs --ellipses")
        try:
            a_values = [float(v) for v in p["ellipses"].split(",")]
        except ValueError as exc:
            raise CliError(f"bad --ellipses: {exc}")
        report = bounds.outmost_scan(bounds.ellipse_states(a_values))
    elif scan == "appendix":
        report = bounds.appendix_inequality_probe()
    else:
        if not p["branch_files"]:
            raise CliError(f"{scan} scan needs at least one --branch file")
        branches = [Branch.load(f) for f in p["branch_files"]]
        report = bounds.omega_gap_scan(branches) if scan == "omega-gap" \
            else bounds.linfty_scan(branches)
    header = json.dumps({"config": _resolved_config(ctx),
                         "empirical_constant": report.empirical_constant,
                         "notes": report.notes})
    _emit(p["out"], report.to_csv(header_comment=header))


@main.command("stream-eval")
@click.option("--patch", "patch_file", type=click.Path(), default=None)
@click.option("--ellipse", default=None)
@click.option("--x", type=float, required=True)
@click.option("--y", type=float, required=True)
@click.option("--grad/--no-grad", default=True, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@_config_option()
@click.pass_context
def stream_eval(ctx, patch_file, ellipse, x, y, grad, out):
    """Evaluate the stream function (and gradient) at a point."""
    p = ctx.params
    if bool(p["patch_file"]) == bool(p["ellipse"]):
        raise CliError("choose exactly one of --patch, --ellipse")
    patch = _parse_ellipse(p["ellipse"]) if p["ellipse"] \
        else _load_patch(p["patch_file"])
    point = np.array([p["x"], p["y"]])
    body = {"psi": stream_value(patch, point)}
    if p["grad"]:
        body["grad"] = list(grad_stream(patch, point))
    payload = json.dumps({"config": _resolved_config(ctx), "result": body},
                         indent=2)
    _emit(p["out"], payload + "\n")


if __name__ == "__main__":
    main()
