"""Batch front end for the shock laboratory.

Subcommands drive the background solver, the verification suites, the
multiplier certificates, and the free-boundary simulator from command-line
flags or a key-value config file, and emit machine-readable CSV/JSON
artifacts plus a run manifest with content hashes.

Exit codes: 0 on success, 1 on computation failure (solver breakdown,
failed verification, failed certificate), 2 on usage or configuration
errors.  All floating-point output uses shortest round-trip formatting, so
repeated runs with the same configuration produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from .gas import GasParams, VacuumError
from .background import (
    BracketError,
    DenominatorSignError,
    SelfSimilarSolution,
    asymptotic_report,
    ode_residual,
    solve_background,
)
from .hodograph import boundary_signs, check_ellipticity, local_stability
from .certificates import DegenerateShockError, admissible_mu, certify
from .simulator import SimConfig, SimulationError, fit_decay, run as sim_run

__all__ = ["main"]

#: environment variable overriding the output directory
OUTPUT_DIR_ENV = "CONICSHOCK_OUTPUT_DIR"

#: errors that mean "the computation failed", not "the request was malformed"
COMPUTATION_ERRORS = (
    BracketError,
    DenominatorSignError,
    VacuumError,
    SimulationError,
    DegenerateShockError,
)


# ---------------------------------------------------------------------------
# config files, output locations, artifacts
# ---------------------------------------------------------------------------

def _load_config(path) -> dict:
    """Parse a flat ``key = value`` config file ('#' starts a comment)."""
    cfg = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(
                f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        cfg[key.strip()] = value.strip()
    return cfg


def _resolve(cli_value, cfg: dict, key: str, cast, default):
    """Flag > config file > built-in default."""
    if cli_value is not None:
        return cli_value
    if key in cfg:
        try:
            return cast(cfg[key])
        except ValueError as exc:
            raise click.UsageError(f"config key {key!r}: {exc}")
    return default


def _output_dir(cli_value, cfg: dict) -> Path:
    env = os.environ.get(OUTPUT_DIR_ENV)
    raw = env or cli_value or cfg.get("output_dir") or "."
    out = Path(raw)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _gas(A: float, gamma: float, rho0: float) -> GasParams:
    """Build gas parameters, mapping domain violations to usage errors."""
    if not (1.0 < gamma < 3.0):
        raise click.UsageError(f"gamma must lie in (1, 3), got {gamma}")
    if A <= 0.0:
        raise click.UsageError(f"A must be positive, got {A}")
    if rho0 <= 0.0:
        raise click.UsageError(f"rho0 must be positive, got {rho0}")
    return GasParams(A=A, gamma=gamma, rho0=rho0)


def _check_n(n: int) -> None:
    if n not in (2, 3):
        raise click.UsageError(f"dimension n must be 2 or 3, got {n}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)


@dataclass
class RunManifest:
    """Record of one CLI invocation: what ran, with which resolved
    parameters and inputs, and the content hash of every artifact written."""

    command: str
    params: dict
    inputs: list
    output_dir: str
    version: str = __version__
    wall_clock: float = 0.0
    artifacts: dict = field(default_factory=dict)

    def add(self, path: Path) -> None:
        self.artifacts[path.name] = _sha256(path)

    def write(self, out: Path) -> Path:
        path = out / "manifest.json"
        _write_json(
            {
                "command": self.command,
                "params": self.params,
                "inputs": self.inputs,
                "output_dir": self.output_dir,
                "version": self.version,
                "wall_clock": self.wall_clock,
                "artifacts": self.artifacts,
            },
            path,
        )
        return path


# ---------------------------------------------------------------------------
# command group
# ---------------------------------------------------------------------------

@click.group()
@click.version_option(version=__version__)
def main():
    """Numerical laboratory for conic piston-driven shock waves."""


_config_option = click.option(
    "--config", "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None, help="Key-value config file; flags override its entries.")
_output_option = click.option(
    "--output-dir", default=None,
    help=f"Artifact directory (overridden by ${OUTPUT_DIR_ENV}).")


# ---------------------------------------------------------------------------
# background
# ---------------------------------------------------------------------------

@main.command()
@click.option("--b0", type=float, default=None, help="Piston speed.")
@click.option("--gamma", type=float, default=None, help="Adiabatic exponent.")
@click.option("--A", "A", type=float, default=None, help="Pressure coefficient.")
@click.option("--rho0", type=float, default=None, help="Ambient density.")
@click.option("--n", type=int, default=None, help="Space dimension (2 or 3).")
@click.option("--grid-size", type=int, default=None, help="Profile samples.")
@_config_option
@_output_option
def background(b0, gamma, A, rho0, n, grid_size, config_path, output_dir):
    """Solve the self-similar background and write profile CSV + summary."""
    t_start = time.perf_counter()
    cfg = _load_config(config_path) if config_path else {}
    b0 = _resolve(b0, cfg, "b0", float, None)
    if b0 is None:
        raise click.UsageError("--b0 is required (flag or config)")
    gamma = _resolve(gamma, cfg, "gamma", float, 1.4)
    A = _resolve(A, cfg, "A", float, 1.0)
    rho0 = _resolve(rho0, cfg, "rho0", float, 1.0)
    n = _resolve(n, cfg, "n", int, 3)
    grid_size = _resolve(grid_size, cfg, "grid_size", int, 2048)
    _check_n(n)
    gas = _gas(A, gamma, rho0)
    out = _output_dir(output_dir, cfg)

    try:
        sol = solve_background(b0, gas, n=n, grid_size=grid_size)
    except COMPUTATION_ERRORS as exc:
        raise click.ClickException(f"background solve failed: {exc}")

    tag = f"b{b0:g}_g{gamma:g}_n{n}"
    csv_path = out / f"background_{tag}.csv"
    json_path = out / f"background_{tag}.json"
    sol.to_csv(csv_path)
    sol.to_json(json_path)

    manifest = RunManifest(
        command="background",
        params={"b0": b0, "gamma": gamma, "A": A, "rho0": rho0, "n": n,
                "grid_size": grid_size},
        inputs=[config_path] if config_path else [],
        output_dir=str(out),
    )
    manifest.add(csv_path)
    manifest.add(json_path)
    manifest.wall_clock = time.perf_counter() - t_start
    manifest.write(out)
    click.echo(f"wrote {csv_path} and {json_path} (s0 = {float(sol.s0)!r})")


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

SUITES = ("asymptotics", "ellipticity", "profile", "boundary", "stability")

#: piston-speed threshold above which the thin-layer suites are checked
ASYMPTOTIC_B0 = 40.0


def _profile_checks(sol: SelfSimilarSolution, piston_tol: float) -> dict:
    """Sanity checks on one profile: finite, piston condition, entropy
    excess, supersonic denominator sign, small ODE residual."""
    finite = all(
        bool(np.all(np.isfinite(a))) for a in (sol.s, sol.rho, sol.w))
    res = ode_residual(sol) if finite else float("nan")
    checks = {
        "finite": finite,
        "piston_condition": finite
        and bool(abs(sol.u[0] - sol.b0) <= piston_tol * abs(sol.b0)),
        "entropy_excess": finite and bool(np.all(sol.rho > sol.gas.rho0)),
        "denominator_negative": finite
        and bool(np.all(sol.w ** 2 - sol.csq < 0.0)),
        "ode_residual_small": bool(np.isfinite(res) and res < 1e-4),
    }
    return {"checks": checks, "ode_residual": float(res),
            "passed": all(checks.values())}


def _load_profile(path, gas: GasParams, n: int) -> SelfSimilarSolution:
    """Read a profile CSV (s, rho, u, phi columns) back into a solution."""
    import csv

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 6 or rows[0][:3] != ["s", "rho", "u"]:
        raise click.ClickException(f"{path}: not a profile CSV")
    try:
        data = np.array([[float(v) for v in row[:3]] for row in rows[1:]])
    except ValueError as exc:
        raise click.ClickException(f"{path}: unparsable profile: {exc}")
    s, rho, u = data.T
    b0 = float(s[0])
    return SelfSimilarSolution(
        gas=gas, n=n, b0=b0, delta=float(s[-1] - s[0]), tau0=0.0,
        s_off=s - b0, rho=rho, w=u - s, i0=0, i1=len(s) - 1)


def _suite_asymptotics(b0_list, gas, n) -> dict:
    rep = asymptotic_report(b0_list, gas, n=n)
    monotone = {
        k: bool(np.all(np.diff(v) < 0.0))
        for k, v in rep.deviations.items() if k != "drho_magnitude"
    }
    passed = rep.denominator_negative and all(monotone.values())
    return {
        "passed": bool(passed),
        "denominator_negative": rep.denominator_negative,
        "monotone_decreasing": monotone,
        "slopes": rep.slopes,
        "expected_slope": rep.expected_slope,
        "deviations": {k: [float(x) for x in v]
                       for k, v in rep.deviations.items()},
    }


def _suite_ellipticity(sols) -> dict:
    per_b0, passed = {}, True
    for b0, sol in sols.items():
        rep = check_ellipticity(sol)
        per_b0[f"{b0:g}"] = {"passed": rep.passed, "margin": float(rep.margin)}
        if b0 >= ASYMPTOTIC_B0:
            passed = passed and rep.passed
    return {"passed": bool(passed), "per_b0": per_b0}


def _suite_profile(sols) -> dict:
    per_b0 = {f"{b0:g}": _profile_checks(sol, piston_tol=1e-9)
              for b0, sol in sols.items()}
    return {"passed": all(v["passed"] for v in per_b0.values()),
            "per_b0": per_b0}


def _suite_boundary(sols) -> dict:
    per_b0, passed = {}, True
    for b0, sol in sols.items():
        rep = boundary_signs(sol)
        ok = (
            not rep.degenerate
            and all(v > 0.0 for v in rep.E_min.values())
            and all(v < 0.0 for v in rep.D21.values())
            and rep.B21 < 0.0
            and bool(np.all(rep.B22 == 0.0))
        )
        per_b0[f"{b0:g}"] = {
            "passed": bool(ok),
            "degenerate": rep.degenerate,
            "E_min": {str(k): float(v) for k, v in rep.E_min.items()},
            "D21": {str(k): float(v) for k, v in rep.D21.items()},
            "D22": {str(k): float(v) for k, v in rep.D22.items()},
            "B21": float(rep.B21),
        }
        passed = passed and ok
    return {
        "passed": bool(passed),
        "per_b0": per_b0,
        "note": "D22 values are reported as data and not gated on; the "
                "layer-k shock-row psi-derivative changes sign for small k.",
    }


def _suite_stability(sols) -> dict:
    per_b0, passed = {}, True
    for b0, sol in sols.items():
        rep = local_stability(sol)
        ok = (
            rep.transversal
            and rep.timelike
            and rep.quad_form > 0.0
            and max(rep.neumann_residuals) < 1e-10
        )
        per_b0[f"{b0:g}"] = {
            "passed": bool(ok),
            "transversal": rep.transversal,
            "timelike": rep.timelike,
            "quad_form": float(rep.quad_form),
            "delta0": float(rep.delta0),
            "neumann_residuals": [float(v) for v in rep.neumann_residuals],
        }
        passed = passed and ok
    return {
        "passed": bool(passed),
        "per_b0": per_b0,
        "note": "gated on positivity of the boundary quadratic form; the "
                "delta0 normalization is reported as data.",
    }


@main.command()
@click.option("--b0", "b0_list", type=float, multiple=True,
              help="Piston speeds to sweep (default 10 20 40 80).")
@click.option("--gamma", type=float, default=None)
@click.option("--A", "A", type=float, default=None)
@click.option("--rho0", type=float, default=None)
@click.option("--n", type=int, default=None)
@click.option("--suite", "suites", type=click.Choice(SUITES), multiple=True,
              help="Restrict to these suites (default: all).")
@click.option("--profile", "profile_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="Check a profile CSV instead of solving.")
@_config_option
@_output_option
def verify(b0_list, gamma, A, rho0, n, suites, profile_path, config_path,
           output_dir):
    """Run the verification suites over a piston-speed sweep."""
    t_start = time.perf_counter()
    cfg = _load_config(config_path) if config_path else {}
    gamma = _resolve(gamma, cfg, "gamma", float, 1.4)
    A = _resolve(A, cfg, "A", float, 1.0)
    rho0 = _resolve(rho0, cfg, "rho0", float, 1.0)
    n = _resolve(n, cfg, "n", int, 3)
    _check_n(n)
    gas = _gas(A, gamma, rho0)
    out = _output_dir(output_dir, cfg)
    b0_list = list(b0_list) or [10.0, 20.0, 40.0, 80.0]
    suites = tuple(suites) or SUITES

    report = {
        "gamma": gamma, "A": A, "rho0": rho0, "n": n,
        "b0_list": b0_list, "suites": list(suites),
    }
    if profile_path:
        # file-checking mode: validate the supplied profile only
        sol = _load_profile(profile_path, gas, n)
        report["profile_file"] = str(profile_path)
        report["results"] = {"profile": _profile_checks(sol, piston_tol=1e-6)}
    else:
        try:
            sols = {b0: solve_background(b0, gas, n=n) for b0 in b0_list}
            results = {}
            if "asymptotics" in suites:
                results["asymptotics"] = _suite_asymptotics(b0_list, gas, n)
            if "ellipticity" in suites:
                results["ellipticity"] = _suite_ellipticity(sols)
            if "profile" in suites:
                results["profile"] = _suite_profile(sols)
            if "boundary" in suites:
                results["boundary"] = _suite_boundary(sols)
            if "stability" in suites:
                results["stability"] = _suite_stability(sols)
        except COMPUTATION_ERRORS as exc:
            raise click.ClickException(f"verification sweep failed: {exc}")
        report["results"] = results

    all_pass = all(v["passed"] for v in report["results"].values())
    report["passed"] = bool(all_pass)

    json_path = out / "verify_report.json"
    _write_json(report, json_path)
    manifest = RunManifest(
        command="verify",
        params={"gamma": gamma, "A": A, "rho0": rho0, "n": n,
                "b0_list": b0_list, "suites": list(suites)},
        inputs=[p for p in (config_path, profile_path) if p],
        output_dir=str(out),
    )
    manifest.add(json_path)
    manifest.wall_clock = time.perf_counter() - t_start
    manifest.write(out)

    for name, res in sorted(report["results"].items()):
        click.echo(f"{name}: {'pass' if res['passed'] else 'FAIL'}")
    if not all_pass:
        raise click.ClickException("verification failed (see verify_report.json)")
    click.echo(f"all suites passed; report at {json_path}")


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------

def _violated_condition(cert) -> str:
    """Name the first failed certificate condition, for the diagnostic."""
    if not cert.mu_in_window:
        return (f"mu = {float(cert.choice.mu)!r} outside the admissible "
                f"window ({float(cert.mu_window.lo)!r}, "
                f"{float(cert.mu_window.hi)!r})")
    for name, value in cert.conditions.items():
        if value <= 0.0:
            return f"symbolic condition {name} nonpositive ({float(value)!r})"
    if not cert.k00_positive:
        return "K00 positivity fails on the profile"
    if not cert.disc_negative:
        return "discriminant negativity fails on the profile"
    if not cert.knn_positive:
        return "angular coefficient positivity fails on the profile"
    if not cert.boundary_pass:
        return "shock-boundary flux signs fail"
    return "unknown condition"


@main.command("certify")
@click.option("--n", type=int, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--b0", type=float, default=None)
@click.option("--mu", default=None,
              help="Multiplier time exponent, or 'auto' for the window midpoint.")
@click.option("--A", "A", type=float, default=None)
@click.option("--rho0", type=float, default=None)
@click.option("--grid-size", type=int, default=None)
@_config_option
@_output_option
def certify_cmd(n, gamma, b0, mu, A, rho0, grid_size, config_path, output_dir):
    """Evaluate the energy-multiplier sign certificate on a background."""
    t_start = time.perf_counter()
    cfg = _load_config(config_path) if config_path else {}
    n = _resolve(n, cfg, "n", int, 3)
    gamma = _resolve(gamma, cfg, "gamma", float, 1.4)
    b0 = _resolve(b0, cfg, "b0", float, None)
    if b0 is None:
        raise click.UsageError("--b0 is required (flag or config)")
    mu = _resolve(mu, cfg, "mu", str, "auto")
    A = _resolve(A, cfg, "A", float, 1.0)
    rho0 = _resolve(rho0, cfg, "rho0", float, 1.0)
    grid_size = _resolve(grid_size, cfg, "grid_size", int, 1024)
    _check_n(n)
    gas = _gas(A, gamma, rho0)
    out = _output_dir(output_dir, cfg)

    if mu == "auto":
        mu_value = float(admissible_mu(n, gamma).midpoint)
    else:
        try:
            mu_value = float(mu)
        except ValueError:
            raise click.UsageError(f"--mu must be a number or 'auto', got {mu!r}")

    try:
        cert = certify(n, gamma, b0, mu_value, gas=gas, grid_size=grid_size)
    except COMPUTATION_ERRORS as exc:
        raise click.ClickException(f"certificate evaluation failed: {exc}")

    json_path = out / f"certificate_n{n}_g{gamma:g}_b{b0:g}.json"
    cert.to_json(json_path)
    manifest = RunManifest(
        command="certify",
        params={"n": n, "gamma": gamma, "b0": b0, "mu": mu_value,
                "A": A, "rho0": rho0, "grid_size": grid_size},
        inputs=[config_path] if config_path else [],
        output_dir=str(out),
    )
    manifest.add(json_path)
    manifest.wall_clock = time.perf_counter() - t_start
    manifest.write(out)

    click.echo(f"mu = {mu_value!r}, status: {cert.status}; "
               f"certificate at {json_path}")
    if cert.status == "fail":
        raise click.ClickException(f"certificate failed: {_violated_condition(cert)}")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@main.command()
@click.option("--n", type=int, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--A", "A", type=float, default=None)
@click.option("--rho0", type=float, default=None)
@click.option("--b0", type=float, default=None)
@click.option("--eps", type=float, default=None, help="Perturbation amplitude.")
@click.option("--grid-points", type=int, default=None)
@click.option("--cfl", type=float, default=None)
@click.option("--t-end", type=float, default=None)
@click.option("--t0", type=float, default=None)
@click.option("--budget", type=float, default=None,
              help="Wall-clock budget in seconds (truncates the run).")
@_config_option
@_output_option
def simulate(n, gamma, A, rho0, b0, eps, grid_points, cfl, t_end, t0, budget,
             config_path, output_dir):
    """Run the free-boundary simulation and write the deviation series."""
    t_start = time.perf_counter()
    cfg = _load_config(config_path) if config_path else {}
    n = _resolve(n, cfg, "n", int, 3)
    gamma = _resolve(gamma, cfg, "gamma", float, 1.4)
    A = _resolve(A, cfg, "A", float, 1.0)
    rho0 = _resolve(rho0, cfg, "rho0", float, 1.0)
    b0 = _resolve(b0, cfg, "b0", float, None)
    if b0 is None:
        raise click.UsageError("--b0 is required (flag or config)")
    eps = _resolve(eps, cfg, "eps", float, 0.0)
    grid_points = _resolve(grid_points, cfg, "grid_points", int, 128)
    cfl = _resolve(cfl, cfg, "cfl", float, 0.4)
    t_end = _resolve(t_end, cfg, "t_end", float, 50.0)
    t0 = _resolve(t0, cfg, "t0", float, 1.0)
    budget = _resolve(budget, cfg, "budget", float, None)
    _check_n(n)
    gas = _gas(A, gamma, rho0)
    out = _output_dir(output_dir, cfg)

    try:
        config = SimConfig(n=n, gas=gas, b0=b0, eps=eps,
                           grid_points=grid_points, cfl=cfl,
                           t_end=t_end, t0=t0)
    except ValueError as exc:
        raise click.UsageError(str(exc))

    try:
        res = sim_run(config, wall_clock_budget=budget)
    except COMPUTATION_ERRORS as exc:
        raise click.ClickException(f"simulation failed: {exc}")

    csv_path = out / "simulation.csv"
    json_path = out / "simulation.json"
    res.to_csv(csv_path)
    summary = res.summary()
    # wall-clock varies between runs; keep artifacts byte-identical and
    # report timing in the manifest instead
    summary.pop("wall_clock", None)
    _write_json(summary, json_path)
    artifacts = [csv_path, json_path]

    if eps > 0.0:
        fit_path = out / "decay_fit.json"
        try:
            fit = fit_decay(res.t, res.sup_dev,
                            window=(max(5.0, 2.0 * t0), None))
            _write_json({"m0_est": fit.m0_est, "residual": fit.residual,
                         "window": list(fit.window)}, fit_path)
            click.echo(f"decay fit: m0_est = {fit.m0_est!r}")
        except ValueError as exc:
            _write_json({"error": str(exc)}, fit_path)
            click.echo(f"decay fit unavailable: {exc}")
        artifacts.append(fit_path)

    manifest = RunManifest(
        command="simulate",
        params={"n": n, "gamma": gamma, "A": A, "rho0": rho0, "b0": b0,
                "eps": eps, "grid_points": grid_points, "cfl": cfl,
                "t_end": t_end, "t0": t0, "budget": budget},
        inputs=[config_path] if config_path else [],
        output_dir=str(out),
    )
    for p in artifacts:
        manifest.add(p)
    manifest.wall_clock = time.perf_counter() - t_start
    manifest.write(out)

    if not res.completed:
        raise click.ClickException(
            f"run truncated at t = {float(res.t[-1])!r} after {res.steps} "
            f"steps (wall-clock budget exhausted)")
    click.echo(f"completed {res.steps} steps to t = {float(res.t[-1])!r}; "
               f"series at {csv_path}")


if __name__ == "__main__":
    main()
