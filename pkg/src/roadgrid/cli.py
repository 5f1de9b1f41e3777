"""Command line interface.

Subcommands: solve (decomposition run), oracle (direct small-instance solve),
certify (audit a result bundle), sample-scenarios, and report. Failures exit 1
with a machine-readable JSON object on stderr; bad usage exits 2.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import admm, io, verify
from .errors import Infeasible, NonConverged, ParseError, RoadGridError, SizeGuardExceeded
from .network import validate
from .scenarios import sample_uniform


def _fail(kind: str, message: str, **extra) -> None:
    payload = {"error": kind, "message": message}
    payload.update({k: v for k, v in extra.items() if v is not None})
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def _load(config_path):
    cfg = io.read_config(config_path)
    system, scenario_set = io.build_system(cfg)
    report = validate(system)
    if not report.ok:
        _fail("ValidationError", str(report))
    return cfg, system, scenario_set


def _meta(result, cfg, scenario_set, method):
    return {
        "method": method,
        "converged": result.converged,
        "iterations": result.iterations,
        "gap": result.gap, "gap1": result.gap1, "gap2": result.gap2,
        "expected_objective": result.expected_objective,
        "travel_time_hours": result.travel_time_hours,
        "energy_cost_dollars": result.energy_cost_dollars,
        "expected_rho": result.expected_rho,
        "expected_lambda": result.expected_lambda,
        "investment": result.investment,
        "eps": cfg.eps, "alpha": cfg.alpha, "seed": cfg.seed,
        "scenario_probabilities": {s.id: s.probability for s in scenario_set},
    }


@click.group()
def main() -> None:
    """Market equilibrium for coupled road and power networks."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Output directory (defaults to the config's outdir).")
@click.option("--init-seed", type=int, default=None,
              help="Perturb the cold start (used by the uniqueness probe).")
def solve(config_path, out_dir, init_seed):
    """Run the decomposition solver and write a result bundle."""
    cfg, system, scenario_set = _load(config_path)
    outdir = Path(out_dir) if out_dir else cfg.outdir
    try:
        result = admm.run(system, scenario_set, cfg.admm_config(init_seed=init_seed),
                          strict=False)
    except Infeasible as exc:
        _fail("Infeasible", str(exc), scenario=exc.scenario_id)
        return
    io.write_result_bundle(outdir, result.state, result.prices,
                           _meta(result, cfg, scenario_set, "admm"), trace=result.trace)
    click.echo(f"wrote {outdir} (gap {result.gap:.3e} after {result.iterations} iterations)")
    if not result.converged:
        _fail("NonConverged",
              f"gap {result.gap:.3e} above eps {cfg.eps:.3e} after {result.iterations} iterations")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=None)
def oracle(config_path, out_dir):
    """Solve the coupled program directly (small instances) and write a bundle."""
    cfg, system, scenario_set = _load(config_path)
    outdir = Path(out_dir) if out_dir else cfg.outdir
    try:
        mono = verify.monolithic_solve(system, scenario_set,
                                       nonnegative_charging=cfg.nonnegative_charging)
    except (SizeGuardExceeded, Infeasible) as exc:
        _fail(type(exc).__name__, str(exc), scenario=getattr(exc, "scenario_id", None))
        return
    probs = {s.id: s.probability for s in scenario_set}
    meta = {
        "method": "oracle", "converged": True, "iterations": 0,
        "gap": 0.0, "gap1": 0.0, "gap2": 0.0,
        "expected_objective": mono.objective,
        "expected_rho": mono.prices.expected_rho(probs),
        "expected_lambda": mono.prices.expected_lambda(probs),
        "investment": mono.state.z,
        "status": mono.status, "seed": cfg.seed,
        "scenario_probabilities": probs,
    }
    io.write_result_bundle(outdir, mono.state, mono.prices, meta)
    click.echo(f"wrote {outdir} (objective {mono.objective:.6g}, {mono.status})")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--result", "result_dir", required=True, type=click.Path(exists=True))
@click.option("--tol", type=float, default=None,
              help="Money tolerance for agent regrets (default 1e-3 x system cost).")
def certify(config_path, result_dir, tol):
    """Audit a result bundle: best-response regrets, clearing residuals, routing."""
    cfg, system, scenario_set = _load(config_path)
    state, prices, _meta_dict = io.read_result_bundle(result_dir)
    cert = verify.certify(system, scenario_set, state, prices, money_tol=tol,
                          nonnegative_charging=cfg.nonnegative_charging)
    payload = cert.as_dict()
    (Path(result_dir) / "certificate.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    if not cert.verdict:
        _fail("CertificationFailed", "point is not an equilibrium at the given tolerances")


@main.command("sample-scenarios")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--count", "n", type=int, required=True)
@click.option("--lo", type=float, default=0.5, show_default=True)
@click.option("--hi", type=float, default=1.5, show_default=True)
@click.option("--seed", type=int, default=None, help="Defaults to the config seed.")
@click.option("--out", "out_path", required=True, type=click.Path())
def sample_scenarios(config_path, n, lo, hi, seed, out_path):
    """Draw capacity-factor scenarios for the config's renewable sites."""
    cfg = io.read_config(config_path)
    power = io.parse_power_case(cfg.power_case)
    sites = power.renewable_buses()
    if not sites:
        _fail("ValidationError", "power case declares no renewable sites")
    scenario_set = sample_uniform(sites, n, lo, hi, cfg.seed if seed is None else seed)
    io.write_scenarios(scenario_set, out_path)
    click.echo(f"wrote {out_path} ({n} scenarios over {len(sites)} sites)")


@main.command()
@click.option("--result", "result_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--formats", default="csv,json,png", show_default=True)
def report(result_dir, out_dir, formats):
    """Write summary tables and figures for a result bundle."""
    from .report import write_report
    written = write_report(result_dir, out_dir, formats=tuple(formats.split(",")))
    for path in written:
        click.echo(f"wrote {path}")


def _excepthook(tp, value, tb):
    if isinstance(value, ParseError):
        _fail("ParseError", str(value))
    if isinstance(value, RoadGridError):
        _fail(type(value).__name__, str(value))
    sys.__excepthook__(tp, value, tb)


sys.excepthook = _excepthook

if __name__ == "__main__":
    main()
