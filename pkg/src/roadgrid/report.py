"""Render a result bundle into summary tables and figures.

Emits CSV tables (with a JSON mirror) plus matplotlib PNGs: convergence of
the coordination gap, expected locational prices, and the investment profile.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import F, _read_csv
from .solution import PriceSet, SystemState


def _expected(table: dict[str, dict], probs: dict[str, float]) -> dict:
    out: dict = {}
    for sid, row in table.items():
        for k, v in row.items():
            out[k] = out.get(k, 0.0) + probs.get(sid, 0.0) * v
    return out


def write_report(result_dir, outdir=None, formats=("csv", "json", "png")) -> list[Path]:
    """Summarize a result bundle; returns the list of files written."""
    from .io import read_result_bundle
    result_dir = Path(result_dir)
    outdir = Path(outdir) if outdir is not None else result_dir / "report"
    outdir.mkdir(parents=True, exist_ok=True)
    state, prices, meta = read_result_bundle(result_dir)
    probs = meta.get("scenario_probabilities") or {
        sid: 1.0 / len(state.scenarios) for sid in state.scenarios}
    written: list[Path] = []

    exp_rho = _expected(prices.rho, probs)
    exp_lam = _expected(prices.lam, probs)
    exp_flow = _expected({sid: st.flows for sid, st in state.scenarios.items()}, probs)
    exp_link = _expected({sid: st.link_flows for sid, st in state.scenarios.items()}, probs)

    if "csv" in formats:
        rows = ["bus,expected_rho", "# units: -,$/MWh"]
        rows += [f"{i},{F % v}" for i, v in sorted(exp_rho.items())]
        written.append(outdir / "expected_prices_electricity.csv")
        written[-1].write_text("\n".join(rows) + "\n")
        rows = ["destination,expected_lambda", "# units: -,$/MWh"]
        rows += [f"{s},{F % v}" for s, v in sorted(exp_lam.items())]
        written.append(outdir / "expected_prices_charging.csv")
        written[-1].write_text("\n".join(rows) + "\n")
        rows = ["branch,expected_flow", "# units: -,MW"]
        rows += [f"{i},{F % v}" for i, v in sorted(exp_flow.items())]
        written.append(outdir / "expected_branch_flows.csv")
        written[-1].write_text("\n".join(rows) + "\n")
        rows = ["link,expected_flow", "# units: -,vehicles/hour"]
        rows += [f"{i},{F % v}" for i, v in sorted(exp_link.items())]
        written.append(outdir / "expected_link_flows.csv")
        written[-1].write_text("\n".join(rows) + "\n")
        rows = ["bus,investment", "# units: -,MW"]
        rows += [f"{i},{F % v}" for i, v in sorted(state.z.items())]
        written.append(outdir / "investment.csv")
        written[-1].write_text("\n".join(rows) + "\n")

    if "json" in formats:
        payload = {
            "meta": meta,
            "expected_rho": exp_rho,
            "expected_lambda": exp_lam,
            "investment": state.z,
            "expected_branch_flows": exp_flow,
            "expected_link_flows": exp_link,
        }
        written.append(outdir / "report.json")
        written[-1].write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")

    if "png" in formats:
        trace_path = result_dir / "trace.csv"
        if trace_path.exists():
            rows = _read_csv(trace_path)
            if rows:
                it = [int(r["iter"]) for r in rows]
                fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
                ax1.semilogy(it, [float(r["gap"]) for r in rows], label="gap")
                ax1.semilogy(it, [float(r["gap1"]) for r in rows], "--", label="gap1 (consensus)")
                ax1.semilogy(it, [float(r["gap2"]) for r in rows], ":", label="gap2 (clearing)")
                ax1.set_xlabel("iteration")
                ax1.set_ylabel("relative gap")
                ax1.legend(fontsize=8)
                ax2.plot(it, [float(r["expected_objective"]) for r in rows])
                ax2.set_xlabel("iteration")
                ax2.set_ylabel("expected objective [$]")
                fig.tight_layout()
                written.append(outdir / "convergence.png")
                fig.savefig(written[-1], dpi=150)
                plt.close(fig)

        fig, ax = plt.subplots(figsize=(6, 3.2))
        keys = sorted(exp_rho)
        ax.bar([str(k) for k in keys], [exp_rho[k] for k in keys], color="tab:blue",
               label="electricity")
        lam_keys = sorted(exp_lam)
        ax.bar([f"s{k}" for k in lam_keys], [exp_lam[k] for k in lam_keys],
               color="tab:orange", label="charging")
        ax.set_ylabel("expected price [$/MWh]")
        ax.set_xlabel("bus / destination")
        ax.legend(fontsize=8)
        fig.tight_layout()
        written.append(outdir / "prices.png")
        fig.savefig(written[-1], dpi=150)
        plt.close(fig)

        if state.z:
            fig, ax = plt.subplots(figsize=(5, 3.2))
            keys = sorted(state.z)
            ax.bar([str(k) for k in keys], [state.z[k] for k in keys], color="tab:green")
            ax.set_ylabel("investment [MW]")
            ax.set_xlabel("bus")
            fig.tight_layout()
            written.append(outdir / "investment.png")
            fig.savefig(written[-1], dpi=150)
            plt.close(fig)
    return written
