"""Trace, summary and check-report artifacts: CSV, JSON, SVG.

Trace CSV column order is fixed and mirrored in the header row:
``k, t, norm_v, f0..f{n-1}, dist_step, phi``.  Floats are written with
``repr`` (shortest round-trip form), so identical runs produce
byte-identical files.  The final record of a run carries no step; its ``t``
cell is empty, as is ``phi`` when the run did not record merit values.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import IterateRecord, RunConfig, Termination, Trace
from .harness import CheckReport


def _cell(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def write_trace_csv(trace: Trace, path) -> None:
    path = Path(path)
    n = len(trace.records[0].F) if trace.records else 0
    header = ["k", "t", "norm_v"] + [f"f{i}" for i in range(n)] + ["dist_step", "phi"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in trace.records:
            row = [str(r.k), _cell(r.t), _cell(r.norm_v)]
            row += [_cell(x) for x in r.F]
            row += [_cell(r.dist_step), _cell(r.phi)]
            writer.writerow(row)


def read_trace_csv(path, config: Optional[RunConfig] = None) -> Trace:
    """Rebuild a check-ready trace from a CSV artifact.

    Points, directions and Jacobian actions are not serialized, so the
    result supports only the value-level checks (monotonicity, step range,
    movement, merit descent, summability)."""
    path = Path(path)
    records = []
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = sum(1 for h in header if h.startswith("f"))
        for row in reader:
            k = int(row[0])
            t = float(row[1]) if row[1] else math.nan
            norm_v = float(row[2])
            F = np.array([float(x) for x in row[3 : 3 + n]])
            dist_step = float(row[3 + n])
            phi = float(row[4 + n]) if row[4 + n] else None
            records.append(
                IterateRecord(
                    k=k,
                    point=None,
                    F=F,
                    v=None,
                    norm_v=norm_v,
                    t=t,
                    weights=None,
                    jacobian=None,
                    dist_step=dist_step,
                    phi=phi,
                )
            )
    return Trace(
        config=config or RunConfig(),
        records=records,
        termination=Termination.MAX_ITER,
    )


def summary_dict(trace: Trace) -> dict:
    final = trace.final if trace.records else None
    manifold = trace.objective.manifold.to_config() if trace.objective else None
    return {
        "termination": trace.termination.value,
        "iterations": trace.iterations,
        "message": trace.message,
        "manifold": manifold,
        "final_point": None if final is None else np.asarray(final.point.coords).tolist(),
        "final_F": None if final is None else final.F.tolist(),
        "final_norm_v": None if final is None else float(final.norm_v),
        "config": dataclasses.asdict(trace.config),
    }


def write_summary_json(trace: Trace, path) -> None:
    Path(path).write_text(json.dumps(summary_dict(trace), indent=2, sort_keys=True) + "\n")


def read_summary_json(path) -> dict:
    return json.loads(Path(path).read_text())


def config_from_summary(summary: dict) -> RunConfig:
    return RunConfig(**summary["config"])


def write_report_json(reports: Sequence[CheckReport], path) -> None:
    payload = [r.to_dict() for r in reports]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def plot_trace_svg(
    trace: Trace,
    path,
    rho: Optional[float] = None,
    mu: Optional[float] = None,
) -> None:
    """Self-contained SVG diagnostics: direction norms, merit values, and
    distance to the final iterate, with the theoretical geometric decay
    overlaid when rate constants are supplied."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ks = [r.k for r in trace.records]
    norms = [max(r.norm_v, 1e-300) for r in trace.records]
    phis = [r.phi for r in trace.records]
    have_phi = all(p is not None for p in phis) and len(phis) > 0
    have_points = all(r.point is not None for r in trace.records)

    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.4))
    axes[0].semilogy(ks, norms, marker=".", lw=1.0)
    axes[0].set_xlabel("k")
    axes[0].set_ylabel("direction norm")

    if have_phi:
        axes[1].semilogy(ks, [max(p, 1e-300) for p in phis], marker=".", lw=1.0)
        if rho is not None and phis[0] is not None and phis[0] > 0:
            bound = [phis[0] * rho ** (2 * k) for k in ks]
            axes[1].semilogy(ks, [max(b, 1e-300) for b in bound], "--", lw=1.0, label="rho^2k bound")
            axes[1].legend(fontsize=8)
    axes[1].set_xlabel("k")
    axes[1].set_ylabel("merit value")

    if have_points and trace.records:
        m = trace.records[0].point.manifold
        p_star = trace.final.point
        dists = [max(m.dist(r.point, p_star), 1e-300) for r in trace.records]
        axes[2].semilogy(ks, dists, marker=".", lw=1.0)
        if rho is not None and mu is not None and have_phi and phis[0] > 0:
            bound = [math.sqrt(max(mu * phis[0], 0.0)) * rho**k for k in ks]
            axes[2].semilogy(ks, [max(b, 1e-300) for b in bound], "--", lw=1.0, label="rate bound")
            axes[2].legend(fontsize=8)
    axes[2].set_xlabel("k")
    axes[2].set_ylabel("distance to final iterate")

    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
