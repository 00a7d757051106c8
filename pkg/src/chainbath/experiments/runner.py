"""Sweep execution, CSV/JSON output and plot-script emission."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .. import __version__
from ..spectral import recurrence_time_estimate
from .config import ScenarioConfig
from .scenarios import SCENARIOS, build_star, cell_params, compute_cell

__all__ = ["ScenarioResult", "run_scenario", "write_result", "estimate", "OUTPUT_ENV"]

log = logging.getLogger(__name__)

OUTPUT_ENV = "CHAINBATH_OUTPUT_DIR"


@dataclass
class ScenarioResult:
    columns: tuple
    rows: list  # one dict per cell, sorted by sweep coordinates
    meta: dict

    @property
    def table(self) -> list:
        return [[row[c] for c in self.columns] for row in self.rows]

    @property
    def failed(self) -> list:
        return self.meta.get("failures", [])

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.table:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, (int, float)):
        return "%.17g" % v
    return str(v)


def _cells(cfg: ScenarioConfig) -> list[dict]:
    names = [a.name for a in cfg.sweep]
    grids = [sorted(a.values) for a in cfg.sweep]
    return [dict(zip(names, combo)) for combo in itertools.product(*grids)]


def _run_cell(scenario: str, params: dict, nm: dict) -> tuple[dict, Optional[str]]:
    try:
        return compute_cell(scenario, params, nm), None
    except Exception as exc:  # fail-soft: record and continue with the next cell
        return {}, f"{type(exc).__name__}: {exc}"


def _apply_overrides(cfg: ScenarioConfig, dt=None, t_final=None) -> ScenarioConfig:
    run = dict(cfg.run)
    if dt is not None:
        if dt <= 0:
            raise ValueError("dt must be positive")
        run["dt"] = float(dt)
    if t_final is not None:
        if t_final != "horizon" and float(t_final) <= 0:
            raise ValueError("t_final must be positive")
        run["t_final"] = t_final if t_final == "horizon" else float(t_final)
    return ScenarioConfig(cfg.scenario, dict(cfg.model), list(cfg.sweep), dict(cfg.nm), run, cfg.source)


def _recurrence_summary(cfg: ScenarioConfig, cells: list[dict]) -> dict:
    """Recurrence estimates of every distinct bath in the sweep."""
    seen = {}
    for coords in cells:
        p = cell_params(cfg, coords)
        try:
            star = build_star(p)
        except Exception:
            continue
        key = json.dumps({k: p.get(k) for k in sorted(cfg.model)}, sort_keys=True, default=str)
        if key not in seen:
            seen[key] = recurrence_time_estimate(star).as_dict()
    values = list(seen.values())
    return {
        "n_baths": len(values),
        "tau_rephasing_min": min((v["tau_rephasing"] for v in values), default=math.nan),
        "tau_signal_min": min((v["tau_signal"] for v in values), default=math.nan),
        "safe_horizon_min": min((v["safe_horizon"] for v in values), default=math.nan),
    }


def run_scenario(cfg: ScenarioConfig, workers: Optional[int] = None, dt=None, t_final=None) -> ScenarioResult:
    """Evaluate every sweep cell; failures become NaN rows listed in ``meta['failures']``."""
    cfg = _apply_overrides(cfg, dt, t_final)
    sc = SCENARIOS[cfg.scenario]
    workers = int(workers or cfg.run.get("workers", 1))
    cells = _cells(cfg)
    params = [cell_params(cfg, c) for c in cells]
    t0 = time.perf_counter()
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_cell, [cfg.scenario] * len(cells), params, [cfg.nm] * len(cells)))
    else:
        outs = [_run_cell(cfg.scenario, p, cfg.nm) for p in params]
    elapsed = time.perf_counter() - t0

    axis_names = tuple(a.name for a in cfg.sweep)
    columns = axis_names + tuple(c for c in sc.columns if c not in axis_names)
    rows, failures = [], []
    for coords, (values, err) in zip(cells, outs):
        row = {c: math.nan for c in columns}
        row.update(coords)
        if err is None:
            row.update({c: values[c] for c in columns if c in values})
            row["status"] = "ok"
        else:
            row["status"] = "failed"
            failures.append({"cell": coords, "error": err})
            log.warning("cell %s failed: %s", coords, err)
        rows.append(row)

    meta = {
        "scenario": cfg.scenario,
        "description": sc.description,
        "columns": list(columns),
        "config": cfg.resolved(),
        "recurrence": _recurrence_summary(cfg, cells),
        "n_cells": len(cells),
        "n_failed": len(failures),
        "failures": failures,
        "log_base": "e",
        "version": __version__,
        "timing": {"seconds": elapsed, "workers": workers},
    }
    return ScenarioResult(columns=columns, rows=rows, meta=meta)


def default_output_dir(cfg: ScenarioConfig, out: Optional[str] = None) -> Path:
    if out:
        return Path(out)
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    return Path(cfg.run.get("output", "results"))


def write_result(result: ScenarioResult, out_dir, emit_plots: bool = False) -> dict:
    """Write ``<scenario>.csv``, ``<scenario>.meta.json`` and optionally a plot script."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = result.meta["scenario"]
    paths = {"csv": out_dir / f"{name}.csv", "meta": out_dir / f"{name}.meta.json"}
    paths["csv"].write_text(result.to_csv())
    # timing varies run to run, so it lives only in the sidecar
    paths["meta"].write_text(json.dumps(result.meta, indent=2, sort_keys=True, default=str) + "\n")
    if emit_plots:
        paths["plot"] = out_dir / f"plot_{name}.py"
        paths["plot"].write_text(plot_script(result))
    return paths


_LINE = '''import csv
import math
import sys

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{csv}")))
x, ys, group = "{x}", {ys}, {group}
series = {{}}
for r in rows:
    series.setdefault(r[group] if group else "", []).append(r)
fig, axes = plt.subplots(len(ys), 1, sharex=True, squeeze=False)
for ax, y in zip(axes[:, 0], ys):
    for label, rs in sorted(series.items()):
        ax.plot([float(r[x]) for r in rs], [float(r[y]) for r in rs], ".-", label=label or None)
    ax.set_ylabel(y)
axes[-1, 0].set_xlabel(x)
if group:
    axes[0, 0].legend(title=group)
fig.savefig("{png}", dpi=150)
if "--show" in sys.argv:
    plt.show()
'''

_HEAT = '''import csv
import sys

import matplotlib.pyplot as plt
import numpy as np

rows = list(csv.DictReader(open("{csv}")))
x, y, z = "{x}", "{y}", "{z}"
xs = sorted({{float(r[x]) for r in rows}})
yv = sorted({{float(r[y]) for r in rows}})
Z = np.full((len(yv), len(xs)), np.nan)
for r in rows:
    Z[yv.index(float(r[y])), xs.index(float(r[x]))] = float(r[z])
fig, ax = plt.subplots()
m = ax.pcolormesh(xs, yv, Z, shading="nearest")
fig.colorbar(m, label=z)
ax.set_xlabel(x)
ax.set_ylabel(y)
fig.savefig("{png}", dpi=150)
if "--show" in sys.argv:
    plt.show()
'''


def plot_script(result: ScenarioResult) -> str:
    """Standalone matplotlib script reading the CSV: heatmap for 2 axes, lines otherwise."""
    name = result.meta["scenario"]
    axes = [a["name"] for a in result.meta["config"]["sweep"]]
    sc = SCENARIOS[name]
    numeric = [c for c in sc.observables if c not in ("RHP_status",)]
    csv_name, png = f"{name}.csv", f"{name}.png"
    heat = name in ("resonance_filter_map", "nm_temperature_map") and len(axes) == 2
    if heat:
        z = "log_M_BLP" if "log_M_BLP" in numeric else numeric[0]
        return _HEAT.format(csv=csv_name, png=png, x=axes[1], y=axes[0], z=z)
    x = axes[-1] if axes else numeric[0]
    group = repr(axes[0]) if len(axes) == 2 else "None"
    return _LINE.format(csv=csv_name, png=png, x=x, ys=repr(numeric), group=group)


def estimate(cfg: ScenarioConfig, dt=None, t_final=None) -> dict:
    """Cell count, horizons and a rough cost figure without running the sweep."""
    cfg = _apply_overrides(cfg, dt, t_final)
    cells = _cells(cfg)
    rec = _recurrence_summary(cfg, cells)
    from .scenarios import build_grid

    n_pairs = len(build_grid(cfg.nm).pairs()) if cfg.scenario.startswith("nm_") or cfg.scenario.startswith("sm_") else 0
    tf = cfg.run.get("t_final", "horizon")
    t_used = rec["safe_horizon_min"] if tf == "horizon" else float(tf)
    n_steps = int(t_used / float(cfg.run.get("dt", 0.1))) + 1 if math.isfinite(t_used) else 0
    return {
        "scenario": cfg.scenario,
        "n_cells": len(cells),
        "blp_pairs_per_cell": n_pairs,
        "time_steps_per_cell": n_steps,
        "work_units": len(cells) * max(n_pairs, 1) * n_steps,
        "t_final": tf,
        **rec,
    }
