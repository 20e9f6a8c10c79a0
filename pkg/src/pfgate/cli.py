"""Command-line runner: validated run configs, named reproduction targets, CSV/JSON output.

Usage::

    pfgate --config run.json [--out DIR] [--threads N] [--grid-scale F]
    pfgate --reproduce table2 [--out DIR] [--threads N] [--grid-scale F]
    pfgate --list

The default output directory is ``$PFGATE_OUT`` or ``./pfgate-out``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import platform
import sys
import time
import traceback
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .circuit import (
    REFERENCE_COUPLER_FREQUENCY,
    CircuitError,
    Device,
    TruncationSpec,
    device_from_dict,
    load_preset,
)
from .dynamics import (
    CoherenceSpec,
    RampEnvelope,
    ZXTable,
    config_hash,
    cycle_at_duration,
    ramp_fidelities,
    zx90_gate_error,
)
from .effective import (
    TRANSITION_ELEMENTS,
    numeric_transition_rates,
    symmetrized,
    transition_rates,
)
from .zz import (
    critical_amplitude,
    decoupling_frequency,
    driven_zero_sweep,
    find_idle_point,
    fit_exponents,
    freedom_curve,
    freedom_map_2d,
    numeric_effective_coupling,
    small_drive_factors,
    static_zz,
    static_zz_sweep,
)

OUT_ENV = "PFGATE_OUT"
DEFAULT_OUT = "pfgate-out"


class ConfigError(ValueError):
    """Run config failed validation; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


# ---------------------------------------------------------------------------
# formatting helpers


def _num(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    return "nan" if not math.isfinite(v) else repr(round(v, 10))


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return round(v, 12) if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(obj) -> str:
    return json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n"


def _grid(lo, hi, step):
    n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


# ---------------------------------------------------------------------------
# run context


class Context:
    def __init__(self, workers: int = 1, grid_scale: float = 1.0,
                 trunc: TruncationSpec | None = None):
        self.workers = max(1, int(workers))
        self.grid_scale = float(grid_scale)
        self.trunc = trunc or TruncationSpec()


def _coherence(c) -> CoherenceSpec | None:
    if c is None:
        return None
    return CoherenceSpec(c["T1q1"], c["T2q1"], c["T1q2"], c["T2q2"], c.get("unit", "us"))


BENCHMARK_COHERENCE = {"T1q1": 200.0, "T2q1": 200.0, "T1q2": 200.0, "T2q2": 200.0, "unit": "us"}


def _idle_or(device, value):
    if value is not None:
        return float(value)
    idle = find_idle_point(device)
    if idle.absent:
        raise ConfigError(f"{device.name or 'device'} has no idle point; set omegaCI",
                          "params.omegaCI")
    return idle.omegaCI


# ---------------------------------------------------------------------------
# tasks: each returns {filename: text}


def task_static_zz(device, p, g, ctx):
    w = _grid(*p["omegaCRange"], g["omegaCStep"])
    methods = p["methods"]
    cols = {"omegaC_GHz": w}
    exact = static_zz_sweep(device, w, "exact", ctx.trunc)
    files = {}
    for m in methods:
        if m == "exact":
            cols["zz_exact_kHz"] = exact.column("zz_kHz")
        else:
            vals = []
            for x in w:
                try:
                    vals.append(static_zz(device.at(x), m, ctx.trunc))
                except Exception:       # labelling failure of the iterative method
                    vals.append(math.nan)
            cols[f"zz_{m}_kHz"] = np.array(vals)
    cols["geff_MHz"] = exact.column("geff_MHz")
    if p["blockGeff"]:
        vals = []
        for x in w:
            try:
                vals.append(numeric_effective_coupling(device.at(x), ctx.trunc))
            except Exception:
                vals.append(math.nan)
        cols["geffBlock_MHz"] = np.array(vals)
    rows = zip(*cols.values(), exact.masked)
    files["static_zz.csv"] = write_csv(list(cols) + ["masked"], rows)
    files["zeros.json"] = write_json([asdict(z) for z in exact.zeros])
    return files


def task_idle_point(device, p, g, ctx):
    idle = find_idle_point(device, tuple(p["omegaCRange"]), ctx.trunc, g["omegaCStep"])
    closed = decoupling_frequency(device)
    status = "absent" if idle.absent else "ok"
    row = [device.name, idle.omegaCI, closed, idle.residualZZ, idle.residualGeff, status]
    header = ["device", "omegaCI_numeric_GHz", "omegaCI_closed_form_GHz",
              "residual_zz_kHz", "residual_geff_MHz", "status"]
    return {"idle_point.csv": write_csv(header, [row])}


def task_freedom_curve(device, p, g, ctx):
    w = _grid(*p["omegaCRange"], g["omegaCStep"])
    curve = freedom_curve(device, w, tuple(p["OmegaRange"]), ctx.trunc, g["OmegaStep"],
                          ctx.workers)
    return {"freedom_curve.csv": curve.to_csv(),
            "gaps.json": write_json([asdict(x) for x in curve.gaps])}


def task_map2d(device, p, g, ctx):
    d12 = _grid(*p["delta12Range"], g["delta12Step"])
    w = _grid(*p["omegaCRange"], g["omegaCStep"])
    sweep, bounds = freedom_map_2d(device, d12, w, p["Omega"], ctx.trunc, workers=ctx.workers)
    return {"map2d.csv": sweep.to_csv(),
            "boundaries.json": write_json([b.to_json() for b in bounds])}


def task_exponents(device, p, g, ctx):
    files = {}
    if p["omegaC"]:
        # the fit needs eight amplitudes whatever the grid scale
        Om = np.geomspace(p["fitRange"][0], p["fitRange"][1], max(8, g["OmegaPoints"]))
        rows, curves = [], []
        for wc in p["omegaC"]:
            fit = fit_exponents(device, wc, Om, ctx.trunc)
            rows.append([wc, fit.eta2, fit.mu1, fit.a, fit.zz_higher.residual,
                         fit.zz_higher.reliable, fit.b, fit.zx_higher.residual,
                         fit.zx_higher.reliable])
            curves += [[wc, O, z, x] for O, z, x in zip(fit.Omegas, fit.zz_residual,
                                                        fit.zx_residual)]
        files["exponents.csv"] = write_csv(
            ["omegaC_GHz", "eta2_kHz_per_MHz2", "mu1", "a", "a_fit_rms", "a_reliable",
             "b", "b_fit_rms", "b_reliable"], rows)
        files["higher_order.csv"] = write_csv(
            ["omegaC_GHz", "Omega_MHz", "zz_higher_kHz", "zx_higher_MHz"], curves)
    if p["etaRange"]:
        rows = []
        for wc in _grid(*p["etaRange"], g["etaStep"]):
            try:
                eta2, mu1 = small_drive_factors(device.at(wc), ctx.trunc)
            except Exception:
                eta2 = mu1 = math.nan
            rows.append([wc, eta2, mu1])
        files["eta.csv"] = write_csv(["omegaC_GHz", "eta2_kHz_per_MHz2", "mu1"], rows)
    return files


def task_ramp(device, p, g, ctx):
    wI = _idle_or(device, p["omegaCI"])
    wE = p["omegaCE"]
    rows, env = [], []
    taus = p["tau0"] if p["tau0"] is not None else list(np.linspace(*p["tau0Range"],
                                                                    g["tau0Points"]))
    for shape in p["shapes"]:
        for tau in taus:
            ramp = RampEnvelope(shape, float(tau), wI, wE, p["steepness"], p["edgeWidth"])
            fid = ramp_fidelities(device, ramp, ctx.trunc, round_trip=p["roundTrip"])
            rows += [[shape, tau, s, f, 1 - f] for s, f in fid.items()]
        ramp = RampEnvelope(shape, p["envelopeTau0"], wI, wE, p["steepness"], p["edgeWidth"])
        t = np.linspace(0, ramp.tau0, 201)
        env += [[shape, a, b] for a, b in zip(t, ramp(t))]
    files = {"envelope.csv": write_csv(["shape", "t_ns", "omegaC_GHz"], env)}
    if rows:
        files["ramp_fidelity.csv"] = write_csv(["shape", "tau0_ns", "state", "fidelity",
                                                "loss"], rows)
    return files


def task_gate_error(device, p, g, ctx):
    coh = _coherence(p["coherence"])
    params = device.at(p["omegaCE"])
    table = ZXTable.build(params, Omega_max=p["OmegaMax"], trunc=ctx.trunc)
    tg = None if p["tg"] is None else np.asarray(p["tg"], float)
    curve = zx90_gate_error(device, p["omegaCE"], coh, tg, ctx.trunc, p["rise"], p["fall"],
                            table=table, model=p["model"])
    tmin, emin = curve.minimum()
    summary = {"tgMin_ns": tmin, "errorMin": emin,
               "interiorMinima_ns": [float(curve.tg[i]) for i in curve.local_minima()],
               "model": p["model"], "omegaCE_GHz": p["omegaCE"],
               "maxTableAmplitude_MHz": table.max_amplitude}
    return {"gate_error.csv": curve.to_csv(), "minimum.json": write_json(summary)}


def task_full_cycle(device, p, g, ctx):
    coh = _coherence(p["coherence"])
    wI = _idle_or(device, p["omegaCI"])
    scan = cycle_at_duration(device, p["total"], wI, p["omegaCE"], coh, p["tg"], p["shape"],
                             ctx.trunc)
    out = {"schedule": scan.best.to_dict(), "result": scan.result.to_dict(),
           "total_ns": scan.best.duration, "omegaCI_GHz": wI, "omegaCE_GHz": p["omegaCE"]}
    return {"cycle_scan.csv": scan.to_csv(), "full_cycle.json": write_json(out)}


def task_fringes(device, p, g, ctx):
    w = _grid(*p["omegaCRange"], g["omegaCStep"])
    taus = _grid(*p["tauRange"], g["tauStep"]) if p["tauRange"] else np.array([])
    zz_rows, fr_rows, free = [], [], {}
    for O in p["Omegas"]:
        sweep = driven_zero_sweep(device, w, O, ctx.trunc)
        zz = sweep.column("zz_kHz")
        zx = sweep.column("alphaZX_MHz")
        zz_rows += [[O, a, b, c] for a, b, c in zip(w, zz, zx)]
        free[repr(float(O))] = [z.location for z in sweep.operating_points()]
        for a, b in zip(w, zz):
            fr_rows += [[O, a, t, math.cos(2 * math.pi * b * t * 1e-3)] for t in taus]
    files = {"driven_zz.csv": write_csv(["Omega_MHz", "omegaC_GHz", "zz_kHz", "alphaZX_MHz"],
                                        zz_rows),
             "zz_free.json": write_json(free)}
    if len(taus):
        files["fringes.csv"] = write_csv(["Omega_MHz", "omegaC_GHz", "tau_us", "fringe"],
                                         fr_rows)
    if p["critical"]:
        lo, hi = p["critical"]
        O, n_lo, n_hi = critical_amplitude(device, w, lo, hi, ctx.trunc)
        files["critical.json"] = write_json({"Omega_MHz": O, "countBelow": n_lo,
                                             "countAbove": n_hi})
    return files


# name -> (function, params defaults, grid defaults)
TASKS = {
    "static-zz": (task_static_zz,
                  {"omegaCRange": [4.4, 7.0], "methods": ["exact"], "blockGeff": False},
                  {"omegaCStep": 0.005}),
    "idle-point": (task_idle_point, {"omegaCRange": [4.4, 7.5]}, {"omegaCStep": 0.005}),
    "freedom-curve": (task_freedom_curve,
                      {"omegaCRange": [4.4, 7.0], "OmegaRange": [0.0, 100.0]},
                      {"omegaCStep": 0.02, "OmegaStep": 0.5}),
    "map2d": (task_map2d,
              {"delta12Range": [0.0, 0.4], "omegaCRange": [4.4, 7.0], "Omega": 0.0},
              {"delta12Step": 0.01, "omegaCStep": 0.02}),
    "exponents": (task_exponents,
                  {"omegaC": [], "fitRange": [5.0, 60.0], "etaRange": None},
                  {"OmegaPoints": 16, "etaStep": 0.02}),
    "ramp": (task_ramp,
             {"omegaCI": None, "omegaCE": REFERENCE_COUPLER_FREQUENCY,
              "shapes": ["tanh", "flatTopGaussian"], "tau0": None, "tau0Range": [5.0, 50.0],
              "steepness": 2.0, "edgeWidth": 0.3, "roundTrip": False, "envelopeTau0": 35.0},
             {"tau0Points": 10}),
    "gate-error": (task_gate_error,
                   {"omegaCE": REFERENCE_COUPLER_FREQUENCY, "coherence": BENCHMARK_COHERENCE,
                    "tg": None, "model": "effective", "rise": 20.0, "fall": 20.0,
                    "OmegaMax": 200.0},
                   {}),
    "full-cycle": (task_full_cycle,
                   {"omegaCI": None, "omegaCE": REFERENCE_COUPLER_FREQUENCY, "total": 145.0,
                    "tg": [60.0, 70.0, 80.0, 90.0, 100.0], "shape": "tanh",
                    "coherence": BENCHMARK_COHERENCE},
                   {}),
    "fringes": (task_fringes,
                {"omegaCRange": [4.5, 7.0], "Omegas": [0.0], "tauRange": [0.0, 10.0],
                 "critical": None},
                {"omegaCStep": 0.005, "tauStep": 0.1}),
}

TOP_KEYS = {"device", "task", "params", "grid", "output", "levels"}


# ---------------------------------------------------------------------------
# validation


def _merge(defaults: dict, given: dict | None, where: str) -> dict:
    given = given or {}
    if not isinstance(given, dict):
        raise ConfigError(f"{where} must be an object", where)
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {unknown}", f"{where}.{unknown[0]}")
    out = copy.deepcopy(defaults)
    out.update(given)
    return out


def resolve_device(spec) -> Device:
    if isinstance(spec, bool):
        raise ConfigError("device must be a preset number or an object", "device")
    if isinstance(spec, int):
        try:
            return load_preset(spec)
        except CircuitError as exc:
            raise ConfigError(str(exc), "device") from exc
    if isinstance(spec, dict):
        try:
            return device_from_dict(spec)
        except (CircuitError, TypeError) as exc:
            raise ConfigError(str(exc), "device") from exc
    raise ConfigError("device must be a preset number 1-6 or a parameter object", "device")


def validate(config: dict) -> dict:
    """Check a run config and fill defaults; raises :class:`ConfigError`."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(config) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s): {unknown}", unknown[0])
    for key in ("device", "task"):
        if key not in config:
            raise ConfigError(f"missing required field '{key}'", key)
    task = config["task"]
    if task not in TASKS:
        raise ConfigError(f"task must be one of {sorted(TASKS)}, got {task!r}", "task")
    resolve_device(config["device"])
    _, pdef, gdef = TASKS[task]
    out = {"device": config["device"], "task": task,
           "params": _merge(pdef, config.get("params"), "params"),
           "grid": _merge(gdef, config.get("grid"), "grid"),
           "output": config.get("output") or task,
           "levels": list(config.get("levels") or TruncationSpec().levels)}
    levels = out["levels"]
    if len(levels) != 3:
        raise ConfigError("levels needs three entries (Q1, coupler, Q2)", "levels")
    try:
        TruncationSpec(*levels)
    except CircuitError as exc:
        raise ConfigError(str(exc), "levels") from exc
    for k, v in out["grid"].items():
        if not (isinstance(v, (int, float)) and v > 0):
            raise ConfigError(f"grid.{k} must be a positive number", f"grid.{k}")
    if task in ("gate-error", "full-cycle") and out["params"]["coherence"] is not None:
        coh = _merge(BENCHMARK_COHERENCE, out["params"]["coherence"], "params.coherence")
        try:
            _coherence(coh)
        except ValueError as exc:
            raise ConfigError(str(exc), "params.coherence") from exc
        out["params"]["coherence"] = coh
    return out


def scaled_grid(grid: dict, factor: float) -> dict:
    """Coarsen: steps grow by ``factor``, point counts shrink by it (minimum 4)."""
    out = {}
    for k, v in grid.items():
        if k.endswith("Points"):
            out[k] = max(4, int(round(v / factor)))
        else:
            out[k] = v * factor
    return out


# ---------------------------------------------------------------------------
# running


def _versions() -> dict:
    return {"pfgate": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run_task(config: dict, out_dir, workers: int = 1, grid_scale: float = 1.0) -> dict:
    """Validate, run and write one config; returns the manifest."""
    cfg = validate(config)
    device = resolve_device(cfg["device"])
    ctx = Context(workers, grid_scale, TruncationSpec(*cfg["levels"]))
    func = TASKS[cfg["task"]][0]
    grid = scaled_grid(cfg["grid"], grid_scale)
    start = time.perf_counter()
    files = func(device, cfg["params"], grid, ctx)
    wall = time.perf_counter() - start
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    manifest = {"config": cfg, "configHash": config_hash(cfg), "gridScale": grid_scale,
                "effectiveGrid": grid, "versions": _versions(), "wallTime_s": round(wall, 3),
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "files": sorted(files)}
    (out / "manifest.json").write_text(write_json(manifest))
    return manifest


# ---------------------------------------------------------------------------
# reproduction targets


def _cfg(device, task, **params):
    return {"device": device, "task": task, "params": params}


def _table1(out: Path):
    rows = []
    for n in range(1, 7):
        d = load_preset(n)
        p, cap = d.params, d.capacitance
        rows.append([n, p.omega1, p.omega2, p.delta1, p.delta2, p.deltaC, p.g1c, p.g2c, p.g12,
                     cap.alpha1, cap.alpha2, cap.alpha12, int(cap.has_idle_solution)])
    header = ["device", "omega1_GHz", "omega2_GHz", "delta1_MHz", "delta2_MHz", "deltaC_MHz",
              "g1c_MHz", "g2c_MHz", "g12_MHz", "alpha1", "alpha2", "alpha12", "idle_solution"]
    (out / "table1.csv").write_text(write_csv(header, rows))


def _table2(out: Path):
    rows = []
    for n in range(1, 7):
        text = (out / f"device{n}" / "idle_point.csv").read_text().splitlines()
        rows.append(text[1].split(","))
    header = (out / "device1" / "idle_point.csv").read_text().splitlines()[0].split(",")
    (out / "table2.csv").write_text(write_csv(header, rows))


def _table3(out: Path, workers=1, grid_scale=1.0):
    dev = load_preset(2)
    idle = find_idle_point(dev)
    p = symmetrized(dev.at(idle.omegaCI))
    closed = transition_rates(p)
    exch = numeric_transition_rates(p, counter_rotating=False)
    full = numeric_transition_rates(p, counter_rotating=True)
    rows = []
    for k, (ket, bra) in TRANSITION_ELEMENTS.items():
        el = f"{''.join(map(str, ket))}-{''.join(map(str, bra))}"
        rows.append([k, el, closed[k], exch[k], full[k], exch[k] / closed[k]])
    header = ["k", "element", "closed_form", "numeric_exchange", "numeric_full",
              "ratio_exchange"]
    (out / "table3.csv").write_text(write_csv(header, rows))
    (out / "table3.json").write_text(write_json({"omegaC_GHz": idle.omegaCI, "Omega_MHz": 1.0,
                                                 "params": asdict(p)}))


FIG9_OMEGAS = {2: [0.0, 20.0, 40.0, 47.0, 60.0], 6: [0.0, 20.0, 42.3, 60.0]}
FIG10_OMEGAS = {2: [0.0, 47.0, 60.0], 6: [0.0, 42.3, 60.0]}

# target -> (description, [(label, config)], finisher or None)
TARGETS = {
    "table1": ("device parameters and capacitance ratios", [], _table1),
    "table2": ("numeric and closed-form idle coupler frequency",
               [(f"device{n}", _cfg(n, "idle-point")) for n in range(1, 7)], _table2),
    "table3": ("closed-form and numeric drive transition rates", [], _table3),
    "fig3": ("static ZZ against coupler frequency, devices 1-6",
             [(f"device{n}", _cfg(n, "static-zz")) for n in range(1, 7)], None),
    "fig4": ("total ZZ over qubit detuning and coupler frequency",
             [(f"device{n}_Omega{int(O)}", _cfg(n, "map2d", Omega=O))
              for n in (2, 6) for O in (0.0, 20.0, 40.0)], None),
    "fig5a": ("freedom amplitude against coupler frequency",
              [(f"device{n}", _cfg(n, "freedom-curve")) for n in range(1, 7)], None),
    "fig5b": ("ZX rate at the freedom amplitude",
              [(f"device{n}", _cfg(n, "freedom-curve")) for n in range(1, 7)], None),
    "fig5-horder": ("beyond-leading exponents a, b on device 6",
                    [("device6", _cfg(6, "exponents",
                                      omegaC=[4.5, 4.6, 4.7, 4.8, 5.0, 5.2, 5.4]))], None),
    "fig6a": ("ramp envelopes",
              [("device2", _cfg(2, "ramp", tau0=[]))], None),
    "fig6b": ("ramp fidelity loss against ramp time",
              [("device2", _cfg(2, "ramp"))], None),
    "fig7": ("ZX90 error against gate length, plus the device 6 cycle",
             [(f"device{n}", _cfg(n, "gate-error")) for n in range(2, 7)]
             + [("device6_cycle", _cfg(6, "full-cycle"))], None),
    "fig8": ("static ZZ by exact, Jacobi and perturbative methods",
             [("device2", _cfg(2, "static-zz", methods=["exact", "npad", "swt"],
                               blockGeff=True))], None),
    "fig9": ("total ZZ against coupler frequency at several drives",
             [("device2", _cfg(2, "fringes", Omegas=FIG9_OMEGAS[2], tauRange=None,
                               critical=[30.0, 60.0])),
              ("device6", _cfg(6, "fringes", Omegas=FIG9_OMEGAS[6], tauRange=None,
                               critical=[30.0, 70.0]))], None),
    "fig10": ("conditional-phase fringes",
              [(f"device{n}", _cfg(n, "fringes", Omegas=FIG10_OMEGAS[n]))
               for n in (2, 6)], None),
    "fig11": ("higher-order drive terms against amplitude on device 6",
              [("device6", _cfg(6, "exponents", omegaC=[4.5, 4.8, 5.0, 5.2, 5.4],
                                fitRange=[1.0, 100.0]))], None),
    "fig12": ("quadratic factor against coupler frequency",
              [(f"device{n}", _cfg(n, "exponents", etaRange=[4.5, 7.0]))
               for n in range(1, 7)], None),
}


def reproduce(name: str, out_dir, workers: int = 1, grid_scale: float = 1.0) -> dict:
    if name not in TARGETS:
        raise ConfigError(f"unknown target {name!r}; choose from {sorted(TARGETS)}", "reproduce")
    desc, configs, finish = TARGETS[name]
    out = Path(out_dir) / name
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    runs = {}
    for label, cfg in configs:
        runs[label] = run_task(cfg, out / label, workers, grid_scale)["configHash"]
    if finish is not None:
        finish(out)
    manifest = {"target": name, "description": desc, "runs": runs,
                "configHash": config_hash([c for _, c in configs] or name),
                "gridScale": grid_scale, "versions": _versions(),
                "wallTime_s": round(time.perf_counter() - start, 3),
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    (out / "manifest.json").write_text(write_json(manifest))
    return manifest


# ---------------------------------------------------------------------------
# entry point


def _error_record(out_dir, exc) -> dict:
    rec = {"status": "error", "kind": type(exc).__name__, "message": str(exc),
           "field": getattr(exc, "field", None)}
    if not isinstance(exc, ConfigError):
        rec["traceback"] = traceback.format_exc(limit=5)
    try:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "error.json").write_text(json.dumps(rec, indent=1) + "\n")
    except OSError:
        pass
    return rec


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pfgate", description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH", help="JSON run config")
    src.add_argument("--reproduce", metavar="NAME", help="named table or figure target")
    src.add_argument("--list", action="store_true", help="list tasks and targets")
    ap.add_argument("--out", metavar="DIR", default=None,
                    help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    ap.add_argument("--threads", metavar="N", type=int, default=1,
                    help="worker processes for grid tasks")
    ap.add_argument("--grid-scale", metavar="FACTOR", type=float, default=1.0,
                    help="coarsen every grid step by this factor")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    if args.list:
        print("tasks:   " + ", ".join(sorted(TASKS)))
        for name, (desc, _, _) in TARGETS.items():
            print(f"  {name:12s} {desc}")
        return 0
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1", "threads")
        if not args.grid_scale > 0:
            raise ConfigError("--grid-scale must be positive", "grid-scale")
        if args.config:
            try:
                config = json.loads(Path(args.config).read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
            cfg = validate(config)
            manifest = run_task(config, out / cfg["output"], args.threads, args.grid_scale)
        else:
            manifest = reproduce(args.reproduce, out, args.threads, args.grid_scale)
    except Exception as exc:            # every failure leaves a machine-readable record
        rec = _error_record(out, exc)
        print(json.dumps(rec), file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    print(json.dumps({"status": "ok", "wallTime_s": manifest["wallTime_s"],
                      "configHash": manifest["configHash"]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
