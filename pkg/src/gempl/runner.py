"""
Execute a validated :class:`~gempl.config.RunConfig` and write its results.

Every run produces a :class:`ResultEnvelope`: the command, the echoed inputs,
scalar and small-list outputs, the tool version and the constants mode. Long
series (spectrum traces, envelope time series, sweep rows) travel alongside
as CSV tables. Output is deterministic: JSON keys are sorted and CSV numbers
are printed with 9 significant digits, so repeated runs are byte-identical.
"""

from __future__ import annotations

import cmath
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gempl import __version__
from gempl.cavity_spectrum import (
    CavityGeometry,
    ModeIndex,
    doublet_from_coupling,
    mode_frequency,
    spectral_maxima,
    stokes_pump_assignment,
    synth_s21,
)
from gempl.config import RunConfig, SweepSpec
from gempl.constants import PhysicalConstants, get_constants
from gempl.errors import ConfigError, DomainError
from gempl.gem_field import SolenoidConfig, circle, enclosed_flux, interior_bg, line_integral_flux, vector_potential
from gempl.paramp import (
    EnvelopeRun,
    EnvelopeState,
    MembraneParams,
    PumpDrive,
    SeparatedCavityParams,
    braginsky_threshold,
    coupling_constants,
    integrate_envelopes,
    pump_field_from_energy,
    separated_threshold,
    unseparated_threshold,
)
from gempl.quantum_phase import (
    FluxPair,
    compton_phase,
    cooper_pair,
    electron,
    fluxoid_solve,
    london_moment,
    metric_from_potential,
    time_holonomy,
    total_ab_phase,
)

__all__ = ["ResultEnvelope", "run_command", "write_outputs", "format_number"]

TWO_PI = 2.0 * math.pi


def format_number(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


@dataclass
class ResultEnvelope:
    """Machine-readable record of one run.

    ``tables`` maps a table name to ``(header, rows)``; it is written as CSV
    and is not part of the JSON document.
    """

    command: str
    inputs: dict
    outputs: dict
    tool_version: str = __version__
    constants_mode: str = "codata"
    tables: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "constants_mode": self.constants_mode,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "tool_version": self.tool_version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultEnvelope":
        d = json.loads(text)
        return cls(d["command"], d["inputs"], d["outputs"], d["tool_version"], d["constants_mode"])


def _plain(v):
    """Convert numpy scalars/arrays and complex numbers to JSON-friendly values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {"abs": abs(v), "phase": cmath.phase(v)}
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


# command implementations ---------------------------------------------------


def _modes(p, constants):
    geom = CavityGeometry(p["length"], p["diameter"])
    try:
        index = ModeIndex.parse(p["mode"])
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"mode: {exc}") from None
    f = mode_frequency(geom, index, constants)
    return {"mode": str(index), "frequency_hz": f, "length_m": geom.length, "diameter_m": geom.diameter}, {}


def _spectrum(p, constants):
    doublet = doublet_from_coupling(p["f0"], p["coupling"], p["Q_S"], p["Q_p"])
    grid = None
    if "f_min" in p or "f_max" in p:
        if not ("f_min" in p and "f_max" in p):
            raise ConfigError("f_min and f_max must be given together")
        if not p["f_max"] > p["f_min"]:
            raise ConfigError("f_max must exceed f_min")
        if p["points"] < 3:
            raise ConfigError("points must be at least 3")
        grid = np.linspace(p["f_min"], p["f_max"], p["points"])
    elif p["points"] != 4001:
        lw = max(doublet.f_S / doublet.Q_S, doublet.f_p / doublet.Q_p)
        grid = np.linspace(doublet.f_S - 10 * lw, doublet.f_p + 10 * lw, p["points"])
    trace = synth_s21(doublet, (p["amp_S"], p["amp_p"]), grid)
    peaks = spectral_maxima(trace)
    assign = stokes_pump_assignment(doublet)
    out = {
        "f_S_hz": doublet.f_S,
        "f_p_hz": doublet.f_p,
        "splitting_hz": doublet.splitting,
        "Omega_rad_s": doublet.Omega,
        "maxima_hz": list(peaks),
        "maxima_separation_hz": float(peaks[-1] - peaks[0]) if len(peaks) >= 2 else 0.0,
        "grid_step_hz": float(trace.freq_hz[1] - trace.freq_hz[0]),
        "anti_stokes_hz": assign.omega_anti_stokes / TWO_PI,
        "anti_stokes_suppressed": assign.anti_stokes_suppressed,
    }
    rows = list(zip(trace.freq_hz, trace.s21_power))
    return out, {"spectrum": (list(trace.CSV_HEADER), rows)}


def _ab_phase(p, constants):
    cfg = SolenoidConfig(p["radius"], p["shell_thickness"], p["mass_per_length"], p["angular_velocity"])
    if p["species"] == "electron":
        species = electron(constants)
    elif p["species"] == "cooper_pair":
        species = cooper_pair(constants)
    else:
        raise ConfigError(f"species: expected 'electron' or 'cooper_pair', got {p['species']!r}")
    loop = circle(p["loop_radius"], sample_count=p["sample_count"])

    def h(x):
        return vector_potential(cfg, x, constants)

    phi_g = line_integral_flux(h, loop)
    pair = FluxPair(p["magnetic_flux"], phi_g)
    dt = time_holonomy(metric_from_potential(h, constants), loop, constants)
    out = {
        "mass_current_per_length_kg_s_m": cfg.mass_current_per_length,
        "interior_bg_per_s": interior_bg(cfg, constants),
        "Phi_g_m2_s": phi_g,
        "Phi_g_exact_m2_s": enclosed_flux(cfg, p["loop_radius"], constants),
        "Phi_wb": pair.Phi,
        "total_ab_phase_rad": total_ab_phase(species, pair, constants),
        "time_holonomy_s": dt,
        "compton_phase_rad": compton_phase(dt, species.mass, constants),
        "london_moment_t": london_moment(p["angular_velocity"], constants),
        "fluxoid_flux_wb": fluxoid_solve(p["ring_radius"], p["angular_velocity"], p["fluxoid_n"], constants),
    }
    return out, {}


def _cavity(p) -> SeparatedCavityParams:
    return SeparatedCavityParams(
        omega_s=TWO_PI * p["f_s"],
        omega_i=TWO_PI * p["f_i"],
        omega_p=TWO_PI * p["f_p"],
        Q_s=p["Q_s"],
        Q_i=p["Q_i"],
        Q_p=p["Q_p"],
        L_eff=p["L_eff"],
        A_eff=p["A_eff"],
    )


def _threshold(p, constants):
    cav = _cavity(p)
    mech = MembraneParams(p["m"], TWO_PI * p["f_mech"], p["A_eff"], Q_Omega=p["Q_mech"])
    report = separated_threshold(cav, p["m"], p.get("U_p"), mech, constants)
    U_unsep = unseparated_threshold(p["m"], mech.Omega, TWO_PI * p["f_stokes"], p["L_eff"], p["Q_stokes"], p["Q_mech"])
    U_brag = braginsky_threshold(p["m"], cav.omega_s, p["L_eff"], p["Q_i"], p["Q_s"])
    out = {
        "separated": report.to_dict(),
        "B_p_threshold_t": pump_field_from_energy(report.U_p_threshold, cav.V_eff, constants),
        "unseparated_U_p_threshold_j": U_unsep,
        "braginsky_U_p_threshold_j": U_brag,
        "separated_over_braginsky": report.U_p_threshold / U_brag,
    }
    return out, {}


def _simulate(p, constants):
    cav = _cavity(p)
    U_thr = separated_threshold(cav, p["m"], constants=constants).U_p_threshold
    if "B_p" in p:
        B_abs = p["B_p"]
    else:
        B_abs = pump_field_from_energy(p["pump_fraction"] * U_thr, cav.V_eff, constants)
    pump = PumpDrive.polar(B_abs, p["phi_p"], cav.omega_p)
    mem = MembraneParams(p["m"], cav.omega_s, p["A_eff"], Q_Omega=p["Q_s"])
    K1, K2 = coupling_constants(pump, mem, cav, constants)
    bi0 = p["bi0"]
    eps0 = p.get("eps0", math.sqrt(K1 / K2) * bi0 if K2 > 0 else bi0)
    run: EnvelopeRun = integrate_envelopes(
        cav,
        pump,
        mem,
        EnvelopeState(complex(eps0), complex(bi0)),
        phases={"phi_p": p["phi_p"], "phi_i": p["phi_i"], "phi_s": p["phi_s"]},
        t_end=p["t_end"],
        dt=p.get("dt"),
        constants=constants,
        sample_every=p["sample_every"],
    )
    out = {
        "B_p_t": B_abs,
        "U_p_j": B_abs**2 * cav.V_eff / constants.mu_0,
        "U_p_threshold_j": U_thr,
        "B_p_threshold_t": pump_field_from_energy(U_thr, cav.V_eff, constants),
        "K1": run.K1,
        "K2": run.K2,
        "Lambda_per_s": math.sqrt(run.K1 * run.K2),
        "fitted_rate_per_s": run.fitted_rate,
        "predicted_rate_per_s": run.predicted_rate,
        "phase_mismatch_rad": p["phi_p"] - p["phi_i"] - p["phi_s"],
        "samples": len(run.t),
    }
    rows = [(t, abs(e), cmath.phase(e), abs(b), cmath.phase(b)) for t, e, b in zip(run.t, run.eps, run.B_i)]
    return out, {"envelopes": (list(EnvelopeRun.CSV_HEADER), rows)}


_COMMANDS = {
    "modes": _modes,
    "spectrum": _spectrum,
    "ab-phase": _ab_phase,
    "threshold": _threshold,
    "simulate": _simulate,
}


def _scalar_items(outputs: dict, prefix: str = ""):
    for k, v in outputs.items():
        if isinstance(v, dict):
            yield from _scalar_items(v, f"{prefix}{k}.")
        elif isinstance(v, (bool, int, float, str)) or v is None:
            yield f"{prefix}{k}", v


def _sweep_point(args):
    command, params, constants = args
    out, _ = _COMMANDS[command](params, constants)
    return _plain(out)


def _zero_crossing(xs, ys):
    for k in range(len(xs) - 1):
        y0, y1 = ys[k], ys[k + 1]
        if y0 == 0.0:
            return xs[k]
        if y0 * y1 < 0:
            return xs[k] + (xs[k + 1] - xs[k]) * y0 / (y0 - y1)
    return None


def _sweep(spec: SweepSpec, p, constants):
    values = spec.values()
    jobs = [(spec.command, {**p, spec.parameter: v}, constants) for v in values]
    if spec.workers > 1:
        # map preserves submission order, so rows stay in sweep order
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]

    columns = [spec.parameter]
    rows_kv = []
    for v, res in zip(values, results):
        kv = dict(_scalar_items(res))
        kv[spec.parameter] = v
        for k in kv:
            if k not in columns:
                columns.append(k)
        rows_kv.append(kv)
    rows = [[kv.get(c, "") for c in columns] for kv in rows_kv]
    out = {"parameter": spec.parameter, "values": values, "results": results}
    if spec.track:
        ys = [dict(_scalar_items(r)).get(spec.track) for r in results]
        if any(not isinstance(y, (int, float)) or isinstance(y, bool) for y in ys):
            raise ConfigError(f"sweep.track: {spec.track!r} is not a numeric output of {spec.command!r}")
        out["track"] = spec.track
        out["track_zero_crossing"] = _zero_crossing(values, ys)
    return out, {"sweep": (columns, rows)}


def run_command(config: RunConfig, constants: PhysicalConstants | None = None) -> ResultEnvelope:
    """Run ``config`` and return its :class:`ResultEnvelope`.

    ``constants`` defaults to the set selected by the ``GEMPL_CONSTANTS``
    environment variable.
    """
    constants = constants if constants is not None else get_constants()
    if config.command == "sweep":
        outputs, tables = _sweep(config.sweep, config.params, constants)
    else:
        outputs, tables = _COMMANDS[config.command](config.params, constants)
    inputs = {"params": dict(config.params)}
    if config.sweep is not None:
        s = config.sweep
        inputs["sweep"] = {
            "command": s.command,
            "parameter": s.parameter,
            "start": s.start,
            "stop": s.stop,
            "count": int(s.count),
            "scale": s.scale,
            "workers": int(s.workers),
            "track": s.track,
        }
    outputs = _plain(outputs)
    outputs["tables"] = sorted(f"{name}.csv" for name in tables)
    return ResultEnvelope(config.command, _plain(inputs), outputs, __version__, constants.mode, tables)


def write_outputs(envelope: ResultEnvelope, out_dir) -> list[Path]:
    """Write ``result.json`` and one CSV per table into ``out_dir``; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    p = out / "result.json"
    p.write_text(envelope.to_json(), encoding="utf-8")
    paths.append(p)
    for name in sorted(envelope.tables):
        header, rows = envelope.tables[name]
        p = out / f"{name}.csv"
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(format_number(v) for v in row) + "\n")
        paths.append(p)
    return paths

