"""JSON-config experiment runner: validated configs in, CSV tables + manifest out.

Each experiment binds one computational module to a flat parameter map.  The
runner owns validation (schema + module preconditions), deterministic output
(full-precision floats, LF endings), and a per-run manifest with checksums.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__
from .bathsim import (
    NoiseSynthSpec,
    _max_step_allowed,
    analytic_correlation,
    analytic_psd,
    ensemble_average,
    equivalent_dephasing_profile,
    estimate_correlation,
    make_shape,
)
from .criticality import (
    DissipationSpec,
    RabiNormalPhase,
    build_ladder,
    check_ladder,
    dissipative_qfi_scan,
    ladder_gap,
    thermal_scan,
)
from .lindblad import dephasing_analytic
from .operators import plus_state, quadrature_x
from .ramsey import Markov, Noiseless, Zeno, scaling_scan

_NOISE_KINDS = {"noiseless": Noiseless, "markov": Markov, "zeno": Zeno}

_TOP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment", "parameters"],
    "properties": {
        "experiment": {
            "type": "string",
            "enum": [
                "ramsey-scaling",
                "criticality-qfi",
                "thermal-qfi",
                "bath-sim",
                "ladder-check",
            ],
        },
        "parameters": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_dir": {"type": "string", "minLength": 1},
    },
}

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

_PARAM_SCHEMAS = {
    "ramsey-scaling": {
        "type": "object",
        "additionalProperties": False,
        "required": ["noise", "T", "n_values"],
        "properties": {
            "noise": {"type": "string", "enum": sorted(_NOISE_KINDS)},
            "C": _POS,
            "T": _POS,
            "t_fixed": _POS,
            "n_values": {
                "type": "array",
                "minItems": 2,
                "items": {"type": "integer", "minimum": 1},
            },
        },
    },
    "criticality-qfi": {
        "type": "object",
        "additionalProperties": False,
        "required": ["omega", "n_fock", "g_list", "t_max", "dt_out"],
        "properties": {
            "omega": _POS,
            "n_fock": {"type": "integer", "minimum": 2},
            "g_list": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "kappa1": _NONNEG,
            "nbar": _NONNEG,
            "kappa2": _NONNEG,
            "t_max": _POS,
            "dt_out": _POS,
            "fd_step": _POS,
            "audit": {"type": "boolean"},
        },
    },
    "thermal-qfi": {
        "type": "object",
        "additionalProperties": False,
        "required": ["omega", "n_fock", "g", "kappa1", "nbar_list", "t_max", "dt_out"],
        "properties": {
            "omega": _POS,
            "n_fock": {"type": "integer", "minimum": 2},
            "g": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "kappa1": _POS,
            "nbar_list": {"type": "array", "minItems": 1, "items": _NONNEG},
            "t_max": _POS,
            "dt_out": _POS,
            "fd_step": _POS,
            "audit": {"type": "boolean"},
        },
    },
    "bath-sim": {
        "type": "object",
        "additionalProperties": False,
        "required": ["shape", "alpha", "omega0", "nc", "t_max", "n_steps", "n_traj"],
        "properties": {
            "shape": {"type": "string", "enum": ["flat", "ohmic", "one_over_f"]},
            "alpha": _POS,
            "omega0": _POS,
            "nc": {"type": "integer", "minimum": 1},
            "t_max": _POS,
            "n_steps": {"type": "integer", "minimum": 2},
            "n_traj": {"type": "integer", "minimum": 2},
            "corr_draws": {"type": "integer", "minimum": 2},
            "tau_max": _POS,
            "n_tau": {"type": "integer", "minimum": 2},
        },
    },
    "ladder-check": {
        "type": "object",
        "additionalProperties": False,
        "required": ["omega", "n_fock", "g_list"],
        "properties": {
            "omega": _POS,
            "n_fock": {"type": "integer", "minimum": 2},
            "g_list": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "quartic": _NONNEG,
        },
    },
}


def load_config(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _schema_errors(instance: dict, schema: dict, prefix: str) -> list[str]:
    validator = Draft202012Validator(schema)
    out = []
    for err in sorted(validator.iter_errors(instance), key=lambda e: list(e.path)):
        loc = ".".join(str(p) for p in err.path)
        where = f"{prefix}.{loc}" if loc else prefix
        out.append(f"{where}: {err.message}")
    return out


def validate_config(cfg: Any) -> tuple[list[str], list[str]]:
    """Full validation without computing; returns (errors, warnings)."""
    if not isinstance(cfg, dict):
        return (["config: top level must be a JSON object"], [])
    errors = _schema_errors(cfg, _TOP_SCHEMA, "config")
    if errors:
        return (errors, [])
    name = cfg["experiment"]
    params = cfg["parameters"]
    errors = _schema_errors(params, _PARAM_SCHEMAS[name], "parameters")
    if errors:
        return (errors, [])
    checker = {
        "ramsey-scaling": _check_ramsey,
        "criticality-qfi": _check_criticality,
        "thermal-qfi": _check_thermal,
        "bath-sim": _check_bath,
        "ladder-check": _check_ladder_cfg,
    }[name]
    return checker(params)


def _check_ramsey(p: dict) -> tuple[list[str], list[str]]:
    errors, warnings = [], []
    if p["noise"] == "noiseless":
        if "C" in p:
            errors.append("parameters.C: not meaningful for noiseless runs")
        if "t_fixed" not in p:
            errors.append(
                "parameters.t_fixed: required for noiseless runs (no interior optimum)"
            )
    elif "C" not in p:
        errors.append("parameters.C: required for markov/zeno noise")
    if "t_fixed" in p and p["t_fixed"] > p["T"]:
        errors.append("parameters.t_fixed: cannot exceed the time budget T")
    return errors, warnings


def _truncation_warning(g_max: float, n_fock: int, damping: float) -> str | None:
    # squeezing toward the closing gap outruns a low cutoff unless dissipation
    # clamps the occupation first; the in-run audit would catch it late, at
    # full integration cost
    if g_max >= 0.95 and damping < 0.3 and n_fock < 120:
        return (
            f"parameters: g={g_max} with n_fock={n_fock} and weak damping "
            "is likely under-truncated; expect the truncation audit to fail "
            "(consider n_fock >= 120 or stronger dissipation)"
        )
    return None


def _check_criticality(p: dict) -> tuple[list[str], list[str]]:
    errors, warnings = [], []
    g_max = max(p["g_list"])
    h = p.get("fd_step", 1e-4 * (1.0 - g_max))
    if g_max + h >= 1.0:
        errors.append("parameters.fd_step: pushes the largest coupling to g + h >= 1")
    if p["dt_out"] >= p["t_max"]:
        errors.append("parameters.dt_out: must be smaller than t_max")
    damping = p.get("kappa1", 0.0) + p.get("kappa2", 0.0)
    warn = _truncation_warning(g_max, p["n_fock"], damping)
    if warn:
        warnings.append(warn)
    return errors, warnings


def _check_thermal(p: dict) -> tuple[list[str], list[str]]:
    errors, warnings = [], []
    h = p.get("fd_step", 1e-4 * (1.0 - p["g"]))
    if p["g"] + h >= 1.0:
        errors.append("parameters.fd_step: pushes the coupling to g + h >= 1")
    if p["dt_out"] >= p["t_max"]:
        errors.append("parameters.dt_out: must be smaller than t_max")
    positive = [nb for nb in p["nbar_list"] if nb > 0]
    if len(positive) < 3:
        warnings.append(
            "parameters.nbar_list: fewer than three positive occupations, "
            "no power-law fit will be reported"
        )
    warn = _truncation_warning(p["g"], p["n_fock"], p["kappa1"])
    if warn:
        warnings.append(warn)
    return errors, warnings


def _check_bath(p: dict) -> tuple[list[str], list[str]]:
    errors, warnings = [], []
    spec = _bath_spec(p)
    step = p["t_max"] / p["n_steps"]
    limit = _max_step_allowed(spec)
    if step > limit:
        errors.append(
            f"parameters.n_steps: step {step:.3g} exceeds the resolution limit "
            f"{limit:.3g} for the fastest line (need n_steps >= "
            f"{int(math.ceil(p['t_max'] / limit))})"
        )
    amps = spec.line_amps(0)
    z_max = float(np.max(4.0 * np.abs(amps) / spec.omegas))
    if z_max > 0.7:
        warnings.append(
            f"parameters.alpha: per-line phase swing {z_max:.2f} leaves the "
            "Gaussian-dephasing regime; the Lindblad-equivalence check will drift"
        )
    return errors, warnings


def _check_ladder_cfg(p: dict) -> tuple[list[str], list[str]]:
    return [], []


# ---------------------------------------------------------------------------
# runners


def _fmt_cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    s = str(v)
    if "," in s or "\n" in s:
        raise ValueError(f"unquotable CSV cell: {s!r}")
    return s


class _OutputTracker:
    """Records files written so a failed run can remove its partial output."""

    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.written: list[Path] = []

    def csv(self, name: str, header: list[str], rows) -> int:
        path = self.outdir / name
        self.written.append(path)
        count = 0
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt_cell(v) for v in row) + "\n")
                count += 1
        return count

    def json(self, name: str, payload: dict) -> None:
        path = self.outdir / name
        self.written.append(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def cleanup(self) -> None:
        for path in self.written:
            try:
                path.unlink()
            except FileNotFoundError:
                pass


def _time_grid(t_max: float, dt_out: float) -> np.ndarray:
    n_out = int(round(t_max / dt_out))
    return np.linspace(0.0, t_max, n_out + 1)


def _run_ramsey(p, seed, workers, out: _OutputTracker) -> dict:
    noise_cls = _NOISE_KINDS[p["noise"]]
    noise = noise_cls() if p["noise"] == "noiseless" else noise_cls(C=p["C"])
    curve = scaling_scan(noise, p["n_values"], p["T"], p.get("t_fixed"))
    rows = [
        (r.n, r.t_opt_product, r.err_opt_product, r.t_opt_ghz, r.err_opt_ghz, r.ratio)
        for r in curve.rows
    ]
    out.csv(
        "ramsey_scaling.csv",
        ["n", "t_opt_product", "err_opt_product", "t_opt_ghz", "err_opt_ghz", "ratio"],
        rows,
    )
    return {
        "slope": curve.slope,
        "amplitude": curve.amplitude,
        "residual": curve.residual,
    }


def _scan_rows(couplings, gaps, times, fisher, t_peak):
    for g, dg, row, tp in zip(couplings, gaps, fisher, t_peak):
        k_peak = int(np.argmax(row))
        for k, t in enumerate(times):
            yield (g, dg, t, row[k], int(k == k_peak))


def _run_criticality(p, seed, workers, out: _OutputTracker) -> dict:
    model = RabiNormalPhase(omega=p["omega"], g=p["g_list"][0], n_fock=p["n_fock"])
    dspec = DissipationSpec(
        kappa1=p.get("kappa1", 0.0), nbar=p.get("nbar", 0.0), kappa2=p.get("kappa2", 0.0)
    )
    scan = dissipative_qfi_scan(
        model,
        dspec,
        p["g_list"],
        _time_grid(p["t_max"], p["dt_out"]),
        fd_step=p.get("fd_step"),
        workers=workers,
        audit=p.get("audit", True),
    )
    out.csv(
        "qfi_curves.csv",
        ["g", "Delta_g", "t", "F", "is_peak"],
        _scan_rows(scan.couplings, scan.gaps, scan.times, scan.fisher, scan.t_peak),
    )
    out.csv(
        "qfi_summary.csv",
        ["g", "Delta_g", "F_max", "t_peak", "period", "period_expected"],
        [
            (g, dg, fm, tp, per, pe)
            for g, dg, fm, tp, per, pe in zip(
                scan.couplings,
                scan.gaps,
                scan.f_max,
                scan.t_peak,
                scan.periods,
                scan.periods_expected,
            )
        ],
    )
    return {
        "fit_amplitude": scan.fit_amplitude,
        "fit_exponent": scan.fit_exponent,
        "fit_residual": scan.fit_residual,
        "audit_shift": scan.audit_shift,
        "n_fock_audit": scan.n_fock_audit,
    }


def _run_thermal(p, seed, workers, out: _OutputTracker) -> dict:
    model = RabiNormalPhase(omega=p["omega"], g=p["g"], n_fock=p["n_fock"])
    scan = thermal_scan(
        model,
        p["kappa1"],
        p["nbar_list"],
        _time_grid(p["t_max"], p["dt_out"]),
        fd_step=p.get("fd_step"),
        workers=workers,
        audit=p.get("audit", True),
    )
    out.csv(
        "thermal_curves.csv",
        ["nbar", "t", "F", "is_peak"],
        (
            (nb, t, row[k], int(k == int(np.argmax(row))))
            for nb, row in zip(scan.nbars, scan.fisher)
            for k, t in enumerate(scan.times)
        ),
    )
    out.csv(
        "thermal_summary.csv",
        ["nbar", "T_eff", "F_max", "t_peak"],
        list(zip(scan.nbars, scan.temperatures, scan.f_max, scan.t_peak)),
    )
    return {
        "fit_nbar_exponent": scan.fit_nbar_exponent,
        "fit_nbar_residual": scan.fit_nbar_residual,
        "fit_temp_exponent": scan.fit_temp_exponent,
        "fit_temp_residual": scan.fit_temp_residual,
        "audit_shift": scan.audit_shift,
        "n_fock_audit": scan.n_fock_audit,
    }


def _bath_spec(p: dict) -> NoiseSynthSpec:
    return NoiseSynthSpec(
        alpha=p["alpha"],
        f_shape=make_shape(p["shape"], p["omega0"]),
        omega0=p["omega0"],
        nc=p["nc"],
    )


def _run_bath(p, seed, workers, out: _OutputTracker) -> dict:
    spec = _bath_spec(p)
    t_grid = np.linspace(0.0, p["t_max"], p["n_steps"] + 1)
    ens = ensemble_average(None, spec, plus_state(1), t_grid, p["n_traj"], seed, workers)
    profile = equivalent_dephasing_profile(spec)
    rho0 = np.outer(plus_state(1), plus_state(1).conj())
    oracle = np.array(
        [abs(dephasing_analytic(1, profile, rho0, t)[0, 1]) for t in t_grid]
    )
    coh = ens.rho_bar[:, 0, 1]
    out.csv(
        "bath_coherence.csv",
        ["t", "re_mean", "im_mean", "abs_mean", "stderr", "oracle_abs"],
        [
            (t, c.real, c.imag, abs(c), se, ora)
            for t, c, se, ora in zip(t_grid, coh, ens.stderr[:, 0, 1], oracle)
        ],
    )

    tau_max = p.get("tau_max", p["t_max"])
    tau_grid = np.linspace(0.0, tau_max, p.get("n_tau", 101))
    s_exact = analytic_correlation(spec, tau_grid)
    s_hat, s_err = estimate_correlation(
        spec, p.get("corr_draws", 1000), tau_grid, (seed + 1) % 2**64
    )
    out.csv(
        "bath_correlation.csv",
        ["tau", "S_analytic", "S_hat", "stderr"],
        list(zip(tau_grid, s_exact, s_hat, s_err)),
    )

    freqs, weights = analytic_psd(spec)
    out.csv("bath_psd.csv", ["omega", "weight"], list(zip(freqs, weights)))
    return {
        "n_trajectories": p["n_traj"],
        "max_coherence_dev": float(np.max(np.abs(coh - oracle))),
        "corr_within_3se": float(
            np.mean(np.abs(s_hat - s_exact) <= 3.0 * np.maximum(s_err, 1e-300))
        ),
    }


def _run_ladder(p, seed, workers, out: _OutputTracker) -> dict:
    omega, n_fock = p["omega"], p["n_fock"]
    q = p.get("quartic", 0.0)
    x = quadrature_x(n_fock)
    number = np.diag(np.arange(n_fock + 1, dtype=float))
    x2 = x @ x
    h0 = omega * number + q * omega * (x2 @ x2)
    h1 = -0.25 * omega * x2
    rows = []
    for g in p["g_list"]:
        h_lambda = h0 + (g * g) * h1
        gap = ladder_gap(h_lambda)
        frame = build_ladder(h0, h1, g * g, gap)
        resid = check_ladder(frame)
        gap_expected = 2.0 * omega * math.sqrt(1.0 - g * g)
        rows.append((g, gap, gap_expected, resid))
    out.csv("ladder_check.csv", ["g", "gap", "gap_expected", "residual"], rows)
    return {"max_residual": max(r[3] for r in rows)}


_RUNNERS: dict[str, Callable] = {
    "ramsey-scaling": _run_ramsey,
    "criticality-qfi": _run_criticality,
    "thermal-qfi": _run_thermal,
    "bath-sim": _run_bath,
    "ladder-check": _run_ladder,
}

_DESCRIPTIONS = {
    "ramsey-scaling": "frequency-estimation error optima and GHZ/product ratio vs n",
    "criticality-qfi": "dissipative QFI curves over couplings, peaks, period and gap fit",
    "thermal-qfi": "QFI peaks at fixed coupling over bath occupations",
    "bath-sim": "random-phase bath ensemble vs analytic correlation and dephasing oracle",
    "ladder-check": "commutator-ladder residuals and gaps, optional quartic perturbation",
}


def list_experiments() -> str:
    width = max(len(k) for k in _RUNNERS)
    return "\n".join(f"{k.ljust(width)}  {_DESCRIPTIONS[k]}" for k in sorted(_RUNNERS))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_experiment(
    cfg: dict, output_dir: Path, seed: int, workers: int
) -> tuple[list[Path], dict]:
    """Execute a validated config; returns (written files, manifest payload).

    On any exception every file written so far is removed before re-raising.
    """
    output_dir.mkdir(parents=True, exist_ok=True)
    tracker = _OutputTracker(output_dir)
    started = time.time()
    try:
        summary = _RUNNERS[cfg["experiment"]](cfg["parameters"], seed, workers, tracker)
        wall = time.time() - started
        outputs = [
            {"name": path.name, "sha256": _sha256(path)} for path in tracker.written
        ]
        manifest = {
            "experiment": cfg["experiment"],
            "version": __version__,
            "seed": seed,
            "workers": workers,
            "config": cfg,
            "wall_clock_s": round(wall, 3),
            "outputs": outputs,
            "summary": _json_safe(summary),
        }
        tracker.json("manifest.json", manifest)
    except Exception:
        tracker.cleanup()
        raise
    return tracker.written, manifest


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj
