"""Criticality-enhanced sensing around the Rabi-model normal phase.

The full model is H = ω a†a + (Ω/2)σ_z - λ(a† + a)σ_x with dimensionless
coupling g = 2λ/√(ωΩ).  In the large-Ω limit the low-energy boson sector is
the quadratic normal-phase Hamiltonian

    H_np = ω a†a - (ω g²/4)(a + a†)²,

whose excitation gap ε = ω√(1-g²) closes at g → 1; the two-photon spacing is
Δ_g ω with Δ_g = 2√(1-g²).

The ladder framework takes H_λ = H0 + λ H1 and builds

    Ĉ = -i[H0, H1],   D̂ = -i[H_λ, Ĉ],   Λ̂ = iΔĈ - D̂;

when [H_λ, Λ̂] = ΔΛ̂ (checked on an interior level range to stay clear of the
Fock truncation), Λ̂ is a spectral ladder operator and the quantum Fisher
information of t-evolution admits the closed form

    F(t) = 4 [sin(Δt) - Δt]^p / Δ⁶ · Var_ψ(D̂)        (general frame)
    F(t) = 16 g² [sin(Δ_g ω t) - Δ_g ω t]^p / Δ_g⁶ · (⟨P⁴⟩ - ⟨P²⟩²)   (Rabi)

with P = i(a† - a) and bracket exponent p = 2 by default (an even power; the
odd power is available via ``exponent=``).  The numeric route is the
symmetric-logarithmic-derivative QFI evaluated on finite-difference
∂_g ρ, with a Richardson step check, and extends to dissipative evolution
through the master-equation engine.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.signal import find_peaks

from .lindblad import ConstantRate, Dissipator, MasterEqProblem, StepperConfig, integrate
from .operators import (
    MAX_DIM,
    basis_ket,
    is_hermitian,
    ket_to_dm,
    ladder_ops,
    number_op,
    quadrature_p,
    quadrature_x,
)


class NegativeEigenvalue(RuntimeError):
    """A state handed to the QFI kernel has an eigenvalue below -1e-8."""


class StepTooLarge(RuntimeError):
    """Finite-difference step failed its Richardson halving check."""


class TruncationAuditError(RuntimeError):
    """Doubling the Fock cutoff moved a reported observable too much."""


# --------------------------------------------------------------------------
# ladder framework


@dataclass(frozen=True, eq=False)
class LadderFrame:
    """H_λ = h0 + coupling·h1 with its derived ladder operators."""

    h0: np.ndarray
    h1: np.ndarray
    coupling: float
    gap: float
    h_lambda: np.ndarray
    c_hat: np.ndarray
    d_hat: np.ndarray
    lambda_hat: np.ndarray


def build_ladder(h0: np.ndarray, h1: np.ndarray, coupling: float, gap: float) -> LadderFrame:
    """Assemble Ĉ, D̂ and Λ̂ = iΔĈ - D̂ for H_λ = h0 + coupling·h1."""
    h0 = np.asarray(h0, dtype=complex)
    h1 = np.asarray(h1, dtype=complex)
    if not is_hermitian(h0) or not is_hermitian(h1):
        raise ValueError("h0 and h1 must be Hermitian")
    if h0.shape != h1.shape:
        raise ValueError("h0 and h1 must have matching shapes")
    h_lam = h0 + coupling * h1
    c_hat = -1.0j * (h0 @ h1 - h1 @ h0)
    d_hat = -1.0j * (h_lam @ c_hat - c_hat @ h_lam)
    lambda_hat = 1.0j * gap * c_hat - d_hat
    return LadderFrame(h0, h1, float(coupling), float(gap), h_lam, c_hat, d_hat, lambda_hat)


def check_ladder(frame: LadderFrame, interior_cutoff: int | None = None) -> float:
    """Relative Frobenius residual of [H_λ, Λ̂] = ΔΛ̂ on interior columns.

    Columns beyond ``interior_cutoff`` (default: half the dimension) are
    excluded so the hard Fock truncation does not pollute the verdict.  A
    frame with Λ̂ = 0 on the interior (e.g. [h0, h1] = 0) returns 0.
    """
    dim = frame.h_lambda.shape[0]
    cut = dim // 2 if interior_cutoff is None else int(interior_cutoff)
    if not 0 < cut < dim:
        raise ValueError(f"interior_cutoff must be in (0, {dim})")
    lam = frame.lambda_hat[:, : cut + 1]
    defect = (
        frame.h_lambda @ frame.lambda_hat
        - frame.lambda_hat @ frame.h_lambda
        - frame.gap * frame.lambda_hat
    )[:, : cut + 1]
    denom = float(np.linalg.norm(lam))
    if denom < 1e-300:
        return 0.0
    return float(np.linalg.norm(defect) / denom)


def ladder_gap(h: np.ndarray, interior_cutoff: int | None = None, step: int = 2) -> float:
    """Median interior k → k+step eigenvalue spacing of a Hermitian h."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("ladder_gap requires a Hermitian operator")
    energies = np.linalg.eigvalsh(h)
    dim = energies.size
    cut = dim // 2 if interior_cutoff is None else int(interior_cutoff)
    if not step <= cut < dim:
        raise ValueError(f"interior_cutoff must be in [{step}, {dim})")
    spacings = energies[step : cut + 1] - energies[: cut + 1 - step]
    return float(np.median(spacings))


# --------------------------------------------------------------------------
# Rabi normal phase


def rabi_hamiltonian(omega: float, qubit_splitting: float, coupling: float, n_fock: int) -> np.ndarray:
    """Full Rabi Hamiltonian ω a†a + (Ω/2)σ_z - λ(a†+a)σ_x, qubit ⊗ boson."""
    from .operators import kron, sigma  # local import keeps the module head light

    dim_b = n_fock + 1
    eye_q = np.eye(2, dtype=complex)
    eye_b = np.eye(dim_b, dtype=complex)
    return (
        kron(eye_q, omega * number_op(n_fock))
        + kron(0.5 * qubit_splitting * sigma("z"), eye_b)
        - coupling * kron(sigma("x"), quadrature_x(n_fock))
    )


def normal_phase_hamiltonian(omega: float, g: float, n_fock: int) -> np.ndarray:
    """H_np = ω a†a - (ω g²/4)(a + a†)² on Fock levels 0..n_fock."""
    x = quadrature_x(n_fock)
    return omega * number_op(n_fock) - 0.25 * omega * g * g * (x @ x)


@dataclass(frozen=True)
class RabiNormalPhase:
    """Normal-phase model: frequency ω, dimensionless coupling g ∈ [0, 1)."""

    omega: float
    g: float
    n_fock: int
    qubit_splitting: float | None = None

    def __post_init__(self) -> None:
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if not 0.0 <= self.g < 1.0:
            raise ValueError("g must lie in [0, 1)")
        if self.n_fock < 2:
            raise ValueError("n_fock must be >= 2")
        if self.n_fock + 1 > MAX_DIM:
            raise ValueError(f"n_fock={self.n_fock} exceeds MAX_DIM={MAX_DIM}")

    @property
    def delta_g(self) -> float:
        """Dimensionless two-photon gap 2√(1-g²)."""
        return 2.0 * math.sqrt(1.0 - self.g * self.g)

    def hamiltonian(self) -> np.ndarray:
        return normal_phase_hamiltonian(self.omega, self.g, self.n_fock)

    def momentum(self) -> np.ndarray:
        return quadrature_p(self.n_fock)

    def coupling_lambda(self) -> float:
        """λ of the full Rabi model; needs the qubit splitting Ω."""
        if self.qubit_splitting is None:
            raise ValueError("qubit_splitting is not set")
        return 0.5 * self.g * math.sqrt(self.omega * self.qubit_splitting)


def normal_phase_frame(model: RabiNormalPhase, interior_cutoff: int | None = None) -> LadderFrame:
    """Ladder frame (h0 = ω a†a, h1 = -(ω/4)(a+a†)², λ = g²) with the gap
    *measured* from the spectrum as the median interior two-photon spacing
    (the frame's ladder steps two Fock levels at a time, so the closing gap
    is Δ_g ω, not the single-quantum spacing)."""
    h0 = model.omega * number_op(model.n_fock)
    x = quadrature_x(model.n_fock)
    h1 = -0.25 * model.omega * (x @ x)
    coupling = model.g * model.g
    cut = model.n_fock // 2 if interior_cutoff is None else interior_cutoff
    gap = ladder_gap(h0 + coupling * h1, cut, step=2)
    return build_ladder(h0, h1, coupling, gap)


# --------------------------------------------------------------------------
# QFI closed forms


def _variance(op: np.ndarray, psi: np.ndarray) -> float:
    psi = np.asarray(psi, dtype=complex)
    op_psi = op @ psi
    mean = np.vdot(psi, op_psi).real
    sq = np.vdot(op_psi, op_psi).real  # ⟨ψ|op† op|ψ⟩ = ⟨op²⟩ for Hermitian op
    return float(sq - mean * mean)


def ladder_qfi_closed_form(
    d_op: np.ndarray, psi: np.ndarray, gap: float, t, exponent: int = 2
):
    """F(t) = 4 [sin(Δt) - Δt]^p / Δ⁶ · Var_ψ(D̂) for a closed ladder frame."""
    var = _variance(np.asarray(d_op, dtype=complex), psi)
    x = gap * np.asarray(t, dtype=float)
    out = 4.0 * (np.sin(x) - x) ** exponent / gap**6 * var
    return out if np.ndim(t) else float(out)


def rabi_qfi_closed_form(
    model: RabiNormalPhase, t, psi: np.ndarray | None = None, exponent: int = 2
):
    """F(t) = 16 g² [sin(Δ_g ω t) - Δ_g ω t]^p / Δ_g⁶ · (⟨P⁴⟩ - ⟨P²⟩²).

    Defaults to the vacuum probe, for which ⟨P²⟩ = 1, ⟨P⁴⟩ = 3.
    """
    if psi is None:
        psi = basis_ket(model.n_fock + 1, 0)
    p = model.momentum()
    p2 = p @ p
    var_p2 = _variance(p2, psi)
    dg = model.delta_g
    x = dg * model.omega * np.asarray(t, dtype=float)
    out = 16.0 * model.g**2 * (np.sin(x) - x) ** exponent / dg**6 * var_p2
    return out if np.ndim(t) else float(out)


# --------------------------------------------------------------------------
# QFI numerics


def qfi_pure(psi: np.ndarray, dpsi: np.ndarray) -> float:
    """4(⟨∂ψ|∂ψ⟩ - |⟨ψ|∂ψ⟩|²) for a pure-state family."""
    psi = np.asarray(psi, dtype=complex)
    dpsi = np.asarray(dpsi, dtype=complex)
    return float(4.0 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(psi, dpsi)) ** 2))


def qfi_mixed(rho: np.ndarray, drho: np.ndarray, eps: float = 1e-12) -> float:
    """SLD quantum Fisher information 2 Σ |⟨j|∂ρ|k⟩|² / (p_j + p_k).

    Eigenpairs with p_j + p_k ≤ eps are dropped (null-space convention);
    an eigenvalue below -1e-8 raises ``NegativeEigenvalue``.
    """
    rho = np.asarray(rho, dtype=complex)
    drho = np.asarray(drho, dtype=complex)
    probs, basis = np.linalg.eigh((rho + rho.conj().T) / 2.0)
    if float(probs.min()) < -1e-8:
        raise NegativeEigenvalue(f"state eigenvalue {float(probs.min())} below -1e-8")
    probs = np.clip(probs, 0.0, None)
    a = basis.conj().T @ ((drho + drho.conj().T) / 2.0) @ basis
    denom = probs[:, None] + probs[None, :]
    mask = denom > eps
    return float(2.0 * np.sum((a.real[mask] ** 2 + a.imag[mask] ** 2) / denom[mask]))


def _as_dm(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return ket_to_dm(state) if state.ndim == 1 else state


def qfi_numeric(
    rho_of_g: Callable[[float], np.ndarray],
    g: float,
    fd_step: float,
    step_check: bool = True,
    step_tol: float = 0.1,
) -> float:
    """QFI of a state family by central-difference ∂_g ρ at parameter g.

    ``rho_of_g`` may return kets or density matrices.  With ``step_check``
    the difference is repeated at half step; disagreement beyond
    ``step_tol`` (relative) raises ``StepTooLarge``, otherwise the
    Richardson-extrapolated value is returned.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    mid = _as_dm(rho_of_g(g))

    def estimate(h: float) -> float:
        drho = (_as_dm(rho_of_g(g + h)) - _as_dm(rho_of_g(g - h))) / (2.0 * h)
        return qfi_mixed(mid, drho)

    f_h = estimate(fd_step)
    if not step_check:
        return f_h
    f_half = estimate(0.5 * fd_step)
    if abs(f_h - f_half) > step_tol * abs(f_half) + 1e-9:
        raise StepTooLarge(
            f"QFI moved from {f_h} to {f_half} on halving fd_step={fd_step}; "
            "the finite-difference step is too large for this family"
        )
    return (4.0 * f_half - f_h) / 3.0


# --------------------------------------------------------------------------
# dissipative scans


@dataclass(frozen=True)
class DissipationSpec:
    """Single-photon loss/pump at temperature n̄ plus two-photon loss."""

    kappa1: float = 0.0
    nbar: float = 0.0
    kappa2: float = 0.0

    def __post_init__(self) -> None:
        if self.kappa1 < 0 or self.kappa2 < 0 or self.nbar < 0:
            raise ValueError("dissipation parameters must be non-negative")

    def dissipators(self, n_fock: int) -> tuple[Dissipator, ...]:
        a, ad = ladder_ops(n_fock)
        out = []
        if self.kappa1 > 0:
            out.append(Dissipator(a, ConstantRate(self.kappa1 * (self.nbar + 1.0))))
            if self.nbar > 0:
                out.append(Dissipator(ad, ConstantRate(self.kappa1 * self.nbar)))
        if self.kappa2 > 0:
            out.append(Dissipator(a @ a, ConstantRate(self.kappa2)))
        return tuple(out)


def powerlaw_fit(x, y) -> tuple[float, float, float]:
    """Least-squares fit y = a·x^b in log-log space.

    Returns (a, b, residual) with residual the RMS of the log-space misfit.
    Requires at least 3 strictly positive points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 points for a power-law fit")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit requires strictly positive data")
    ln_x, ln_y = np.log(x), np.log(y)
    slope, intercept = np.polyfit(ln_x, ln_y, 1)
    resid = float(np.sqrt(np.mean((ln_y - (slope * ln_x + intercept)) ** 2)))
    return float(np.exp(intercept)), float(slope), resid


def oscillation_period(times: np.ndarray, values: np.ndarray,
                       prominence_frac: float = 0.02) -> float:
    """Mean peak-to-peak spacing with parabolic sub-sample refinement.

    Returns NaN when fewer than two peaks are found.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be 1-D arrays of equal length")
    span = float(values.max() - values.min())
    if span <= 0:
        return float("nan")
    peaks, _ = find_peaks(values, prominence=prominence_frac * span)
    peaks = peaks[(peaks > 0) & (peaks < times.size - 1)]
    if peaks.size < 2:
        return float("nan")
    diffs = np.diff(times)
    uniform = np.allclose(diffs, diffs[0], rtol=1e-9, atol=0.0)
    refined = []
    for p in peaks:
        if uniform:
            denom = values[p - 1] - 2.0 * values[p] + values[p + 1]
            shift = 0.0 if denom >= 0 else 0.5 * (values[p - 1] - values[p + 1]) / denom
            refined.append(times[p] + shift * diffs[0])
        else:
            refined.append(times[p])
    return float(np.mean(np.diff(refined)))


def _default_scan_dt(omega: float, g: float, n_fock: int) -> float:
    h = normal_phase_hamiltonian(omega, g, n_fock)
    energies = np.linalg.eigvalsh(h)
    spread = float(energies[-1] - energies[0])
    # explicit-RK4 stability needs dt·spread below ~2.8; accuracy in the
    # populated low-energy sector wants much less
    return min(2.5 / spread, 0.01 / omega)


def _qfi_curve(omega: float, g: float, n_fock: int, dspec: DissipationSpec,
               t_grid: np.ndarray, fd_step: float, dt: float | None) -> np.ndarray:
    vacuum = ket_to_dm(basis_ket(n_fock + 1, 0))
    diss = dspec.dissipators(n_fock)
    if dt is None:
        dt = _default_scan_dt(omega, g, n_fock)
    stepper = StepperConfig(dt_init=dt, adaptive=False)
    branches = {}
    for gg in (g - fd_step, g + fd_step, g):
        ham = normal_phase_hamiltonian(omega, gg, n_fock)
        states = integrate(MasterEqProblem(ham, diss, vacuum, t_grid), stepper)
        branches[gg] = [rho for _, rho in states]
    fisher = np.zeros(t_grid.size)
    inv_2h = 1.0 / (2.0 * fd_step)
    for k in range(t_grid.size):
        drho = (branches[g + fd_step][k] - branches[g - fd_step][k]) * inv_2h
        fisher[k] = qfi_mixed(branches[g][k], drho)
    return fisher


def _qfi_curve_cell(args) -> np.ndarray:
    return _qfi_curve(*args)


@dataclass(frozen=True, eq=False)
class QfiScan:
    """Dissipative QFI curves over couplings, with peak and fit summaries."""

    omega: float
    n_fock: int
    dissipation: DissipationSpec
    couplings: tuple[float, ...]
    gaps: tuple[float, ...]
    times: np.ndarray
    fisher: np.ndarray  # shape (len(couplings), len(times))
    f_max: np.ndarray
    t_peak: np.ndarray
    periods: np.ndarray
    periods_expected: np.ndarray
    fd_steps: tuple[float, ...]
    dt_used: tuple[float, ...]
    fit_amplitude: float
    fit_exponent: float
    fit_residual: float
    audit_shift: float | None
    n_fock_audit: int | None


@dataclass(frozen=True, eq=False)
class ThermalScan:
    """QFI curves at fixed coupling over bath occupations n̄."""

    omega: float
    g: float
    n_fock: int
    kappa1: float
    nbars: tuple[float, ...]
    temperatures: tuple[float, ...]
    times: np.ndarray
    fisher: np.ndarray
    f_max: np.ndarray
    t_peak: np.ndarray
    fd_step: float
    dt_used: tuple[float, ...]
    fit_nbar_amplitude: float
    fit_nbar_exponent: float
    fit_nbar_residual: float
    fit_temp_amplitude: float
    fit_temp_exponent: float
    fit_temp_residual: float
    audit_shift: float | None
    n_fock_audit: int | None


def _run_cells(tasks, workers: int) -> list[np.ndarray]:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_qfi_curve_cell, tasks))
    return [_qfi_curve_cell(t) for t in tasks]


def _trim_grid(t_grid: np.ndarray, t_peak: float, margin: float = 1.35) -> np.ndarray:
    hi = int(np.searchsorted(t_grid, t_peak * margin)) + 1
    hi = max(hi, min(8, t_grid.size))
    return t_grid[: min(hi, t_grid.size)]


def _check_worst_cell(omega, g, n_fock, dspec, t_grid, fd_step, dt, fisher_row,
                      step_tol, audit, audit_tol):
    """Richardson fd-step check and Fock-truncation audit at one scan cell."""
    k_peak = int(np.argmax(fisher_row))
    t_sub = _trim_grid(t_grid, float(t_grid[k_peak]))
    k_sub = min(k_peak, t_sub.size - 1)
    f_ref = fisher_row[k_sub]
    f_half = _qfi_curve(omega, g, n_fock, dspec, t_sub, 0.5 * fd_step, dt)[k_sub]
    if abs(f_half - f_ref) > step_tol * abs(f_half) + 1e-9:
        raise StepTooLarge(
            f"fd_step={fd_step} at g={g}: peak QFI moved {f_ref} → {f_half} on halving"
        )
    if not audit:
        return None, None
    n_audit = 2 * n_fock
    if n_audit + 1 > MAX_DIM:
        raise ValueError(f"audit dimension {n_audit + 1} exceeds MAX_DIM={MAX_DIM}")
    # the doubled cutoff widens the spectrum, so the audit derives its own
    # stable step rather than inheriting one tuned to the primary cutoff
    dt_audit = min(dt, _default_scan_dt(omega, g, n_audit))
    f_audit = _qfi_curve(omega, g, n_audit, dspec, t_sub, fd_step, dt_audit)
    ref_max = float(np.max(fisher_row[: t_sub.size]))
    audit_max = float(np.max(f_audit))
    shift = abs(audit_max - ref_max) / max(ref_max, 1e-300)
    if shift > audit_tol:
        raise TruncationAuditError(
            f"F_max moved by {shift:.2%} when doubling n_fock={n_fock} at g={g}; "
            "raise the cutoff"
        )
    return shift, n_audit


def dissipative_qfi_scan(
    model: RabiNormalPhase,
    dissipation: DissipationSpec,
    g_list: Sequence[float],
    t_grid: np.ndarray,
    fd_step: float | None = None,
    dt: float | None = None,
    workers: int = 1,
    audit: bool = True,
    step_tol: float = 0.05,
    audit_tol: float = 5e-3,
) -> QfiScan:
    """QFI-vs-time curves under dissipation for each coupling in g_list.

    ``model`` supplies ω and the Fock cutoff; its g is replaced by each list
    entry.  Each cell integrates vacuum evolution at g and g ± h
    (h = fd_step or 1e-4·(1-g)) with fixed-step RK4 and evaluates the SLD
    QFI at every output time.  The fd step is Richardson-checked and the
    cutoff audited (both at the largest coupling, the worst case for
    squeezing); the peak values are fitted as F_max = a·Δ_g^b.
    """
    g_list = [float(g) for g in g_list]
    if not g_list:
        raise ValueError("g_list must be non-empty")
    if any(not 0.0 < g < 1.0 for g in g_list):
        raise ValueError("couplings must lie in (0, 1)")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or not np.all(np.diff(t_grid) > 0):
        raise ValueError("t_grid must be a strictly increasing 1-D array")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    steps = [fd_step if fd_step is not None else 1e-4 * (1.0 - g) for g in g_list]
    if any(g + h >= 1.0 for g, h in zip(g_list, steps)):
        raise ValueError("fd_step pushes a coupling to g + h >= 1")
    dts = [dt if dt is not None else _default_scan_dt(model.omega, g, model.n_fock)
           for g in g_list]
    tasks = [
        (model.omega, g, model.n_fock, dissipation, t_grid, h, dtg)
        for g, h, dtg in zip(g_list, steps, dts)
    ]
    fisher = np.asarray(_run_cells(tasks, workers))

    f_max = fisher.max(axis=1)
    t_peak = t_grid[fisher.argmax(axis=1)]
    gaps = [2.0 * math.sqrt(1.0 - g * g) for g in g_list]
    periods = np.asarray([oscillation_period(t_grid, row) for row in fisher])
    periods_expected = np.asarray([2.0 * math.pi / (dg * model.omega) for dg in gaps])

    k_star = int(np.argmax(g_list))
    audit_shift, n_audit = _check_worst_cell(
        model.omega, g_list[k_star], model.n_fock, dissipation, t_grid,
        steps[k_star], dts[k_star], fisher[k_star], step_tol, audit, audit_tol,
    )

    amp, expo, resid = powerlaw_fit(gaps, f_max) if len(g_list) >= 3 else (
        float("nan"), float("nan"), float("nan"))
    return QfiScan(
        model.omega, model.n_fock, dissipation, tuple(g_list), tuple(gaps),
        t_grid, fisher, f_max, t_peak, periods, periods_expected,
        tuple(steps), tuple(dts), amp, expo, resid, audit_shift, n_audit,
    )


def thermal_scan(
    model: RabiNormalPhase,
    kappa1: float,
    nbar_list: Sequence[float],
    t_grid: np.ndarray,
    fd_step: float | None = None,
    dt: float | None = None,
    workers: int = 1,
    audit: bool = True,
    step_tol: float = 0.05,
    audit_tol: float = 5e-3,
) -> ThermalScan:
    """QFI-vs-time curves at fixed coupling for a ladder of bath occupations.

    Peak values are fitted both against n̄ and against the effective
    temperature T_eff = ω / ln(1 + 1/n̄) (n̄ > 0 rows only; at least three
    positive rows are required for the fits).
    """
    nbars = [float(nb) for nb in nbar_list]
    if not nbars:
        raise ValueError("nbar_list must be non-empty")
    if any(nb < 0 for nb in nbars):
        raise ValueError("occupations must be non-negative")
    if kappa1 <= 0:
        raise ValueError("kappa1 must be positive for a thermal scan")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or not np.all(np.diff(t_grid) > 0):
        raise ValueError("t_grid must be a strictly increasing 1-D array")

    h = fd_step if fd_step is not None else 1e-4 * (1.0 - model.g)
    if model.g + h >= 1.0:
        raise ValueError("fd_step pushes the coupling to g + h >= 1")
    specs = [DissipationSpec(kappa1=kappa1, nbar=nb) for nb in nbars]
    dts = [dt if dt is not None else _default_scan_dt(model.omega, model.g, model.n_fock)
           for _ in nbars]
    tasks = [
        (model.omega, model.g, model.n_fock, spec, t_grid, h, dtg)
        for spec, dtg in zip(specs, dts)
    ]
    fisher = np.asarray(_run_cells(tasks, workers))
    f_max = fisher.max(axis=1)
    t_peak = t_grid[fisher.argmax(axis=1)]
    temps = [model.omega / math.log1p(1.0 / nb) if nb > 0 else 0.0 for nb in nbars]

    k_star = int(np.argmax(nbars))
    audit_shift, n_audit = _check_worst_cell(
        model.omega, model.g, model.n_fock, specs[k_star], t_grid,
        h, dts[k_star], fisher[k_star], step_tol, audit, audit_tol,
    )

    pos = [i for i, nb in enumerate(nbars) if nb > 0]
    if len(pos) >= 3:
        amp_n, exp_n, res_n = powerlaw_fit([nbars[i] for i in pos], f_max[pos])
        amp_t, exp_t, res_t = powerlaw_fit([temps[i] for i in pos], f_max[pos])
    else:
        amp_n = exp_n = res_n = amp_t = exp_t = res_t = float("nan")
    return ThermalScan(
        model.omega, model.g, model.n_fock, float(kappa1), tuple(nbars),
        tuple(temps), t_grid, fisher, f_max, t_peak, float(h), tuple(dts),
        amp_n, exp_n, res_n, amp_t, exp_t, res_t, audit_shift, n_audit,
    )
