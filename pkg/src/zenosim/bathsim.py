"""Classical emulation of engineered dephasing baths.

Each noise channel m couples a random-phase cosine series

    β_m(t) = α_m Σ_{j=1..Nc} F(ω_j) ω_j cos(ω_j t + φ_j^(m)),   ω_j = j ω₀,

to a *diagonal* system operator given by a vector of level weights (default:
one channel with σ_z weights (+1, -1)).  The phases are i.i.d. uniform on
[0, 2π), which makes β zero-mean and wide-sense stationary with

    S_m(τ) = ⟨β_m(t+τ) β_m(t)⟩ = (α_m²/2) Σ_j [F(ω_j) ω_j]² cos(ω_j τ)

and a discrete-line power spectrum of weight π(α_m²/2)[F(ω_j)ω_j]² at ±ω_j.
Spectral-shape presets: ``flat`` (F ∝ 1/ω, equal line weights), ``ohmic``
(F constant) and ``one_over_f`` ([Fω]² ∝ 1/ω).

Trajectories evolve a ket under H(t) = H_qs + Σ_m β_m(t)·diag(w_m) with a
midpoint-sampled piecewise-constant propagator; the phase-ensemble average
over many draws reproduces open-system dephasing.  For the σ_z channel the
equivalent master-equation description has the (sign-alternating,
non-Markovian) rate γ(t) = Σ_j A_j² sin(ω_j t)/ω_j with line amplitudes
A_j = α F(ω_j) ω_j, and line function g(t) = Σ_j (A_j/ω_j)² (1 - cos ω_j t)
— the small-phase (Gaussian) limit of the exact average of exp(-2iΦ).

Seeding is counter-based: trajectory k of a run with master seed s draws its
phases from an integer derived via a spawn-key split, so any subset of
trajectories can be recomputed independently and worker count never changes
the numbers.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lindblad import ClosedFormRate
from .operators import check_ket


class StepTooCoarse(ValueError):
    """The trajectory grid under-resolves the fastest spectral line."""


# --------------------------------------------------------------------------
# spectral shapes (module-level functions so specs stay picklable)


def _shape_flat(omega0: float, w: float) -> float:
    return omega0 / w


def _shape_ohmic(omega0: float, w: float) -> float:
    return 1.0


def _shape_one_over_f(omega0: float, w: float) -> float:
    return (omega0 / w) ** 1.5


_SHAPES = {
    "flat": _shape_flat,
    "ohmic": _shape_ohmic,
    "one_over_f": _shape_one_over_f,
}

SHAPE_NAMES = tuple(sorted(_SHAPES))


def make_shape(name: str, omega0: float) -> Callable[[float], float]:
    """Named filter shape F(ω), normalized so F(ω₀)·ω₀ = ω₀·F(ω₀) is O(ω₀)."""
    try:
        fn = _SHAPES[name]
    except KeyError:
        raise ValueError(f"unknown shape {name!r}; choose from {SHAPE_NAMES}") from None
    return functools.partial(fn, omega0)


_SIGMA_Z_WEIGHTS = (1.0, -1.0)


@dataclass(frozen=True, eq=False)
class NoiseSynthSpec:
    """Synthesis parameters for the random-phase cosine bath.

    ``alpha`` is a single amplitude or one per channel; ``targets`` holds one
    diagonal-weight vector per channel (default: a single σ_z channel).  For
    multiprocessing the shape callable must be picklable — use
    ``make_shape`` or another module-level function, not a lambda.
    """

    alpha: float | tuple[float, ...]
    f_shape: Callable[[float], float]
    omega0: float
    nc: int
    targets: tuple = ()
    _weights: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.nc < 1:
            raise ValueError("need at least one spectral line")
        targets = self.targets or (_SIGMA_Z_WEIGHTS,)
        weights = tuple(np.asarray(t, dtype=float) for t in targets)
        if any(w.ndim != 1 for w in weights):
            raise ValueError("each target must be a 1-D vector of level weights")
        dims = {w.size for w in weights}
        if len(dims) != 1:
            raise ValueError("all targets must share the system dimension")
        alphas = self.alpha if isinstance(self.alpha, (tuple, list)) else (self.alpha,) * len(weights)
        alphas = tuple(float(a) for a in alphas)
        if len(alphas) != len(weights):
            raise ValueError("one alpha per channel (or a single shared value)")
        if any(a <= 0 for a in alphas):
            raise ValueError("alpha must be positive")
        object.__setattr__(self, "alpha", alphas)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "_weights", weights)

    @property
    def n_channels(self) -> int:
        return len(self._weights)

    @property
    def dim(self) -> int:
        return self._weights[0].size

    @property
    def omegas(self) -> np.ndarray:
        return self.omega0 * np.arange(1, self.nc + 1, dtype=float)

    def weight_vector(self, channel: int) -> np.ndarray:
        return self._weights[channel].copy()

    def line_amps(self, channel: int = 0) -> np.ndarray:
        """A_j = α F(ω_j) ω_j for one channel."""
        ws = self.omegas
        shape_vals = np.asarray([float(self.f_shape(w)) for w in ws])
        return self.alpha[channel] * shape_vals * ws


@dataclass(frozen=True, eq=False)
class PhaseDraw:
    """One realization of the phase table, shape (nc, n_channels)."""

    phases: np.ndarray
    seed: int


def _traj_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_phases(spec: NoiseSynthSpec, seed: int) -> PhaseDraw:
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(spec.nc, spec.n_channels))
    return PhaseDraw(phases, int(seed))


def beta(spec: NoiseSynthSpec, draw: PhaseDraw, channel: int, t):
    """Noise amplitude β_channel(t) for one draw; t scalar or array."""
    amps = spec.line_amps(channel)
    phis = draw.phases[:, channel]
    ws = spec.omegas
    tt = np.asarray(t, dtype=float)
    out = np.cos(np.multiply.outer(tt, ws) + phis) @ amps
    return out if np.ndim(t) else float(out)


def analytic_correlation(spec: NoiseSynthSpec, tau, channel: int = 0):
    """S(τ) = (α²/2) Σ_j [F(ω_j) ω_j]² cos(ω_j τ) (exact phase average)."""
    amps2 = spec.line_amps(channel) ** 2
    tt = np.asarray(tau, dtype=float)
    out = 0.5 * np.cos(np.multiply.outer(tt, spec.omegas)) @ amps2
    return out if np.ndim(tau) else float(out)


def analytic_psd(spec: NoiseSynthSpec, channel: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Line positions ±ω_j and their delta weights π(α²/2)[F(ω_j)ω_j]².

    Normalization: (1/2π) Σ weights = S(0), the inverse-transform identity.
    """
    amps2 = spec.line_amps(channel) ** 2
    ws = spec.omegas
    freqs = np.concatenate((-ws[::-1], ws))
    weights = 0.5 * math.pi * np.concatenate((amps2[::-1], amps2))
    return freqs, weights


def estimate_correlation(
    spec: NoiseSynthSpec,
    n_draws: int,
    tau_grid: np.ndarray,
    seed: int,
    t0: float = 0.0,
    channel: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo Ŝ(τ) = mean_draws β(t0+τ)β(t0), with per-τ stderr.

    Stationarity makes the estimate independent of t0 up to noise; the
    statistical error shrinks as 1/√n_draws.
    """
    if n_draws < 2:
        raise ValueError("need at least two draws for an error bar")
    tau_grid = np.asarray(tau_grid, dtype=float)
    amps = spec.line_amps(channel)
    ws = spec.omegas
    phis = np.stack([
        sample_phases(spec, _traj_seed(seed, m)).phases[:, channel]
        for m in range(n_draws)
    ])  # (n_draws, nc)
    b0 = np.cos(ws * t0 + phis) @ amps  # (n_draws,)
    # (n_draws, nc, n_tau) -> (n_draws, n_tau)
    args = phis[:, :, None] + np.multiply.outer(ws, t0 + tau_grid)[None, :, :]
    bt = np.einsum("j,mjk->mk", amps, np.cos(args))
    samples = b0[:, None] * bt
    s_hat = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(n_draws)
    return s_hat, stderr


# --------------------------------------------------------------------------
# trajectories


def _max_step_allowed(spec: NoiseSynthSpec) -> float:
    return (2.0 * math.pi / (spec.nc * spec.omega0)) / 20.0


def trajectory_evolve(
    h_qs: np.ndarray | None,
    spec: NoiseSynthSpec,
    draw: PhaseDraw,
    psi0: np.ndarray,
    t_grid: np.ndarray,
) -> np.ndarray:
    """Evolve a ket through one noise realization; returns (len(t_grid), dim).

    Steps are the t_grid intervals themselves, with β sampled at interval
    midpoints (piecewise-constant propagator).  A grid coarser than 1/20 of
    the fastest line's period raises ``StepTooCoarse``.  Diagonal problems
    (h_qs None or diagonal) use an exact vectorized phase accumulation; a
    non-diagonal h_qs falls back to per-step eigendecomposition.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or not np.all(np.diff(t_grid) > 0):
        raise ValueError("t_grid must be strictly increasing with >= 2 points")
    psi0 = check_ket(psi0)
    dim = spec.dim
    if psi0.size != dim:
        raise ValueError(f"psi0 dimension {psi0.size} does not match targets ({dim})")
    steps = np.diff(t_grid)
    if float(steps.max()) > _max_step_allowed(spec) * (1.0 + 1e-9):
        raise StepTooCoarse(
            f"max step {float(steps.max())} exceeds (2π/(Nc ω₀))/20 = "
            f"{_max_step_allowed(spec)}"
        )
    t_mid = 0.5 * (t_grid[:-1] + t_grid[1:])
    b = np.stack([beta(spec, draw, ch, t_mid) for ch in range(spec.n_channels)])
    w = np.stack(spec._weights, axis=1)  # (dim, n_channels)

    diagonal = h_qs is None or not np.any(h_qs - np.diag(np.diagonal(h_qs)))
    out = np.empty((t_grid.size, dim), dtype=complex)
    out[0] = psi0
    if diagonal:
        d_qs = np.zeros(dim) if h_qs is None else np.diagonal(h_qs).real
        levels = d_qs[:, None] + w @ b  # (dim, n_steps)
        theta = np.cumsum(levels * steps, axis=1)
        out[1:] = (np.exp(-1.0j * theta) * psi0[:, None]).T
        return out
    h_qs = np.asarray(h_qs, dtype=complex)
    psi = psi0.copy()
    for k in range(steps.size):
        h_k = h_qs + np.diag(w @ b[:, k])
        energies, modes = np.linalg.eigh(h_k)
        psi = modes @ (np.exp(-1.0j * energies * steps[k]) * (modes.conj().T @ psi))
        out[k + 1] = psi
    return out


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Phase-ensemble average ρ̄(t) with elementwise standard errors."""

    t_grid: np.ndarray
    rho_bar: np.ndarray  # (n_times, dim, dim)
    stderr: np.ndarray  # (n_times, dim, dim), real
    n_trajectories: int
    master_seed: int
    n_chunks: int


def _ensemble_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    h_qs, spec, psi0, t_grid, start, stop, master_seed = args
    dim = psi0.size
    s1 = np.zeros((t_grid.size, dim, dim), dtype=complex)
    s2 = np.zeros((t_grid.size, dim, dim))
    for m in range(start, stop):
        draw = sample_phases(spec, _traj_seed(master_seed, m))
        path = trajectory_evolve(h_qs, spec, draw, psi0, t_grid)
        outer = path[:, :, None] * path[:, None, :].conj()
        s1 += outer
        s2 += outer.real**2 + outer.imag**2
    return s1, s2


def ensemble_average(
    h_qs: np.ndarray | None,
    spec: NoiseSynthSpec,
    psi0: np.ndarray,
    t_grid: np.ndarray,
    n_trajectories: int,
    master_seed: int,
    workers: int = 1,
) -> Ensemble:
    """Average |ψ⟩⟨ψ| over noise realizations.

    Trajectories are split into min(n, 64) fixed contiguous chunks whose
    partial sums are combined in chunk order, so the result is bit-identical
    for any worker count.  stderr is the elementwise standard error of the
    mean (|x| spread over draws).
    """
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    t_grid = np.asarray(t_grid, dtype=float)
    psi0 = check_ket(psi0)
    n_chunks = min(n_trajectories, 64)
    bounds = np.linspace(0, n_trajectories, n_chunks + 1).astype(int)
    tasks = [
        (h_qs, spec, psi0, t_grid, int(a), int(b), master_seed)
        for a, b in zip(bounds[:-1], bounds[1:])
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(_ensemble_chunk, tasks))
    else:
        partials = [_ensemble_chunk(t) for t in tasks]
    s1 = partials[0][0].copy()
    s2 = partials[0][1].copy()
    for p1, p2 in partials[1:]:
        s1 += p1
        s2 += p2
    m = n_trajectories
    rho_bar = s1 / m
    if m > 1:
        mean_abs2 = rho_bar.real**2 + rho_bar.imag**2
        var = np.clip(s2 / m - mean_abs2, 0.0, None) * (m / (m - 1.0))
        stderr = np.sqrt(var / m)
    else:
        stderr = np.zeros_like(s2)
    return Ensemble(t_grid, rho_bar, stderr, m, int(master_seed), n_chunks)


# --------------------------------------------------------------------------
# equivalent open-system description and scale mapping


def equivalent_dephasing_profile(spec: NoiseSynthSpec, channel: int = 0) -> ClosedFormRate:
    """Master-equation rate profile reproducing the σ_z channel's dephasing.

    Valid for a channel with ±1 level weights: the Gaussian phase average
    gives coherence exp(-2 g(t)) with g(t) = Σ_j (A_j/ω_j)² (1 - cos ω_j t),
    i.e. rate γ(t) = dg/dt = Σ_j A_j² sin(ω_j t)/ω_j.  The rate alternates
    in sign (non-Markovian revivals), which the integrator accepts.
    """
    w = spec.weight_vector(channel)
    if w.size != 2 or not np.allclose(np.sort(w), [-1.0, 1.0]):
        raise ValueError("the dephasing profile assumes a two-level ±1 channel")
    amps = spec.line_amps(channel)
    ws = spec.omegas

    def rate(t: float) -> float:
        return float(np.sum(amps**2 * np.sin(ws * t) / ws))

    def integral(t: float) -> float:
        return float(np.sum((amps / ws) ** 2 * (1.0 - np.cos(ws * t))))

    return ClosedFormRate(rate, integral)


def scale_map(h_s: float, c_m: float, h_qs: float) -> float:
    """Required noise scale S_m from the correspondence H_S/H_QS = C_m/S_m."""
    if h_s <= 0 or h_qs <= 0 or c_m <= 0:
        raise ValueError("all scales must be positive")
    return c_m * h_qs / h_s
