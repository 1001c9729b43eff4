"""Lindblad master-equation integration with time-dependent rates.

The equation of motion (hbar = 1) is

    dρ/dt = -i[H(t), ρ] + Σ_k γ_k(t) (L_k ρ L_k† - ½{L_k† L_k, ρ}),

integrated with classical RK4.  Adaptive mode uses step doubling: the
Richardson difference of a full step against two half steps estimates the
local error (divided by 2^4 - 1 = 15) and controls the step size; the
extrapolated solution is propagated.  Fixed-step mode takes plain RK4 steps of
(at most) ``dt_init`` and is what the scan code uses for reproducible costs.

Rates may be negative (non-Markovian regimes are expressed through
sign-alternating γ(t)); positivity of ρ is monitored rather than assumed.
The pure-dephasing closed form ``dephasing_analytic`` serves as an oracle:
for σ_z dissipators on n qubits, the matrix element ρ_ij decays by
exp(-2 k g(t)) where k is the Hamming distance between the basis indices and
g(t) = ∫₀ᵗ γ(τ) dτ is the line function.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import quad

from .operators import MAX_DIM, check_density_matrix, check_ket, ket_to_dm


class PositivityViolation(RuntimeError):
    """ρ developed an eigenvalue below the hard floor during integration."""


class NonConvergence(RuntimeError):
    """The stepper could not meet its tolerance (or lost trace/Hermiticity)."""


class PositivityWarning(RuntimeWarning):
    """Soft band: a slightly negative eigenvalue that is monitored, not fatal."""


# --------------------------------------------------------------------------
# rate profiles


@dataclass(frozen=True)
class ConstantRate:
    """γ(t) = value."""

    value: float

    def rate(self, t):
        return np.broadcast_to(np.asarray(self.value, dtype=float), np.shape(t)).copy() \
            if np.ndim(t) else float(self.value)

    def integral(self, t):
        return self.value * np.asarray(t, dtype=float) if np.ndim(t) else self.value * float(t)


@dataclass(frozen=True)
class LinearRate:
    """γ(t) = slope · t (the short-time/Zeno profile)."""

    slope: float

    def rate(self, t):
        return self.slope * np.asarray(t, dtype=float) if np.ndim(t) else self.slope * float(t)

    def integral(self, t):
        tt = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        return 0.5 * self.slope * tt * tt


@dataclass(frozen=True)
class TabulatedRate:
    """Piecewise-linear γ(t) through (times, rates) samples.

    The integral is the exact antiderivative of the interpolant (cumulative
    trapezoids plus a partial trapezoid), not a quadrature approximation.
    Evaluation outside [times[0], times[-1]] raises.
    """

    times: np.ndarray
    rates: np.ndarray
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if times.ndim != 1 or times.shape != rates.shape:
            raise ValueError("times and rates must be 1-D arrays of equal length")
        if times.size < 2:
            raise ValueError("need at least two samples")
        if not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(rates))):
            raise ValueError("samples must be finite")
        cum = np.concatenate(
            ([0.0], np.cumsum(0.5 * (rates[1:] + rates[:-1]) * np.diff(times)))
        )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "_cumulative", cum)

    def _check_domain(self, t) -> None:
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0] - 1e-12) or np.any(t > self.times[-1] + 1e-12):
            raise ValueError(
                f"t outside tabulated domain [{self.times[0]}, {self.times[-1]}]"
            )

    def rate(self, t):
        self._check_domain(t)
        out = np.interp(t, self.times, self.rates)
        return out if np.ndim(t) else float(out)

    def integral(self, t):
        self._check_domain(t)
        tt = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.times, tt, side="right") - 1, 0, self.times.size - 2)
        t0 = self.times[idx]
        g0 = self.rates[idx]
        slope = (self.rates[idx + 1] - g0) / (self.times[idx + 1] - t0)
        dt = tt - t0
        out = self._cumulative[idx] + g0 * dt + 0.5 * slope * dt * dt
        return out if np.ndim(t) else float(out)


@dataclass(frozen=True)
class ClosedFormRate:
    """γ(t) given as a callable, with an optional exact antiderivative.

    Without ``integral_fn`` the line function falls back to adaptive
    quadrature from 0, which is accurate but slow — supply the antiderivative
    when one exists.
    """

    rate_fn: Callable[[float], float]
    integral_fn: Callable[[float], float] | None = None

    def rate(self, t):
        if np.ndim(t):
            return np.asarray([self.rate_fn(float(x)) for x in np.ravel(t)]).reshape(np.shape(t))
        return float(self.rate_fn(float(t)))

    def integral(self, t):
        if self.integral_fn is not None:
            if np.ndim(t):
                return np.asarray(
                    [self.integral_fn(float(x)) for x in np.ravel(t)]
                ).reshape(np.shape(t))
            return float(self.integral_fn(float(t)))
        if np.ndim(t):
            return np.asarray([self.integral(float(x)) for x in np.ravel(t)]).reshape(np.shape(t))
        val, _ = quad(self.rate_fn, 0.0, float(t), limit=200)
        return float(val)


RateProfile = Union[ConstantRate, LinearRate, TabulatedRate, ClosedFormRate]


def line_function(profile: RateProfile, t):
    """g(t) = ∫₀ᵗ γ(τ) dτ for any rate profile."""
    return profile.integral(t)


# --------------------------------------------------------------------------
# problems


@dataclass(frozen=True)
class Dissipator:
    """A jump operator together with its (possibly time-dependent) rate."""

    operator: np.ndarray
    rate: RateProfile


@dataclass
class MasterEqProblem:
    """Hamiltonian (constant array, callable of t, or None), dissipators,
    initial state (ket or density matrix) and output time grid."""

    hamiltonian: np.ndarray | Callable[[float], np.ndarray] | None
    dissipators: Sequence[Dissipator]
    rho0: np.ndarray
    t_grid: np.ndarray


@dataclass(frozen=True)
class StepperConfig:
    """RK4 stepper knobs.

    ``adaptive=True``: step doubling with mixed tolerance
    atol + rtol·max|ρ|; the accepted state is the Richardson-extrapolated
    combination.  ``adaptive=False``: fixed steps of at most ``dt_init``
    (each output segment is subdivided evenly).
    """

    dt_init: float = 1e-3
    rtol: float = 1e-8
    atol: float = 1e-10
    adaptive: bool = True
    dt_min: float = 1e-12
    max_steps: int = 20_000_000

    def __post_init__(self) -> None:
        if self.dt_init <= 0 or self.dt_min <= 0:
            raise ValueError("step sizes must be positive")
        if self.rtol < 0 or self.atol < 0:
            raise ValueError("tolerances must be non-negative")


def _rhs_factory(problem: MasterEqProblem):
    """Build dρ/dt evaluator; returns (rhs, saw_negative_rate_flag_cell)."""
    h = problem.hamiltonian
    h_const = isinstance(h, np.ndarray) or h is None
    ops = [np.asarray(d.operator, dtype=complex) for d in problem.dissipators]
    dags = [op.conj().T for op in ops]
    grams = [dag @ op for op, dag in zip(ops, dags)]
    profiles = [d.rate for d in problem.dissipators]
    const_rates = all(isinstance(p, ConstantRate) for p in profiles)
    neg_seen = [False]

    if h_const and const_rates:
        gammas = [p.value for p in profiles]
        if any(g < 0 for g in gammas):
            neg_seen[0] = True
        dim = ops[0].shape[0] if ops else (h.shape[0] if h is not None else 0)
        drift = np.zeros((dim, dim), dtype=complex) if dim else None
        if h is not None:
            drift = -1.0j * h
        for g, gram in zip(gammas, grams):
            drift = drift - 0.5 * g * gram if drift is not None else -0.5 * g * gram
        if drift is None:
            raise ValueError("problem has neither Hamiltonian nor dissipators")
        drift_dag = drift.conj().T
        jumps = [(g, op, dag) for g, op, dag in zip(gammas, ops, dags) if g != 0.0]

        def rhs(t: float, rho: np.ndarray) -> np.ndarray:
            out = drift @ rho + rho @ drift_dag
            for g, op, dag in jumps:
                out += g * (op @ (rho @ dag))
            return out

        return rhs, neg_seen

    def rhs(t: float, rho: np.ndarray) -> np.ndarray:
        if h is None:
            out = np.zeros_like(rho)
        else:
            ht = h if h_const else np.asarray(h(t), dtype=complex)
            out = -1.0j * (ht @ rho - rho @ ht)
        for profile, op, dag, gram in zip(profiles, ops, dags, grams):
            g = profile.rate(t)
            if g < 0:
                neg_seen[0] = True
            if g != 0.0:
                out += g * (op @ (rho @ dag) - 0.5 * (gram @ rho + rho @ gram))
        return out

    return rhs, neg_seen


def lindblad_rhs(problem: MasterEqProblem, rho: np.ndarray, t: float) -> np.ndarray:
    """One evaluation of dρ/dt; exposed for tests and external steppers."""
    rhs, _ = _rhs_factory(problem)
    return rhs(float(t), np.asarray(rho, dtype=complex))


def _rk4_step(rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _monitor(rho: np.ndarray, t: float, negative_rates: bool) -> None:
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > 1e-8:
        raise NonConvergence(f"trace drifted to {tr!r} at t={t}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise NonConvergence(f"Hermiticity lost at t={t}")
    min_eig = float(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)))
    if min_eig < -1e-6:
        raise PositivityViolation(
            f"eigenvalue {min_eig} below -1e-6 at t={t}"
            + (" (negative rates present)" if negative_rates else "")
        )
    # pure states integrated at rtol ~1e-8 legitimately dip a few 1e-8 below
    # zero, so the soft band starts an order of magnitude above the hard floor
    if min_eig < -1e-7:
        warnings.warn(
            f"eigenvalue {min_eig} in the soft band at t={t}", PositivityWarning,
            stacklevel=3,
        )


def integrate(
    problem: MasterEqProblem, stepper: StepperConfig | None = None
) -> list[tuple[float, np.ndarray]]:
    """Integrate the master equation over problem.t_grid.

    Returns [(t, ρ(t))] including the initial point.  Every output state is
    checked: trace within 1e-8 of 1, Hermitian within 1e-8, minimum eigenvalue
    above -1e-6 (hard failure) with a warning band down to -1e-8.
    """
    stepper = stepper or StepperConfig()
    t_grid = np.asarray(problem.t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("t_grid must be a non-empty 1-D array")
    if not np.all(np.diff(t_grid) > 0):
        raise ValueError("t_grid must be strictly increasing")

    rho0 = np.asarray(problem.rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = ket_to_dm(check_ket(rho0))
    rho0 = check_density_matrix(rho0)

    for d in problem.dissipators:
        op = np.asarray(d.operator)
        if op.shape != rho0.shape:
            raise ValueError(
                f"dissipator shape {op.shape} does not match state shape {rho0.shape}"
            )
    if isinstance(problem.hamiltonian, np.ndarray) and problem.hamiltonian.shape != rho0.shape:
        raise ValueError("Hamiltonian dimension does not match the state")

    rhs, neg_seen = _rhs_factory(problem)
    out: list[tuple[float, np.ndarray]] = [(float(t_grid[0]), rho0.copy())]
    rho = rho0.copy()
    t = float(t_grid[0])
    dt = float(stepper.dt_init)
    steps = 0

    for target in t_grid[1:]:
        target = float(target)
        if not stepper.adaptive:
            n_sub = max(1, int(np.ceil((target - t) / stepper.dt_init - 1e-12)))
            h = (target - t) / n_sub
            for _ in range(n_sub):
                rho = _rk4_step(rhs, t, rho, h)
                t += h
                steps += 1
            t = target
        else:
            while t < target - 1e-14 * max(1.0, abs(target)):
                steps += 1
                if steps > stepper.max_steps:
                    raise NonConvergence(f"exceeded {stepper.max_steps} steps")
                h = min(dt, target - t)
                full = _rk4_step(rhs, t, rho, h)
                half = _rk4_step(rhs, t, rho, 0.5 * h)
                half = _rk4_step(rhs, t + 0.5 * h, half, 0.5 * h)
                err = float(np.max(np.abs(full - half))) / 15.0
                tol = stepper.atol + stepper.rtol * max(1.0, float(np.max(np.abs(half))))
                if err <= tol:
                    # local extrapolation: the O(h^5) combination
                    rho = half + (half - full) / 15.0
                    t = t + h
                    if err > 0:
                        dt = h * min(5.0, 0.9 * (tol / err) ** 0.2)
                    else:
                        dt = h * 5.0
                else:
                    dt = h * max(0.2, 0.9 * (tol / err) ** 0.2)
                    if dt < stepper.dt_min:
                        raise NonConvergence(
                            f"step size underflow at t={t} (dt={dt}, err={err}, tol={tol})"
                        )
        _monitor(rho, t, neg_seen[0])
        out.append((t, rho.copy()))
    return out


# --------------------------------------------------------------------------
# pure-dephasing oracle


@lru_cache(maxsize=32)
def _hamming_matrix(n_qubits: int) -> np.ndarray:
    dim = 2**n_qubits
    idx = np.arange(dim)
    xor = idx[:, None] ^ idx[None, :]
    # vectorized popcount over the XOR table
    counts = np.zeros_like(xor)
    while np.any(xor):
        counts += xor & 1
        xor >>= 1
    return counts.astype(float)


def dephasing_analytic(
    n_qubits: int,
    g_eval: Callable[[float], float] | RateProfile,
    rho0: np.ndarray,
    t: float,
) -> np.ndarray:
    """Exact propagator for pure collective-axis dephasing on n qubits.

    Element (i, j) of ρ decays by exp(-2 k g(t)) with k the Hamming distance
    between the basis labels; diagonals (k = 0) are untouched.  ``g_eval`` is
    either a line-function callable t ↦ g(t) or a rate profile (its integral
    is used).
    """
    if 2**n_qubits > MAX_DIM:
        raise ValueError(f"n_qubits={n_qubits} too large for a dense propagator")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = ket_to_dm(check_ket(rho0))
    if rho0.shape != (2**n_qubits, 2**n_qubits):
        raise ValueError(
            f"state shape {rho0.shape} does not match n_qubits={n_qubits}"
        )
    g = g_eval.integral(t) if hasattr(g_eval, "integral") else g_eval(t)
    return rho0 * np.exp(-2.0 * float(g) * _hamming_matrix(n_qubits))
