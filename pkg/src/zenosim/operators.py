"""Dense operators and states on qubit ⊗ truncated-boson Hilbert spaces.

Conventions used throughout the package: hbar = 1, Hamiltonians are in
angular-frequency units, and qubit 0 is the *leftmost* tensor factor, so for
an n-qubit register the basis index carries qubit i in bit (n - 1 - i).
Bosonic modes are hard-truncated at Fock level ``n_fock``: raising out of the
top level gives zero, so ``[a, a†]`` equals the identity except for the
``(n_fock, n_fock)`` entry, which is ``-n_fock``.

Everything is a plain complex ndarray; there is no operator class. The few
validation helpers raise ``ValueError`` with a descriptive message.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Largest total Hilbert-space dimension the constructors will build densely.
MAX_DIM = 4096

_SIGMA = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product with a hard cap on the resulting dimension."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out_rows = a.shape[0] * b.shape[0]
    if out_rows > MAX_DIM:
        raise ValueError(
            f"kron result dimension {out_rows} exceeds MAX_DIM={MAX_DIM}"
        )
    return np.kron(a, b)


def kron_all(*ops: np.ndarray) -> np.ndarray:
    """Left-to-right tensor product of any number of factors."""
    if not ops:
        raise ValueError("kron_all needs at least one factor")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = kron(out, op)
    return out


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def sigma(axis: str) -> np.ndarray:
    """Single-qubit Pauli matrix, axis in {'x', 'y', 'z'}."""
    try:
        return _SIGMA[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected 'x', 'y' or 'z'") from None


def pauli(axis: str, site: int, n_qubits: int) -> np.ndarray:
    """Pauli operator on one site of an n-qubit register (site 0 leftmost)."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if not 0 <= site < n_qubits:
        raise ValueError(f"site {site} out of range for {n_qubits} qubits")
    if 2**n_qubits > MAX_DIM:
        raise ValueError(f"2**{n_qubits} exceeds MAX_DIM={MAX_DIM}")
    left = identity(2**site)
    right = identity(2 ** (n_qubits - site - 1))
    return kron_all(left, sigma(axis), right)


def ladder_ops(n_fock: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated annihilation/creation pair (a, a†) on Fock levels 0..n_fock.

    Hard truncation: a†|n_fock⟩ = 0, so the commutator [a, a†] deviates from
    the identity only in its last diagonal entry (-n_fock).
    """
    if n_fock < 1:
        raise ValueError("n_fock must be >= 1")
    if n_fock + 1 > MAX_DIM:
        raise ValueError(f"dimension {n_fock + 1} exceeds MAX_DIM={MAX_DIM}")
    a = np.zeros((n_fock + 1, n_fock + 1), dtype=complex)
    ns = np.arange(1, n_fock + 1)
    a[ns - 1, ns] = np.sqrt(ns)
    return a, a.conj().T


def number_op(n_fock: int) -> np.ndarray:
    return np.diag(np.arange(n_fock + 1, dtype=float)).astype(complex)


def quadrature_x(n_fock: int) -> np.ndarray:
    """Position-like quadrature a + a†."""
    a, ad = ladder_ops(n_fock)
    return a + ad


def quadrature_p(n_fock: int) -> np.ndarray:
    """Momentum-like quadrature i(a† - a)."""
    a, ad = ladder_ops(n_fock)
    return 1.0j * (ad - a)


def basis_ket(dim: int, index: int) -> np.ndarray:
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} out of range for dimension {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def fock_ket(n_fock: int, level: int) -> np.ndarray:
    return basis_ket(n_fock + 1, level)


def ghz_state(n_qubits: int) -> np.ndarray:
    """(|0...0⟩ + |1...1⟩)/√2 on n qubits (n = 1 gives |+⟩)."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    dim = 2**n_qubits
    if dim > MAX_DIM:
        raise ValueError(f"2**{n_qubits} exceeds MAX_DIM={MAX_DIM}")
    psi = np.zeros(dim, dtype=complex)
    psi[0] = psi[-1] = 1.0 / np.sqrt(2.0)
    return psi


def plus_state(n_qubits: int) -> np.ndarray:
    """Product state |+⟩^⊗n: the uncorrelated Ramsey probe."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    dim = 2**n_qubits
    if dim > MAX_DIM:
        raise ValueError(f"2**{n_qubits} exceeds MAX_DIM={MAX_DIM}")
    return np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def expect(op: np.ndarray, state: np.ndarray) -> complex:
    """⟨op⟩ in a ket (1-D) or density matrix (2-D).

    Returns the complex value; callers take the real part when Hermiticity
    guarantees it.
    """
    op = np.asarray(op, dtype=complex)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        if op.shape[1] != state.shape[0]:
            raise ValueError(
                f"operator dim {op.shape[1]} does not match ket dim {state.shape[0]}"
            )
        return complex(np.vdot(state, op @ state))
    if state.ndim == 2:
        if op.shape[1] != state.shape[0]:
            raise ValueError(
                f"operator dim {op.shape[1]} does not match state dim {state.shape[0]}"
            )
        return complex(np.trace(op @ state))
    raise ValueError(f"state must be 1-D (ket) or 2-D (density matrix), got ndim={state.ndim}")


def is_hermitian(a: np.ndarray, tol: float = 1e-10) -> bool:
    a = np.asarray(a)
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol * scale)


def check_ket(psi: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Validate a normalized ket; returns it as a complex ndarray."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError(f"ket must be 1-D, got shape {psi.shape}")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"ket norm {norm!r} deviates from 1 by more than {tol}")
    return psi


def check_density_matrix(
    rho: np.ndarray,
    trace_tol: float = 1e-10,
    herm_tol: float = 1e-10,
    eig_floor: float = -1e-8,
) -> np.ndarray:
    """Validate trace-1, Hermitian, (numerically) positive ρ; returns it."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr!r} deviates from 1 by more than {trace_tol}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError(f"density matrix is not Hermitian within {herm_tol}")
    min_eig = float(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)))
    if min_eig < eig_floor:
        raise ValueError(f"minimum eigenvalue {min_eig} below floor {eig_floor}")
    return rho


def matrix_exp_apply(h: np.ndarray, t: float, state: np.ndarray) -> np.ndarray:
    """Apply exp(-i h t) to a ket, or conjugate a density matrix by it.

    h must be Hermitian (eigendecomposition route); non-Hermitian input is
    rejected rather than silently Schur-factorized.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("matrix_exp_apply requires a Hermitian generator")
    energies, modes = np.linalg.eigh(h)
    phases = np.exp(-1.0j * energies * float(t))
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return modes @ (phases * (modes.conj().T @ state))
    if state.ndim == 2:
        u = modes * phases  # modes @ diag(phases)
        return u @ (modes.conj().T @ state @ modes) @ u.conj().T
    raise ValueError(f"state must be 1-D or 2-D, got ndim={state.ndim}")


@dataclass(frozen=True)
class HilbertSpec:
    """Shape of a qubit-register ⊗ single-boson-mode space.

    ``boson_cutoff`` is the top Fock level (0 means no bosonic factor).
    """

    n_qubits: int = 0
    boson_cutoff: int = 0

    def __post_init__(self) -> None:
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be >= 0")
        if self.boson_cutoff < 0:
            raise ValueError("boson_cutoff must be >= 0")
        if self.n_qubits == 0 and self.boson_cutoff == 0:
            raise ValueError("empty Hilbert space")
        if self.dim > MAX_DIM:
            raise ValueError(f"total dimension {self.dim} exceeds MAX_DIM={MAX_DIM}")

    @property
    def dim(self) -> int:
        boson = self.boson_cutoff + 1 if self.boson_cutoff > 0 else 1
        return 2**self.n_qubits * boson
