"""
Dense linear algebra for few-qubit systems.

States are plain numpy arrays: a 1-D array is a pure state vector, a 2-D
array is a density matrix. Functions that act on density matrices also accept
a stack of them with arbitrary leading batch axes. Qubit 0 is always the
leftmost (most significant) tensor factor.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

ATOL = 1e-10
PSD_ATOL = 1e-9

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def num_qubits(dim: int) -> int:
    """Number of qubits for a Hilbert space of dimension ``dim``."""
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a: np.ndarray, atol: float = ATOL) -> bool:
    a = np.asarray(a)
    return a.ndim >= 2 and a.shape[-1] == a.shape[-2] and np.allclose(a, dagger(a), rtol=0, atol=atol)


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= atol


def is_density_matrix(rho: np.ndarray, atol: float = ATOL, psd_atol: float = PSD_ATOL) -> bool:
    """Hermitian, unit trace and positive semi-definite (within tolerances)."""
    rho = np.asarray(rho)
    if not is_hermitian(rho, atol):
        return False
    if abs(np.trace(rho) - 1) > atol:
        return False
    return np.linalg.eigvalsh(rho).min() >= -psd_atol


def to_density(state: np.ndarray) -> np.ndarray:
    """Promote a pure state vector to ``|psi><psi|``; matrices pass through."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def ket(bits: str) -> np.ndarray:
    """Computational basis state, e.g. ``ket("01")``."""
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1
    return psi


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two states or two operators, ``a`` leading.

    Mixing a state vector with a matrix is rejected since the result would be
    ambiguous.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise ValueError(
            f"tensor_product needs two vectors or two matrices, got ndim {a.ndim} and {b.ndim}"
        )
    return np.kron(a, b)


def _check_qubits(qubits: Sequence[int], n: int) -> list[int]:
    qubits = [int(q) for q in qubits]
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit indices in {qubits}")
    bad = [q for q in qubits if not 0 <= q < n]
    if bad:
        raise ValueError(f"qubit indices {bad} out of range for {n} qubits")
    return qubits


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Trace out every qubit not listed in ``keep``.

    The kept qubits appear in the result in the order given by ``keep``.
    ``rho`` may carry leading batch axes; a 1-D input is treated as a pure
    state.
    """
    rho = to_density(rho)
    n = num_qubits(rho.shape[-1])
    keep = _check_qubits(keep, n)
    drop = [q for q in range(n) if q not in keep]
    batch = rho.shape[:-2]
    b = len(batch)
    t = rho.reshape(batch + (2,) * (2 * n))
    perm = (
        list(range(b))
        + [b + q for q in keep + drop]
        + [b + n + q for q in keep + drop]
    )
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    t = t.transpose(perm).reshape(batch + (dk, dd, dk, dd))
    return np.einsum("...iaja->...ij", t)


def embed(u: np.ndarray, acting_on: Sequence[int], total_qubits: int) -> np.ndarray:
    """Lift ``u`` to ``total_qubits`` qubits, acting on ``acting_on`` in that order.

    ``acting_on[k]`` is the qubit that receives the k-th tensor factor of
    ``u``; the list may be permuted and non-adjacent.
    """
    u = np.asarray(u, dtype=complex)
    acting_on = _check_qubits(acting_on, total_qubits)
    k = len(acting_on)
    if u.shape != (2**k, 2**k):
        raise ValueError(f"operator of shape {u.shape} cannot act on {k} qubits")
    n = total_qubits
    rest = [q for q in range(n) if q not in acting_on]
    full = np.kron(u, np.eye(2 ** len(rest), dtype=complex))
    # axis i of `full` belongs to qubit order[i]
    order = acting_on + rest
    inv = list(np.argsort(order))
    full = full.reshape((2,) * (2 * n)).transpose(inv + [n + i for i in inv])
    return full.reshape(2**n, 2**n)


def apply_local(rho: np.ndarray, u: np.ndarray, acting_on: Sequence[int]) -> np.ndarray:
    """``U rho U^dagger`` with ``U = embed(u, acting_on, n)``, without forming ``U``.

    Contracts ``u`` directly into the qubit axes of ``rho``, which is much
    cheaper than :func:`embed` for small gates. ``rho`` may be batched. A
    stack of gates ``u`` of shape ``(P, 2**k, 2**k)`` applies gate ``p`` to
    ``rho[p]``; the first batch axis of ``rho`` must then have length ``P``.
    """
    rho = to_density(rho)
    u = np.asarray(u, dtype=complex)
    n = num_qubits(rho.shape[-1])
    acting_on = _check_qubits(acting_on, n)
    k = len(acting_on)
    p = u.shape[0] if u.ndim == 3 else 1
    if u.ndim == 3 and (rho.ndim < 3 or rho.shape[0] != p):
        raise ValueError(f"{p} stacked gates need a state batch of leading length {p}")
    t = rho.reshape((p, -1) + (2,) * (2 * n))
    ut = u.reshape((p,) + (2,) * (2 * k))
    # einsum labels: 0 gate batch, 1 state batch, rows, cols, fresh labels
    rows = list(range(2, 2 + n))
    cols = list(range(2 + n, 2 + 2 * n))
    fresh = list(range(2 + 2 * n, 2 + 2 * n + k))
    where = {q: i for i, q in enumerate(acting_on)}
    new_rows = [fresh[where[q]] if q in where else rows[q] for q in range(n)]
    new_cols = [fresh[where[q]] if q in where else cols[q] for q in range(n)]
    t = np.einsum(ut, [0, *fresh, *(rows[q] for q in acting_on)], t, [0, 1, *rows, *cols], [0, 1, *new_rows, *cols])
    t = np.einsum(ut.conj(), [0, *fresh, *(cols[q] for q in acting_on)], t, [0, 1, *rows, *cols], [0, 1, *rows, *new_cols])
    return t.reshape(rho.shape)


def conjugate(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``u rho u^dagger``, broadcasting over batch axes of ``rho``."""
    return u @ rho @ dagger(u)


def exp_i_hermitian(k: np.ndarray, epsilon: float, atol: float = 1e-8) -> np.ndarray:
    """``exp(i epsilon K)`` for Hermitian ``K`` via eigendecomposition."""
    k = np.asarray(k, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(k), initial=0.0)))
    if not is_hermitian(k, atol * scale):
        raise ValueError("exp_i_hermitian requires a Hermitian generator")
    w, v = np.linalg.eigh((k + k.conj().T) / 2)
    return (v * np.exp(1j * epsilon * w)) @ v.conj().T


def fidelity(target: np.ndarray, rho: np.ndarray) -> float | np.ndarray:
    """Fidelity ``<phi|rho|phi>`` of a pure target with a state.

    ``rho`` may be a state vector, a density matrix or a stack of density
    matrices; the result is clipped to [0, 1].
    """
    phi = np.asarray(target, dtype=complex)
    if phi.ndim != 1:
        raise ValueError("target must be a pure state vector")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-1] != phi.shape[0]:
        raise ValueError(f"dimension mismatch: target {phi.shape[0]}, state {rho.shape[-1]}")
    if rho.ndim == 1:
        f = abs(np.vdot(phi, rho)) ** 2
    else:
        f = np.einsum("i,...ij,j->...", phi.conj(), rho, phi).real
    return np.clip(f, 0.0, 1.0)


def random_pure_state(num_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state from normalised complex Gaussian amplitudes."""
    return random_pure_states(num_qubits, 1, rng)[0]


def random_pure_states(num_qubits: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random pure states as rows of a ``(count, 2**n)`` array."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be at least 1")
    dim = 2**num_qubits
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a Ginibre matrix with the R phases fixed."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    """``(tr(rho X), tr(rho Y), tr(rho Z))`` for one-qubit states (batched)."""
    rho = to_density(rho)
    if rho.shape[-1] != 2:
        raise ValueError("Bloch coordinates are only defined for a single qubit")
    return np.stack(
        [np.einsum("...ij,ji->...", rho, p).real for p in (PAULI_X, PAULI_Y, PAULI_Z)],
        axis=-1,
    )
