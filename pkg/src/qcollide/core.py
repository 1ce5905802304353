"""Dense density-matrix substrate for small qubit registers.

Qubit 0 is the most significant bit of the basis index, so a two-qubit
register is ordered ``|00>, |01>, |10>, |11>`` and ``tensor(a, b)`` is the
ordinary Kronecker product with ``a`` on the left.

The ``*_amps`` helpers work on raw arrays and accept leading batch axes;
the collision engines use them in their inner loops.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import CapacityError

MAX_QUBITS = 10
MAX_DIM = 2**MAX_QUBITS

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
TOL_UNITARY = 1e-12
# trace drift tolerated before renormalizing
TOL_RENORM = 1e-13


def n_qubits_of(dim: int) -> int:
    k = int(dim).bit_length() - 1
    if dim < 1 or 2**k != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    if k > MAX_QUBITS:
        raise CapacityError(f"{k} qubits exceeds the {MAX_QUBITS}-qubit register cap")
    return k


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dag(a))


def _square(amps) -> np.ndarray:
    a = np.array(amps, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def state_defects(amps: np.ndarray) -> list[str]:
    """Return human-readable invariant violations of (a batch of) density matrices."""
    problems = []
    herm = np.max(np.abs(amps - dag(amps)))
    if herm > TOL_HERM:
        problems.append(f"non-Hermitian (max deviation {herm:.3g})")
    tr = np.trace(amps, axis1=-2, axis2=-1)
    tr_err = np.max(np.abs(tr - 1.0))
    if tr_err > TOL_TRACE:
        problems.append(f"trace off by {tr_err:.3g}")
    if not problems:
        lo = np.min(np.linalg.eigvalsh(hermitize(amps)))
        if lo < -TOL_PSD:
            problems.append(f"negative eigenvalue {lo:.3g}")
    return problems


class DensityMatrix:
    """Immutable density matrix over a register of up to ten qubits.

    Construction validates Hermiticity, unit trace and positivity unless
    ``check=False`` is passed by a caller that already guarantees them.
    """

    __slots__ = ("amps",)

    def __init__(self, amps, *, check: bool = True):
        a = _square(amps)
        n_qubits_of(a.shape[0])
        if check:
            problems = state_defects(a)
            if problems:
                raise ValueError("invalid density matrix: " + "; ".join(problems))
        a.flags.writeable = False
        object.__setattr__(self, "amps", a)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __reduce__(self):
        return (self.__class__, (np.array(self.amps),))

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    @property
    def n_qubits(self) -> int:
        return n_qubits_of(self.dim)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amps, dtype=dtype)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


class UnitaryMatrix:
    """Immutable unitary operator; ``U U^dagger = I`` is checked on construction."""

    __slots__ = ("amps",)

    def __init__(self, amps, *, check: bool = True):
        a = _square(amps)
        n_qubits_of(a.shape[0])
        if check:
            dev = np.max(np.abs(a @ dag(a) - np.eye(a.shape[0])))
            if dev > TOL_UNITARY:
                raise ValueError(f"matrix is not unitary (max deviation {dev:.3g})")
        a.flags.writeable = False
        object.__setattr__(self, "amps", a)

    def __setattr__(self, name, value):
        raise AttributeError("UnitaryMatrix is immutable")

    def __reduce__(self):
        return (self.__class__, (np.array(self.amps),))

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amps, dtype=dtype)

    def __repr__(self):
        return f"UnitaryMatrix(dim={self.dim})"


def _amps(x) -> np.ndarray:
    return x.amps if isinstance(x, (DensityMatrix, UnitaryMatrix)) else np.asarray(x)


# ---------------------------------------------------------------------------
# array kernels


def tensor_amps(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product over the last two axes; ``a`` may carry batch axes."""
    da, db = a.shape[-1], b.shape[-1]
    if da * db > MAX_DIM:
        raise CapacityError(f"tensor product of dims {da} and {db} exceeds {MAX_DIM}")
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(a.shape[:-2] + (da * db, da * db))


def ptrace_amps(amps: np.ndarray, k: int, drop: int) -> np.ndarray:
    """Trace out qubit ``drop`` of a ``k``-qubit register (batch axes allowed)."""
    if not 0 <= drop < k:
        raise IndexError(f"qubit {drop} out of range for a {k}-qubit register")
    batch = amps.shape[:-2]
    nb = len(batch)
    t = amps.reshape(batch + (2,) * (2 * k))
    t = np.trace(t, axis1=nb + drop, axis2=nb + k + drop)
    d = 2 ** (k - 1)
    return t.reshape(batch + (d, d))


def reduce_amps(amps: np.ndarray, k: int, keep) -> np.ndarray:
    """Reduced state on the qubits in ``keep`` (kept in register order)."""
    keep = sorted(set(keep))
    if any(not 0 <= q < k for q in keep):
        raise IndexError(f"qubits {keep} out of range for a {k}-qubit register")
    for q in reversed(range(k)):
        if q not in keep:
            amps = ptrace_amps(amps, k, q)
            k -= 1
    return amps


def conjugate_amps(amps: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``u rho u^dagger`` followed by re-Hermitization and trace repair."""
    out = hermitize(u @ amps @ dag(u))
    tr = np.trace(out, axis1=-2, axis2=-1).real
    if np.any(np.abs(tr - 1.0) > TOL_RENORM):
        out = out / tr[..., None, None]
    return out


# ---------------------------------------------------------------------------
# public operations on validated values


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(tensor_amps(_amps(a), _amps(b)), check=False)


def embed_two_qubit(u: UnitaryMatrix, k: int, i: int, j: int) -> UnitaryMatrix:
    """Lift a 4x4 gate to a ``k``-qubit register acting on qubits ``(i, j)``.

    Qubit ``i`` plays the role of the gate's first (most significant) factor,
    so ``i > j`` is allowed and reverses the orientation.
    """
    u = _amps(u)
    if u.shape != (4, 4):
        raise ValueError(f"expected a 4x4 gate, got shape {u.shape}")
    if k > MAX_QUBITS:
        raise CapacityError(f"{k} qubits exceeds the {MAX_QUBITS}-qubit register cap")
    if i == j or not (0 <= i < k and 0 <= j < k):
        raise IndexError(f"invalid qubit pair ({i}, {j}) for a {k}-qubit register")
    rest = [q for q in range(k) if q not in (i, j)]
    op = np.kron(u, np.eye(2 ** (k - 2), dtype=complex)).reshape((2,) * (2 * k))
    order = [i, j] + rest
    src = [order.index(q) for q in range(k)]
    op = op.transpose(src + [k + s for s in src])
    return UnitaryMatrix(op.reshape(2**k, 2**k), check=False)


def conjugate(rho: DensityMatrix, u: UnitaryMatrix) -> DensityMatrix:
    r, m = _amps(rho), _amps(u)
    if r.shape != m.shape:
        raise ValueError(f"dimension mismatch: state {r.shape} vs unitary {m.shape}")
    return DensityMatrix(conjugate_amps(r, m), check=False)


def partial_trace(rho: DensityMatrix, k: int, drop: int) -> DensityMatrix:
    r = _amps(rho)
    if k < 2 or r.shape[-1] != 2**k:
        raise ValueError(f"state of dim {r.shape[-1]} is not a {k}-qubit register (k >= 2)")
    return DensityMatrix(ptrace_amps(r, k, drop), check=False)


def hermitian_eigenvalues(m) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix.

    2x2 inputs use the closed-form discriminant; larger ones go through
    LAPACK's Hermitian solver.
    """
    a = _square(_amps(m))
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > TOL_HERM:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    if a.shape[0] == 1:
        return np.array([a[0, 0].real])
    if a.shape[0] == 2:
        mean = 0.5 * (a[0, 0].real + a[1, 1].real)
        half = 0.5 * (a[0, 0].real - a[1, 1].real)
        r = math.hypot(half, abs(a[0, 1]))
        return np.array([mean - r, mean + r])
    return np.linalg.eigvalsh(hermitize(a))


def apply_two_qubit_amps(amps: np.ndarray, u: np.ndarray, k: int, i: int, j: int) -> np.ndarray:
    """``U rho U^dagger`` for a 4x4 ``u`` on qubits ``(i, j)``, by local contraction.

    Never forms the ``2^k``-dimensional operator, so it stays cheap on the
    largest registers.
    """
    if i == j or not (0 <= i < k and 0 <= j < k):
        raise IndexError(f"invalid qubit pair ({i}, {j}) for a {k}-qubit register")
    g = np.asarray(u, dtype=complex).reshape(2, 2, 2, 2)
    t = amps.reshape((2,) * (2 * k))
    t = np.tensordot(g, t, axes=([2, 3], [i, j]))
    t = np.moveaxis(t, [0, 1], [i, j])
    t = np.tensordot(t, g.conj(), axes=([k + i, k + j], [2, 3]))
    t = np.moveaxis(t, [-2, -1], [k + i, k + j])
    return t.reshape(2**k, 2**k)
