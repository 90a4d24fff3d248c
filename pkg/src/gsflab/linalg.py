"""
Dense complex linear algebra used throughout the package.

Everything here works on plain ``numpy`` arrays; :class:`DensityMatrix` is a thin
validated wrapper that carries the tensor-factor dimensions alongside the matrix.
Randomness always flows through a ``numpy.random.Generator`` (see :func:`as_rng`).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
UNITARY_TOL = 1e-10
EIG_CLAMP = 1e-12

###############################################################################


def as_rng(seed=None) -> np.random.Generator:
    """Return a ``Generator``; ints and ``None`` are seeded, generators pass through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[-1] == m.shape[-2] and np.max(np.abs(m - dagger(m)), initial=0.0) <= tol


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    eye = np.eye(u.shape[-1])
    return np.max(np.abs(dagger(u) @ u - eye)) <= tol


def herm_eig(m: np.ndarray):
    """Eigendecomposition of the Hermitian part of ``m`` (ascending eigenvalues)."""
    m = np.asarray(m, dtype=complex)
    return np.linalg.eigh(0.5 * (m + dagger(m)))


def sqrtm_psd(m: np.ndarray, clamp: float = EIG_CLAMP) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues below ``clamp`` are set to 0."""
    w, v = herm_eig(m)
    w = np.where(w < clamp, 0.0, w)
    return (v * np.sqrt(w)) @ dagger(v)


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues dropped)."""
    w, v = herm_eig(m)
    return (v * np.clip(w, 0.0, None)) @ dagger(v)


def expm_hermitian(h: np.ndarray) -> np.ndarray:
    """``exp(iH)`` for Hermitian ``H``."""
    w, v = herm_eig(h)
    return (v * np.exp(1j * w)) @ dagger(v)


def ket_to_dm(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    return np.outer(ket, ket.conj())


###############################################################################


@dataclass(frozen=True)
class DensityMatrix:
    """
    Validated density matrix with a tensor-factor annotation.

    Parameters
    ----------
    matrix : array_like
        Square complex matrix.
    dims : sequence of int, optional
        Factor dimensions whose product equals the side length. Defaults to a
        single factor.
    validate : bool
        Check Hermiticity, unit trace and positivity on construction.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = ()
    validate: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        dims = tuple(int(x) for x in self.dims) if self.dims else (m.shape[0],)
        if prod(dims) != m.shape[0]:
            raise ValueError(f"dims {dims} do not factor side length {m.shape[0]}")
        if self.validate:
            check_density(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    @classmethod
    def from_ket(cls, ket, dims: Sequence[int] = (), normalize: bool = True) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex).reshape(-1)
        norm = np.linalg.norm(ket)
        if norm == 0:
            raise ValueError("zero vector has no density matrix")
        if normalize:
            ket = ket / norm
        return cls(ket_to_dm(ket), tuple(dims), validate=False)

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int]) -> "DensityMatrix":
        n = prod(dims)
        return cls(np.eye(n) / n, tuple(dims), validate=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))


def check_density(m: np.ndarray, herm_tol: float = HERMITIAN_TOL, trace_tol: float = TRACE_TOL,
                  psd_tol: float = PSD_TOL) -> None:
    """Raise ``DomainError`` unless ``m`` is a valid density matrix."""
    if not is_hermitian(m, herm_tol):
        raise DomainError("matrix is not Hermitian")
    tr = np.trace(m)
    if abs(tr - 1) > trace_tol:
        raise DomainError(f"trace {tr.real:.3g} differs from 1")
    lo = np.linalg.eigvalsh(0.5 * (m + dagger(m)))[0]
    if lo < -psd_tol:
        raise DomainError(f"matrix has negative eigenvalue {lo:.3g}")


def _matrix_and_dims(rho, dims=None):
    if isinstance(rho, DensityMatrix):
        return rho.matrix, tuple(dims) if dims is not None else rho.dims
    m = np.asarray(rho, dtype=complex)
    return m, tuple(dims) if dims is not None else (m.shape[0],)


###############################################################################


def tensor_product(a, b):
    """Kronecker product; ``DensityMatrix`` operands concatenate their dims."""
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.matrix, b.matrix), a.dims + b.dims, validate=False)
    return np.kron(np.asarray(a), np.asarray(b))


def ptrace(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace of a raw operator, keeping factors ``keep`` in ascending order."""
    dims = [int(x) for x in dims]
    nf = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must be nonempty")
    if keep[0] < 0 or keep[-1] >= nf:
        raise ValueError(f"factor index out of range for dims {dims}: {keep}")
    t = np.asarray(m).reshape(dims + dims)
    ket = list(range(nf))
    # traced bra legs reuse the ket label
    bra = [nf + k if k in keep else k for k in range(nf)]
    out = keep + [nf + k for k in keep]
    kept = prod(dims[k] for k in keep)
    return np.einsum(t, ket + bra, out).reshape(kept, kept)


def partial_trace(rho, keep: Iterable[int], dims: Sequence[int] | None = None) -> DensityMatrix:
    """
    Reduced density matrix on the factors listed in ``keep``.

    Raises
    ------
    ValueError
        If ``keep`` is empty or contains an index outside ``dims``.
    """
    m, dims = _matrix_and_dims(rho, dims)
    keep = sorted(set(int(k) for k in keep))
    red = ptrace(m, dims, keep)
    return DensityMatrix(red, tuple(dims[k] for k in keep), validate=False)


def uhlmann_fidelity(rho_in, rho_out) -> float:
    """Root fidelity ``Tr sqrt(sqrt(rho_in) rho_out sqrt(rho_in))`` in [0, 1]."""
    a = np.asarray(rho_in, dtype=complex)
    b = np.asarray(rho_out, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    # trace norm of sqrt(a) sqrt(b); avoids square roots of near-zero eigenvalues
    sv = np.linalg.svd(sqrtm_psd(a) @ sqrtm_psd(b), compute_uv=False)
    f = float(np.sum(sv))
    return min(max(f, 0.0), 1.0)


###############################################################################


def haar_unitary(d: int, rng=None, size: int | None = None) -> np.ndarray:
    """
    Haar-random unitary from the QR decomposition of a complex Ginibre matrix.

    The diagonal of ``R`` is phase-normalized so the distribution is exactly Haar.
    With ``size`` set, returns a stack of shape ``(size, d, d)``.
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    rng = as_rng(rng)
    shape = (d, d) if size is None else (size, d, d)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    ph = diag / np.abs(diag)
    return q * ph[..., None, :]


def random_ket(d: int, rng=None, size: int | None = None) -> np.ndarray:
    """Haar-random pure state(s) of dimension ``d``."""
    rng = as_rng(rng)
    shape = (d,) if size is None else (size, d)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def random_density(d: int, rank: int | None = None, rng=None,
                   dims: Sequence[int] = ()) -> DensityMatrix:
    """Random density matrix of given rank: a Haar purification traced over its ancilla."""
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise ValueError(f"rank must be in [1, {d}], got {rank}")
    psi = random_ket(d * rank, rng).reshape(d, rank)
    return DensityMatrix(psi @ dagger(psi), tuple(dims), validate=False)
