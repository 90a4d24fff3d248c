"""
Single-qudit channels, the Choi isomorphism, twirling and the fidelity relation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .linalg import DensityMatrix, as_rng, check_density, dagger, haar_unitary, herm_eig, ptrace

KRAUS_TOL = 1e-10
DOMAIN_TOL = 1e-8


class QuantumChannel:
    """Trace-preserving channel given by Kraus operators (``sum K^dag K = I``)."""

    def __init__(self, kraus, tol: float = KRAUS_TOL):
        ops = [np.asarray(k, dtype=complex) for k in kraus]
        if not ops:
            raise ValueError("need at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise ValueError("Kraus operators must all be square of one size")
        s = sum(dagger(k) @ k for k in ops)
        if np.max(np.abs(s - np.eye(d))) > tol:
            raise DomainError("Kraus operators are not trace preserving")
        self.kraus = tuple(ops)
        self.d = d

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def superoperator(self) -> np.ndarray:
        """Row-major vectorized action: ``vec(L(rho)) = S vec(rho)``."""
        return sum(np.kron(k, k.conj()) for k in self.kraus)

    @classmethod
    def identity(cls, d: int) -> "QuantumChannel":
        return cls([np.eye(d)])

    @classmethod
    def unitary(cls, u) -> "QuantumChannel":
        return cls([u])


def weyl_operators(d: int):
    """Clock and shift matrices ``(Z, X)`` with ``X|k> = |k+1>``, ``Z|k> = w^k |k>``."""
    x = np.roll(np.eye(d), 1, axis=0).astype(complex)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return z, x


def weyl(d: int, a: int, b: int) -> np.ndarray:
    z, x = weyl_operators(d)
    return np.linalg.matrix_power(z, a) @ np.linalg.matrix_power(x, b)


def _phi_plus(d: int) -> np.ndarray:
    v = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return np.outer(v, v.conj())


def choi_state(channel: QuantumChannel) -> DensityMatrix:
    """``(I x L)|Phi+><Phi+|``: the channel applied to the second half."""
    d = channel.d
    phi = _phi_plus(d)
    out = sum(np.kron(np.eye(d), k) @ phi @ dagger(np.kron(np.eye(d), k)) for k in channel.kraus)
    return DensityMatrix(out, (d, d), validate=False)


def channel_from_state(rho) -> QuantumChannel:
    """
    Channel whose Choi state is ``rho``.

    Each eigenvector ``psi_k`` (eigenvalue ``p_k``) gives a Kraus operator
    ``sqrt(p_k d) V_k`` with ``<b|V_k|a> = psi_k[a, b]``.

    Raises
    ------
    DomainError
        If the first marginal of ``rho`` is not ``I/d`` within 1e-8.
    """
    m = np.asarray(rho, dtype=complex)
    check_density(m)
    d = int(round(np.sqrt(m.shape[0])))
    if d * d != m.shape[0]:
        raise ValueError("expected a d x d bipartite state")
    marg = ptrace(m, (d, d), [0])
    if np.max(np.abs(marg - np.eye(d) / d)) > DOMAIN_TOL:
        raise DomainError("first marginal is not maximally mixed; no channel corresponds to this state")
    w, v = herm_eig(m)
    kraus = []
    for p, vec in zip(w, v.T):
        if p > 1e-14:
            kraus.append(np.sqrt(p * d) * vec.reshape(d, d).T)
    # eigen-solver noise can leave the completeness relation off by ~1e-12
    s = sum(dagger(k) @ k for k in kraus)
    fix = np.linalg.inv(_psd_sqrt(s))
    return QuantumChannel([k @ fix for k in kraus])


def _psd_sqrt(m):
    w, v = herm_eig(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ dagger(v)


def depolarizing(p: float, d: int) -> QuantumChannel:
    """``sigma -> p sigma + (1-p) I/d`` written as a mixture of Weyl unitaries."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    kraus = []
    for a in range(d):
        for b in range(d):
            w = p + (1 - p) / d ** 2 if a == b == 0 else (1 - p) / d ** 2
            if w > 0:
                kraus.append(np.sqrt(w) * weyl(d, a, b))
    return QuantumChannel(kraus)


def isotropic_state(p: float, d: int) -> DensityMatrix:
    """``p Phi+ + (1-p) I/d^2``."""
    return DensityMatrix(p * _phi_plus(d) + (1 - p) * np.eye(d * d) / d ** 2, (d, d), validate=False)


def isotropic_residual(rho) -> float:
    """Max-norm distance from ``rho`` to the isotropic state with the same ``Phi+`` overlap."""
    m = np.asarray(rho, dtype=complex)
    d = int(round(np.sqrt(m.shape[0])))
    c = float(np.real(np.trace(_phi_plus(d) @ m)))
    p = (d * d * c - 1) / (d * d - 1)
    return float(np.max(np.abs(m - np.asarray(isotropic_state(p, d)))))


@dataclass(frozen=True)
class TwirlResult:
    state: DensityMatrix
    half_batch_delta: float


def twirl_state(rho, samples: int = 10_000, rng=None, return_delta: bool = False):
    """
    Monte Carlo average of ``(U x U*) rho (U x U*)^dag`` over Haar ``U``.

    With ``return_delta`` the result is a :class:`TwirlResult` that also carries the
    max-norm difference between the averages of the two half batches.
    """
    m = np.asarray(rho, dtype=complex)
    d = int(round(np.sqrt(m.shape[0])))
    rng = as_rng(rng)
    us = haar_unitary(d, rng, size=samples)
    t = m.reshape(d, d, d, d)
    # (U x U*) rho (U x U*)^dag, batched over samples
    out = np.einsum("sai,sbj,ijkl,sck,sdl->sabcd", us, us.conj(), t, us.conj(), us, optimize=True)
    out = out.reshape(samples, d * d, d * d)
    avg = out.mean(axis=0)
    res = DensityMatrix(avg, (d, d), validate=False)
    if not return_delta:
        return res
    h = samples // 2
    delta = float(np.max(np.abs(out[:h].mean(axis=0) - out[h:].mean(axis=0)))) if h else float("nan")
    return TwirlResult(res, delta)


def twirl_channel(channel: QuantumChannel, samples: int = 10_000, rng=None) -> QuantumChannel:
    """
    Monte Carlo average of ``U^dag L(U . U^dag) U`` over Haar ``U``; returned through
    its Choi state as a Kraus channel.
    """
    d = channel.d
    rng = as_rng(rng)
    us = haar_unitary(d, rng, size=samples)
    sup = channel.superoperator()
    # superoperator of U^dag L(U . U^dag) U is (U^dag x U^T) S (U x U*)
    left = _batched_kron(dagger(us), np.swapaxes(us, -1, -2))
    right = _batched_kron(us, us.conj())
    avg = np.mean(left @ sup @ right, axis=0)
    choi = _choi_from_superoperator(avg, d)
    return channel_from_state(choi)


def _batched_kron(a, b):
    s, d = a.shape[0], a.shape[1]
    return np.einsum("sij,skl->sikjl", a, b).reshape(s, d * d, d * d)


def _choi_from_superoperator(s: np.ndarray, d: int) -> np.ndarray:
    # (I x L)|Phi+><Phi+| = (1/d) sum_ij |i><j| x L(|i><j|)
    t = s.reshape(d, d, d, d)  # [a, b, i, j]: <a|L(|i><j|)|b>
    c = np.einsum("abij->iajb", t).reshape(d * d, d * d) / d
    return 0.5 * (c + dagger(c))


###############################################################################


@dataclass(frozen=True)
class RelationParams:
    n: int
    d: int
    f_max: float
    F_max: float

    def __post_init__(self):
        if self.n < 1 or self.d < 2:
            raise ValueError("need n >= 1 and d >= 2")
        if not 1 / self.d - 1e-12 <= self.f_max <= 1 + 1e-12:
            raise ValueError(f"f_max must lie in [1/d, 1], got {self.f_max}")
        if not self.n / self.d ** 2 < self.F_max <= self.n + 1e-12:
            raise ValueError(f"F_max must lie in (n/d^2, n], got {self.F_max}")


def relation_fg(F_g: float, params: RelationParams, tol: float = 1e-12) -> float:
    """
    Teleportation fidelity implied by the singlet fraction along the noisy family:
    ``f_g = (F_g - n/d^2)(f_max - 1/d)/(F_max - n/d^2) + 1/d``.
    """
    lo = params.n / params.d ** 2
    if not lo - tol <= F_g <= params.F_max + tol:
        raise ValueError(f"F_g={F_g} outside [{lo}, {params.F_max}]")
    return (F_g - lo) * (params.f_max - 1 / params.d) / (params.F_max - lo) + 1 / params.d


def relation_lemmas(p: float, params: RelationParams) -> tuple[float, float]:
    """``(f_g, F_g)`` of the noisy family at mixing weight ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    d, n = params.d, params.n
    return p * params.f_max + (1 - p) / d, p * params.F_max + (1 - p) * n / d ** 2
