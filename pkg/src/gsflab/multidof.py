"""
Two distinguishable particles, each carrying several d-level degrees of freedom.

Tensor factors are ordered ``(A_1, ..., A_n, B_1, ..., B_m)``. DoF indices are
0-based in code. A :class:`DistState` may be asymmetric (``n_a != n_b``) once a
single DoF has been traced out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError
from .linalg import DensityMatrix, partial_trace

DIM_CAP = 4096


@dataclass(frozen=True)
class DofLayout:
    """``n`` DoFs per particle, each of dimension ``d``."""

    n: int
    d: int
    cap: int = DIM_CAP

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one DoF, got n={self.n}")
        if self.d < 2:
            raise ValueError(f"DoF dimension must be >= 2, got d={self.d}")
        if self.d ** (2 * self.n) > self.cap:
            raise ValueError(f"total dimension d^(2n)={self.d ** (2 * self.n)} exceeds cap {self.cap}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.d,) * (2 * self.n)

    @property
    def total_dim(self) -> int:
        return self.d ** (2 * self.n)


@dataclass(frozen=True)
class DistState:
    """Density matrix of particles A and B with ``n_a`` and ``n_b`` DoFs."""

    rho: DensityMatrix
    d: int
    n_a: int
    n_b: int

    def __post_init__(self):
        expected = (self.d,) * (self.n_a + self.n_b)
        if self.rho.dims != expected:
            raise ValueError(f"rho dims {self.rho.dims} inconsistent with d={self.d}, "
                             f"n_a={self.n_a}, n_b={self.n_b}")

    @classmethod
    def from_layout(cls, rho: DensityMatrix, layout: DofLayout) -> "DistState":
        m = np.asarray(rho)
        if m.shape[0] != layout.total_dim:
            raise DomainError(f"state dimension {m.shape[0]} does not match layout {layout}")
        return cls(DensityMatrix(m, layout.dims, validate=False), layout.d, layout.n, layout.n)

    @property
    def n(self) -> int:
        if self.n_a != self.n_b:
            raise ValueError("asymmetric state has no single n")
        return self.n_a

    @property
    def layout(self) -> DofLayout:
        return DofLayout(self.n, self.d)

    @property
    def matrix(self) -> np.ndarray:
        return self.rho.matrix

    def factor(self, particle, dof: int) -> int:
        """Tensor-factor index of DoF ``dof`` of ``particle`` ('A'/'B' or 0/1)."""
        p = _particle_index(particle)
        count = self.n_a if p == 0 else self.n_b
        if not 0 <= dof < count:
            raise ValueError(f"DoF index {dof} out of range for particle with {count} DoFs")
        return dof if p == 0 else self.n_a + dof


def _particle_index(particle) -> int:
    if particle in ("A", "a", 0):
        return 0
    if particle in ("B", "b", 1):
        return 1
    raise ValueError(f"particle must be 'A' or 'B', got {particle!r}")


###############################################################################


def build_dist_state(layout: DofLayout, amplitudes) -> DistState:
    """
    Pure state from ``(labels, amplitude)`` pairs, normalized to unit trace.

    ``labels`` has length ``2n``: the DoF values of A followed by those of B.
    ``amplitudes`` may be a mapping or an iterable of pairs.
    """
    items = amplitudes.items() if isinstance(amplitudes, Mapping) else amplitudes
    ket = np.zeros(layout.dims, dtype=complex)
    for labels, amp in items:
        labels = tuple(int(x) for x in labels)
        if len(labels) != 2 * layout.n:
            raise ValueError(f"expected {2 * layout.n} labels, got {labels}")
        if any(not 0 <= x < layout.d for x in labels):
            raise ValueError(f"label out of range 0..{layout.d - 1}: {labels}")
        ket[labels] += complex(amp)
    ket = ket.reshape(-1)
    if np.linalg.norm(ket) == 0:
        raise ValueError("amplitude vector is zero")
    return DistState(DensityMatrix.from_ket(ket, layout.dims), layout.d, layout.n, layout.n)


def dof_trace_out(state: DistState, particle, dof: int) -> DistState:
    """Trace out a single DoF of one particle."""
    k = state.factor(particle, dof)
    nf = state.n_a + state.n_b
    keep = [i for i in range(nf) if i != k]
    red = partial_trace(state.rho, keep)
    if _particle_index(particle) == 0:
        return DistState(red, state.d, state.n_a - 1, state.n_b)
    return DistState(red, state.d, state.n_a, state.n_b - 1)


def pairwise_reduction(state: DistState, i: int, j: int) -> DensityMatrix:
    """Reduced state of DoF ``i`` of A and DoF ``j`` of B (a d x d bipartite state)."""
    ka = state.factor("A", i)
    kb = state.factor("B", j)
    return partial_trace(state.rho, [ka, kb])


def standard_mes(d: int) -> DensityMatrix:
    """Projector onto ``sum_i |ii> / sqrt(d)``."""
    if d < 2:
        raise ValueError("d must be >= 2")
    ket = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return DensityMatrix.from_ket(ket, (d, d))


def mes_structure_state(layout: DofLayout) -> DistState:
    """Product of maximally entangled pairs across matched DoFs ``(A_k, B_k)``."""
    n, d = layout.n, layout.d
    amps = []
    for idx in np.ndindex(*(d,) * n):
        amps.append((idx + idx, 1.0))
    return build_dist_state(layout, amps)


def noisy_singlet(p: float, layout: DofLayout, structure: DistState | None = None) -> DistState:
    """``p * P + (1 - p) * I / d^(2n)`` with ``P`` defaulting to :func:`mes_structure_state`."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if structure is None:
        structure = mes_structure_state(layout)
    elif structure.rho.dims != layout.dims:
        raise DomainError(f"structure dims {structure.rho.dims} do not match layout {layout.dims}")
    dim = layout.total_dim
    m = p * structure.matrix + (1 - p) * np.eye(dim) / dim
    return DistState(DensityMatrix(m, layout.dims, validate=False), layout.d, layout.n, layout.n)


def maximally_mixed_state(layout: DofLayout) -> DistState:
    return noisy_singlet(0.0, layout)


def fmax_candidates(n: int, d: int) -> dict[str, float]:
    """
    The two competing values for the generalized singlet fraction of the
    distinguishable MES structure.

    ``"stated"`` counts each separable cross pair as 1/d; ``"product_marginals"``
    uses the 1/d^2 overlap that product-of-maximally-mixed reductions actually give.
    """
    return {"stated": 1 + (n - 1) / d, "product_marginals": 1 + (n - 1) / d ** 2}


def dist_state_from_ket(ket, d: int, n_a: int, n_b: int) -> DistState:
    dims = (d,) * (n_a + n_b)
    return DistState(DensityMatrix.from_ket(ket, dims), d, n_a, n_b)


def trace_out_particle(state: DistState, particle) -> DensityMatrix:
    """Ordinary particle trace: drop every DoF of ``particle``."""
    p = _particle_index(particle)
    keep: Iterable[int] = range(state.n_a, state.n_a + state.n_b) if p == 0 else range(state.n_a)
    return partial_trace(state.rho, list(keep))
