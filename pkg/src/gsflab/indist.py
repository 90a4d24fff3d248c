"""
Two identical particles with spatial labels and several d-level DoFs.

Single-particle basis states are ``|r, a_1 ... a_n>``: a region index ``r`` (into
``regions``) and a DoF tuple. A two-particle state is stored as the (anti)symmetric
vector

    Psi = (1/sqrt 2) sum_k kappa_k (|t1_k>|t2_k> + eta |t2_k>|t1_k>)

in the ordered product of two single-particle spaces. With this normalization
``<Psi|Psi>`` equals the symmetrized norm built from :func:`sym_inner`, so a term
with two different single-particle labels has unit weight and a doubly occupied
boson term has weight 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateStateError, DomainError
from .linalg import DensityMatrix, as_rng, haar_unitary, is_unitary, ptrace

DEFAULT_REGIONS = ("s1", "s2")
_ZERO = 1e-14


def _check_eta(eta: int) -> int:
    if eta not in (1, -1):
        raise ValueError(f"statistics must be +1 (boson) or -1 (fermion), got {eta}")
    return int(eta)


def sym_inner(a, b, eta: int) -> complex:
    """
    ``<phi1, phi2 | psi1, psi2> = <phi1|psi1><phi2|psi2> + eta <phi1|psi2><phi2|psi1>``.

    ``a = (phi1, phi2)`` and ``b = (psi1, psi2)`` are pairs of single-particle kets.
    """
    eta = _check_eta(eta)
    p1, p2 = (np.asarray(v, dtype=complex).reshape(-1) for v in a)
    q1, q2 = (np.asarray(v, dtype=complex).reshape(-1) for v in b)
    if not (len(p1) == len(p2) == len(q1) == len(q2)):
        raise ValueError("single-particle kets must share one dimension")
    return complex(np.vdot(p1, q1) * np.vdot(p2, q2) + eta * np.vdot(p1, q2) * np.vdot(p2, q1))


@dataclass(frozen=True)
class IndistTerm:
    region1: str
    dofs1: tuple[int, ...]
    region2: str
    dofs2: tuple[int, ...]
    amplitude: complex


class IndistState:
    """
    Normalized two-particle state of identical bosons (``eta=+1``) or fermions (``eta=-1``).

    Terms are canonicalized so that ``(region1, dofs1) <= (region2, dofs2)``, with the
    exchange sign ``eta`` applied on a swap. Amplitudes are rescaled to unit norm.

    Raises
    ------
    DomainError
        A fermion term puts both particles in the same single-particle state, or
        the state vanishes.
    """

    def __init__(self, terms: Sequence[IndistTerm], eta: int, n: int, d: int,
                 regions: Sequence[str] = DEFAULT_REGIONS):
        self.eta = _check_eta(eta)
        if n < 1 or d < 2:
            raise ValueError("need n >= 1 and d >= 2")
        self.n, self.d = int(n), int(d)
        self.regions = tuple(regions)
        if len(set(self.regions)) != len(self.regions) or not self.regions:
            raise ValueError(f"regions must be distinct and nonempty: {regions}")
        self._index = {r: k for k, r in enumerate(self.regions)}
        m = np.zeros((self.sp_dim, self.sp_dim), dtype=complex)
        for t in terms:
            i = self.sp_index(t.region1, t.dofs1)
            j = self.sp_index(t.region2, t.dofs2)
            amp = complex(t.amplitude)
            if i == j:
                if self.eta == -1 and abs(amp) > 0:
                    raise DomainError(f"Pauli exclusion: fermions cannot share state "
                                      f"({t.region1}, {tuple(t.dofs1)})")
                m[i, i] += np.sqrt(2) * amp
            else:
                m[i, j] += amp / np.sqrt(2)
                m[j, i] += self.eta * amp / np.sqrt(2)
        self._psi = self._normalized(m)

    @staticmethod
    def _normalized(m):
        norm = np.linalg.norm(m)
        if norm < _ZERO:
            raise DomainError("two-particle state vanishes")
        m = m / norm
        m.setflags(write=False)
        return m

    @classmethod
    def from_matrix(cls, psi: np.ndarray, eta: int, n: int, d: int,
                    regions: Sequence[str] = DEFAULT_REGIONS) -> "IndistState":
        """Build from the two-slot amplitude matrix; it must already be (anti)symmetric."""
        psi = np.asarray(psi, dtype=complex)
        obj = cls.__new__(cls)
        obj.eta = _check_eta(eta)
        obj.n, obj.d, obj.regions = int(n), int(d), tuple(regions)
        obj._index = {r: k for k, r in enumerate(obj.regions)}
        if psi.shape != (obj.sp_dim, obj.sp_dim):
            raise ValueError(f"amplitude matrix must be {obj.sp_dim} x {obj.sp_dim}")
        if np.max(np.abs(psi - obj.eta * psi.T)) > 1e-10:
            raise DomainError("amplitude matrix lacks exchange symmetry")
        obj._psi = cls._normalized(psi)
        return obj

    # -- indexing -----------------------------------------------------------

    @property
    def dof_dim(self) -> int:
        return self.d ** self.n

    @property
    def sp_dim(self) -> int:
        return len(self.regions) * self.dof_dim

    def region_index(self, region) -> int:
        try:
            return self._index[region]
        except KeyError:
            raise ValueError(f"unknown region {region!r}; known {self.regions}") from None

    def sp_index(self, region, dofs) -> int:
        dofs = tuple(int(x) for x in dofs)
        if len(dofs) != self.n or any(not 0 <= a < self.d for a in dofs):
            raise ValueError(f"DoF labels {dofs} invalid for n={self.n}, d={self.d}")
        return self.region_index(region) * self.dof_dim + int(np.ravel_multi_index(dofs, (self.d,) * self.n))

    def sp_label(self, index: int):
        r, rest = divmod(int(index), self.dof_dim)
        return self.regions[r], tuple(int(x) for x in np.unravel_index(rest, (self.d,) * self.n))

    def sp_ket(self, region, dofs) -> np.ndarray:
        v = np.zeros(self.sp_dim, dtype=complex)
        v[self.sp_index(region, dofs)] = 1.0
        return v

    # -- views --------------------------------------------------------------

    @property
    def matrix(self) -> np.ndarray:
        """Amplitude matrix ``Psi[i, j]`` (slot 1 index ``i``, slot 2 index ``j``)."""
        return self._psi

    @property
    def vector(self) -> np.ndarray:
        return self._psi.reshape(-1)

    @property
    def terms(self) -> list[IndistTerm]:
        out = []
        psi = self._psi
        for i in range(self.sp_dim):
            for j in range(i, self.sp_dim):
                amp = psi[i, i] / np.sqrt(2) if i == j else np.sqrt(2) * psi[i, j]
                if abs(amp) > 1e-15:
                    r1, a1 = self.sp_label(i)
                    r2, a2 = self.sp_label(j)
                    out.append(IndistTerm(r1, a1, r2, a2, complex(amp)))
        return out

    def projector(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())

    def density(self) -> "LabeledDensity":
        free = Slot(None, tuple(range(self.n)))
        return LabeledDensity(self.projector(), (free, free), self.regions, self.d, self.n,
                              self.eta, 1.0)

    def inner(self, other: "IndistState") -> complex:
        return complex(np.vdot(self.vector, other.vector))

    def swapped(self) -> "IndistState":
        """Every term with its two particles exchanged and multiplied by ``eta``."""
        return IndistState.from_matrix(self.eta * self._psi.T, self.eta, self.n, self.d, self.regions)

    def __repr__(self):
        kind = "boson" if self.eta == 1 else "fermion"
        return f"IndistState({kind}, n={self.n}, d={self.d}, regions={self.regions}, terms={len(self.terms)})"


###############################################################################


def indist_mes(d: int, eta: int, regions: Sequence[str] = DEFAULT_REGIONS) -> IndistState:
    """``(1/sqrt d) sum_a |s1 a, s2 a>`` for one DoF of dimension ``d``."""
    if len(regions) != 2:
        raise ValueError("the maximally entangled state uses exactly two regions")
    s1, s2 = regions
    terms = [IndistTerm(s1, (a,), s2, (a,), 1 / np.sqrt(d)) for a in range(d)]
    return IndistState(terms, eta, 1, d, regions)


@dataclass(frozen=True)
class Slot:
    """One particle slot of a :class:`LabeledDensity`.

    ``region=None`` means the slot still ranges over every region with all DoFs.
    Otherwise the particle is localized in ``region`` and only the listed DoFs remain.
    """

    region: str | None
    dofs: tuple[int, ...]


@dataclass(frozen=True)
class LabeledDensity:
    """
    Two-slot density operator produced by DoF trace-outs of identical particles.

    ``weight`` is the trace of the most recent trace-out before renormalization
    (for the first trace-out of a symmetric state, the mean occupation of the region).
    """

    matrix: np.ndarray
    slots: tuple[Slot, Slot]
    regions: tuple[str, ...]
    d: int
    n: int
    eta: int
    weight: float = 1.0
    history: tuple = field(default=())

    @property
    def symmetric(self) -> bool:
        return self.slots[0].region is None and self.slots[1].region is None

    def slot_dim(self, k: int) -> int:
        s = self.slots[k]
        if s.region is None:
            return len(self.regions) * self.d ** self.n
        return self.d ** len(s.dofs)

    def _region_block(self, k: int, region) -> np.ndarray:
        """Isometry restricting slot ``k`` to ``region`` (rows: kept DoF values)."""
        s = self.slots[k]
        dim = self.slot_dim(k)
        if s.region is not None:
            return np.eye(dim) if s.region == region else np.zeros((0, dim))
        r = self.regions.index(region)
        dd = self.d ** self.n
        block = np.zeros((dd, dim))
        block[:, r * dd:(r + 1) * dd] = np.eye(dd)
        return block

    def _kraus(self, k: int, region, dof: int) -> tuple[list[np.ndarray], Slot] | None:
        s = self.slots[k]
        if s.region is not None and s.region != region:
            return None
        if dof not in s.dofs:
            if s.region is None:
                raise ValueError(f"DoF index {dof} out of range for n={self.n}")
            return None
        pos = s.dofs.index(dof)
        keep = s.dofs[:pos] + s.dofs[pos + 1:]
        dims_in = (self.d,) * len(s.dofs)
        base = self._region_block(k, region)
        out = []
        for m in range(self.d):
            sel = np.zeros((self.d ** len(keep), self.d ** len(s.dofs)))
            for row, rest in enumerate(product(range(self.d), repeat=len(keep))):
                full = rest[:pos] + (m,) + rest[pos:]
                sel[row, np.ravel_multi_index(full, dims_in)] = 1.0
            out.append(sel @ base)
        return out, Slot(region, keep)

    def _contract(self, k: int, kraus):
        other = np.eye(self.slot_dim(1 - k))
        acc = 0
        for op in kraus:
            full = np.kron(op, other) if k == 0 else np.kron(other, op)
            acc = acc + full @ self.matrix @ full.conj().T
        return acc

    def trace_out(self, region, dof: int) -> "LabeledDensity":
        """Trace DoF ``dof`` of the particle found in ``region`` (see :func:`dof_trace_out_region`)."""
        if region not in self.regions:
            raise ValueError(f"unknown region {region!r}; known {self.regions}")
        if self.symmetric:
            kraus, slot = self._kraus(0, region, dof)
            # both particles contribute equally to the four-term sum
            new = 2 * self._contract(0, kraus)
            slots = (slot, self.slots[1])
        else:
            found = []
            for k in (0, 1):
                kr = self._kraus(k, region, dof)
                if kr is not None:
                    mat = self._contract(k, kr[0])
                    slots = (kr[1], self.slots[1]) if k == 0 else (self.slots[0], kr[1])
                    if np.real(np.trace(mat)) > _ZERO:
                        found.append((mat, slots))
            if len(found) > 1:
                raise DomainError(f"both particles may occupy {region!r}; "
                                  "the trace-out is ambiguous for this labeling")
            if not found:
                raise DegenerateStateError(f"no particle in {region!r} carries DoF {dof}")
            new, slots = found[0]
        w = float(np.real(np.trace(new)))
        if w < _ZERO:
            raise DegenerateStateError(f"no support in region {region!r} after trace-out")
        return LabeledDensity(new / w, slots, self.regions, self.d, self.n, self.eta, w,
                              self.history + ((region, dof),))

    def region_state(self, region) -> DensityMatrix:
        """Normalized state of the particle in ``region``, the other slot traced out."""
        regs = [s.region for s in self.slots]
        if region in regs:
            k = 1 if regs[1] == region else 0
        elif None in regs:
            k = 1 if regs[1] is None else 0
        else:
            raise DegenerateStateError(f"no particle in region {region!r}")
        iso = self._region_block(k, region)
        other = np.eye(self.slot_dim(1 - k))
        full = np.kron(other, iso) if k == 1 else np.kron(iso, other)
        m = full @ self.matrix @ full.conj().T
        dims = [self.slot_dim(0), self.slot_dim(1)]
        dims[k] = iso.shape[0]
        red = ptrace(m, dims, [k])
        tr = float(np.real(np.trace(red)))
        if tr < _ZERO:
            raise DegenerateStateError(f"no particle in region {region!r}")
        kept = self.slots[k].dofs
        return DensityMatrix(red / tr, (self.d,) * len(kept) or (1,), validate=False)

    def localize(self, x, y) -> DensityMatrix:
        """
        Conditional state with one particle in ``x`` and one in ``y``, ordered ``(x, y)``.

        Raises ``DegenerateStateError`` when that configuration has zero weight.
        """
        if x == y:
            raise ValueError("regions must differ")
        s0, s1 = self.slots
        if s0.region == y or s1.region == x:
            assign = (y, x)
        else:
            assign = (x, y)
        iso0 = self._region_block(0, assign[0])
        iso1 = self._region_block(1, assign[1])
        full = np.kron(iso0, iso1)
        m = full @ self.matrix @ full.conj().T
        tr = float(np.real(np.trace(m)))
        if tr < _ZERO:
            raise DegenerateStateError(f"no weight on one particle in each of {x!r}, {y!r}")
        d0, d1 = iso0.shape[0], iso1.shape[0]
        if assign == (y, x):
            m = m.reshape(d0, d1, d0, d1).transpose(1, 0, 3, 2).reshape(d0 * d1, d0 * d1)
            d0, d1 = d1, d0
        return DensityMatrix(m / tr, (d0, d1), validate=False)


def dof_trace_out_region(rho, region, dof: int) -> LabeledDensity:
    """
    Trace out DoF ``dof`` of the particle in ``region``.

    Applies the identical-particle DoF trace-out: the projection ``<region, m_dof|``
    contracted on either particle, including the exchange-sign cross terms, summed
    over ``m``. For a state with one particle per region this coincides with the
    ordinary partial trace. The result is renormalized; ``weight`` keeps the trace
    before renormalization.

    ``rho`` may be an :class:`IndistState` or a :class:`LabeledDensity` from an
    earlier trace-out.
    """
    if isinstance(rho, IndistState):
        rho = rho.density()
    return rho.trace_out(region, dof)


###############################################################################


def slocc_project(state: IndistState, s_x, s_y):
    """
    Post-select one particle in ``s_x`` and one in ``s_y``.

    Returns the ordered ``d^n x d^n`` ket (particle at ``s_x`` first) and the
    post-selection probability.
    """
    if s_x == s_y:
        raise ValueError("sLOCC needs two distinct regions")
    rx, ry = state.region_index(s_x), state.region_index(s_y)
    dd = state.dof_dim
    block = state.matrix[rx * dd:(rx + 1) * dd, ry * dd:(ry + 1) * dd]
    prob = 2.0 * float(np.real(np.vdot(block, block)))
    if prob < _ZERO:
        raise DegenerateStateError(f"zero probability of one particle in each of {s_x!r}, {s_y!r}")
    ket = block.reshape(-1) / np.sqrt(prob / 2.0)
    return ket, prob


def pairwise_reduction_indist(state: IndistState, s_x, i: int, s_y, j: int):
    """
    sLOCC-conditional reduced state of DoF ``i`` at ``s_x`` and DoF ``j`` at ``s_y``.

    Returns ``(DensityMatrix (d x d), probability)``.
    """
    for k in (i, j):
        if not 0 <= k < state.n:
            raise ValueError(f"DoF index {k} out of range for n={state.n}")
    ket, prob = slocc_project(state, s_x, s_y)
    dims = (state.d,) * (2 * state.n)
    m = np.outer(ket, ket.conj())
    red = ptrace(m, dims, [i, state.n + j])
    return DensityMatrix(red, (state.d, state.d), validate=False), prob


###############################################################################


@dataclass(frozen=True)
class Deformation:
    """Region-wise unitaries acting on the DoF space ``d^n`` of each region."""

    per_region_unitary: Mapping[str, np.ndarray]

    def __post_init__(self):
        clean = {}
        for r, u in self.per_region_unitary.items():
            u = np.asarray(u, dtype=complex)
            if u.ndim != 2 or u.shape[0] != u.shape[1] or not is_unitary(u):
                raise ValueError(f"deformation for region {r!r} is not unitary")
            clean[r] = u
        object.__setattr__(self, "per_region_unitary", clean)

    def block(self, regions: Sequence[str], dof_dim: int) -> np.ndarray:
        missing = [r for r in regions if r not in self.per_region_unitary]
        if missing:
            raise ValueError(f"deformation has no unitary for regions {missing}")
        for r in regions:
            if self.per_region_unitary[r].shape[0] != dof_dim:
                raise ValueError(f"unitary for {r!r} must be {dof_dim}-dimensional")
        w = np.zeros((len(regions) * dof_dim,) * 2, dtype=complex)
        for k, r in enumerate(regions):
            w[k * dof_dim:(k + 1) * dof_dim, k * dof_dim:(k + 1) * dof_dim] = self.per_region_unitary[r]
        return w


def apply_deformation(state: IndistState, deformation: Deformation) -> IndistState:
    """Rotate each particle's DoFs by the unitary of the region it occupies."""
    w = deformation.block(state.regions, state.dof_dim)
    return IndistState.from_matrix(w @ state.matrix @ w.T, state.eta, state.n, state.d, state.regions)


def deformation_twirl(density: LabeledDensity, samples: int = 10_000, rng=None) -> LabeledDensity:
    """
    Monte Carlo twirl of a symmetric two-region density by deformations.

    The first region receives a Haar unitary ``U`` and the second ``U*``; any
    further regions receive independent Haar unitaries.
    """
    if not density.symmetric:
        raise ValueError("deformation twirl needs an untraced symmetric density")
    rng = as_rng(rng)
    dd = density.d ** density.n
    acc = np.zeros_like(density.matrix)
    for _ in range(samples):
        u = haar_unitary(dd, rng)
        units = {density.regions[0]: u, density.regions[1]: u.conj()}
        for r in density.regions[2:]:
            units[r] = haar_unitary(dd, rng)
        w = Deformation(units).block(density.regions, dd)
        ww = np.kron(w, w)
        acc += ww @ density.matrix @ ww.conj().T
    return LabeledDensity(acc / samples, density.slots, density.regions, density.d, density.n,
                          density.eta, density.weight, density.history)


###############################################################################


def lift_ordered(rho: np.ndarray, d: int, eta: int, n: int = 1,
                 regions: Sequence[str] = DEFAULT_REGIONS) -> LabeledDensity:
    """
    Embed an ordered state (first factor in ``regions[0]``, second in ``regions[1]``)
    into the two-particle (anti)symmetric space.

    The four terms ``J rho J^dag``, its two one-sided exchanges weighted by ``eta``
    and its two-sided exchange add up to a positive operator of unit trace.
    """
    eta = _check_eta(eta)
    dd = d ** n
    regions = tuple(regions)
    if len(regions) != 2:
        raise ValueError("lift uses exactly two regions")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dd * dd, dd * dd):
        raise ValueError(f"ordered state must be {dd * dd}-dimensional")
    sp = 2 * dd
    emb = np.zeros((sp, dd))
    emb[:dd, :] = np.eye(dd)
    emb2 = np.zeros((sp, dd))
    emb2[dd:, :] = np.eye(dd)
    j = np.kron(emb, emb2)
    swap = np.eye(sp * sp).reshape(sp, sp, sp, sp).transpose(0, 1, 3, 2).reshape(sp * sp, sp * sp)
    jr = j @ rho @ j.T
    lifted = 0.5 * (jr + eta * jr @ swap + eta * swap @ jr + swap @ jr @ swap)
    free = Slot(None, tuple(range(n)))
    return LabeledDensity(lifted, (free, free), regions, d, n, eta, 1.0)


def indist_choi(channel, eta: int, regions: Sequence[str] = DEFAULT_REGIONS) -> LabeledDensity:
    """
    Identical-particle Choi state: half of the maximally entangled pair (the particle
    in the second region) is sent through ``channel``, then exchange-symmetrized.
    """
    from .channels import choi_state

    c = np.asarray(choi_state(channel))
    d = channel.d
    out = lift_ordered(c, d, eta, 1, regions)
    tr = float(np.real(np.trace(out.matrix)))
    return LabeledDensity(out.matrix / tr, out.slots, out.regions, d, 1, out.eta, 1.0)
