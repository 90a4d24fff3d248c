"""
Fully entangled fraction, the generalized singlet fraction and monogamy bounds.

Every maximally entangled state of two qudits can be written ``(I x U)|Phi+>``,
so the fully entangled fraction is a maximization over a single ``U(d)``. We run a
monotone polar-decomposition ascent on the unitary group from several starting points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import isqrt

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .errors import DegenerateStateError
from .linalg import as_rng, check_density, haar_unitary

DEFAULT_RESTARTS = 16


@dataclass(frozen=True)
class FefResult:
    value: float
    optimal_unitary: np.ndarray
    restarts_used: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "optimal_unitary": _cmat_to_json(self.optimal_unitary),
        }


def _cmat_to_json(m):
    m = np.asarray(m)
    return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}


def _side(rho: np.ndarray) -> int:
    d = isqrt(rho.shape[0])
    if d * d != rho.shape[0] or d < 2:
        raise ValueError(f"expected a d x d bipartite state, got side {rho.shape[0]}")
    return d


def mes_overlap(rho: np.ndarray, u: np.ndarray) -> float:
    """``<Phi_U| rho |Phi_U>`` with ``|Phi_U> = (I x U)|Phi+>``."""
    d = u.shape[0]
    x = u.T.reshape(-1)
    return float(np.real(np.vdot(x, rho @ x))) / d


def mes_overlaps(rho: np.ndarray, us: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mes_overlap` over a stack of unitaries."""
    d = us.shape[-1]
    xs = np.swapaxes(us, -1, -2).reshape(len(us), -1)
    return np.real(np.einsum("ki,ij,kj->k", xs.conj(), rho, xs)) / d


def _ascend(rho, u, tol, max_iter):
    # The overlap is a convex quadratic in U, so it lies above its tangent plane.
    # Maximizing that linear minorant over U(d) is solved by the polar factor,
    # which gives a monotone ascent step.
    d = u.shape[0]
    f = mes_overlap(rho, u)
    for _ in range(max_iter):
        g = (rho @ u.T.reshape(-1)).reshape(d, d).T
        w, _, vh = np.linalg.svd(g)
        cand = w @ vh
        fc = mes_overlap(rho, cand)
        if fc > f:
            u, f, gain = cand, fc, fc - f
        else:
            gain = 0.0
        if gain < tol:
            return u, f, True
    return u, f, False


def fef(rho, restarts: int = DEFAULT_RESTARTS, seed=0, tol: float = 1e-12,
        max_iter: int = 500) -> FefResult:
    """
    Fully entangled fraction ``max_psi <psi|rho|psi>`` over maximally entangled ``psi``.

    The search starts from the identity and from ``restarts`` Haar-random unitaries;
    results are deterministic for a fixed ``seed``. ``converged`` refers to the
    start that produced the reported value.

    Raises
    ------
    DomainError
        If ``rho`` is not a valid density matrix.
    """
    m = np.asarray(rho, dtype=complex)
    check_density(m)
    d = _side(m)
    rng = as_rng(seed)
    starts = [np.eye(d, dtype=complex)]
    if restarts:
        starts.extend(haar_unitary(d, rng, size=restarts))
    best_u, best_f, best_conv = None, -np.inf, False
    for u0 in starts:
        u, f, conv = _ascend(m, u0, tol, max_iter)
        if f > best_f:
            best_u, best_f, best_conv = u, f, conv
    return FefResult(float(best_f), best_u, len(starts), bool(best_conv))


def fef_bruteforce_oracle(rho, samples: int = 10_000, rng=None, refine: bool = True) -> float:
    """
    Independent lower estimate of the fully entangled fraction.

    Evaluates the overlap on ``samples`` Haar unitaries, then runs one derivative-free
    (Nelder-Mead) refinement from the best sample.
    """
    m = np.asarray(rho, dtype=complex)
    d = _side(m)
    if d > 4:
        raise ValueError("brute-force oracle is limited to d <= 4")
    rng = as_rng(rng)
    best_val, best_u = -np.inf, None
    remaining = samples
    while remaining > 0:
        batch = min(remaining, 4096)
        us = haar_unitary(d, rng, size=batch)
        vals = mes_overlaps(m, us)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_u = float(vals[k]), us[k]
        remaining -= batch
    if not refine:
        return best_val

    iu = np.triu_indices(d, 1)

    def hermitian(params):
        h = np.zeros((d, d), dtype=complex)
        h[np.diag_indices(d)] = params[:d]
        k = len(iu[0])
        h[iu] = params[d:d + k] + 1j * params[d + k:]
        return h + np.triu(h, 1).conj().T

    def neg(params):
        return -mes_overlap(m, best_u @ expm(1j * hermitian(params)))

    res = minimize(neg, np.zeros(d * d), method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000 * d})
    return max(best_val, float(-res.fun))


###############################################################################


@dataclass
class GsfReport:
    """
    Pairwise fully entangled fractions and the generalized singlet fraction.

    ``pair_fef[i, j]`` pairs DoF ``i`` of the first particle (or region) with DoF
    ``j`` of the second. Degenerate entries are NaN and excluded from the sums.
    """

    pair_fef: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    value: float
    argmax: tuple[str, int]
    post_select_probs: np.ndarray | None = None
    pair_results: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = {
            "F_g": self.value,
            "argmax": {"axis": self.argmax[0], "index": self.argmax[1] + 1},
            "pair_fef": _nan_to_none(self.pair_fef),
            "row_sums": _nan_to_none(self.row_sums),
            "col_sums": _nan_to_none(self.col_sums),
        }
        if self.post_select_probs is not None:
            out["post_select_probs"] = _nan_to_none(self.post_select_probs)
        return out


def _nan_to_none(a):
    a = np.asarray(a, dtype=float)
    return np.where(np.isnan(a), None, a).tolist()


def gsf_from_pairs(pair_fef: np.ndarray, post_select_probs=None, pair_results=()) -> GsfReport:
    """Assemble a :class:`GsfReport` from an already computed pair matrix."""
    pf = np.asarray(pair_fef, dtype=float)
    rows = np.nansum(pf, axis=1)
    cols = np.nansum(pf, axis=0)
    i, j = int(np.argmax(rows)), int(np.argmax(cols))
    if rows[i] >= cols[j]:
        value, arg = float(rows[i]), ("row", i)
    else:
        value, arg = float(cols[j]), ("col", j)
    return GsfReport(pf, rows, cols, value, arg, post_select_probs, list(pair_results))


def gsf(state, regions=None, restarts: int = DEFAULT_RESTARTS, seed=0,
        tol: float = 1e-12) -> GsfReport:
    """
    Generalized singlet fraction of a two-particle multi-DoF state.

    Each pair ``(i, j)`` is maximized independently, so row and column sums of the
    pair matrix are the per-DoF maxima. For an :class:`~gsflab.indist.IndistState`,
    ``regions`` names the two spatial regions and the pair states are the
    sLOCC-conditional reductions; their post-selection probabilities are reported
    but do not weight the sums.
    """
    from .indist import IndistState, pairwise_reduction_indist
    from .multidof import pairwise_reduction

    if isinstance(state, IndistState):
        if regions is None or len(regions) != 2:
            raise ValueError("indistinguishable input needs two designated regions")
        na = nb = state.n
    else:
        na, nb = state.n_a, state.n_b
    pf = np.full((na, nb), np.nan)
    probs = np.full((na, nb), np.nan) if isinstance(state, IndistState) else None
    results = []
    for i in range(na):
        for j in range(nb):
            if isinstance(state, IndistState):
                try:
                    red, prob = pairwise_reduction_indist(state, regions[0], i, regions[1], j)
                except DegenerateStateError as exc:
                    warnings.warn(f"pair ({i + 1},{j + 1}) excluded: {exc}", stacklevel=2)
                    results.append(None)
                    continue
                probs[i, j] = prob
            else:
                red = pairwise_reduction(state, i, j)
            r = fef(red, restarts=restarts, seed=seed, tol=tol)
            pf[i, j] = r.value
            results.append(r)
    return gsf_from_pairs(pf, probs, results)


def kay_monogamy_check(fefs, d: int, tol: float = 1e-9):
    """
    Monogamy of the singlet fraction for one system shared with ``len(fefs)`` others.

    Returns ``(lhs, rhs, satisfied)`` with ``lhs = sum F_j`` and
    ``rhs = (d-1)/d + (sum sqrt F_j)^2 / (n + d - 1)``.
    """
    f = np.asarray(fefs, dtype=float)
    if np.any(f < -tol) or np.any(f > 1 + tol):
        raise ValueError("each fully entangled fraction must lie in [0, 1]")
    f = np.clip(f, 0.0, 1.0)
    n = len(f)
    lhs = float(np.sum(f))
    rhs = (d - 1) / d + float(np.sum(np.sqrt(f))) ** 2 / (n + d - 1)
    return lhs, rhs, lhs <= rhs + tol


def gsf_upper_bound(n: int, d: int) -> float:
    """Upper bound ``1 + (n-1)/d`` for distinguishable particles."""
    if n < 1 or d < 2:
        raise ValueError("need n >= 1 and d >= 2")
    return 1 + (n - 1) / d
