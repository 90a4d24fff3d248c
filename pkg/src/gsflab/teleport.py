"""
Standard teleportation through a two-qudit resource state.

The sender holds the input ``C`` and the first half ``A`` of the resource; the
receiver holds ``B``. A measurement in the generalized Bell basis on ``(C, A)``
with outcome ``(a, b)`` leaves ``W* |psi>`` on ``B`` for the ideal resource,
where ``W = Z^a X^b``; the receiver undoes it with ``W^T``.

Per-sample fidelity of a pure input is the overlap ``<psi|rho_out|psi>``, whose
Haar average for a resource with ``Phi+`` overlap ``F`` is ``(dF + 1)/(d + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import QuantumChannel, weyl
from .linalg import DensityMatrix, as_rng, check_density, dagger, random_ket

DEFAULT_SAMPLES = 4000


def generalized_bell_basis(d: int) -> np.ndarray:
    """Rows are ``(I x Z^a X^b)|Phi+>`` ordered by ``a * d + b``."""
    if d < 2:
        raise ValueError("d must be >= 2")
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return np.array([np.kron(np.eye(d), weyl(d, a, b)) @ phi
                     for a in range(d) for b in range(d)])


@dataclass(frozen=True)
class TeleportOutcome:
    outcome_probs: np.ndarray
    corrected_outputs: tuple[DensityMatrix, ...]
    averaged_output: DensityMatrix


def _side(m: np.ndarray) -> int:
    d = int(round(np.sqrt(m.shape[0])))
    if d * d != m.shape[0]:
        raise ValueError("resource must be a d x d bipartite state")
    return d


def _branches(channel: np.ndarray, rho_in: np.ndarray):
    """Unnormalized corrected receiver states for every Bell outcome."""
    d = _side(channel)
    basis = generalized_bell_basis(d)
    # <beta_k|_{CA} (rho_C x rho_AB) |beta_k>_{CA}, leaving B
    t = channel.reshape(d, d, d, d)  # [a, b, a', b']
    out = []
    for k, beta in enumerate(basis):
        bm = beta.reshape(d, d)  # [c, a]
        sigma = np.einsum("ca,cx,ab yq,xy->bq".replace(" ", ""), bm.conj(), rho_in, t, bm)
        w = weyl(d, *divmod(k, d))
        out.append(w.T @ sigma @ w.conj())
    return out


def teleport(channel, rho_in) -> TeleportOutcome:
    """Run the protocol once on a density-matrix input and return every branch."""
    ch = np.asarray(channel, dtype=complex)
    rin = np.asarray(rho_in, dtype=complex)
    check_density(ch)
    check_density(rin)
    d = _side(ch)
    if rin.shape != (d, d):
        raise ValueError(f"input must be {d}-dimensional")
    branches = _branches(ch, rin)
    probs = np.array([float(np.real(np.trace(s))) for s in branches])
    outs = []
    for p, s in zip(probs, branches):
        outs.append(DensityMatrix(s / p if p > 1e-15 else np.eye(d) / d, (d,), validate=False))
    avg = DensityMatrix(sum(branches), (d,), validate=False)
    return TeleportOutcome(probs, tuple(outs), avg)


def teleport_superoperator(channel) -> np.ndarray:
    """Row-major superoperator of the outcome-averaged teleportation map."""
    ch = np.asarray(channel, dtype=complex)
    d = _side(ch)
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            s[:, i * d + j] = sum(_branches(ch, e)).reshape(-1)
    return s


@dataclass(frozen=True)
class FidelityEstimate:
    mean: float
    stderr: float
    samples: int
    seed: object

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples}


def _haar_overlap_estimate(sup: np.ndarray, d: int, samples: int, seed) -> FidelityEstimate:
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = as_rng(seed)
    psi = random_ket(d, rng, size=samples)
    vec = np.einsum("si,sj->sij", psi, psi.conj()).reshape(samples, -1)
    out = (vec @ sup.T).reshape(samples, d, d)
    vals = np.real(np.einsum("si,sij,sj->s", psi.conj(), out, psi))
    return FidelityEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples)),
                            samples, seed)


def teleport_fidelity(channel, samples: int = DEFAULT_SAMPLES, seed=0) -> FidelityEstimate:
    """Haar-averaged fidelity of teleporting pure inputs through ``channel``."""
    ch = np.asarray(channel, dtype=complex)
    check_density(ch)
    return _haar_overlap_estimate(teleport_superoperator(ch), _side(ch), samples, seed)


def align_resource(channel, restarts: int = 16, seed=0):
    """
    Rotate the receiver's half so the best maximally entangled overlap sits on ``Phi+``.

    Returns ``(aligned_state, fef_result)``; the rotation is the local unitary
    ``U^dag`` where ``(I x U)|Phi+>`` attains the fully entangled fraction.
    """
    from .fidelity import fef

    ch = np.asarray(channel, dtype=complex)
    r = fef(ch, restarts=restarts, seed=seed)
    d = _side(ch)
    loc = np.kron(np.eye(d), dagger(r.optimal_unitary))
    return loc @ ch @ dagger(loc), r


def _pair_channel(state, i, j, regions):
    from .indist import IndistState, pairwise_reduction_indist
    from .multidof import pairwise_reduction

    if isinstance(state, IndistState):
        if regions is None:
            raise ValueError("indistinguishable input needs two designated regions")
        red, _ = pairwise_reduction_indist(state, regions[0], i, regions[1], j)
        return np.asarray(red)
    return np.asarray(pairwise_reduction(state, i, j))


def pair_fidelity(state, i: int, j: int, samples: int = DEFAULT_SAMPLES, seed=0,
                  regions=None, align: bool = True, restarts: int = 16) -> FidelityEstimate:
    """
    Teleportation fidelity through the reduced state of DoF ``i`` (first particle or
    region) and DoF ``j`` (second).

    With ``align`` the receiver first applies the local unitary that maps the
    resource's best maximally entangled component onto the one the Bell measurement
    expects, which is the optimal standard protocol.
    """
    ch = _pair_channel(state, i, j, regions)
    if align:
        ch, _ = align_resource(ch, restarts=restarts, seed=seed)
    return teleport_fidelity(ch, samples, seed=[_seed_int(seed), i, j])


def _seed_int(seed) -> int:
    if seed is None:
        return 0
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    raise TypeError("pair seeds must be integers")


@dataclass(frozen=True)
class FgResult:
    value: float
    argmax_pair: tuple[int, int]
    pair_estimates: tuple[tuple[FidelityEstimate, ...], ...]

    def __iter__(self):
        return iter((self.value, self.argmax_pair))

    def to_dict(self) -> dict:
        best = self.pair_estimates[self.argmax_pair[0]][self.argmax_pair[1]]
        return {
            "f_g": self.value,
            "stderr": best.stderr,
            "argmax_pair": [self.argmax_pair[0] + 1, self.argmax_pair[1] + 1],
            "pair_means": [[e.mean for e in row] for row in self.pair_estimates],
            "pair_stderr": [[e.stderr for e in row] for row in self.pair_estimates],
            "samples": best.samples,
        }


def f_g(state, samples: int = DEFAULT_SAMPLES, seed=0, regions=None,
        restarts: int = 16) -> FgResult:
    """Generalized teleportation fidelity: the best pair channel's average fidelity."""
    from .indist import IndistState

    if isinstance(state, IndistState):
        na = nb = state.n
    else:
        na, nb = state.n_a, state.n_b
    rows = []
    best, arg = -np.inf, (0, 0)
    for i in range(na):
        row = []
        for j in range(nb):
            est = pair_fidelity(state, i, j, samples, seed, regions, restarts=restarts)
            row.append(est)
            if est.mean > best:
                best, arg = est.mean, (i, j)
        rows.append(tuple(row))
    return FgResult(float(best), arg, tuple(rows))


def haar_average_channel_fidelity(channel: QuantumChannel, samples: int = DEFAULT_SAMPLES,
                                  seed=0) -> FidelityEstimate:
    """Mean of ``<phi|L(|phi><phi|)|phi>`` over Haar pure inputs."""
    return _haar_overlap_estimate(channel.superoperator(), channel.d, samples, seed)
