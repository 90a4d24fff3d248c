"""
Worked examples: a two-photon polarization/OAM state, the all-pairs-maximally-
entangled contract for identical particles, and the private-query states with
their key generation, query and self-testing games.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import cos, pi, sin, sqrt

import numpy as np

from .errors import ContractError, DegenerateStateError
from .fidelity import DEFAULT_RESTARTS, fef, gsf, kay_monogamy_check
from .indist import IndistState, IndistTerm
from .linalg import as_rng
from .multidof import DistState, DofLayout, build_dist_state, dist_state_from_ket, pairwise_reduction

H, V = 0, 1
OAM_PLUS, OAM_MINUS = 0, 1


@dataclass(frozen=True)
class OpticalCircuitParams:
    theta: float
    phi: float = 0.0
    l: int = 1

    @property
    def degenerate(self) -> bool:
        """True at the product-state endpoints ``theta`` in {0, pi/2}."""
        return not 0 < self.theta < pi / 2


def optical_circuit_state(params: OpticalCircuitParams | float, phi: float = 0.0) -> DistState:
    """
    ``cos(theta)|H,+l>|V,-l> + e^{i phi} sin(theta)|V,-l>|H,+l>``.

    Factor order is ``(A_pol, A_oam, B_pol, B_oam)`` with ``H=0, V=1`` and
    ``+l=0, -l=1``.
    """
    if not isinstance(params, OpticalCircuitParams):
        params = OpticalCircuitParams(float(params), phi)
    t = params.theta
    amps = [((H, OAM_PLUS, V, OAM_MINUS), cos(t)),
            ((V, OAM_MINUS, H, OAM_PLUS), np.exp(1j * params.phi) * sin(t))]
    return build_dist_state(DofLayout(2, 2), [(k, a) for k, a in amps if abs(a) > 0])


###############################################################################


def hyperentangled_candidate(d: int = 2) -> IndistState:
    """
    Two bosons, two DoFs, one particle per region, each DoF paired with its
    counterpart: ``(1/d) sum_{a,b} |s1 ab, s2 ab>``. Only matched DoF pairs are
    maximally entangled here.
    """
    terms = [IndistTerm("s1", (a, b), "s2", (a, b), 1.0 / d) for a in range(d) for b in range(d)]
    return IndistState(terms, +1, 2, d)


def verify_all_pairs_mes(state: IndistState, regions=("s1", "s2"), tol: float = 1e-6,
                         restarts: int = DEFAULT_RESTARTS, seed=0):
    """
    Check that every sLOCC pairwise reduction is maximally entangled.

    Returns the :class:`~gsflab.fidelity.GsfReport`; raises ``ContractError`` with
    the pair matrix in the message when any pair falls short.
    """
    try:
        rep = gsf(state, regions, restarts=restarts, seed=seed)
    except DegenerateStateError as exc:
        raise ContractError(f"sLOCC reduction degenerate: {exc}") from exc
    pf = rep.pair_fef
    if np.any(np.isnan(pf)) or np.max(np.abs(pf - 1.0)) > tol:
        raise ContractError(
            "not every DoF pair is maximally entangled: pair FEF matrix "
            f"{np.round(pf, 6).tolist()}, F_g={rep.value:.6f} (target {state.n})")
    return rep


def hyper_hybrid_state(terms=None, eta: int = +1, n: int = 2, d: int = 2,
                       regions=("s1", "s2")) -> IndistState:
    """
    Two identical particles whose four DoF pairs are all maximally entangled.

    No amplitudes are built in: callers must supply ``terms``. The constructor
    then verifies the contract (every pairwise FEF equal to 1, F_g = 2) and raises
    ``ContractError`` with diagnostics otherwise. Under one-particle-per-region
    post-selection the conditional state lives on two distinguishable DoF registers,
    where monogamy caps F_g at 1 + 1/2, so the contract cannot be met in this
    framework.
    """
    if terms is None:
        raise ContractError(
            "no validated amplitudes for the all-pairs-maximally-entangled state are "
            "available; supply terms explicitly to have them checked")
    state = IndistState(terms, eta, n, d, regions)
    verify_all_pairs_mes(state, regions)
    return state


def kay_row_violation(d: int = 2) -> tuple[float, float, bool]:
    """Monogamy check on a row with two unit singlet fractions."""
    return kay_monogamy_check([1.0, 1.0], d)


###############################################################################


def _cs(theta: float) -> tuple[float, float]:
    return cos(theta / 2), sin(theta / 2)


def _check_theta(theta: float, closed: bool = True):
    lo_ok = theta >= 0 if closed else theta > 0
    hi_ok = theta <= pi / 2 if closed else theta < pi / 2
    if not (lo_ok and hi_ok):
        raise ValueError(f"theta={theta} outside the allowed range (0, pi/2)")


def qpq_phis(theta: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = _cs(theta)
    return np.array([c, s], dtype=complex), np.array([c, -s], dtype=complex)


def qpq_state(theta: float) -> np.ndarray:
    """``(|0>_B|phi0>_A + |1>_B|phi1>_A)/sqrt 2`` as a 4-vector ordered ``(B, A)``."""
    _check_theta(theta)
    p0, p1 = qpq_phis(theta)
    return (np.kron([1, 0], p0) + np.kron([0, 1], p1)) / sqrt(2)


def qpq_density(theta: float) -> np.ndarray:
    v = qpq_state(theta)
    return np.outer(v, v.conj())


def qpq_ancilla_particle(theta: float) -> np.ndarray:
    """Three-qubit ket ordered ``(B, A, X)``."""
    _check_theta(theta)
    c, s = _cs(theta)
    ket = np.zeros(8, dtype=complex)
    ket[0b000] += c
    ket[0b010] += s
    ket[0b111] += c
    ket[0b100] -= s
    return ket / sqrt(2)


def qpq_ancilla_dof(theta: float) -> DistState:
    """
    The same amplitudes with the ancilla as a second DoF of A.

    First particle is B with DoFs ``(B, pad)`` where ``pad`` is fixed at ``|0>``;
    second particle is A with DoFs ``(A_1, A_2)``.
    """
    k3 = qpq_ancilla_particle(theta).reshape(2, 2, 2)
    ket = np.zeros((2, 2, 2, 2), dtype=complex)
    ket[:, 0, :, :] = k3
    return dist_state_from_ket(ket.reshape(-1), 2, 2, 2)


def qpq_gsf_closed_forms(theta: float) -> tuple[float, float]:
    """``(1/2 + c^2, 1/2 + c^2 + 2cs)`` with ``c, s = cos, sin of theta/2``."""
    _check_theta(theta)
    c, s = _cs(theta)
    return 0.5 + c * c, 0.5 + c * c + 2 * c * s


def qpq_numeric_gsf(theta: float, restarts: int = DEFAULT_RESTARTS, seed=0) -> tuple[float, float]:
    """
    Singlet-fraction sums over the B row: ``sum_j FEF(rho_{B, j})`` with ``j``
    running over A's register and the ancilla (kept until the pair reduction).
    """
    particle = dist_state_from_ket(qpq_ancilla_particle(theta), 2, 1, 2)
    dof = qpq_ancilla_dof(theta)
    sums = []
    for st in (particle, dof):
        sums.append(sum(fef(pairwise_reduction(st, 0, j), restarts=restarts, seed=seed).value
                        for j in range(st.n_b)))
    return float(sums[0]), float(sums[1])


FIG5_COLUMNS = ("theta_deg", "Fg_ancilla_particle", "Fg_ancilla_dof",
                "Fg_numeric_particle", "Fg_numeric_dof")


def fig5_table(steps: int = 90, numeric: bool = True, restarts: int = DEFAULT_RESTARTS,
               seed=0) -> list[dict]:
    """Closed forms (and optionally numeric sums) at ``theta = 90 k / steps`` degrees, 0 < k < steps."""
    if steps < 2:
        raise ValueError("need steps >= 2")
    rows = []
    for k in range(1, steps):
        deg = 90.0 * k / steps
        th = np.deg2rad(deg)
        a, b = qpq_gsf_closed_forms(th)
        row = {"theta_deg": deg, "Fg_ancilla_particle": a, "Fg_ancilla_dof": b}
        if numeric:
            row["Fg_numeric_particle"], row["Fg_numeric_dof"] = qpq_numeric_gsf(th, restarts, seed)
        else:
            row["Fg_numeric_particle"] = row["Fg_numeric_dof"] = float("nan")
        rows.append(row)
    return rows


###############################################################################


@dataclass(frozen=True)
class QpqParams:
    theta: float
    key_length: int
    seed: int = 0

    def __post_init__(self):
        _check_theta(self.theta, closed=False)
        if self.key_length < 1:
            raise ValueError("key length must be >= 1")


@dataclass
class KeyStats:
    bob_key: np.ndarray
    alice_positions: np.ndarray
    alice_values: np.ndarray
    conclusive_rate: float
    mismatches: int


def _perp(v: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def qpq_key_generation(params: QpqParams) -> KeyStats:
    """
    Simulate the key distribution: B measures in the computational basis; A picks
    the ``phi0`` or ``phi1`` basis at random. Outcome ``phi0_perp`` tells A that
    B holds 1, outcome ``phi1_perp`` that B holds 0.
    """
    rng = as_rng(params.seed)
    N = params.key_length
    p0, p1 = qpq_phis(params.theta)
    phis = (p0, p1)
    # joint[basis, bob, alice_outcome] with alice_outcome 0 = phi_basis, 1 = its perp
    joint = np.zeros((2, 2, 2))
    for c in (0, 1):
        basis = (phis[c], _perp(phis[c]))
        for b in (0, 1):
            for o in (0, 1):
                joint[c, b, o] = 0.5 * abs(np.vdot(basis[o], phis[b])) ** 2
    choice = rng.integers(0, 2, size=N)
    u = rng.random(N)
    flat = joint.reshape(2, 4)
    cdf = np.cumsum(flat, axis=1)
    idx = np.minimum((u[:, None] > cdf[choice]).sum(axis=1), 3)
    bob = (idx // 2).astype(np.uint8)
    outcome = idx % 2
    conclusive = outcome == 1
    inferred = np.where(choice == 0, 1, 0).astype(np.uint8)
    pos = np.nonzero(conclusive)[0]
    vals = inferred[pos]
    mism = int(np.sum(vals != bob[pos]))
    return KeyStats(bob, pos, vals, float(conclusive.mean()), mism)


def qpq_shifted_key(bob_key, s: int) -> np.ndarray:
    k = np.asarray(bob_key, dtype=np.uint8)
    return np.roll(k, -s)


def qpq_encrypt_database(bob_key, s: int, database) -> np.ndarray:
    """One-time pad of ``database`` with the key shifted so that entry ``k`` uses ``K[k+s]``."""
    db = np.asarray(database, dtype=np.uint8)
    if db.shape != np.shape(bob_key):
        raise ValueError("database and key lengths differ")
    return db ^ qpq_shifted_key(bob_key, s)


def qpq_private_query(bob_key, j: int, i: int, database) -> int:
    """A knows key bit ``j`` and wants entry ``i``: returns the decrypted bit."""
    key = np.asarray(bob_key, dtype=np.uint8)
    N = len(key)
    if not (0 <= i < N and 0 <= j < N):
        raise ValueError(f"indices must lie in [0, {N})")
    enc = qpq_encrypt_database(key, j - i, database)
    return int(enc[i] ^ key[j])


###############################################################################


@dataclass(frozen=True)
class GameResult:
    trials: int
    wins: int
    empirical: float
    analytic: float
    born: float
    flagged: bool = field(default=False)

    def to_dict(self) -> dict:
        return {"trials": self.trials, "wins": self.wins, "empirical": self.empirical,
                "analytic": self.analytic, "born": self.born, "flagged": self.flagged}


def _game(trials, wins, analytic, born):
    emp = wins / trials
    sigma = sqrt(max(analytic * (1 - analytic), 0.0) / trials)
    flagged = abs(emp - analytic) > 4 * sigma + 1e-12
    if flagged:
        warnings.warn(f"empirical {emp:.4f} differs from analytic {analytic:.4f} by more than 4 sigma",
                      stacklevel=3)
    return GameResult(trials, wins, emp, analytic, born, flagged)


def chsh_analytic(theta: float, psi1: float, psi2: float) -> float:
    return (sin(theta) * (sin(psi1) + sin(psi2)) + cos(psi1) - cos(psi2)) / 8 + 0.5


def _basis_from_angle(a: float):
    v = np.array([cos(a / 2), sin(a / 2)], dtype=complex)
    return v, _perp(v)


def chsh_probabilities(theta: float, psi1: float, psi2: float) -> np.ndarray:
    """``P[x, y, a, b]`` on the private-query state (B measured first)."""
    state = qpq_state(theta) if 0 <= theta <= pi / 2 else None
    if state is None:
        raise ValueError("theta outside [0, pi/2]")
    bob = {0: (np.array([1, 0], complex), np.array([0, 1], complex)),
           1: (np.array([1, 1], complex) / sqrt(2), np.array([1, -1], complex) / sqrt(2))}
    alice = {0: _basis_from_angle(psi1), 1: _basis_from_angle(psi2)}
    p = np.zeros((2, 2, 2, 2))
    for x in (0, 1):
        for y in (0, 1):
            for a in (0, 1):
                for b in (0, 1):
                    p[x, y, a, b] = abs(np.vdot(np.kron(bob[x][a], alice[y][b]), state)) ** 2
    return p


def chsh_local_test(theta: float, psi1: float, psi2: float, trials: int = 100_000,
                    rng=None) -> GameResult:
    """Sampled CHSH-type test with win condition ``a xor b = x and y``."""
    rng = as_rng(rng)
    p = chsh_probabilities(theta, psi1, psi2)
    win = np.array([[sum(p[x, y, a, b] for a in (0, 1) for b in (0, 1) if (a ^ b) == (x & y))
                     for y in (0, 1)] for x in (0, 1)])
    x = rng.integers(0, 2, trials)
    y = rng.integers(0, 2, trials)
    flat = p.reshape(2, 2, 4)
    cdf = np.cumsum(flat, axis=2)[x, y]
    idx = np.minimum((rng.random(trials)[:, None] > cdf).sum(axis=1), 3)
    a, b = idx // 2, idx % 2
    wins = int(np.sum((a ^ b) == (x & y)))
    return _game(trials, wins, chsh_analytic(theta, psi1, psi2), float(win.mean()))


def chsh_grid_max(points: int = 91) -> tuple[float, tuple[float, float, float]]:
    """Maximize the analytic success probability over a uniform angle grid."""
    th = np.linspace(0, pi / 2, points)
    ps = np.linspace(-pi, pi, 2 * points - 1)
    T, P1, P2 = np.meshgrid(th, ps, ps, indexing="ij")
    val = (np.sin(T) * (np.sin(P1) + np.sin(P2)) + np.cos(P1) - np.cos(P2)) / 8 + 0.5
    k = np.unravel_index(np.argmax(val), val.shape)
    return float(val[k]), (float(T[k]), float(P1[k]), float(P2[k]))


GHZ_INPUTS = ((0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0))


def ghz_analytic(theta: float) -> float:
    return (3 + cos(theta)) / 4


def ghz_probabilities(theta: float) -> np.ndarray:
    """``P[input_index, output_bits]`` for X (bit 0) / Y (bit 1) measurements."""
    state = qpq_ancilla_particle(theta)
    xb = (np.array([1, 1], complex) / sqrt(2), np.array([1, -1], complex) / sqrt(2))
    yb = (np.array([1, 1j], complex) / sqrt(2), np.array([1, -1j], complex) / sqrt(2))
    p = np.zeros((4, 8))
    for k, inp in enumerate(GHZ_INPUTS):
        bases = [xb if q == 0 else yb for q in inp]
        for out in range(8):
            bits = [(out >> (2 - q)) & 1 for q in range(3)]
            vec = np.kron(np.kron(bases[0][bits[0]], bases[1][bits[1]]), bases[2][bits[2]])
            p[k, out] = abs(np.vdot(vec, state)) ** 2
    return p


def _ghz_win(k: int, out: int) -> bool:
    even = bin(out).count("1") % 2 == 0
    return even == (k == 0)


def pseudo_telepathy_test(theta: float, trials: int = 100_000, rng=None) -> GameResult:
    """Three-player parity game on the ancilla-assisted state."""
    if not 0 <= theta < pi / 2:
        raise ValueError("theta must lie in [0, pi/2)")
    rng = as_rng(rng)
    p = ghz_probabilities(theta)
    born = float(np.mean([sum(p[k, o] for o in range(8) if _ghz_win(k, o)) for k in range(4)]))
    ks = rng.integers(0, 4, trials)
    cdf = np.cumsum(p, axis=1)[ks]
    outs = np.minimum((rng.random(trials)[:, None] > cdf).sum(axis=1), 7)
    parity_even = np.array([bin(o).count("1") % 2 == 0 for o in range(8)])[outs]
    wins = int(np.sum(parity_even == (ks == 0)))
    return _game(trials, wins, ghz_analytic(theta), born)


def ghz_discrepancy_table(thetas, trials: int = 20_000, seed=0) -> list[dict]:
    rows = []
    for k, th in enumerate(thetas):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r = pseudo_telepathy_test(th, trials, rng=[int(seed), k])
        rows.append({"theta": th, "analytic": r.analytic, "born": r.born,
                     "empirical": r.empirical, "difference": r.empirical - r.analytic,
                     "flagged": r.flagged})
    return rows
