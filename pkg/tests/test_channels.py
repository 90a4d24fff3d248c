import numpy as np
import pytest

from gsflab.channels import (QuantumChannel, RelationParams, channel_from_state, choi_state,
                             depolarizing, isotropic_residual, isotropic_state, relation_fg,
                             relation_lemmas, twirl_channel, twirl_state)
from gsflab.errors import DomainError
from gsflab.fidelity import fef
from gsflab.linalg import haar_unitary, partial_trace, random_density
from gsflab.teleport import haar_average_channel_fidelity


def phi_plus(d=2):
    v = np.eye(d).reshape(-1) / np.sqrt(d)
    return np.outer(v, v)


def random_isotropic_marginal_state(d, rng):
    """Choi state of a random Kraus channel, so Alice's marginal is I/d by construction."""
    k = int(rng.integers(1, d * d + 1))
    g = rng.normal(size=(k * d, d)) + 1j * rng.normal(size=(k * d, d))
    q, _ = np.linalg.qr(g)
    ch = QuantumChannel([q[i * d:(i + 1) * d] for i in range(k)])
    return choi_state(ch).matrix


def test_channel_validation():
    with pytest.raises(ValueError):
        QuantumChannel([np.eye(2) * 0.5])
    ch = QuantumChannel.unitary(haar_unitary(3, 0))
    assert ch.d == 3


def test_choi_examples():
    assert np.allclose(choi_state(QuantumChannel.identity(2)).matrix, phi_plus())
    for p in (0.0, 0.3, 1.0):
        assert np.allclose(choi_state(depolarizing(p, 2)).matrix, isotropic_state(p, 2).matrix)
    rng = np.random.default_rng(0)
    c = random_isotropic_marginal_state(3, rng)
    assert np.allclose(partial_trace(c, [0], dims=(3, 3)).matrix, np.eye(3) / 3)


def test_choi_round_trip():
    rng = np.random.default_rng(1)
    for d in (2, 3):
        for _ in range(20):
            c = random_isotropic_marginal_state(d, rng)
            back = choi_state(channel_from_state(c)).matrix
            assert np.max(np.abs(back - c)) <= 1e-9
    ch = channel_from_state(phi_plus())
    assert len(ch.kraus) == 1
    k = ch.kraus[0]
    assert np.allclose(k / k[0, 0], np.eye(2))
    iso = isotropic_state(0.4, 2).matrix
    assert np.max(np.abs(choi_state(channel_from_state(iso)).matrix - iso)) <= 1e-9


def test_channel_from_state_domain():
    with pytest.raises(DomainError):
        channel_from_state(np.diag([1.0, 0, 0, 0]))


def test_depolarizing_action():
    rng = np.random.default_rng(2)
    for d in (2, 3):
        for p in (0.0, 0.25, 1.0):
            ch = depolarizing(p, d)
            sigma = random_density(d, rng=rng).matrix
            assert np.max(np.abs(ch(sigma) - (p * sigma + (1 - p) * np.eye(d) / d))) <= 1e-12
    assert np.allclose(depolarizing(0, 2)(np.diag([1.0, 0])), np.eye(2) / 2)
    with pytest.raises(ValueError):
        depolarizing(1.2, 2)


def test_twirl_state():
    tw = twirl_state(phi_plus(), 10_000, rng=0)
    assert np.max(np.abs(tw.matrix - phi_plus())) <= 1e-3
    rng = np.random.default_rng(3)
    for _ in range(3):
        rho = random_density(4, rng=rng).matrix
        c = float(np.real(np.trace(phi_plus() @ rho)))
        res = twirl_state(rho, 10_000, rng=rng, return_delta=True)
        p = (4 * c - 1) / 3
        assert np.max(np.abs(res.state.matrix - isotropic_state(p, 2).matrix)) <= 2e-2
        assert isotropic_residual(res.state.matrix) <= 2e-2
        # isotropic states with negative weight peak on a Bell state orthogonal to Phi+
        assert abs(fef(res.state.matrix).value - max(c, (1 - c) / 3)) <= 1e-2
        assert 0 < res.half_batch_delta < 0.1


def test_twirl_channel():
    ident = twirl_channel(QuantumChannel.identity(2), 2000, rng=0)
    assert np.allclose(choi_state(ident).matrix, phi_plus(), atol=1e-10)
    rng = np.random.default_rng(4)
    ch = QuantumChannel.unitary(haar_unitary(2, rng))
    tw = twirl_channel(ch, 10_000, rng=rng)
    assert isotropic_residual(choi_state(tw).matrix) <= 2e-2
    before = haar_average_channel_fidelity(ch, 4000, seed=5).mean
    after = haar_average_channel_fidelity(tw, 4000, seed=5).mean
    assert abs(before - after) <= 2e-2


def test_twirl_chain_preserves_fef_of_aligned_channel():
    rng = np.random.default_rng(6)
    g = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    q, _ = np.linalg.qr(g)
    ch = QuantumChannel([q[:2], q[2:]])
    choi = choi_state(ch).matrix
    c = np.real(np.trace(phi_plus() @ choi))
    tw = twirl_channel(ch, 10_000, rng=rng)
    assert abs(np.real(np.trace(phi_plus() @ choi_state(tw).matrix)) - c) <= 2e-2
    # undo the output rotation that carries Phi+ onto the best maximally entangled state
    best = fef(choi)
    aligned = QuantumChannel([best.optimal_unitary.conj().T @ k for k in ch.kraus])
    tw = twirl_channel(aligned, 10_000, rng=rng)
    assert abs(fef(choi_state(tw).matrix).value - best.value) <= 2e-2


def test_relation_examples():
    assert relation_fg(1.0, RelationParams(1, 2, 1.0, 1.0)) == pytest.approx(1.0)
    p = RelationParams(2, 2, 1.0, 1.5)
    assert relation_fg(0.5, p) == pytest.approx(0.5)
    assert relation_fg(1.0, p) == pytest.approx(0.75)
    assert relation_fg(1.5, p) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        relation_fg(1.6, p)
    with pytest.raises(ValueError):
        RelationParams(2, 2, 0.4, 1.5)
    with pytest.raises(ValueError):
        RelationParams(2, 2, 1.0, 0.5)


def test_relation_family_endpoints():
    for n, d in ((1, 2), (2, 2), (2, 3), (3, 2)):
        for fmax in (1.0, 0.9):
            params = RelationParams(n, d, fmax, 1 + (n - 1) / d)
            assert relation_lemmas(1.0, params) == pytest.approx((params.f_max, params.F_max))
            assert relation_lemmas(0.0, params) == pytest.approx((1 / d, n / d ** 2))
            prev = -np.inf
            for p in np.linspace(0, 1, 101):
                fg, Fg = relation_lemmas(p, params)
                assert abs(relation_fg(Fg, params) - fg) <= 1e-12
                assert fg >= prev
                prev = fg
    with pytest.raises(ValueError):
        relation_lemmas(-0.1, RelationParams(1, 2, 1.0, 1.0))
