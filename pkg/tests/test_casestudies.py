from math import pi, sqrt

import numpy as np
import pytest

from gsflab.casestudies import (GHZ_INPUTS, OpticalCircuitParams, QpqParams, chsh_analytic,
                                chsh_grid_max, chsh_local_test, chsh_probabilities,
                                fig5_table, ghz_analytic, ghz_discrepancy_table,
                                hyper_hybrid_state, hyperentangled_candidate, kay_row_violation,
                                optical_circuit_state, pseudo_telepathy_test, qpq_ancilla_dof,
                                qpq_ancilla_particle, qpq_encrypt_database, qpq_gsf_closed_forms,
                                qpq_key_generation, qpq_numeric_gsf, qpq_private_query,
                                qpq_shifted_key, qpq_state, verify_all_pairs_mes)
from gsflab.errors import ContractError
from gsflab.fidelity import fef, gsf
from gsflab.indist import IndistTerm
from gsflab.multidof import dof_trace_out, pairwise_reduction

GRID = np.linspace(0.01, pi / 2 - 0.01, 12)


def test_optical_state():
    assert OpticalCircuitParams(0.0).degenerate and not OpticalCircuitParams(0.3).degenerate
    s = optical_circuit_state(OpticalCircuitParams(pi / 4, 0.7))
    assert np.isclose(np.trace(s.matrix).real, 1)
    pol = dof_trace_out(dof_trace_out(s, "A", 1), "B", 1).matrix
    assert np.allclose(np.diag(pol).real, [0, 0.5, 0.5, 0])
    for i in range(2):
        for j in range(2):
            assert abs(fef(pairwise_reduction(s, i, j)).value - 0.5) <= 1e-6


def test_optical_gsf_over_grid():
    for th in list(GRID) + [1e-4]:
        rep = gsf(optical_circuit_state(th), restarts=4)
        assert abs(rep.value - 1) <= 1e-6
        assert np.all(rep.pair_fef <= 0.5 + 1e-6)


def test_hyper_hybrid_contract_fails_loudly():
    with pytest.raises(ContractError):
        hyper_hybrid_state()
    with pytest.raises(ContractError) as exc:
        hyper_hybrid_state(hyperentangled_candidate().terms)
    assert "pair FEF" in str(exc.value)
    rep = gsf(hyperentangled_candidate(), ("s1", "s2"))
    assert abs(rep.value - 1.25) <= 1e-6


def test_contract_check_rejects_localized_state():
    terms = [IndistTerm("s1", (0, 0), "s1", (1, 1), 1.0)]
    with pytest.raises(ContractError), pytest.warns(UserWarning, match="excluded"):
        hyper_hybrid_state(terms)


def test_verify_accepts_single_dof_mes():
    from gsflab.indist import indist_mes
    rep = verify_all_pairs_mes(indist_mes(2, 1))
    assert abs(rep.value - 1) <= 1e-6


def test_kay_row():
    lhs, rhs, ok = kay_row_violation()
    assert lhs == 2 and rhs == pytest.approx(0.5 + 4 / 3) and not ok


def test_qpq_states():
    v = qpq_state(1e-9)
    assert np.allclose(v, np.array([1, 0, 1, 0]) / sqrt(2), atol=1e-8)
    for th in GRID:
        assert abs(np.linalg.norm(qpq_state(th)) - 1) <= 1e-12
        k3 = qpq_ancilla_particle(th)
        assert abs(np.linalg.norm(k3) - 1) <= 1e-12
        dof = qpq_ancilla_dof(th)
        assert abs(np.trace(dof.matrix).real - 1) <= 1e-12
        # the padded DoF is |0>, so the 16-dim ket restricted to it equals the 3-qubit ket
        w, vecs = np.linalg.eigh(dof.matrix)
        ket = vecs[:, -1].reshape(2, 2, 2, 2)[:, 0].reshape(-1)
        assert abs(abs(np.vdot(ket, k3)) - 1) <= 1e-12
    with pytest.raises(ValueError):
        qpq_state(2.0)


def test_qpq_closed_forms():
    a, b = qpq_gsf_closed_forms(1e-12)
    assert a == pytest.approx(1.5) and b == pytest.approx(1.5)
    a, b = qpq_gsf_closed_forms(pi / 3)
    assert a == pytest.approx(1.25) and b == pytest.approx(1.25 + sqrt(3) / 2)
    prev = np.inf
    for th in GRID:
        a, b = qpq_gsf_closed_forms(th)
        assert a < prev and b > a
        prev = a


def test_qpq_numeric_track_is_reported():
    num = qpq_numeric_gsf(pi / 3, restarts=4)
    assert len(num) == 2 and all(np.isfinite(num))
    rows = fig5_table(steps=6, numeric=True, restarts=2)
    assert len(rows) == 5
    assert set(rows[0]) == {"theta_deg", "Fg_ancilla_particle", "Fg_ancilla_dof",
                            "Fg_numeric_particle", "Fg_numeric_dof"}
    rows = fig5_table(steps=6, numeric=False)
    assert np.isnan(rows[0]["Fg_numeric_dof"])
    with pytest.raises(ValueError):
        fig5_table(steps=1)


def test_key_generation():
    stats = qpq_key_generation(QpqParams(pi / 5, 100_000, seed=1))
    assert stats.mismatches == 0
    assert 0 < stats.conclusive_rate < 1
    again = qpq_key_generation(QpqParams(pi / 5, 100_000, seed=1))
    assert np.array_equal(stats.bob_key, again.bob_key)
    assert np.array_equal(stats.alice_positions, again.alice_positions)
    rates = [qpq_key_generation(QpqParams(t, 20_000, seed=2)).conclusive_rate
             for t in (0.3, 0.8, 1.3, pi / 2 - 1e-3)]
    assert rates == sorted(rates)
    with pytest.raises(ValueError):
        QpqParams(0.0, 10)
    with pytest.raises(ValueError):
        QpqParams(0.5, 0)


def test_private_query():
    rng = np.random.default_rng(3)
    key = qpq_key_generation(QpqParams(pi / 4, 64, seed=3)).bob_key
    hits = 0
    others = 0
    for _ in range(1000):
        db = rng.integers(0, 2, 64).astype(np.uint8)
        i, j = (int(x) for x in rng.integers(0, 64, 2))
        assert qpq_private_query(key, j, i, db) == db[i]
        enc = qpq_encrypt_database(key, j - i, db)
        k = (i + 1) % 64
        hits += int((enc[k] ^ key[j]) == db[k])
        others += 1
    assert abs(hits / others - 0.5) <= 0.1
    db = np.zeros(64, dtype=np.uint8)
    assert np.array_equal(qpq_encrypt_database(key, 0, db), key)
    assert np.array_equal(qpq_shifted_key(key, 0), key)
    with pytest.raises(ValueError):
        qpq_private_query(key, 0, 64, db)
    with pytest.raises(ValueError):
        qpq_encrypt_database(key, 0, db[:10])


def test_chsh():
    best, (th, p1, p2) = chsh_grid_max()
    assert round(best, 2) == 0.85
    assert chsh_analytic(0.4, 0.0, 0.0) == pytest.approx(0.5)
    p = chsh_probabilities(th, p1, p2)
    assert np.allclose(p.sum(axis=(2, 3)), 1)
    res = chsh_local_test(th, p1, p2, trials=100_000, rng=0)
    assert res.born == pytest.approx(res.analytic, abs=1e-12)
    sigma = sqrt(res.analytic * (1 - res.analytic) / res.trials)
    assert abs(res.empirical - res.analytic) <= 4 * sigma
    assert not res.flagged


def test_ghz():
    assert len(GHZ_INPUTS) == 4 and all(sum(x) % 2 == 0 for x in GHZ_INPUTS)
    res = pseudo_telepathy_test(0.0, trials=100_000, rng=0)
    assert res.analytic == 1 and res.wins == res.trials
    assert ghz_analytic(pi / 3) == pytest.approx(0.875)
    vals = [ghz_analytic(t) for t in GRID]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        pseudo_telepathy_test(pi / 2)
    table = ghz_discrepancy_table([0.0, pi / 6, pi / 3], trials=5000, seed=1)
    assert [r["analytic"] for r in table] == pytest.approx([1.0, ghz_analytic(pi / 6), 0.875])
    assert all("difference" in r for r in table)


def test_ghz_interior_angle_matches_born_rule():
    res = pseudo_telepathy_test(pi / 3, trials=100_000, rng=4)
    assert res.born == pytest.approx(res.analytic, abs=1e-12)
    assert not res.flagged
