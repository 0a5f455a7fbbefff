import math

import numpy as np
import pytest
from hypothesis import given, settings

from gaussrenyi import divergences as dv
from gaussrenyi import fock
from gaussrenyi.errors import CutoffTooSmall, DimensionMismatch, SpectrumFloorHit, TruncationInsufficient
from gaussrenyi.state_algebra import sandwich_by_sqrt
from gaussrenyi.statespec import random_pairs, thermal, two_mode_squeezed
from gaussrenyi.symplectic import GaussianState

from conftest import random_faithful, seeds

Q_HALF = 1.0 / (math.sqrt(6.0) - math.sqrt(2.0))


def test_quadratures_single_mode_cutoff3():
    q, p = fock.build_quadratures(1, 3)
    a = np.diag([1.0, math.sqrt(2.0)], 1)
    np.testing.assert_allclose(q.matrix, (a + a.T) / math.sqrt(2.0))
    np.testing.assert_allclose(p.matrix, -1j * (a - a.T) / math.sqrt(2.0))
    assert q.is_hermitian and q.dim == 3


@pytest.mark.parametrize("cutoffs", [5, (4, 3)])
def test_quadrature_commutators(cutoffs):
    n = 1 if np.isscalar(cutoffs) else len(cutoffs)
    xs = fock.build_quadratures(n, cutoffs)
    vac = np.zeros(xs[0].dim)
    vac[0] = 1.0
    for x in xs:
        assert vac @ (x.matrix @ x.matrix) @ vac == pytest.approx(0.5)
    q, p = xs[0].matrix, xs[n].matrix
    comm = q @ p - p @ q
    c0 = cutoffs if n == 1 else cutoffs[0]
    # states whose first-mode occupation sits below the last level
    inner = [i for i in range(q.shape[0]) if (i if n == 1 else i // cutoffs[1]) < c0 - 1]
    block = comm[np.ix_(inner, inner)]
    assert np.max(np.abs(block - 1j * np.eye(len(inner)))) <= 1e-12


def test_cutoff_validation(monkeypatch):
    with pytest.raises(CutoffTooSmall):
        fock.build_quadratures(1, 1)
    with pytest.raises(DimensionMismatch):
        fock.build_quadratures(3, 4)
    with pytest.raises(DimensionMismatch):
        fock.build_quadratures(2, (4,))
    monkeypatch.setenv("GAUSSRENYI_MAX_DIM", "100")
    with pytest.raises(TruncationInsufficient):
        fock.build_quadratures(2, 11)


def test_near_vacuum_density():
    rho = fock.build_gaussian_density(thermal(nu=1.0 + 1e-6), 10)
    target = np.zeros((10, 10))
    target[0, 0] = 1.0
    assert np.max(np.abs(rho.matrix - target)) <= 1e-5


def test_thermal_density_diagonal():
    rho = fock.build_gaussian_density(thermal(nu=3.0), 60)
    expected = 0.5 * 0.5 ** np.arange(60)
    np.testing.assert_allclose(np.diag(rho.matrix).real, expected, atol=1e-9)
    assert np.max(np.abs(rho.matrix - np.diag(np.diag(rho.matrix)))) <= 1e-12


def test_displaced_thermal_moments(displaced3):
    mean, cov = fock.extract_moments(fock.build_gaussian_density(displaced3, 60))
    np.testing.assert_allclose(mean, [1.0, 0.0], atol=1e-6)
    np.testing.assert_allclose(cov, 3.0 * np.eye(2), atol=1e-6)


def test_two_mode_moments():
    state = two_mode_squeezed(0.3, 0.2)
    mean, cov = fock.extract_moments(fock.build_gaussian_density(state, 26))
    np.testing.assert_allclose(mean, 0.0, atol=1e-6)
    np.testing.assert_allclose(cov, state.cov, atol=1e-6)


@settings(max_examples=15, deadline=None)
@given(seed=seeds)
def test_density_is_a_state_and_reproduces_moments(seed):
    state = random_faithful(seed, 1)
    rep = fock.truncation_check(state, 60)
    rho = fock.build_gaussian_density(state, 60, check=False)
    M = rho.matrix
    assert np.linalg.norm(M - M.conj().T) <= 1e-10 * np.linalg.norm(M)
    assert np.linalg.eigvalsh(M)[0] >= -1e-10
    assert rho.trace().real == pytest.approx(1.0, abs=1e-12)
    if rep.passed:
        mean, cov = fock.extract_moments(rho)
        np.testing.assert_allclose(mean, state.mean, atol=fock.MOMENT_TOL)
        np.testing.assert_allclose(cov, state.cov, atol=fock.MOMENT_TOL)


def test_truncation_check_examples():
    rep = fock.truncation_check(thermal(nu=3.0), 60)
    assert rep.passed and rep.trace_deficit < 1e-8 and rep.trace_deficit >= -1e-12
    assert rep.recommended_cutoffs == [30]
    rep = fock.truncation_check(thermal(nu=3.0), 5)
    assert not rep.passed
    assert rep.trace_deficit == pytest.approx(0.5**5, rel=1e-9)
    assert fock.truncation_check(thermal(nu=1.0 + 1e-6), 10).passed


def test_density_refuses_short_cutoff():
    with pytest.raises(TruncationInsufficient):
        fock.build_gaussian_density(thermal(nu=3.0), 5)


def test_oracle_examples(thermal3, thermal5):
    assert fock.oracle_divergence("petz", thermal3, thermal5, 0.5, cutoffs=80) == pytest.approx(Q_HALF, abs=1e-8)
    assert fock.oracle_divergence("dmax", thermal3, thermal5, cutoffs=80) == pytest.approx(math.log(1.5), abs=1e-6)
    assert fock.oracle_divergence("petz", thermal3, thermal5, 2.0, cutoffs=80) == pytest.approx(1.2, rel=1e-10)
    rho = random_faithful(8, 1)
    assert fock.oracle_divergence("fidelity", rho, rho) == pytest.approx(1.0, abs=1e-7)


def test_oracle_displaced_pair(displaced3, thermal3):
    pair = fock.OraclePair(displaced3, thermal3, 80)
    assert pair.evaluate("petz", 0.5).value == pytest.approx(math.exp(-1 / (4 * math.sqrt(2) + 6)), rel=1e-10)
    assert pair.evaluate("fidelity").value == pytest.approx(math.exp(-1.0 / 6.0), rel=1e-10)
    assert pair.evaluate("relative").value == pytest.approx(0.5 * math.log(2.0), rel=1e-10)
    assert pair.evaluate("dmax").diagnostics["roundoff_probe"] <= fock.ROUNDOFF_BUDGET


def test_oracle_result_metadata(thermal3, thermal5):
    res = fock.oracle_evaluate("sandwiched", thermal3, thermal5, 2.0, cutoffs=60)
    assert res.kind == "sandwiched" and res.alpha == 2.0 and res.cutoffs == (60,)
    assert res.frame == "balanced"
    assert res.diagnostics["clamped_eigenvalues"] == 0
    assert res.diagnostics["rho_trace_deficit"] <= fock.TAIL_TOL


def test_oracle_rejects_bad_requests(thermal3, thermal5):
    with pytest.raises(ValueError):
        fock.oracle_evaluate("bogus", thermal3, thermal5)
    with pytest.raises(Exception):
        fock.oracle_evaluate("petz", thermal3, thermal5, alpha=1.0, cutoffs=30)
    with pytest.raises(DimensionMismatch):
        fock.oracle_evaluate("petz", thermal3, two_mode_squeezed(0.1), 0.5)
    with pytest.raises(TruncationInsufficient):
        fock.oracle_evaluate("petz", thermal3, thermal5, 0.5, cutoffs=6)


def test_spectrum_floor_refusal(monkeypatch, thermal3, thermal5):
    monkeypatch.setattr(fock, "ROUNDOFF_BUDGET", -1.0)
    with pytest.raises(SpectrumFloorHit):
        fock.oracle_evaluate("petz", thermal3, thermal5, 2.0, cutoffs=60)
    # orders below one never take negative powers and are not probed
    fock.oracle_evaluate("petz", thermal3, thermal5, 0.5, cutoffs=60)


def test_balanced_frame_preserves_values():
    (rho, sigma), = random_pairs(3, 1, 1)
    a = fock.OraclePair(rho, sigma, 80, balance=True).evaluate("sandwiched", 0.5).value
    b = fock.OraclePair(rho, sigma, 80, balance=False).evaluate("sandwiched", 0.5).value
    assert a == pytest.approx(b, rel=1e-9)
    r2, s2 = fock.balanced_frame(rho, sigma)
    np.testing.assert_allclose(r2.mean + s2.mean, 0.0, atol=1e-12)


def test_sandwich_covariance_against_fock_moments():
    # covariance of rho^1/2 sigma rho^1/2 / Tr, from the matrices themselves
    rho, sigma = random_faithful(21, 1), random_faithful(22, 1)
    rho, sigma = GaussianState.from_cov(rho.cov), GaussianState.from_cov(sigma.cov)
    c = 90
    r_ts, s_ts = fock.truncated_state(rho, c), fock.truncated_state(sigma, c)
    half = (r_ts.vectors * np.exp(0.5 * r_ts.log_weights)) @ r_ts.vectors.conj().T
    sig = s_ts.operator().matrix
    xi = half @ sig @ half
    xi = xi / np.trace(xi)
    _, cov = fock.extract_moments(fock.TruncatedOperator(0.5 * (xi + xi.conj().T), (c,)))
    np.testing.assert_allclose(cov, sandwich_by_sqrt(rho.cov, sigma.cov), atol=1e-6)


def test_adequate_cutoff_and_policy():
    (rho, sigma), = random_pairs(42, 1, 2)
    c = fock.adequate_cutoff(rho, sigma, 40)
    r2, s2 = fock.balanced_frame(rho, sigma)
    assert fock.truncation_check(r2, c).passed and fock.truncation_check(s2, c).passed
    assert fock.comparison_cutoffs(rho, sigma) == c
    assert fock.comparison_cutoffs(*random_pairs(42, 1, 1)[0]) == 80
    with pytest.raises(TruncationInsufficient):
        fock.adequate_cutoff(rho, sigma, 8)


@pytest.mark.parametrize("kind, alpha", [("petz", 0.5), ("sandwiched", 0.7), ("petz", 1.5)])
def test_error_does_not_grow_with_cutoff(kind, alpha):
    fn = dv.petz_quasi if kind == "petz" else dv.sandwiched_quasi
    for rho, sigma in random_pairs(42, 4, 1):
        closed = fn(rho, sigma, alpha)
        if closed.is_infinite:
            continue
        errs = [abs(fock.OraclePair(rho, sigma, c, check=False).evaluate(kind, alpha).value - closed.quasi)
                for c in (40, 80)]
        assert errs[1] <= errs[0] + 1e-12 * closed.quasi
