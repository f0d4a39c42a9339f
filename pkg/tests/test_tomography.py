import numpy as np
from scipy.integrate import simpson
import pytest
from hypothesis import given, settings, strategies as st

from photonsqueeze.fock import fidelity, make_fock
from photonsqueeze.gates import loss_channel
from photonsqueeze.phasespace import marginal
from photonsqueeze.squeezer import TrajectoryRecord
from photonsqueeze.tomography import (
    QuadratureRecord,
    ReconstructionReport,
    maxlik_reconstruct,
    povm_element,
    records_from_csv,
    records_from_trajectories,
    records_to_csv,
    sample_quadratures,
    uniform_phases,
)

from conftest import random_dm, seeds


def test_record_wraps_phase():
    assert QuadratureRecord(2 * np.pi + 0.5, 1).theta == pytest.approx(0.5)
    assert QuadratureRecord(-0.5, 1).theta == pytest.approx(2 * np.pi - 0.5)


def test_uniform_phases_cover_half_period():
    ph = uniform_phases(12)
    assert ph.size == 12 and ph[0] == 0 and ph[-1] < np.pi
    np.testing.assert_allclose(np.diff(ph), np.pi / 12)


def test_sampling_is_deterministic_and_phase_indexed():
    rho = make_fock(1, 8)
    a = sample_quadratures(rho, [0.0, 1.0], 50, seed=4)
    b = sample_quadratures(rho, [0.0, 1.0], 50, seed=4)
    assert a == b
    # the first phase's stream does not depend on how many phases follow
    c = sample_quadratures(rho, [0.0], 50, seed=4)
    assert [r.x for r in c] == [r.x for r in a[:50]]


def test_sampled_variance_matches_marginal():
    rho = random_dm(2, 6)
    recs = sample_quadratures(rho, [0.7], 40000, seed=1)
    xs = np.array([r.x for r in recs])
    m = marginal(rho, 0.7)
    se = np.sqrt(m.variance() / xs.size)
    assert abs(xs.mean() - m.mean()) < 4 * se
    assert xs.var() == pytest.approx(m.variance(), rel=0.03)


def test_sampling_argument_checks():
    with pytest.raises(ValueError):
        sample_quadratures(make_fock(0, 4), [], 10, 0)
    with pytest.raises(ValueError):
        sample_quadratures(make_fock(0, 4), [0.0], 0, 0)


def test_csv_round_trip_is_exact():
    recs = sample_quadratures(make_fock(1, 6), uniform_phases(3), 5, seed=0)
    text = records_to_csv(recs)
    assert text.splitlines()[0] == "theta,x"
    assert records_from_csv(text) == recs
    with pytest.raises(ValueError):
        records_from_csv("a,b\n1,2\n")


def test_records_from_trajectories():
    trajs = [TrajectoryRecord(0.1, None, 1.0, 0.5, -0.3), TrajectoryRecord(0.2, None, 1.0)]
    assert records_from_trajectories(trajs) == [QuadratureRecord(0.5, -0.3)]
    with pytest.raises(ValueError):
        records_from_trajectories(trajs[1:])


# ---------------------------------------------------------------- POVM


@settings(max_examples=10)
@given(st.floats(min_value=0, max_value=np.pi), st.sampled_from([1.0, 0.7]))
def test_bin_povm_sums_to_identity(theta, eta):
    N, w = 8, 0.2
    centers = np.arange(-60, 61) * w
    total = sum(povm_element(theta, c, w, eta, N).elems for c in centers)
    np.testing.assert_allclose(total, np.eye(N), atol=1e-9)


@settings(max_examples=10)
@given(seeds, st.floats(min_value=0, max_value=np.pi), st.floats(min_value=-2, max_value=2))
def test_bin_probability_is_marginal_integral(seed, theta, x):
    rho = random_dm(seed, 6)
    w = 0.1
    p = np.trace(rho.elems @ povm_element(theta, x, w, 1.0, 6).elems).real
    xs = np.linspace(x - w / 2, x + w / 2, 401)
    assert p == pytest.approx(simpson(marginal(rho, theta, xs).pdf, x=xs), abs=1e-9)


def test_povm_width_must_be_positive():
    with pytest.raises(ValueError):
        povm_element(0.0, 0.0, 0.0, 1.0, 4)


# ---------------------------------------------------------------- reconstruction


def test_small_round_trip_with_monotone_likelihood():
    truth = random_dm(9, 5, rank=2)
    recs = sample_quadratures(truth, uniform_phases(8), 8000, seed=3)
    rep = maxlik_reconstruct(recs, 5, max_iters=500, tol=1e-9)
    assert fidelity(rep.rho, truth) > 0.98
    assert np.all(np.diff(rep.log_likelihood_trace) >= -1e-12)
    md = rep.metadata()
    assert md["n_records"] == len(recs) and md["bin_width"] == 0.1 and md["cutoff"] == 5


def test_reconstruction_with_detector_efficiency():
    eta = 0.8
    recs = sample_quadratures(loss_channel(make_fock(1, 6), eta), uniform_phases(6), 15000, seed=6)
    corrected = maxlik_reconstruct(recs, 6, efficiency=eta, max_iters=800)
    naive = maxlik_reconstruct(recs, 6, efficiency=1.0, max_iters=800)
    assert corrected.rho.populations()[1] > 0.95
    assert naive.rho.populations()[1] == pytest.approx(eta, abs=0.03)
    assert corrected.efficiency_assumed == eta


def test_reconstruction_argument_checks():
    with pytest.raises(ValueError):
        maxlik_reconstruct([], 4)
    with pytest.raises(ValueError):
        maxlik_reconstruct([QuadratureRecord(0, 0)], 4, efficiency=0.0)
    with pytest.warns(UserWarning):
        maxlik_reconstruct([QuadratureRecord(0, 0.1 * k) for k in range(10)], 4, max_iters=3)


def test_report_rejects_decreasing_likelihood():
    with pytest.raises(AssertionError):
        ReconstructionReport(make_fock(0, 3).dm(), 2, [-1.0, -2.0], True, 1.0)
