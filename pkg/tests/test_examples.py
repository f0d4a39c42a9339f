"""Worked examples for each operation, with their reference values."""

import json
import math

import numpy as np
import pytest

from photonsqueeze.cli import main
from photonsqueeze.fock import (
    DensityMatrix,
    annihilation,
    expectation,
    fidelity,
    make_coherent,
    make_css,
    make_fock,
    number,
    partial_trace,
    purity,
    quadrature,
    tensor,
    trace_distance,
)
from photonsqueeze.gates import (
    AncillaModel,
    LossBudget,
    apply_unitary,
    beam_splitter,
    db_to_variance,
    displace,
    loss_channel,
    photon_subtract,
    prepare_experimental_photon,
    prepare_squeezed_thermal,
    rotate,
    squeeze,
    squeeze_unitary,
)
from photonsqueeze.metrics import (
    anticorrelation,
    coherent_mixture_bound,
    distinguishability,
    fit_css_amplitude,
    gaussian_bound_search,
    interference,
    metric_curve_beta,
)
from photonsqueeze.phasespace import marginal, marginal_variances, negativity_volume, wigner_at, wigner_min
from photonsqueeze.squeezer import (
    GaussianMoments,
    SqueezeGateConfig,
    gamma_to_T,
    heisenberg_moments,
    mb_squeeze_channel,
    mb_squeeze_mc,
)
from photonsqueeze.serialize import load_state
from photonsqueeze.tomography import maxlik_reconstruct, povm_element, sample_quadratures, uniform_phases

PHOTON_84 = DensityMatrix(np.diag([0.16, 0.84] + [0.0] * 38).astype(complex))


# ---------------------------------------------------------------- states


def test_fock_examples():
    vac = make_fock(0, 10)
    assert expectation(vac, number(10)).real == 0.0
    one = make_fock(1, 10)
    assert expectation(one, number(10)).real == 1.0
    xs = np.linspace(-4, 4, 81)
    np.testing.assert_allclose(marginal(one, 0.0, xs).pdf, 2 * xs**2 * np.exp(-(xs**2)) / np.sqrt(np.pi),
                               atol=1e-14)
    assert distinguishability(make_fock(1, 30), 1.0) == pytest.approx(np.exp(-1), abs=1e-14)


def test_coherent_examples():
    assert fidelity(make_coherent(0, 5), make_fock(0, 5)) == 1.0
    assert expectation(make_coherent(1.0, 30), annihilation(30)) == pytest.approx(1.0, abs=1e-8)
    assert abs(make_coherent(0.97, 30).amps[0]) ** 2 == pytest.approx(np.exp(-0.9409), abs=1e-12)


def test_css_examples():
    odd = make_css(0.97, "odd", 30).amps
    assert odd[3] / odd[1] == pytest.approx(0.97**2 / np.sqrt(6), abs=1e-8)
    even = make_css(1.0, "even", 30).amps
    assert np.all(even[1::2] == 0) and abs(even[0]) > 0
    A = anticorrelation(make_css(1.0, "odd", 30)).a_value
    assert A == pytest.approx(1 - (1 - 2 * np.cosh(0.5)) ** -2, abs=1e-9)
    assert A == pytest.approx(0.365, abs=1e-3)
    assert fidelity(make_css(0.1, "odd", 10), make_fock(1, 10)) > 0.999


def test_state_utility_examples():
    one = make_fock(1, 6)
    assert fidelity(one.dm(), one) == pytest.approx(1.0)
    mix = DensityMatrix(np.diag([0.16, 0.84, 0, 0]).astype(complex))
    assert purity(mix) == pytest.approx(0.7312, abs=1e-14)
    np.testing.assert_allclose(partial_trace(tensor(one, make_fock(0, 6)), 1).elems, one.dm().elems)


def test_quadrature_operator_identities():
    N = 12
    x, p = quadrature(0.0, N).elems, quadrature(np.pi / 2, N).elems
    a = annihilation(N).elems
    np.testing.assert_allclose(x, (a + a.T) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(p, (a - a.T) / (1j * np.sqrt(2)), atol=1e-15)
    for th in (0.3, 2.0):
        np.testing.assert_allclose(quadrature(th, N).elems, np.cos(th) * x + np.sin(th) * p, atol=1e-12)


# ---------------------------------------------------------------- unitaries


def test_squeeze_examples():
    k = make_coherent(0.3, 20)
    assert fidelity(squeeze(k, 0.0), k) == pytest.approx(1.0, abs=1e-14)
    assert squeeze(make_fock(0, 40), 0.26).amps[0].real == pytest.approx(1 / np.sqrt(np.cosh(0.26)), abs=1e-12)
    g, N = 0.26, 40
    ref = np.zeros(N)
    for n in range((N - 1) // 2 + 1):
        if 2 * n + 1 < N:
            ref[2 * n + 1] = (math.sqrt(math.factorial(2 * n + 1)) / (2**n * math.factorial(n))
                              * math.tanh(g) ** n / math.cosh(g) ** 1.5)
    out = squeeze(make_fock(1, N), g)
    np.testing.assert_allclose(np.abs(out.amps) ** 2, ref**2, atol=1e-12)
    assert np.all(out.amps[::2] == 0)


def test_displace_and_rotate_examples():
    alpha = 0.6 + 0.5j
    out = apply_unitary(make_fock(0, 30), displace(alpha, 30))
    assert fidelity(out, make_coherent(alpha, 30)) > 1 - 1e-8
    N = 20
    conj = rotate(np.pi / 2, N).elems @ squeeze_unitary(0.3, N).elems @ rotate(-np.pi / 2, N).elems
    np.testing.assert_allclose(conj, squeeze_unitary(-0.3, N).elems, atol=1e-8)
    np.testing.assert_allclose(rotate(2 * np.pi, N).elems, np.eye(N), atol=1e-12)


def test_beam_splitter_examples():
    N = 5
    U = beam_splitter(1 - 1e-12, N).elems
    np.testing.assert_allclose(U, np.eye(N * N), atol=1e-5)
    out = apply_unitary(tensor(make_fock(1, N), make_fock(0, N)), beam_splitter(0.5, N)).amps
    ref = np.zeros(N * N)
    ref[1 * N + 0], ref[0 * N + 1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    np.testing.assert_allclose(out, ref, atol=1e-14)
    vv = apply_unitary(tensor(make_fock(0, N), make_fock(0, N)), beam_splitter(0.3, N))
    assert abs(vv.amps[0]) == pytest.approx(1.0)


# ---------------------------------------------------------------- channels and preparation


def test_loss_examples():
    rho = make_css(0.97, "odd", 20).dm()
    np.testing.assert_allclose(loss_channel(rho, 1.0).elems, rho.elems, atol=1e-15)
    assert loss_channel(rho, 0.0).populations()[0] == pytest.approx(1.0)
    out = loss_channel(make_fock(1, 10), 0.84)
    np.testing.assert_allclose(out.populations()[:2], [0.16, 0.84], atol=1e-14)
    assert wigner_min(out)[0] == pytest.approx(-0.68 / np.pi, abs=1e-9)


def test_photon_subtraction_examples():
    out, p = photon_subtract(make_fock(1, 5))
    assert p == pytest.approx(1.0) and out.populations()[0] == pytest.approx(1.0)
    # brute-force fidelity scan over real and imaginary alpha (0.5..2, 3001 points)
    # gives a best odd-CSS fidelity of 0.98395 at alpha = 1.269 for r = 0.5;
    # fidelity exceeds 0.99 only up to r = 0.4
    sub, _ = photon_subtract(squeeze(make_fock(0, 50), 0.5))
    alpha, f = fit_css_amplitude(sub)
    assert alpha == pytest.approx(1.269, abs=2e-3)
    assert f == pytest.approx(0.9839518, abs=1e-6)
    _, f4 = fit_css_amplitude(photon_subtract(squeeze(make_fock(0, 50), 0.4))[0])
    assert f4 > 0.99
    k = make_coherent(0.8, 30)
    assert fidelity(photon_subtract(k)[0], k) == pytest.approx(1.0, abs=1e-10)


def test_experimental_photon_examples():
    ideal = prepare_experimental_photon(LossBudget.ideal(), 10)
    assert fidelity(ideal, make_fock(1, 10)) == pytest.approx(1.0)
    paper = prepare_experimental_photon(LossBudget.paper(), 40)
    assert paper.populations()[1] == pytest.approx(0.84, abs=1e-12)
    assert wigner_min(paper)[0] == pytest.approx(-0.22, abs=0.01)


def test_ancilla_examples():
    vac = prepare_squeezed_thermal(AncillaModel(0.5, 0.5), 10)
    assert fidelity(vac, make_fock(0, 10)) == pytest.approx(1.0)
    m = AncillaModel.paper()
    assert m.squeezed_variance == pytest.approx(0.5 * 10**-0.68, abs=1e-12)
    assert m.antisqueezed_variance == pytest.approx(0.5 * 10**1.03, abs=1e-12)
    assert db_to_variance(-6.8) == pytest.approx(0.1045, abs=1e-4)
    assert db_to_variance(10.3) == pytest.approx(5.358, abs=1e-3)
    assert AncillaModel.pure(0.1).purity == pytest.approx(1.0, abs=1e-8)


# ---------------------------------------------------------------- gate


def test_gamma_zero_is_unit_transmittance():
    assert gamma_to_T(0.0) == 1.0


def test_heisenberg_examples():
    # squeeze-x orientation (negative gamma): x is attenuated, p amplified
    gamma = 0.5 * np.log(0.59)
    ideal = heisenberg_moments(GaussianMoments.vacuum(), SqueezeGateConfig.ideal(gamma, squeezed_variance=1e-12))
    assert ideal.cov[0, 0] == pytest.approx(0.295, abs=1e-9)
    assert ideal.cov[1, 1] == pytest.approx(0.8475, abs=1e-4)
    assert np.linalg.det(ideal.cov) == pytest.approx(0.25, abs=1e-9)
    paper = heisenberg_moments(GaussianMoments.vacuum(), SqueezeGateConfig.paper(gamma))
    assert paper.cov[0, 0] == pytest.approx(0.59 / 2 + 0.41 * 0.1045, abs=1e-4)
    assert paper.cov[0, 0] == pytest.approx(0.3378, abs=1e-4)


def test_channel_examples():
    rho = make_css(0.97, "odd", 20)
    assert fidelity(mb_squeeze_channel(rho, SqueezeGateConfig.paper(0.0)), rho) > 0.999
    one = make_fock(1, 40)
    out = mb_squeeze_channel(one, SqueezeGateConfig.ideal(0.26, squeezed_variance=0.5e-4))
    assert fidelity(out, squeeze(one, 0.26)) > 0.999
    w_paper = wigner_min(mb_squeeze_channel(one, SqueezeGateConfig.paper(0.67)))[0]
    w_unitary = wigner_min(squeeze(one, 0.67))[0]
    assert w_unitary < w_paper < 0


def test_mc_forced_outcome_near_unit_transmittance():
    # gamma = 1e-6 gives T = 1 - 2e-6; the pinned outcome 0 then leaves the input unchanged
    rho = make_css(0.5, "odd", 10)
    cfg = SqueezeGateConfig.with_ancilla(1e-6, AncillaModel.pure(0.4))
    recs, avg = mb_squeeze_mc(rho, cfg, 1, seed=0, forced_outcomes=[0.0])
    assert fidelity(avg, rho) > 1 - 1e-5


def test_mc_vacuum_variance_with_squeezed_ancilla():
    # the infinitely squeezed ancilla does not fit a finite cutoff: a pure
    # -8 dB ancilla is used and compared with T/2 + (1-T) v_sq
    cfg = SqueezeGateConfig.with_ancilla(0.5 * np.log(0.59), AncillaModel.pure(0.0792))
    recs, _ = mb_squeeze_mc(make_fock(0, 20), cfg, 10_000, seed=0, keep_states=False, probe_phases=[0.0])
    xs = np.array([r.probe_x for r in recs])
    T = cfg.transmittance
    expected = T / 2 + (1 - T) * 0.0792
    assert abs(xs.var() - expected) < 3 * expected * np.sqrt(2 / xs.size)


def test_mc_matches_channel_with_paper_ancilla():
    cfg = SqueezeGateConfig.paper(0.26)
    one = make_fock(1, 30)
    _, avg = mb_squeeze_mc(one, cfg, 10_000, seed=0, keep_states=False)
    assert trace_distance(avg, mb_squeeze_channel(one, cfg, max_deficit=1e-3)) < 0.02


# ---------------------------------------------------------------- phase space


def test_marginal_examples():
    xs = np.linspace(-3, 3, 13)
    for th in (0.0, 1.0):
        np.testing.assert_allclose(marginal(make_fock(0, 6), th, xs).pdf, np.exp(-(xs**2)) / np.sqrt(np.pi),
                                   atol=1e-15)
        np.testing.assert_allclose(marginal(make_fock(1, 6), th, xs).pdf,
                                   2 * xs**2 * np.exp(-(xs**2)) / np.sqrt(np.pi), atol=1e-15)
    assert marginal(make_fock(1, 6), 0.0, [0.0]).pdf[0] == 0.0
    v = marginal_variances(squeeze(make_fock(1, 40), 0.26), [0.0, np.pi / 2])
    assert v[1] / v[0] == pytest.approx(np.exp(-4 * 0.26), rel=1e-9)
    assert marginal(make_css(0.97, "odd", 30), np.pi / 2, [0.0]).pdf[0] == pytest.approx(0.0, abs=1e-15)


def test_wigner_point_examples():
    assert wigner_at(make_fock(0, 10), 0, 0) == pytest.approx(1 / np.pi, abs=1e-14)
    assert wigner_at(make_fock(1, 10), 0, 0) == pytest.approx(-1 / np.pi, abs=1e-14)
    assert wigner_at(PHOTON_84, 0, 0) == pytest.approx(-0.68 / np.pi, abs=1e-14)


def test_wigner_minimum_examples():
    w, loc = wigner_min(make_fock(1, 10))
    assert w == pytest.approx(-1 / np.pi, abs=1e-9) and np.hypot(*loc) < 1e-3
    assert wigner_min(make_fock(0, 10))[0] >= 0
    w, loc = wigner_min(make_css(0.97, "odd", 30))
    assert w < 0 and np.hypot(*loc) < 1e-3


def test_negativity_volume_examples():
    assert negativity_volume(make_fock(0, 10)) == pytest.approx(0.0, abs=1e-10)
    # the integral of |W| - 1 for |1> is 4 e^{-1/2} - 2
    assert negativity_volume(make_fock(1, 10)) == pytest.approx(4 * np.exp(-0.5) - 2, abs=5e-4)


# ---------------------------------------------------------------- tomography


def test_sampling_examples():
    xs = np.array([r.x for r in sample_quadratures(make_fock(0, 10), [0.4], 100_000, seed=0)])
    se = 0.5 * np.sqrt(2 / xs.size)
    assert abs(xs.var() - 0.5) < 5 * se
    for th in (0.0, 2.0):
        x2 = np.array([r.x for r in sample_quadratures(make_fock(1, 10), [th], 50_000, seed=1)]) ** 2
        assert abs(x2.mean() - 1.5) < 4 * x2.std() / np.sqrt(x2.size)
    css = make_css(0.97, "odd", 30)
    xq = np.array([r.x for r in sample_quadratures(css, [0.0], 50_000, seed=2)])
    hist, edges = np.histogram(xq, bins=np.linspace(-4, 4, 41))
    centre = hist[19:21].mean()
    assert hist[:20].max() > 1.5 * centre and hist[20:].max() > 1.5 * centre
    xp = np.array([r.x for r in sample_quadratures(css, [np.pi / 2], 50_000, seed=3)])
    hp, _ = np.histogram(xp, bins=np.linspace(-4, 4, 81))
    assert hp[39:41].mean() < 0.05 * hp.max()


@pytest.fixture(scope="module")
def reconstructions():
    states = {"vacuum": make_fock(0, 40), "photon": PHOTON_84,
              "S0.26": squeeze(make_fock(1, 40), 0.26), "S0.67": squeeze(make_fock(1, 40), 0.67)}
    out = {}
    for name, rho in states.items():
        recs = sample_quadratures(rho, uniform_phases(12), -(-100_000 // 12), seed=0)
        out[name] = (rho, maxlik_reconstruct(recs, 15))
    return out


def test_vacuum_reconstruction(reconstructions):
    rho, rep = reconstructions["vacuum"]
    assert fidelity(rep.rho, make_fock(0, 15)) > 0.999


def test_photon_population_recovered(reconstructions):
    _, rep = reconstructions["photon"]
    assert rep.rho.populations()[1] == pytest.approx(0.84, abs=0.01)


@pytest.mark.parametrize("name", ["S0.26", "S0.67"])
def test_wigner_minimum_recovered(reconstructions, name):
    rho, rep = reconstructions[name]
    assert wigner_min(rep.rho)[0] == pytest.approx(wigner_min(rho)[0], abs=0.01)


def test_povm_examples():
    N = 8
    wide = povm_element(0.0, 0.0, 40.0, 1.0, N, nodes=200).elems
    np.testing.assert_allclose(wide, np.eye(N), atol=1e-10)
    one = make_fock(1, N).amps
    narrow = povm_element(0.3, 0.0, 1e-3, 1.0, N).elems
    assert abs(np.vdot(one, narrow @ one)) < 1e-9
    lossy = povm_element(0.3, 0.0, 1e-3, 0.5, N).elems
    assert np.vdot(one, lossy @ one).real > np.vdot(one, narrow @ one).real


# ---------------------------------------------------------------- metrics


def test_distinguishability_examples():
    assert distinguishability(make_fock(1, 30), 1.0) == pytest.approx(np.exp(-1))
    assert distinguishability(make_fock(0, 30), 0.0) == pytest.approx(1.0)
    ds = [distinguishability(make_fock(1, 30), np.exp(1j * ph)) for ph in np.linspace(0, 2 * np.pi, 9)]
    assert np.ptp(ds) < 1e-10


def test_interference_examples():
    one = make_fock(1, 30)
    bs = np.linspace(0.1, 2, 20)
    np.testing.assert_allclose([interference(one, b) for b in bs], -(bs**2) * np.exp(-(bs**2)), atol=1e-14)
    b0 = 1.2
    k1, k2 = make_coherent(b0, 40).dm().elems, make_coherent(-b0, 40).dm().elems
    mix = DensityMatrix(0.5 * (k1 + k2))
    assert all(interference(mix, b) > 0 for b in np.linspace(0.1, 2.5, 25))


def test_d_max_location():
    b, _ = metric_curve_beta(make_fock(1, 30), np.linspace(0, 2, 201)).d_max
    assert b == pytest.approx(1.0, abs=0.01)


def test_coherent_bound_examples():
    ys = np.linspace(0, 5, 2_000_001)
    for beta in (0.01, 1.0):
        grid = np.min(np.exp(-beta**2 - ys**2) * np.cos(2 * beta * ys))
        assert coherent_mixture_bound(beta) == pytest.approx(grid, abs=1e-6)
    # for small beta the negative lobe sits at |y| ~ pi / (4 beta), where the Gaussian factor vanishes
    assert abs(coherent_mixture_bound(0.01)) < 1e-10


def test_gaussian_bound_is_stable_across_starts():
    vals = [gaussian_bound_search(1.0, n_starts=k).value for k in (1, 3, 5, 8)]
    assert np.ptp(vals) < 1e-4


def test_experimental_curve_dips_below_gaussian_bound():
    rho = prepare_experimental_photon(LossBudget.paper(), 40)
    out = mb_squeeze_channel(rho, SqueezeGateConfig.paper(0.26))
    assert interference(out, 1.0) < gaussian_bound_search(1.0).value - 0.03


def test_anticorrelation_examples():
    for p in (0.2, 0.84):
        m = DensityMatrix(np.diag([1 - p, p, 0, 0]).astype(complex))
        assert anticorrelation(m).a_value == 0.0
    for eta in (1.0, 0.3):
        assert anticorrelation(make_coherent(1.1, 40), eta).a_value == pytest.approx(1.0, abs=1e-9)


def test_css_fit_examples():
    a, f = fit_css_amplitude(make_css(0.97, "odd", 40))
    assert a == pytest.approx(0.97, abs=1e-3) and f == pytest.approx(1.0, abs=1e-9)
    a, _ = fit_css_amplitude(squeeze(make_fock(1, 40), 0.26))
    assert a == pytest.approx(0.91, abs=0.05)
    a, _ = fit_css_amplitude(make_fock(1, 40))
    assert a < 0.01


# ---------------------------------------------------------------- command line


def test_cli_examples(tmp_path, capsys):
    out = str(tmp_path)

    def summary(*argv):
        capsys.readouterr()
        assert main(["--out", out, *argv]) == 0
        return json.loads(capsys.readouterr().out)

    assert summary("prepare", "--state", "fock", "--n", "1", "--name", "one.json")["populations"][1] == 1.0
    assert summary("wigner", str(tmp_path / "one.json"))["wigner_min"] == pytest.approx(-1 / np.pi, abs=1e-9)
    p = summary("prepare", "--state", "experimental-photon", "--name", "photon.json")["populations"]
    assert p[1] == pytest.approx(0.84, abs=1e-12)
    assert summary("apply", str(tmp_path / "photon.json"), "--gamma", "0.26")["wigner_min"] < 0
    summary("prepare", "--state", "css", "--alpha", "1.0", "--name", "css.json")
    rep = summary("metrics", str(tmp_path / "css.json"), "--anticorrelation")
    assert rep["anticorrelation"]["A"] == pytest.approx(0.365, abs=1e-3)

    sq = squeeze(make_fock(1, 40), 0.26)
    from photonsqueeze.serialize import save_state
    save_state(tmp_path / "sq.json", sq)
    assert summary("marginals", str(tmp_path / "sq.json"))["variance_spread"] > 0.5
    rows = (tmp_path / "variances_sq.csv").read_text().splitlines()
    assert rows[0] == "theta,variance" and len(rows) == 25


@pytest.mark.parametrize("kind", ["vacuum", "photon", "S0.67"])
def test_cli_tomo_examples(tmp_path, capsys, kind):
    states = {"vacuum": make_fock(0, 40), "photon": prepare_experimental_photon(LossBudget.paper(), 40),
              "S0.67": squeeze(make_fock(1, 40), 0.67)}
    from photonsqueeze.serialize import save_state
    truth = states[kind]
    save_state(tmp_path / "truth.json", truth)
    capsys.readouterr()
    assert main(["--out", str(tmp_path), "tomo", str(tmp_path / "truth.json")]) == 0
    rep = json.loads(capsys.readouterr().out)
    if kind == "vacuum":
        assert rep["fidelity_to_truth"] > 0.999
    elif kind == "photon":
        assert rep["populations"][1] == pytest.approx(truth.populations()[1], abs=0.01)
    else:
        assert rep["wigner_min_reconstructed"] == pytest.approx(rep["wigner_min_truth"], abs=0.01)
    assert load_state(tmp_path / "reconstruction_truth.json").dim == 15
