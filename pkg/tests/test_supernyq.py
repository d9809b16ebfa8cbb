import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmikit import numerics, quantizer as qz, simlab, supernyq as sn
from gmikit.errors import DomainError, NumericalError
from gmikit.gmi_core import ChannelConfig

LS = (1, 2, 4, 8, 16, 32)
REF_HIGH = {1: 0.7302, 2: 0.9114, 4: 1.0268, 8: 1.0710, 16: 1.0867, 32: 1.0926}
REF_SLOPE = {1: 0.3183, 2: 0.3587, 4: 0.3796, 8: 0.3867, 16: 0.3892, 32: 0.3901}
REF_OPT_SLOPE = {2: 0.3731, 4: 0.3923, 8: 0.3971, 16: 0.3984, 32: 0.3987}


def _random_pulse(rng, l):
    g = rng.normal(size=2 * l - 1)
    th = sn.theta_matrix(l).array
    g /= math.sqrt(g @ th @ g)
    return sn.PulseSpec(tuple(g))


# -- matrices -----------------------------------------------------------------

def test_small_matrices():
    assert sn.theta_matrix(1).array.tolist() == [[1.0]]
    th = sn.theta_matrix(2).array
    assert th[0, 1] == pytest.approx(2 / math.pi, rel=1e-15)
    assert th[0, 2] == pytest.approx(0.0, abs=1e-16)
    assert sn.omega0_matrix(1).array[0, 0] == pytest.approx(math.pi / 2, rel=1e-15)
    assert sn.omega0_matrix(2).array[0, 1] == pytest.approx(math.asin(2 / math.pi), rel=1e-15)
    assert sn.omega0_matrix(2).array[0, 1] == pytest.approx(0.690, abs=5e-4)


@pytest.mark.parametrize("l", [1, 2, 3, 4])
def test_matrices_positive_definite(l):
    for mat in (sn.theta_matrix(l), sn.omega0_matrix(l)):
        np.testing.assert_array_equal(mat.array, mat.array.T)
        lam, _ = numerics.sym_eig(mat)
        assert lam.min() > 0
        assert mat.array.shape == (2 * l - 1,) * 2


def test_l_range_checks():
    for bad in (0, 33, 2.0, True):
        with pytest.raises(DomainError):
            sn.theta_matrix(bad)
    with pytest.raises(DomainError):
        sn.optimize_pulse_low_snr(1)
    with pytest.raises(DomainError):
        sn.sinc_pulse_gmi(2, -1.0)


def test_sampler_config():
    s = sn.SamplerConfig(4)
    assert s.width == 7 and s.offset == pytest.approx(0.75)
    assert s.indices.tolist() == [-3, -2, -1, 0, 1, 2, 3]


def test_pulse_energy_check():
    with pytest.raises(DomainError):
        sn.PulseSpec((0.0, 1.1, 0.0))
    with pytest.raises(DomainError):
        sn.PulseSpec((0.5, 0.5))
    p = sn.PulseSpec.sinc(3)
    assert p(np.array([0.0, 1.0, 0.5])) == pytest.approx([1.0, 0.0, 2 / math.pi], abs=1e-15)


# -- sinc pulse ---------------------------------------------------------------

def test_quadratic_form_against_frozen_oracle(golden):
    assert sn.sinc_quadratic_form(1) == pytest.approx(2 / math.pi, rel=1e-14)
    for l in LS:
        assert sn.sinc_quadratic_form(l) == pytest.approx(golden["sinc_qf"][str(l)], rel=1e-10)


def test_sinc_reference_values():
    prev = 0.0
    for l in LS:
        a = sn.sinc_asymptotics(l)
        assert a.high_snr_bits == pytest.approx(REF_HIGH[l], abs=5e-4)
        assert a.low_snr_slope == pytest.approx(REF_SLOPE[l], abs=5e-4)
        assert a.quadratic_form > prev
        prev = a.quadratic_form
    assert sn.sinc_pulse_gmi(4, math.inf).gmi_bits > 1.0


def test_sinc_gmi_limits():
    for l in (2, 8):
        a = sn.sinc_asymptotics(l)
        assert sn.sinc_pulse_gmi(l, 1e9).gmi_bits == pytest.approx(a.high_snr_bits, abs=1e-8)
        assert sn.sinc_pulse_gmi(l, 1e-7).gmi_nats / 1e-7 == pytest.approx(a.low_snr_slope, rel=1e-6)
    assert sn.sinc_pulse_gmi(3, 0.0).gmi_nats == 0.0


def test_l1_equals_binary_quantization():
    for snr in np.logspace(-3, 3, 61):
        ref = qz.binary_gmi(ChannelConfig.from_snr(snr)).gmi_nats
        assert sn.sinc_pulse_gmi(1, snr).gmi_nats == pytest.approx(ref, rel=1e-12, abs=1e-300)
        cfg = ChannelConfig.from_snr(snr)
        g, beta = sn.supernyq_gmi(sn.general_correlations(sn.PulseSpec.sinc(1), 1, snr), cfg.es)
        assert g.gmi_nats == pytest.approx(ref, rel=1e-12)


def test_snr_convention_round_trip():
    assert sn.nyquist_to_supernyq_snr(3.0) == 6.0
    assert sn.supernyq_to_nyquist_snr(sn.nyquist_to_supernyq_snr(0.7)) == 0.7


# -- general pulses -----------------------------------------------------------

@pytest.mark.parametrize("l", [2, 4, 8])
def test_general_reduces_to_sinc(l):
    for snr in (0.1, 2.0, 50.0):
        cs = sn.general_correlations(sn.PulseSpec.sinc(l), l, snr)
        np.testing.assert_allclose(cs.r.array, sn.theta_matrix(l).array, atol=1e-14)
        np.testing.assert_allclose(cs.b, math.sqrt(2 / math.pi * snr / (snr + 1)) * sn.b0_vector(l), rtol=1e-14)
        g, _ = sn.supernyq_gmi(cs)
        assert g.gmi_nats == pytest.approx(sn.sinc_pulse_gmi(l, snr).gmi_nats, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.floats(0.01, 1e3), st.floats(0.1, 5.0))
def test_general_correlations_invariants(seed, l, snr, es):
    pulse = _random_pulse(np.random.default_rng(seed), l)
    cs = sn.general_correlations(pulse, l, snr, es)
    om = cs.omega.array
    np.testing.assert_allclose(np.diag(om), 1.0, atol=1e-12)
    assert np.all(np.abs(om) <= 1.0)
    g, beta = sn.supernyq_gmi(cs, es)
    assert 0.0 <= g.delta <= 1.0
    if g.delta > 0:
        # beta rescales the metric so that E[x beta' w] = es
        assert float(beta @ cs.b) == pytest.approx(es, rel=1e-9)


def test_zero_correlation_gives_zero_gmi():
    cs = sn.general_correlations(sn.PulseSpec.sinc(2), 2, 1.0)
    cs0 = sn.CorrelationSet(np.zeros(3), cs.omega, cs.b0, cs.omega0, cs.theta, cs.r)
    g, beta = sn.supernyq_gmi(cs0)
    assert g.delta == 0.0 and g.gmi_nats == 0.0 and not beta.any()


def test_pulse_length_mismatch_and_bad_delta():
    with pytest.raises(DomainError):
        sn.general_correlations(sn.PulseSpec.sinc(2), 3, 1.0)
    cs = sn.general_correlations(sn.PulseSpec.sinc(2), 2, 1.0)
    bad = sn.CorrelationSet(cs.b * 10, cs.omega, cs.b0, cs.omega0, cs.theta, cs.r)
    with pytest.raises(NumericalError):
        sn.supernyq_gmi(bad)


# -- pulse optimization -------------------------------------------------------

def test_optimized_pulse_reference_values(golden):
    for l, ref in REF_OPT_SLOPE.items():
        pulse, slope = sn.optimize_pulse_low_snr(l)
        assert slope == pytest.approx(ref, abs=5e-4)
        assert abs(pulse.energy() - 1.0) < 1e-10
        assert sn.sinc_asymptotics(l).low_snr_slope <= slope < 0.5
        if str(l) in golden["optimal_slope"]:
            assert slope == pytest.approx(golden["optimal_slope"][str(l)], rel=1e-9)


def test_optimal_pulse_achieves_its_slope():
    pulse, slope = sn.optimize_pulse_low_snr(2)
    snr = 1e-6
    g, _ = sn.supernyq_gmi(sn.general_correlations(pulse, 2, snr))
    assert g.gmi_nats / snr == pytest.approx(slope, rel=1e-5)


def test_optimal_pulse_beats_random_pulses():
    _, slope = sn.optimize_pulse_low_snr(3)
    rng = np.random.default_rng(0)
    th = sn.theta_matrix(3).array
    om = sn.omega0_matrix(3)
    for _ in range(200):
        g = _random_pulse(rng, 3).array
        tg = th @ g
        assert 0.5 * tg @ numerics.solve_spd(om, tg) <= slope + 1e-12


# -- antipodal inputs, L = 2 ---------------------------------------------------

def test_beta_from_eta_kappa_solves_tanh_equation():
    res = sn.antipodal_l2_binary(ChannelConfig(1.0, 0.5), samples=40_000, seed=2)
    lhs = math.tanh(2 * math.sqrt(1.0) * res.beta)
    assert lhs == pytest.approx((2 * res.kappa - 1) / (2 * res.eta), abs=1e-12)
    assert 0.5 < res.kappa < 1 and 0 < res.eta < 0.5


def test_beta_log_domain_error():
    with pytest.raises(NumericalError, match="eta"):
        sn.beta_from_eta_kappa(0.1, 0.2, 1.0)


def test_eta_kappa_without_interference():
    cfg = ChannelConfig(1.0, 1.0)
    eta, kappa = sn.antipodal_l2_eta_no_isi(cfg)
    est = simlab.estimate_eta_kappa(cfg, isi_window=0, samples=200_000, seed=5)
    assert abs(est.eta - eta) < 3 * est.eta_stderr
    assert abs(est.kappa - kappa) < 3 * est.kappa_stderr


def test_weak_signal_limit():
    # kappa -> 1/2; beta tends to a finite constant so sqrt(es) * beta -> 0
    prev = None
    for es in (1e-2, 1e-4, 1e-6):
        cfg = ChannelConfig(es, 1.0)
        eta, kappa = sn.antipodal_l2_eta_no_isi(cfg)
        beta = sn.beta_from_eta_kappa(eta, kappa, es)
        assert abs(kappa - 0.5) < math.sqrt(es)
        assert math.sqrt(es) * abs(beta) < math.sqrt(es)
        prev = beta
    assert prev == pytest.approx(4 / (math.pi * math.sqrt(2 * math.pi)), rel=1e-3)


def test_antipodal_worker_free_determinism():
    cfg = ChannelConfig(1.0, 0.5)
    a = sn.antipodal_l2_binary(cfg, samples=20_000, seed=9)
    b = sn.antipodal_l2_binary(cfg, samples=20_000, seed=9)
    assert a == b
    with pytest.raises(DomainError):
        sn.antipodal_l2_binary(cfg, samples=10)
