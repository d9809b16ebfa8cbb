"""Binary-quantized output sampled at L times the Nyquist rate.

Time is measured in symbol periods 1/(2W). Per symbol the decoder sees the
2L - 1 hard-limited samples at offsets l/L, l = -L+1 .. L-1, and combines
them linearly with weights beta. The transmit pulse is a superposition of
shifted sincs, g(t) = sum_v gamma_v sinc(t - v/L), with unit energy
gamma' Theta gamma = 1.

SNR convention: the native parameter is ``snr = es / (sigma2 / 2)`` where
sigma2 / 2 is the per-sample noise variance. A :class:`ChannelConfig` passed
to this module always carries the per-sample variance in ``sigma2``, so
``config.snr`` is the native SNR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import numerics
from .errors import DomainError, NumericalError
from .gmi_core import ChannelConfig, GmiResult, gmi_from_delta
from .numerics import SymMatrix

MAX_L = 32
R_TOL = 1e-12


def nyquist_to_supernyq_snr(snr: float) -> float:
    """es / sigma2 with sigma2 the noise spectral level -> es / (sigma2 / 2)."""
    return 2.0 * snr


def supernyq_to_nyquist_snr(snr: float) -> float:
    return 0.5 * snr


def _check_l(l: int, lo: int = 1) -> int:
    if not isinstance(l, (int, np.integer)) or isinstance(l, bool) or not lo <= l <= MAX_L:
        raise DomainError(f"oversampling factor must be an integer in [{lo}, {MAX_L}], got {l!r}")
    return int(l)


def _check_snr(snr: float) -> float:
    snr = float(snr)
    if not snr >= 0.0 or math.isnan(snr):
        raise DomainError(f"snr must be non-negative, got {snr!r}")
    return snr


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplerConfig:
    """Oversampling factor L. ``offset`` is the constant shift (in symbol
    periods) that centres the 2L - 1 samples on the symbol pulse; the
    analysis uses the centred indices directly, so it only documents the
    absolute sampling instants."""

    l: int

    def __post_init__(self):
        _check_l(self.l)

    @property
    def offset(self) -> float:
        return (self.l - 1) / self.l

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.l + 1, self.l)

    @property
    def width(self) -> int:
        return 2 * self.l - 1


@dataclass(frozen=True)
class PulseSpec:
    """Coefficients gamma_{-L+1} .. gamma_{L-1} of the sinc superposition."""

    gammas: tuple

    def __post_init__(self):
        g = tuple(float(v) for v in self.gammas)
        if len(g) % 2 == 0 or len(g) > 2 * MAX_L - 1:
            raise DomainError("pulse needs 2L - 1 coefficients")
        object.__setattr__(self, "gammas", g)
        energy = self.energy()
        if abs(energy - 1.0) > 1e-10:
            raise DomainError(f"pulse energy gamma' Theta gamma = {energy!r}, expected 1")

    @property
    def l(self) -> int:
        return (len(self.gammas) + 1) // 2

    @property
    def array(self) -> np.ndarray:
        return np.array(self.gammas)

    def energy(self) -> float:
        g = np.array(self.gammas)
        return float(g @ theta_matrix((len(g) + 1) // 2).array @ g)

    def __call__(self, t):
        """g(t) in symbol-time units."""
        t = np.asarray(t, dtype=float)
        shifts = np.arange(-self.l + 1, self.l) / self.l
        return np.sum(np.array(self.gammas)[:, None] * np.sinc(t.reshape(1, -1) - shifts[:, None]), axis=0).reshape(t.shape)

    @classmethod
    def sinc(cls, l: int) -> "PulseSpec":
        l = _check_l(l)
        g = np.zeros(2 * l - 1)
        g[l - 1] = 1.0
        return cls(tuple(g))


@dataclass(frozen=True)
class CorrelationSet:
    """Second-order statistics of the hard-limited samples of symbol 0.

    ``b[l] = E[x_0 w_{0,l}]`` and ``omega[u, l] = E[w_{0,u} w_{0,l}]``; the
    SNR-free ``b0``, ``omega0`` (arcsin-sinc) and ``theta`` are the sinc-pulse
    normalizations.
    """

    b: np.ndarray
    omega: SymMatrix
    b0: np.ndarray
    omega0: SymMatrix
    theta: SymMatrix
    r: SymMatrix


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

def _lag_matrix(l: int) -> np.ndarray:
    idx = np.arange(-l + 1, l)
    return (idx[:, None] - idx[None, :]) / l


def theta_matrix(l: int) -> SymMatrix:
    """Theta = [sinc((l - u) / L)], (2L - 1) x (2L - 1)."""
    return SymMatrix(np.sinc(_lag_matrix(_check_l(l))))


def omega0_matrix(l: int) -> SymMatrix:
    """Omega_0 = [arcsin sinc((l - u) / L)] in radians, without the 2/pi factor."""
    return SymMatrix(np.arcsin(np.clip(np.sinc(_lag_matrix(_check_l(l))), -1.0, 1.0)))


def b0_vector(l: int) -> np.ndarray:
    l = _check_l(l)
    return np.sinc(np.arange(-l + 1, l) / l)


def sinc_quadratic_form(l: int) -> float:
    """b0' Omega_0^{-1} b0."""
    b0 = b0_vector(l)
    return float(b0 @ numerics.solve_spd(omega0_matrix(l), b0))


# ---------------------------------------------------------------------------
# GMI
# ---------------------------------------------------------------------------

def sinc_pulse_gmi(l: int, snr: float) -> GmiResult:
    """GMI with the sinc pulse: delta = snr / (snr + 1) * b0' Omega_0^{-1} b0."""
    snr = _check_snr(snr)
    qf = sinc_quadratic_form(l)
    if math.isinf(snr):
        return gmi_from_delta(qf)
    return gmi_from_delta(snr / (snr + 1.0) * qf)


def general_correlations(pulse: PulseSpec, l: int, snr: float, es: float = 1.0) -> CorrelationSet:
    """b and Omega for an arbitrary sinc-superposition pulse.

    The infinite ISI sums collapse through sum_k sinc(a - k) sinc(b - k) =
    sinc(a - b), so every entry is a finite sum over the pulse coefficients.
    """
    l = _check_l(l)
    snr = _check_snr(snr)
    if pulse.l != l:
        raise DomainError(f"pulse has L = {pulse.l}, expected {l}")
    gam = pulse.array
    theta = theta_matrix(l)
    lag = _lag_matrix(l)
    tg = theta.array @ gam
    frac = 1.0 if math.isinf(snr) else snr / (snr + 1.0)
    b = math.sqrt(2.0 * es / math.pi) * math.sqrt(frac) * tg

    # sum_{a,b} gamma_a gamma_b sinc((l - u - a + b) / L), a and b on the same index grid
    idx = np.arange(-l + 1, l)
    ab = (idx[None, :] - idx[:, None]) / l  # (a, b) -> (b - a) / L
    signal = np.empty_like(lag)
    w = np.outer(gam, gam)
    for i in range(lag.shape[0]):
        for j in range(i, lag.shape[1]):
            signal[i, j] = signal[j, i] = float(np.sum(w * np.sinc(lag[i, j] + ab)))
    if math.isinf(snr):
        r = signal
    else:
        r = (snr * signal + theta.array) / (snr + 1.0)
    excess = np.max(np.abs(r)) - 1.0
    if excess > R_TOL:
        raise NumericalError(f"correlation exceeds 1 by {excess:.3e}")
    r = np.clip(r, -1.0, 1.0)
    omega = SymMatrix((2.0 / math.pi) * np.arcsin(r))
    return CorrelationSet(b, omega, b0_vector(l), omega0_matrix(l), theta, SymMatrix(r))


def supernyq_gmi(cs: CorrelationSet, es: float = 1.0) -> tuple[GmiResult, np.ndarray]:
    """GMI and optimal weights: delta = b' Omega^{-1} b / es,
    beta = es / (b' Omega^{-1} b) * Omega^{-1} b."""
    sol = numerics.solve_spd(cs.omega, cs.b)
    qf = float(cs.b @ sol)
    if qf <= 0.0:
        return gmi_from_delta(0.0), np.zeros_like(cs.b)
    delta = qf / es
    if delta > 1.0 + 1e-9:
        raise NumericalError(f"b' Omega^-1 b / es = {delta!r} exceeds 1")
    return gmi_from_delta(min(delta, 1.0)), es / qf * sol


@dataclass(frozen=True)
class SincAsymptotics:
    quadratic_form: float
    high_snr_bits: float
    low_snr_slope: float


def sinc_asymptotics(l: int) -> SincAsymptotics:
    qf = sinc_quadratic_form(l)
    return SincAsymptotics(qf, 0.5 * math.log2(1.0 / (1.0 - qf)), qf / 2.0)


def optimize_pulse_low_snr(l: int) -> tuple[PulseSpec, float]:
    """Pulse maximizing the low-SNR slope gamma' Theta Omega_0^{-1} Theta gamma / 2
    under gamma' Theta gamma = 1.

    With gamma~ = Theta^{1/2} gamma the problem becomes a Rayleigh quotient of
    Theta^{1/2} Omega_0^{-1} Theta^{1/2}; its top eigenpair gives the optimum.
    Theta is numerically rank deficient for larger L, so the back-transform
    uses a floored pseudo-inverse square root.
    """
    l = _check_l(l, lo=2)
    theta = theta_matrix(l)
    omega0 = omega0_matrix(l)
    root = numerics.sqrt_spd(theta).array
    m = root @ numerics.solve_spd(omega0, root)
    lam, vec = numerics.sym_eig(SymMatrix(m))
    gam = numerics.inv_sqrt_spd(theta).array @ vec[:, 0]
    gam /= math.sqrt(float(gam @ theta.array @ gam))
    if gam[np.argmax(np.abs(gam))] < 0:
        gam = -gam
    # slope evaluated at the recovered pulse, which is what the pulse achieves
    tg = theta.array @ gam
    slope = 0.5 * float(tg @ numerics.solve_spd(omega0, tg))
    return PulseSpec(tuple(gam)), slope


# ---------------------------------------------------------------------------
# Antipodal inputs, L = 2
# ---------------------------------------------------------------------------

class AntipodalL2Result(NamedTuple):
    beta: float
    eta: float
    kappa: float
    eta_stderr: float
    kappa_stderr: float
    samples: int


def beta_from_eta_kappa(eta: float, kappa: float, es: float) -> float:
    """Solution of tanh(2 sqrt(es) beta) = (2 kappa - 1) / (2 eta)."""
    num = 2.0 * (eta + kappa) - 1.0
    den = 2.0 * (eta - kappa) + 1.0
    if num <= 0.0 or den <= 0.0:
        raise NumericalError(
            f"log argument not positive: 2(eta+kappa)-1 = {num:.6g}, 2(eta-kappa)+1 = {den:.6g} "
            f"(eta = {eta:.6g}, kappa = {kappa:.6g})"
        )
    return math.log(num / den) / (4.0 * math.sqrt(es))


def antipodal_l2_binary(config: ChannelConfig, isi_window: int = 64, samples: int = 200_000,
                        seed: int = 0) -> AntipodalL2Result:
    """Weight beta for antipodal inputs, sinc pulse, L = 2 and equal weights.

    The two samples used are the symmetric ones at offsets -1/2 and +1/2.
    eta = P(w_{-1} = w_{+1} = 1) and kappa = P(w_{-1} = 1 | x_0 = +sqrt(es))
    are estimated by Monte Carlo over antipodal interference sequences;
    ``config.sigma2`` is the per-sample noise variance.
    """
    from . import simlab

    if samples < 1000:
        raise DomainError("samples must be at least 1000")
    est = simlab.estimate_eta_kappa(config, isi_window=isi_window, samples=samples, seed=seed)
    beta = beta_from_eta_kappa(est.eta, est.kappa, config.es)
    return AntipodalL2Result(beta, est.eta, est.kappa, est.eta_stderr, est.kappa_stderr, est.samples)


def antipodal_l2_eta_no_isi(config: ChannelConfig) -> tuple[float, float]:
    """Exact (eta, kappa) when interference is switched off.

    Samples at -1/2 and +1/2 see x_0 sinc(1/2) plus noise with correlation
    sinc(1) = 0, so given x_0 the two signs are independent.
    """
    q = numerics.q_function(-math.sqrt(config.es) * (2.0 / math.pi) / math.sqrt(config.sigma2))
    return 0.5 * (q * q + (1.0 - q) ** 2), q
