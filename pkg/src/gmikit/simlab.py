"""Seeded Monte-Carlo checks: moment estimation, random-codebook
nearest-neighbour decoding, and a sampled super-Nyquist channel.

All randomness comes from :class:`gmikit.rng.CounterRNG`, with one stream
per (purpose, trial or block), so results do not depend on chunking or on
the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple, Union

import numpy as np
from scipy import stats

from . import numerics, supernyq
from .errors import DomainError, EvaluationError, ResourceCapError
from .gmi_core import ChannelConfig, DistortionModel, GmiResult, gmi_from_moments, moments_by_quadrature
from .quantizer import QuantizerSpec, quantizer_moments
from .rng import CounterRNG

MAX_EXHAUSTIVE_MESSAGES = 2 ** 20
MAX_EXHAUSTIVE_WORK = 2 ** 33      # codeword symbols generated over all trials
MAX_BLOCK_LENGTH = 1 << 16
MAX_TRIALS = 1_000_000
CHUNK = 1 << 18
DEFAULT_ISI_WINDOW = 64


# ---------------------------------------------------------------------------
# Moment estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimate:
    corr_mean: float
    corr_stderr: float
    power_mean: float
    power_stderr: float
    samples: int
    seed: int


def _as_model(model) -> DistortionModel:
    if isinstance(model, QuantizerSpec):
        return model.model()
    if isinstance(model, DistortionModel):
        return model
    raise DomainError(f"unsupported model type {type(model).__name__}")


def estimate_moments(model, config: ChannelConfig, samples: int, seed: int = 0) -> MomentEstimate:
    """Sample means of f(x, z) x and f(x, z)^2 with x ~ N(0, es), z ~ N(0, sigma2).

    Draws come from streams ("moments-x",) and ("moments-z",), indexed by
    draw number. Standard errors are sample standard deviations over sqrt(n).
    """
    if samples < 1000:
        raise DomainError("samples must be at least 1000")
    f = _as_model(model)
    rng = CounterRNG(seed)
    sx, sz = math.sqrt(config.es), math.sqrt(config.sigma2)
    acc = np.zeros(4)
    for start in range(0, samples, CHUNK):
        count = min(CHUNK, samples - start)
        x = sx * rng.normal(("moments-x",), count, start)
        z = sz * rng.normal(("moments-z",), count, start)
        w = np.asarray(f(x, z), dtype=float)
        bad = ~np.isfinite(w)
        if bad.any():
            i = int(np.argmax(bad))
            raise EvaluationError(f"model output not finite at x = {x[i]!r}, z = {z[i]!r}")
        c = w * x
        p = w * w
        acc += (c.sum(), (c * c).sum(), p.sum(), (p * p).sum())
    n = float(samples)
    cm, pm = acc[0] / n, acc[2] / n
    cv = max(acc[1] / n - cm * cm, 0.0) * n / (n - 1.0)
    pv = max(acc[3] / n - pm * pm, 0.0) * n / (n - 1.0)
    return MomentEstimate(cm, math.sqrt(cv / n), pm, math.sqrt(pv / n), samples, seed)


# ---------------------------------------------------------------------------
# Super-Nyquist channel
# ---------------------------------------------------------------------------

class SupernyqSamples(NamedTuple):
    x: np.ndarray   # (n,) symbols
    y: np.ndarray   # (n, 2L - 1) unquantized samples at offsets l / L
    w: np.ndarray   # sgn(y)


def _upsample(seq: np.ndarray, l: int) -> np.ndarray:
    """Band-limited periodic interpolation of an odd-length sequence onto a
    grid l times finer; value at j is sum_m seq_m D(j / l - m) with the
    Dirichlet kernel D(t) = sin(pi t) / (N sin(pi t / N))."""
    n = seq.shape[0]
    if l == 1:
        return seq.copy()
    spec = np.fft.rfft(seq)
    fine = np.fft.irfft(spec, n * l) * l
    return fine


def _sign(y: np.ndarray) -> np.ndarray:
    return np.where(y >= 0.0, 1.0, -1.0)


def simulate_supernyq_channel(pulse: supernyq.PulseSpec, l: int, config: ChannelConfig, n: int,
                              seed: int = 0, isi_window: int = DEFAULT_ISI_WINDOW,
                              inputs: str = "gaussian", block: int = 0,
                              x: np.ndarray | None = None) -> SupernyqSamples:
    """Hard-limited samples w_{k,l} = sgn(y(k + l/L)) for n consecutive symbols.

    ``config.sigma2`` is the per-sample noise variance. With ``isi_window > 0``
    the n symbols are padded with ``isi_window`` random symbols on each side
    and the whole block is treated as one period: signal and noise are the
    band-limited (periodic sinc) interpolations of i.i.d. sequences, which
    reproduces the stationary covariance sinc((l - u)/L) up to a relative
    error of order (pi t / N)^2 at lag t. With ``isi_window == 0`` every
    symbol is observed in isolation and the noise of its 2L - 1 samples is
    drawn from the factorized window covariance.

    ``x`` may supply the n central symbols (a codeword); padding symbols are
    then still drawn from the generator.
    """
    l = supernyq._check_l(l)
    if pulse.l != l:
        raise DomainError(f"pulse has L = {pulse.l}, expected {l}")
    if n < 1 or n > MAX_BLOCK_LENGTH:
        raise ResourceCapError(f"block length must be in [1, {MAX_BLOCK_LENGTH}]")
    if isi_window < 0:
        raise DomainError("isi_window must be non-negative")
    if inputs not in ("gaussian", "antipodal"):
        raise DomainError(f"unknown input type {inputs!r}")
    rng = CounterRNG(seed)
    amp = math.sqrt(config.es)
    noise_sd = math.sqrt(config.sigma2)
    width = 2 * l - 1
    offsets = np.arange(-l + 1, l)

    def draw_symbols(stream, count):
        if inputs == "gaussian":
            return amp * rng.normal(stream, count)
        return amp * rng.signs(stream, count)

    if x is None:
        x_c = draw_symbols(("sn-x", block), n)
    else:
        x_c = np.asarray(x, dtype=float)
        if x_c.shape != (n,):
            raise DomainError(f"x must have shape ({n},)")

    if isi_window == 0:
        g = pulse(offsets / l)
        root = numerics.sqrt_spd(supernyq.theta_matrix(l)).array
        z = noise_sd * rng.normal(("sn-z", block), n * width).reshape(n, width) @ root
        y = x_c[:, None] * g[None, :] + z
        return SupernyqSamples(x_c, y, _sign(y))

    total = n + 2 * isi_window
    if total % 2 == 0:
        total += 1
    pad_hi = total - n - isi_window
    x_all = np.concatenate((draw_symbols(("sn-pad-lo", block), isi_window), x_c,
                            draw_symbols(("sn-pad-hi", block), pad_hi)))
    zeta = noise_sd * rng.normal(("sn-z", block), total)
    s_fine = _upsample(x_all, l)
    gam = pulse.array
    # g(t) = sum_v gamma_v sinc(t - v/L): a circular FIR filter on the fine grid
    sig = np.zeros_like(s_fine)
    for v, gv in zip(offsets, gam):
        if gv != 0.0:
            sig += gv * np.roll(s_fine, v)
    y_fine = sig + _upsample(zeta, l)
    centres = l * (isi_window + np.arange(n))
    y = y_fine[(centres[:, None] + offsets[None, :]) % (total * l)]
    return SupernyqSamples(x_c, y, _sign(y))


@dataclass(frozen=True)
class ArcsineCheck:
    """Empirical E[w_u w_l] and E[x_0 w_l] with batch-means standard errors."""

    omega: np.ndarray
    omega_stderr: np.ndarray
    b: np.ndarray
    b_stderr: np.ndarray
    samples: int


def estimate_supernyq_correlations(pulse: supernyq.PulseSpec, l: int, config: ChannelConfig,
                                   blocks: int, n: int = 4096, seed: int = 0,
                                   isi_window: int = DEFAULT_ISI_WINDOW) -> ArcsineCheck:
    """Average second-order statistics over independent blocks (Gaussian inputs)."""
    if blocks < 2:
        raise DomainError("need at least two blocks for a standard error")
    om, bb = [], []
    for k in range(blocks):
        s = simulate_supernyq_channel(pulse, l, config, n, seed, isi_window, block=k)
        om.append(s.w.T @ s.w / n)
        bb.append(s.x @ s.w / n)
    om = np.array(om)
    bb = np.array(bb)
    return ArcsineCheck(om.mean(0), om.std(0, ddof=1) / math.sqrt(blocks),
                        bb.mean(0), bb.std(0, ddof=1) / math.sqrt(blocks), blocks * n)


class EtaKappa(NamedTuple):
    eta: float
    kappa: float
    eta_stderr: float
    kappa_stderr: float
    samples: int


def estimate_eta_kappa(config: ChannelConfig, isi_window: int = DEFAULT_ISI_WINDOW,
                       samples: int = 200_000, seed: int = 0, block_size: int = 8192) -> EtaKappa:
    """Monte-Carlo eta = P(w_{-1} = w_{+1} = 1) and kappa = P(w_{-1} = 1 | x_0 > 0)
    for antipodal inputs, sinc pulse and L = 2.

    Symmetry is used to halve the variance: eta is half the probability that
    the two signs agree, kappa the probability that w_{-1} agrees with x_0.
    """
    pulse = supernyq.PulseSpec.sinc(2)
    blocks = max(2, -(-samples // block_size))
    per = -(-samples // blocks)
    etas, kappas = [], []
    for k in range(blocks):
        s = simulate_supernyq_channel(pulse, 2, config, per, seed, isi_window, inputs="antipodal", block=k)
        wm, wp = s.w[:, 0], s.w[:, 2]
        etas.append(0.5 * np.mean(wm == wp))
        kappas.append(np.mean(wm == np.sign(s.x)))
    etas, kappas = np.array(etas), np.array(kappas)
    return EtaKappa(float(etas.mean()), float(kappas.mean()),
                    float(etas.std(ddof=1) / math.sqrt(blocks)),
                    float(kappas.std(ddof=1) / math.sqrt(blocks)), blocks * per)


# ---------------------------------------------------------------------------
# Nearest-neighbour decoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupernyqModel:
    """Binary quantization with L-fold oversampling and pulse ``pulse``."""

    l: int
    pulse: supernyq.PulseSpec | None = None

    def __post_init__(self):
        supernyq._check_l(self.l)
        if self.pulse is None:
            object.__setattr__(self, "pulse", supernyq.PulseSpec.sinc(self.l))
        elif self.pulse.l != self.l:
            raise DomainError("pulse length does not match L")


Model = Union[DistortionModel, QuantizerSpec, SupernyqModel]


def model_gmi(model: Model, config: ChannelConfig):
    """GMI and default decoder scaling (a_opt, or beta for super-Nyquist)."""
    if isinstance(model, SupernyqModel):
        cs = supernyq.general_correlations(model.pulse, model.l, config.snr, es=config.es)
        return supernyq.supernyq_gmi(cs, es=config.es)
    if isinstance(model, QuantizerSpec):
        g = gmi_from_moments(quantizer_moments(model, config), config)
    else:
        g = gmi_from_moments(moments_by_quadrature(model, config), config)
    return g, g.a_opt


@dataclass(frozen=True)
class SimConfig:
    """One decoding experiment.

    ``method`` is "exhaustive" (draw every codeword and take the argmin),
    "conditional" (sample the error indicator from its exact conditional
    probability given the received block) or "auto" (exhaustive when the
    codebook fits the cap).
    """

    model: Model
    config: ChannelConfig
    n: int
    rate_nats: float
    trials: int
    seed: int = 0
    decoder_scaling: float | tuple | None = None
    method: str = "auto"
    isi_window: int = DEFAULT_ISI_WINDOW
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not 1 <= self.n <= MAX_BLOCK_LENGTH:
            raise ResourceCapError(f"block length must be an integer in [1, {MAX_BLOCK_LENGTH}]")
        if not isinstance(self.trials, (int, np.integer)) or not 1 <= self.trials <= MAX_TRIALS:
            raise DomainError(f"trials must be an integer in [1, {MAX_TRIALS}]")
        if not (self.rate_nats >= 0 and math.isfinite(self.rate_nats)):
            raise DomainError("rate must be finite and non-negative")
        if self.log_num_messages < math.log(2.0) - 1e-12:
            raise DomainError("n * rate must allow at least two messages")
        if self.method not in ("auto", "exhaustive", "conditional"):
            raise DomainError(f"unknown method {self.method!r}")
        if self.resolved_method == "exhaustive":
            if self.log_num_messages > math.log(MAX_EXHAUSTIVE_MESSAGES) + 1e-12:
                raise ResourceCapError(
                    f"codebook of e^{self.n * self.rate_nats:.1f} messages exceeds 2^20; "
                    f"reduce n * rate below {math.log(MAX_EXHAUSTIVE_MESSAGES):.2f} nats "
                    "or use the conditional method"
                )
            if self.num_messages * self.n * self.trials > MAX_EXHAUSTIVE_WORK:
                raise ResourceCapError("num_messages * n * trials exceeds the exhaustive work cap 2^33")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    @property
    def log_num_messages(self) -> float:
        nr = self.n * self.rate_nats
        if nr < 40.0:
            return math.log(math.floor(math.exp(nr) + 1e-9))
        return nr

    @property
    def num_messages(self) -> int:
        nr = self.n * self.rate_nats
        return math.floor(math.exp(nr) + 1e-9) if nr < 700 else math.inf

    @property
    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        return "exhaustive" if self.n * self.rate_nats <= math.log(MAX_EXHAUSTIVE_MESSAGES) else "conditional"


@dataclass(frozen=True)
class SimResult:
    block_errors: int
    trials: int
    error_rate: float
    wilson_ci95: tuple
    method: str = "exhaustive"
    mean_error_probability: float | None = None
    gmi_nats: float | None = None


def wilson_interval(errors: int, trials: int) -> tuple[float, float]:
    ci = stats.binomtest(int(errors), int(trials)).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _log_competitors(sim: SimConfig) -> float:
    """log(num_messages - 1)."""
    nr = sim.n * sim.rate_nats
    if nr < 40.0:
        return math.log(math.floor(math.exp(nr) + 1e-9) - 1)
    return nr


def _channel(sim: SimConfig, rng: CounterRNG, trial: int, x: np.ndarray):
    """Decoder input v with metric sum (v - scale * x_m)^2, and the scale."""
    cfg = sim.config
    if isinstance(sim.model, SupernyqModel):
        beta = np.asarray(sim.decoder_scaling, dtype=float)
        s = simulate_supernyq_channel(sim.model.pulse, sim.model.l, cfg, sim.n, rng.seed,
                                      sim.isi_window, block=trial, x=x)
        return s.w @ beta, 1.0
    z = math.sqrt(cfg.sigma2) * rng.normal(("noise", trial), sim.n)
    w = np.asarray(_as_model(sim.model)(x, z), dtype=float)
    return w, float(sim.decoder_scaling)


def _trial(sim: SimConfig, trial: int, log_comp: float) -> tuple[bool, float | None]:
    rng = CounterRNG(sim.seed)
    es = sim.config.es
    n = sim.n
    x1 = math.sqrt(es) * rng.normal(("codeword", trial), n)
    v, a = _channel(sim, rng, trial, x1)
    d1 = float(np.sum((v - a * x1) ** 2))

    if sim.resolved_method == "exhaustive":
        m_total = sim.num_messages
        best = d1
        # rows 1 .. M-1 of the codebook; message 1 (row 0) wins ties
        per_chunk = max(1, CHUNK // n)
        for start in range(1, m_total, per_chunk):
            count = min(per_chunk, m_total - start)
            cb = math.sqrt(es) * rng.normal(("codebook", trial), count * n, start * n).reshape(count, n)
            d = np.sum((v[None, :] - a * cb) ** 2, axis=1)
            if d.min() < best:
                return True, None
        return False, None

    # Competitor metrics are i.i.d.: sum (v - a x)^2 = a^2 es * noncentral chi2(n, lam)
    if a == 0.0:
        raise DomainError("decoder scaling must be non-zero")
    c = a * a * es
    lam = float(np.sum(v * v)) / c
    log_p = float(stats.ncx2.logcdf(d1 / c, n, lam)) if lam > 0 else float(stats.chi2.logcdf(d1 / c, n))
    log_pe = _log_error_probability(log_comp, log_p)
    pe = math.exp(log_pe)
    u = rng.uniform(("decide", trial), 1)[0]
    return bool(u < pe), pe


def _log_error_probability(log_comp: float, log_p: float) -> float:
    """log(1 - (1 - p)^K) with K = exp(log_comp) competitors, in the log domain."""
    if log_p == -math.inf:
        return -math.inf
    if log_p >= 0.0:
        return 0.0
    # y = -log(1 - p) per competitor; P(correct) = exp(-K y)
    log_y = log_p if log_p < -18.0 else math.log(-math.log1p(-math.exp(log_p)))
    log_y += log_comp
    if log_y < -20.0:
        return log_y
    if log_y > 700.0:
        return 0.0
    return math.log(-math.expm1(-math.exp(log_y)))


def run_nn_decoding(sim: SimConfig) -> SimResult:
    """Random Gaussian codebook, message 1 sent, nearest-neighbour decoding.

    Each trial draws a fresh codebook. In exhaustive mode every competitor
    codeword is generated and a block error is declared when one of them is
    strictly closer (ties go to the lowest index, i.e. message 1). In
    conditional mode the received block is simulated exactly, and because
    competitors are i.i.d. N(0, es I) the probability that none beats message
    1 is (1 - p)^(M-1) with p a noncentral chi-square CDF; the error
    indicator is then drawn with that probability. Both modes have the same
    error distribution; the conditional one also reports the average error
    probability.
    """
    scaling = sim.decoder_scaling
    g, default = model_gmi(sim.model, sim.config)
    if scaling is None:
        scaling = default
        if isinstance(sim.model, SupernyqModel):
            scaling = tuple(float(v) for v in scaling)
        sim = replace(sim, decoder_scaling=scaling)
    log_comp = _log_competitors(sim)
    trials = range(sim.trials)
    if sim.workers > 1:
        with ThreadPoolExecutor(max_workers=sim.workers) as ex:
            outcomes = list(ex.map(lambda t: _trial(sim, t, log_comp), trials))
    else:
        outcomes = [_trial(sim, t, log_comp) for t in trials]
    errors = sum(1 for e, _ in outcomes if e)
    method = sim.resolved_method
    mean_pe = None
    if method == "conditional":
        mean_pe = float(math.fsum(p for _, p in outcomes) / sim.trials)
    return SimResult(errors, sim.trials, errors / sim.trials, wilson_interval(errors, sim.trials),
                     method, mean_pe, g.gmi_nats)
