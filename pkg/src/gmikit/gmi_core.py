"""GMI of a Gaussian-codebook, nearest-neighbour-decoded channel under a
memoryless distortion, reduced to two moments of the distorted output.

With ``x ~ N(0, es)`` and ``z ~ N(0, sigma2)`` the observation is
``w = f(x, z)``. The squared input/output correlation coefficient

    delta = E[w x]^2 / (es * E[w^2])

fixes everything: effective SNR ``delta / (1 - delta)``, GMI
``0.5 * ln(1 + snr_e)`` nats, and the decoder scaling ``E[w x] / es``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import numerics
from .errors import (
    ConvergenceError,
    DegenerateDistortionError,
    DomainError,
    EvaluationError,
)

LN2 = math.log(2.0)

DEFAULT_ORDER = 64


@dataclass(frozen=True)
class ChannelConfig:
    """Symbol energy and per-sample noise variance of a real Gaussian channel."""

    es: float
    sigma2: float

    def __post_init__(self):
        if not (self.es > 0 and math.isfinite(self.es)):
            raise DomainError(f"es must be positive and finite, got {self.es!r}")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise DomainError(f"sigma2 must be positive and finite, got {self.sigma2!r}")

    @property
    def snr(self) -> float:
        return self.es / self.sigma2

    @classmethod
    def from_snr(cls, snr: float, es: float = 1.0) -> "ChannelConfig":
        return cls(es=es, sigma2=es / snr)

    @classmethod
    def from_snr_db(cls, snr_db: float, es: float = 1.0) -> "ChannelConfig":
        return cls.from_snr(10.0 ** (snr_db / 10.0), es)


OUTPUT, INPUT, COMPOSED, GENERAL = "output", "input", "composed", "general"


@dataclass(frozen=True)
class DistortionModel:
    """A deterministic memoryless map from (input, noise) to the observation.

    kind
        ``"output"``: w = f_o(x + z); ``"input"``: w = f_i(x) + z;
        ``"composed"``: w = f_o(f_i(x) + z); ``"general"``: w = f(x, z).
    breakpoints
        Points where ``f_o`` (or ``f_i``) is discontinuous or kinked. When
        present, 1-D expectations are integrated piecewise by adaptive
        quadrature instead of Gauss-Hermite.
    thresholds, levels
        Set only by :meth:`quantizer`; enable exact cell-probability
        evaluation for the antipodal GMI.

    Maps must be vectorized over numpy arrays and stateless.
    """

    kind: str
    f_out: Callable | None = None
    f_in: Callable | None = None
    f_xz: Callable | None = None
    breakpoints: tuple = ()
    name: str = ""
    thresholds: tuple | None = field(default=None, repr=False)
    levels: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        need = {
            OUTPUT: ("f_out",),
            INPUT: ("f_in",),
            COMPOSED: ("f_out", "f_in"),
            GENERAL: ("f_xz",),
        }
        if self.kind not in need:
            raise DomainError(f"unknown distortion kind {self.kind!r}")
        for attr in need[self.kind]:
            if getattr(self, attr) is None:
                raise DomainError(f"{self.kind} model needs {attr}")

    def __call__(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if self.kind == OUTPUT:
            return np.asarray(self.f_out(x + z), dtype=float)
        if self.kind == INPUT:
            return np.asarray(self.f_in(x), dtype=float) + z
        if self.kind == COMPOSED:
            return np.asarray(self.f_out(np.asarray(self.f_in(x), dtype=float) + z), dtype=float)
        return np.asarray(self.f_xz(x, z), dtype=float)

    # -- stock models -----------------------------------------------------

    @classmethod
    def identity(cls) -> "DistortionModel":
        return cls(OUTPUT, f_out=lambda y: y, name="identity")

    @classmethod
    def hard_limiter(cls) -> "DistortionModel":
        """Binary symmetric quantizer, w = sgn(x + z)."""
        return cls.quantizer((), (1.0,), name="sgn")

    @classmethod
    def clipper(cls, amplitude: float) -> "DistortionModel":
        """Receive-side soft limiter: y clipped to [-amplitude, amplitude]."""
        a = float(amplitude)
        return cls(OUTPUT, f_out=lambda y: np.clip(y, -a, a), breakpoints=(-a, a), name=f"clip({a:g})")

    @classmethod
    def transmit_clipper(cls, amplitude: float) -> "DistortionModel":
        """Transmit-side soft limiter: f_i(x) = clip(x, -amplitude, amplitude)."""
        a = float(amplitude)
        return cls(INPUT, f_in=lambda x: np.clip(x, -a, a), breakpoints=(-a, a), name=f"txclip({a:g})")

    @classmethod
    def quantizer(cls, thresholds: Sequence[float], levels: Sequence[float], name: str = "") -> "DistortionModel":
        """2M-level symmetric quantizer on y = x + z.

        ``thresholds`` are the M-1 interior positive thresholds in increasing
        order, ``levels`` the M non-negative reconstruction values.
        """
        th = tuple(float(a) for a in thresholds)
        lv = tuple(float(r) for r in levels)
        if len(lv) != len(th) + 1:
            raise DomainError("need exactly one more level than interior thresholds")
        edges = np.array(th)
        values = np.array(lv)

        def f_out(y):
            y = np.asarray(y, dtype=float)
            idx = np.searchsorted(edges, np.abs(y), side="right")
            return np.sign(y) * values[idx]

        bps = tuple(sorted({0.0, *th, *(-a for a in th)}))
        return cls(OUTPUT, f_out=f_out, breakpoints=bps, name=name or f"quantizer(M={len(lv)})",
                   thresholds=th, levels=lv)


@dataclass(frozen=True)
class DistortionMoments:
    """E[f x] (``corr``) and E[f^2] (``power``) of a distortion model."""

    corr: float
    power: float
    provenance: str = "closed-form"
    es: float | None = None

    def __post_init__(self):
        if self.provenance not in ("closed-form", "quadrature", "monte-carlo"):
            raise DomainError(f"unknown provenance {self.provenance!r}")
        if not (math.isfinite(self.corr) and math.isfinite(self.power)):
            raise EvaluationError("moments must be finite")
        if self.power < 0:
            raise DomainError("power must be non-negative")
        if self.es is not None:
            self.check(self.es)

    def check(self, es: float) -> None:
        # Cauchy-Schwarz with a little room for rounding in the inputs.
        if self.corr ** 2 > es * self.power * (1.0 + 1e-9) + 1e-300:
            raise DomainError(
                f"moments violate Cauchy-Schwarz: corr^2={self.corr ** 2:.6g} > es*power={es * self.power:.6g}"
            )


@dataclass(frozen=True)
class GmiResult:
    """Delta, effective SNR, GMI in nats and bits, and the decoder scaling.

    ``a_opt`` is a float for real channels, a complex number for complex
    channels, and ``None`` for super-Nyquist results (whose decoder uses a
    weight vector instead). ``snr_e`` is ``inf`` when delta == 1.
    """

    delta: float
    snr_e: float
    gmi_nats: float
    gmi_bits: float
    a_opt: float | complex | None = None
    complex_channel: bool = False

    @property
    def infinite(self) -> bool:
        return math.isinf(self.snr_e)


def gmi_from_delta(delta: float, a_opt=None, complex_channel: bool = False) -> GmiResult:
    """Effective SNR and GMI for a squared correlation ``delta`` in [0, 1]."""
    if not -1e-12 <= delta <= 1.0 + 1e-12:
        raise DomainError(f"delta must lie in [0, 1], got {delta!r}")
    delta = min(max(delta, 0.0), 1.0)
    if delta == 1.0:
        snr_e = gmi = math.inf
    else:
        snr_e = delta / (1.0 - delta)
        # ln(1 + snr_e) = -ln(1 - delta)
        gmi = -math.log1p(-delta)
        if not complex_channel:
            gmi *= 0.5
    return GmiResult(delta, snr_e, gmi, gmi / LN2, a_opt, complex_channel)


def gmi_from_moments(moments: DistortionMoments, config: ChannelConfig) -> GmiResult:
    """GMI of the Gaussian-codebook ensemble with nearest-neighbour decoding."""
    moments.check(config.es)
    if moments.power <= 0.0:
        raise DegenerateDistortionError("distorted output has zero power")
    delta = moments.corr ** 2 / (config.es * moments.power)
    return gmi_from_delta(min(delta, 1.0), a_opt=moments.corr / config.es)


def transmit_side_gmi(fi_corr: float, fi_power: float, config: ChannelConfig) -> GmiResult:
    """GMI when only the transmitter distorts: w = f_i(x) + z.

    The returned ``a_opt`` is the Bussgang gain: f_i(x) - a_opt * x is
    uncorrelated with x.
    """
    if fi_power < 0:
        raise DomainError("fi_power must be non-negative")
    moments = DistortionMoments(fi_corr, fi_power + config.sigma2, "closed-form")
    if fi_corr ** 2 > config.es * fi_power * (1.0 + 1e-9) + 1e-300:
        raise DomainError("transmit-side moments violate Cauchy-Schwarz")
    return gmi_from_moments(moments, config)


def complex_gmi_from_moments(corr: complex, power: float, config: ChannelConfig) -> GmiResult:
    """Complex-valued channel: x ~ CN(0, es), z ~ CN(0, sigma2).

    ``corr`` is E[conj(f) x]. The GMI is ln(1 + snr_e) (no factor 1/2) and
    ``a_opt = conj(corr) / es`` rotates the correlation onto the positive
    real axis.
    """
    corr = complex(corr)
    if power < 0:
        raise DomainError("power must be non-negative")
    if abs(corr) ** 2 > config.es * power * (1.0 + 1e-9) + 1e-300:
        raise DomainError("complex moments violate Cauchy-Schwarz")
    if power <= 0.0:
        raise DegenerateDistortionError("distorted output has zero power")
    delta = abs(corr) ** 2 / (config.es * power)
    return gmi_from_delta(min(delta, 1.0), a_opt=corr.conjugate() / config.es, complex_channel=True)


# ---------------------------------------------------------------------------
# Moments by quadrature
# ---------------------------------------------------------------------------

def _piecewise_normal_expectation(g: Callable, var: float, breakpoints) -> float:
    """E[g(Y)], Y ~ N(0, var), by adaptive quadrature split at breakpoints."""
    sd = math.sqrt(var)
    edges = [-math.inf, *sorted(float(b) for b in breakpoints), math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue

        def integrand(y):
            val = float(g(np.asarray(y, dtype=float)))
            if not math.isfinite(val):
                raise EvaluationError(f"non-finite model output at y={y!r}")
            return val * math.exp(-0.5 * (y / sd) ** 2)

        part, _ = integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
        total += part
    return total / (sd * math.sqrt(2.0 * math.pi))


def moments_by_quadrature(
    model: DistortionModel,
    config: ChannelConfig,
    rule: numerics.QuadratureRule | None = None,
) -> DistortionMoments:
    """E[f x] and E[f^2] by numerical integration.

    Output-side models are reduced to 1-D integrals over y = x + z, using
    E[x | y] = y es / (es + sigma2). Input-side models are 1-D in x. Composed
    and general models use the tensor-product rule in (x, z). Models with
    declared breakpoints use adaptive quadrature on each smooth piece;
    otherwise the Gauss-Hermite ``rule`` (default order 64) is used, which
    is accurate to ~1e-10 for smooth maps only.
    """
    rule = rule or numerics.gauss_hermite(DEFAULT_ORDER)
    es, s2 = config.es, config.sigma2

    if model.kind == OUTPUT:
        var = es + s2
        f = model.f_out
        if model.breakpoints:
            power = _piecewise_normal_expectation(lambda y: f(y) ** 2, var, model.breakpoints)
            ey = _piecewise_normal_expectation(lambda y: y * f(y), var, model.breakpoints)
        else:
            power = rule.expect_normal(lambda y: np.asarray(f(y)) ** 2, var)
            ey = rule.expect_normal(lambda y: y * np.asarray(f(y)), var)
        corr = ey * es / var
    elif model.kind == INPUT:
        f = model.f_in
        if model.breakpoints:
            sig_power = _piecewise_normal_expectation(lambda x: f(x) ** 2, es, model.breakpoints)
            corr = _piecewise_normal_expectation(lambda x: x * f(x), es, model.breakpoints)
        else:
            sig_power = rule.expect_normal(lambda x: np.asarray(f(x)) ** 2, es)
            corr = rule.expect_normal(lambda x: x * np.asarray(f(x)), es)
        power = sig_power + s2
    else:
        scale = 1.0 / math.pi
        xs = math.sqrt(2.0 * es) * rule.nodes
        zs = math.sqrt(2.0 * s2) * rule.nodes
        X, Z = np.meshgrid(xs, zs, indexing="ij")
        W = np.outer(rule.weights, rule.weights)
        vals = model(X, Z)
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("non-finite model output at a quadrature node")
        corr = float(np.sum(W * vals * X)) * scale
        power = float(np.sum(W * vals * vals)) * scale

    if not (math.isfinite(corr) and math.isfinite(power)):
        raise EvaluationError("non-finite moment")
    return DistortionMoments(corr, max(power, 0.0), "quadrature")


# ---------------------------------------------------------------------------
# Antipodal codebook
# ---------------------------------------------------------------------------

def _log_cosh(u):
    u = np.abs(u)
    return u + np.log1p(np.exp(-2.0 * u)) - LN2


class _AntipodalTable:
    """Discrete distribution of w given x = +-sqrt(es), as (values, probs) pairs."""

    def __init__(self, model: DistortionModel, config: ChannelConfig, rule):
        amp = math.sqrt(config.es)
        sd = math.sqrt(config.sigma2)
        self.branches = []
        for x in (amp, -amp):
            if model.thresholds is not None:
                edges = np.concatenate(([0.0], model.thresholds, [math.inf]))
                lv = np.asarray(model.levels)
                # cell [a, b) of |y|, positive side and its mirror
                p_pos = numerics.q_diff((edges[:-1] - x) / sd, (edges[1:] - x) / sd)
                p_neg = numerics.q_diff((edges[:-1] + x) / sd, (edges[1:] + x) / sd)
                values = np.concatenate((lv, -lv))
                probs = np.concatenate((np.atleast_1d(p_pos), np.atleast_1d(p_neg)))
            else:
                z = math.sqrt(2.0) * sd * rule.nodes
                values = model(np.full_like(z, x), z)
                probs = rule.weights / numerics.SQRT_PI
                if not np.all(np.isfinite(values)):
                    raise EvaluationError("non-finite model output at a quadrature node")
            self.branches.append((x, values, probs))

    def expect(self, g) -> float:
        return 0.5 * sum(float(np.dot(p, g(x, v))) for x, v, p in self.branches)


def antipodal_gmi(
    model: DistortionModel,
    config: ChannelConfig,
    rule: numerics.QuadratureRule | None = None,
    tol: float = 1e-12,
) -> tuple[float, float]:
    """GMI (nats) and optimal ``t`` for equiprobable inputs x = +-sqrt(es).

    Maximizes ``t E[x w] - E log cosh(t sqrt(es) w)`` by solving its
    stationarity condition ``E[sqrt(es) w tanh(t sqrt(es) w)] = E[x w]``,
    whose left side is odd and increasing in t, by bracket expansion and
    bisection. Quantizer models use exact cell probabilities; other models
    integrate the noise by Gauss-Hermite.
    """
    rule = rule or numerics.gauss_hermite(DEFAULT_ORDER)
    table = _AntipodalTable(model, config, rule)
    amp = math.sqrt(config.es)
    target = table.expect(lambda x, w: x * w)
    power = table.expect(lambda x, w: w * w)
    if power <= 0.0 or target == 0.0:
        return 0.0, 0.0

    sign = 1.0 if target > 0 else -1.0
    target = abs(target)

    def lhs(t):
        return table.expect(lambda x, w: amp * w * np.tanh(t * amp * w))

    ceiling = 1e3 / math.sqrt(config.es * power)
    lo, hi = 0.0, 1.0 / math.sqrt(config.es * power)
    while lhs(hi) < target:
        lo, hi = hi, 2.0 * hi
        if hi > ceiling:
            raise ConvergenceError(
                "no finite root of the antipodal stationarity equation within the search range",
                best=lo * sign,
            )
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if lhs(mid) < target:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    gmi = t * target - table.expect(lambda x, w: _log_cosh(t * amp * w))
    return max(gmi, 0.0), sign * t


def antipodal_objective(model: DistortionModel, config: ChannelConfig, t: float,
                        rule: numerics.QuadratureRule | None = None) -> float:
    """The antipodal GMI objective at a given ``t`` (for grid cross-checks)."""
    rule = rule or numerics.gauss_hermite(DEFAULT_ORDER)
    table = _AntipodalTable(model, config, rule)
    amp = math.sqrt(config.es)
    return t * table.expect(lambda x, w: x * w) - table.expect(lambda x, w: _log_cosh(t * amp * w))
