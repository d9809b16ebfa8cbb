"""Symmetric output quantizers: binary and 2M-level.

A 2M-level symmetric quantizer maps y = x + z to ``r_i * sgn(y)`` when
``|y|`` lies in ``[alpha_{i-1}, alpha_i)``, with ``alpha_0 = 0`` and
``alpha_M = inf``. In the t-domain, ``t_i = exp(-alpha_i^2 / (2 (es + sigma2)))``
runs from ``t_0 = 1`` down to ``t_M = 0`` and the design objective

    K(r, t) = [sum r_i (t_{i-1} - t_i)]^2 / sum r_i^2 [Qt(t_{i-1}) - Qt(t_i)]

no longer depends on the SNR; ``delta = es K / (pi (es + sigma2))``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import numerics
from .errors import DegenerateCellError, DomainError
from .gmi_core import ChannelConfig, DistortionModel, DistortionMoments, GmiResult, gmi_from_delta

PI = math.pi
LN2 = math.log(2.0)
PROB_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantizerSpec:
    """Thresholds (signal units) and reconstruction levels of a 2M-level quantizer.

    Only the interior thresholds alpha_1 .. alpha_{M-1} are stored; the fixed
    end points alpha_0 = 0 and alpha_M = inf are implied and every formula
    treats the last cell analytically.
    """

    thresholds: tuple
    rs: tuple

    def __post_init__(self):
        th = tuple(float(a) for a in self.thresholds)
        rs = tuple(float(r) for r in self.rs)
        if len(rs) < 1 or len(rs) != len(th) + 1:
            raise DomainError("need M >= 1 levels and M - 1 interior thresholds")
        prev = 0.0
        for a in th:
            if not (a > prev and math.isfinite(a)):
                raise DomainError(f"thresholds must be finite and strictly increasing from 0, got {th}")
            prev = a
        if any(r < 0 or not math.isfinite(r) for r in rs):
            raise DomainError("reconstruction levels must be finite and non-negative")
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "rs", rs)

    @property
    def m(self) -> int:
        return len(self.rs)

    @property
    def alphas(self) -> tuple:
        """alpha_0 .. alpha_M including the fixed end points."""
        return (0.0, *self.thresholds, math.inf)

    def model(self) -> DistortionModel:
        return DistortionModel.quantizer(self.thresholds, self.rs)

    @classmethod
    def binary(cls) -> "QuantizerSpec":
        return cls((), (1.0,))


@dataclass(frozen=True)
class TDomainSpec:
    """Interior t-values 1 > t_1 > ... > t_{M-1} > 0 and the reference energy
    es + sigma2 used for the alpha <-> t change of variable."""

    ts: tuple
    reference_energy: float = 1.0

    def __post_init__(self):
        ts = tuple(float(t) for t in self.ts)
        prev = 1.0
        for t in ts:
            if not (0.0 < t < prev):
                raise DomainError(f"t-values must satisfy 1 > t_1 > ... > t_(M-1) > 0, got {ts}")
            prev = t
        if not self.reference_energy > 0:
            raise DomainError("reference_energy must be positive")
        object.__setattr__(self, "ts", ts)

    @property
    def m(self) -> int:
        return len(self.ts) + 1

    @property
    def full(self) -> np.ndarray:
        """t_0 .. t_M including the fixed end points 1 and 0."""
        return np.array((1.0, *self.ts, 0.0))


@dataclass(frozen=True)
class KFactor:
    value: float
    design: TDomainSpec | None = None
    rs: tuple | None = None

    def __post_init__(self):
        if not 0.0 < self.value <= PI * (1.0 + 1e-12):
            raise DomainError(f"K must lie in (0, pi], got {self.value!r}")

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------------------
# alpha <-> t
# ---------------------------------------------------------------------------

def t_from_alpha(spec: QuantizerSpec, reference_energy: float) -> TDomainSpec:
    if not reference_energy > 0:
        raise DomainError("reference_energy must be positive")
    ts = tuple(math.exp(-a * a / (2.0 * reference_energy)) for a in spec.thresholds)
    return TDomainSpec(ts, reference_energy)


def alpha_from_t(ts: TDomainSpec, rs: Sequence[float] | None = None) -> QuantizerSpec:
    """Inverse of :func:`t_from_alpha`; levels default to the K-optimal ones."""
    scale = math.sqrt(ts.reference_energy)
    thresholds = tuple(scale * math.sqrt(-2.0 * math.log(t)) for t in ts.ts)
    if rs is None:
        rs = optimal_reconstructions(ts)
    return QuantizerSpec(thresholds, tuple(rs))


def _cell_masses(ts: TDomainSpec) -> tuple[np.ndarray, np.ndarray]:
    """(t_{i-1} - t_i, Qt(t_{i-1}) - Qt(t_i)) for every cell.

    Q-tilde differences are taken as Q differences on the alpha scale,
    which stays accurate near t = 1 where Q-tilde has unbounded slope.
    """
    full = ts.full
    dt = full[:-1] - full[1:]
    a = numerics.alpha_of_t(full)
    dq = np.atleast_1d(numerics.q_diff(a[:-1], a[1:]))
    if np.any(dt <= 0.0) or np.any(dq <= 0.0):
        raise DegenerateCellError("a quantizer cell has zero width")
    return dt, dq


# ---------------------------------------------------------------------------
# Moments and K-factor
# ---------------------------------------------------------------------------

def quantizer_moments(spec: QuantizerSpec, config: ChannelConfig) -> DistortionMoments:
    """Closed-form E[f^2] and E[f x] of a 2M-level symmetric quantizer."""
    var = config.es + config.sigma2
    sd = math.sqrt(var)
    a = np.array(spec.alphas)
    rs = np.array(spec.rs)
    mass = np.atleast_1d(numerics.q_diff(a[:-1] / sd, a[1:] / sd))
    power = 2.0 * float(np.sum(rs * rs * mass))
    with np.errstate(over="ignore"):
        e = np.exp(-(a * a) / (2.0 * var))
    corr = config.es * math.sqrt(2.0 / (PI * var)) * float(np.sum(rs * (e[:-1] - e[1:])))
    return DistortionMoments(corr, power, "closed-form")


def k_factor(rs: Sequence[float], ts: TDomainSpec) -> KFactor:
    rs = np.asarray(rs, dtype=float)
    if rs.shape != (ts.m,):
        raise DomainError(f"expected {ts.m} levels, got {rs.shape}")
    if np.any(rs < 0) or not np.any(rs > 0):
        raise DomainError("levels must be non-negative and not all zero")
    dt, dq = _cell_masses(ts)
    return KFactor(float(np.dot(rs, dt) ** 2 / np.dot(rs * rs, dq)), ts, tuple(rs))


def optimal_reconstructions(ts: TDomainSpec) -> tuple:
    """Levels maximizing K for fixed thresholds, proportional to dt / dQt.

    The stationarity condition only fixes the levels up to a common positive
    factor (K is scale free); this returns the unscaled ratios, which satisfy
    the fixed-point equation with factor exactly 1.
    """
    dt, dq = _cell_masses(ts)
    return tuple(float(v) for v in dt / dq)


def k_of_t(ts: TDomainSpec) -> KFactor:
    """K maximized over levels: sum (t_{i-1} - t_i)^2 / (Qt(t_{i-1}) - Qt(t_i))."""
    dt, dq = _cell_masses(ts)
    return KFactor(float(np.sum(dt * dt / dq)), ts, tuple(dt / dq))


def _k_of_t_array(full: np.ndarray) -> float:
    # unchecked fast path for the optimizers; full = t_0 .. t_M
    dt = full[:-1] - full[1:]
    a = numerics.alpha_of_t(full)
    dq = numerics.q_diff(a[:-1], a[1:])
    if np.any(dt <= 0.0) or np.any(dq <= 0.0):
        return -math.inf
    return float(np.sum(dt * dt / dq))


def gmi_at_snr(k: KFactor | float, config: ChannelConfig) -> GmiResult:
    """GMI of a quantizer with design constant K at the given channel."""
    kv = float(k)
    if not 0.0 < kv <= PI * (1.0 + 1e-12):
        raise DomainError(f"K must lie in (0, pi], got {kv!r}")
    delta = config.es * kv / (PI * (config.es + config.sigma2))
    # a_opt of the K-optimal design with levels normalized to unit output power
    return gmi_from_delta(delta, a_opt=math.sqrt(delta / config.es) if delta > 0 else 0.0)


@dataclass(frozen=True)
class Asymptotics:
    """SNR expansions of the GMI for a given K.

    high:  GMI = high_snr_limit_nats + high_snr_1st_order_coeff / SNR + o(1/SNR)
    low:   GMI = low_snr_slope_nats * SNR + low_snr_2nd_order_coeff * SNR^2 + o(SNR^2)
    """

    high_snr_limit_bits: float
    high_snr_1st_order_coeff: float
    low_snr_slope_nats: float
    low_snr_2nd_order_coeff: float
    infinite_limit: bool = False

    @property
    def high_snr_limit_nats(self) -> float:
        return self.high_snr_limit_bits * LN2


def asymptotics(k: KFactor | float) -> Asymptotics:
    kv = float(k)
    if not 0.0 < kv <= PI * (1.0 + 1e-12):
        raise DomainError(f"K must lie in (0, pi], got {kv!r}")
    low = kv / (2.0 * PI)
    low2 = -kv * (PI - kv / 2.0) / (2.0 * PI * PI)
    if kv >= PI:
        return Asymptotics(math.inf, -math.inf, low, low2, infinite_limit=True)
    return Asymptotics(
        0.5 * math.log2(PI / (PI - kv)),
        -kv / (2.0 * (PI - kv)),
        low,
        low2,
    )


# ---------------------------------------------------------------------------
# Designs
# ---------------------------------------------------------------------------

def uniform_ts(m: int, alpha_param: float, reference_energy: float = 1.0) -> TDomainSpec:
    """t-domain of uniform thresholds alpha_i = i sqrt(2 (es + sigma2) alpha_param)."""
    return TDomainSpec(tuple(math.exp(-i * i * alpha_param) for i in range(1, m)), reference_energy)


def _uniform_k(m: int, alpha_param: float) -> float:
    i = np.arange(m)
    full = np.concatenate((np.exp(-(i * i) * alpha_param), [0.0]))
    return _k_of_t_array(full)


def optimize_uniform(m: int, tol: float = numerics.ARG_TOL) -> tuple[float, KFactor]:
    """Best uniform quantizer: maximize K over the spacing parameter alpha > 0.

    A coarse log-spaced scan locates the peak, then bounded Brent refines it.
    """
    if m < 2:
        raise DomainError("optimize_uniform needs m >= 2")
    grid = np.geomspace(1e-5, 5.0, 400)
    vals = [_uniform_k(m, a) for a in grid]
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    alpha, _ = numerics.maximize_scalar(lambda a: _uniform_k(m, a), (lo, hi), tol=tol)
    return alpha, k_of_t(uniform_ts(m, alpha))


def t_uniform_k(m: int) -> KFactor:
    """K of the design with t-values equally spaced on [0, 1]: t_i = (M - i) / M."""
    if m < 1:
        raise DomainError("m must be >= 1")
    return k_of_t(TDomainSpec(tuple((m - i) / m for i in range(1, m))))


def _ts_from_logits(u: np.ndarray) -> np.ndarray:
    # stick-breaking: t_i = t_{i-1} * logistic(u_i), keeps 1 > t_1 > ... > 0 exactly
    frac = 1.0 / (1.0 + np.exp(-u))
    return np.cumprod(frac)


def _logits_from_ts(ts: np.ndarray) -> np.ndarray:
    prev = np.concatenate(([1.0], ts[:-1]))
    frac = ts / prev
    return np.log(frac / (1.0 - frac))


def _coordinate_polish(full: np.ndarray, tol: float, sweeps: int = 200) -> np.ndarray:
    """Cyclic exact line search on each interior t_i between its neighbours.

    Only cells i and i+1 depend on t_i, so each step is a 1-D bounded
    maximization of two terms.
    """
    full = full.copy()
    m = len(full) - 1
    best = _k_of_t_array(full)
    for _ in range(sweeps):
        start = best
        for i in range(1, m):
            lo, hi = full[i + 1], full[i - 1]
            width = hi - lo

            def local(t, i=i):
                seg = np.array((full[i - 1], t, full[i + 1]))
                return _k_of_t_array(seg) if seg[0] > t > seg[2] else -math.inf

            x, _ = numerics.maximize_scalar(local, (lo + 1e-12 * width, hi - 1e-12 * width), tol=tol * 1e-3)
            trial = full.copy()
            trial[i] = x
            val = _k_of_t_array(trial)
            if val > best:
                full, best = trial, val
        if best - start <= 1e-15:
            break
    return full


def optimize_t(m: int, tol: float = numerics.ARG_TOL, seed: int = 0) -> tuple[TDomainSpec, KFactor]:
    """Optimal 2M-level quantizer: maximize K_t over 1 > t_1 > ... > t_{M-1} > 0.

    The ordered t-vector is parameterized by unconstrained logits
    (stick-breaking through the logistic function) and searched by
    multi-start Nelder-Mead, started from the optimized uniform design and
    its jittered copies. A cyclic coordinate line search polishes the
    result. The result dominates the uniform and t-uniform designs.
    """
    if m < 2:
        raise DomainError("optimize_t needs m >= 2")
    if m == 2:
        t1, _ = numerics.maximize_scalar(
            lambda t: _k_of_t_array(np.array((1.0, t, 0.0))), (1e-9, 1.0 - 1e-9), tol=tol, grid=64
        )
        ts = TDomainSpec((t1,))
        return ts, k_of_t(ts)

    alpha, _ = optimize_uniform(m, tol=1e-6)
    start_ts = np.array(uniform_ts(m, alpha).ts)
    candidates = [start_ts]
    if m <= 12:
        u0 = _logits_from_ts(start_ts)
        u, _ = numerics.maximize_vector(
            lambda u: _k_of_t_array(np.concatenate(([1.0], _ts_from_logits(u), [0.0]))),
            u0,
            tol=tol,
            restarts=16,
            seed=seed,
            jitter=0.3,
        )
        candidates.append(_ts_from_logits(u))
    best_full = None
    best_val = -math.inf
    for ts in candidates:
        full = _coordinate_polish(np.concatenate(([1.0], ts, [0.0])), tol)
        val = _k_of_t_array(full)
        if val > best_val:
            best_full, best_val = full, val
    ts = TDomainSpec(tuple(best_full[1:-1]))
    return ts, k_of_t(ts)


# ---------------------------------------------------------------------------
# Binary quantization references
# ---------------------------------------------------------------------------

def binary_gmi(config: ChannelConfig) -> GmiResult:
    """w = sgn(x + z): delta = 2 es / (pi (es + sigma2))."""
    delta = 2.0 * config.es / (PI * (config.es + config.sigma2))
    return gmi_from_delta(delta, a_opt=math.sqrt(2.0 / (PI * (config.es + config.sigma2))))


def _h2_bits(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def binary_capacity(config: ChannelConfig) -> float:
    """Capacity (bits/c.u.) with binary output quantization: 1 - H2(Q(sqrt(SNR)))."""
    return 1.0 - _h2_bits(numerics.q_function(math.sqrt(config.snr)))


# ---------------------------------------------------------------------------
# Capacity per unit cost
# ---------------------------------------------------------------------------

def _kl_excess(d):
    """(1 + d) ln(1 + d) - d, accurate for small |d|."""
    d = np.asarray(d, dtype=float)
    small = np.abs(d) < 1e-3
    series = d * d * (0.5 - d / 6.0 + d * d / 12.0 - d ** 3 / 20.0 + d ** 4 / 30.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.where(d > -1.0, (1.0 + d) * np.log1p(d) - d, 1.0)
    return np.where(small, series, direct)


def _edge_increment(edge: np.ndarray, shift: float) -> np.ndarray:
    """Q(edge - shift) - Q(edge), zero at infinite edges."""
    finite = np.isfinite(edge)
    e = np.where(finite, edge, 0.0)
    if shift > 0:
        inc = np.atleast_1d(numerics.q_diff(e - shift, e))
    else:
        inc = -np.atleast_1d(numerics.q_diff(e, e - shift))
    return np.where(finite, inc, 0.0)


def cpuc_objective(spec: QuantizerSpec, x: float) -> float:
    """D(P_x || P_0) / x^2 for unit noise variance and a single input x > 0.

    Written as sum_cells P0 [(1 + d) ln(1 + d) - d] with d = (P_x - P0) / P0,
    and the cell-probability increments computed as small Q differences,
    so the value stays accurate down to x ~ 1e-4.
    """
    if not x > 0:
        raise DomainError("x must be positive")
    a = np.array(spec.alphas)
    lo, hi = a[:-1], a[1:]
    p0 = np.atleast_1d(numerics.q_diff(lo, hi))
    total = 0.0
    for shift in (x, -x):
        d = (_edge_increment(lo, shift) - _edge_increment(hi, shift)) / p0
        total += float(np.sum(p0 * _kl_excess(d)))
    return total / (x * x)


def capacity_per_unit_cost(spec: QuantizerSpec, sigma2: float = 1.0, points: int = 200,
                           x_range: tuple[float, float] = (1e-4, 10.0)) -> tuple[float, float]:
    """Numerical supremum over x > 0 of the divergence-per-energy functional.

    Scans ``points`` log-spaced inputs in ``x_range`` and refines around the
    best one. This is a lower bound on the true supremum.
    """
    if sigma2 != 1.0:
        raise DomainError("the functional is defined for unit noise variance; rescale thresholds instead")
    xs = np.geomspace(*x_range, points)
    vals = np.array([cpuc_objective(spec, x) for x in xs])
    k = int(np.argmax(vals))
    lo = math.log(xs[max(k - 1, 0)])
    hi = math.log(xs[min(k + 1, points - 1)])
    if hi > lo:
        u, v = numerics.maximize_scalar(lambda u: cpuc_objective(spec, math.exp(u)), (lo, hi), tol=1e-10)
        if v > vals[k]:
            return v, math.exp(u)
    return float(vals[k]), float(xs[k])


def cpuc_zero_limit(spec: QuantizerSpec, xs: Sequence[float] = (1e-2, 1e-3, 1e-4)) -> float:
    """x -> 0 limit of the functional by Richardson extrapolation in x^2.

    The functional is even in x for a symmetric quantizer, so a polynomial
    in x^2 through the sample points is evaluated at 0 (Neville).
    """
    h = np.array([x * x for x in xs], dtype=float)
    p = [cpuc_objective(spec, x) for x in xs]
    n = len(h)
    for level in range(1, n):
        for i in range(n - level):
            j = i + level
            p[i] = (h[i] * p[i + 1] - h[j] * p[i]) / (h[i] - h[j])
    return float(p[0])


# ---------------------------------------------------------------------------
# Antipodal inputs
# ---------------------------------------------------------------------------

class AntipodalQuantizerResult(NamedTuple):
    gmi_nats: float
    optimal_rs: tuple
    clamped: bool


def cell_probabilities(spec: QuantizerSpec, config: ChannelConfig) -> tuple[np.ndarray, np.ndarray]:
    """p_plus[i] = P(w = +r_i | x = +sqrt(es)), p_minus[i] = P(w = -r_i | x = +sqrt(es))."""
    amp = math.sqrt(config.es)
    sd = math.sqrt(config.sigma2)
    a = np.array(spec.alphas)
    p_plus = np.atleast_1d(numerics.q_diff((a[:-1] - amp) / sd, (a[1:] - amp) / sd))
    p_minus = np.atleast_1d(numerics.q_diff((a[:-1] + amp) / sd, (a[1:] + amp) / sd))
    return p_plus, p_minus


def antipodal_quantizer_gmi(spec: QuantizerSpec, config: ChannelConfig) -> AntipodalQuantizerResult:
    """GMI of antipodal inputs through a symmetric quantizer with optimized levels.

    With levels proportional to the per-cell log-likelihood ratio
    ln(p_plus / p_minus), the nearest-neighbour metric is equivalent to
    maximum likelihood and the GMI equals the input/output mutual
    information. Zero-probability cells are clamped to 1e-300 and flagged.
    """
    p_plus, p_minus = cell_probabilities(spec, config)
    clamped = bool(np.any(p_plus < PROB_FLOOR) or np.any(p_minus < PROB_FLOOR))
    if clamped:
        warnings.warn("cell probability below 1e-300 clamped", RuntimeWarning, stacklevel=2)
        p_plus = np.maximum(p_plus, PROB_FLOOR)
        p_minus = np.maximum(p_minus, PROB_FLOOR)
    s = p_plus + p_minus
    gmi = LN2 - float(np.sum(s * np.log(s) - p_plus * np.log(p_plus) - p_minus * np.log(p_minus)))
    rs = tuple(float(v) for v in np.log(p_plus / p_minus))
    return AntipodalQuantizerResult(max(gmi, 0.0), rs, clamped)
