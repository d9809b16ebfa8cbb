"""Special functions, Gaussian quadrature, small dense linear algebra and
derivative-free maximizers shared by the analysis modules.

Everything here is a pure function of its arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import linalg as sla
from scipy import optimize as sopt
from scipy import special

from . import _backend
from .errors import (
    ConvergenceError,
    DomainError,
    EvaluationError,
    SingularMatrixError,
)

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)

ARG_TOL = 1e-9
OBJ_TOL = 1e-12


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

def q_function(z):
    """Gaussian tail probability Q(z) = P(N(0, 1) > z).

    Accepts a float or an array. Evaluated through the complementary error
    function, so the upper tail keeps full relative precision.
    """
    if np.ndim(z) == 0:
        z = float(z)
        if math.isnan(z):
            raise DomainError("q_function of NaN")
        return 0.5 * math.erfc(z / SQRT2)
    return 0.5 * special.erfc(np.asarray(z, dtype=float) / SQRT2)


def q_diff(a, b):
    """Q(a) - Q(b) for a <= b, accurate when both arguments share a tail.

    ``b`` may be ``inf``. Near zero the difference is taken on erf, in the
    tails on erfc, so neither side cancels catastrophically.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore"):
        central = (np.maximum(np.abs(a), np.abs(b)) <= 1.0) | ((a < 0.0) & (b > 0.0))
        via_erf = 0.5 * (special.erf(b / SQRT2) - special.erf(a / SQRT2))
        upper = 0.5 * (special.erfc(a / SQRT2) - special.erfc(b / SQRT2))
        lower = 0.5 * (special.erfc(-b / SQRT2) - special.erfc(-a / SQRT2))
    out = np.where(central, via_erf, np.where(a >= 0.0, upper, lower))
    return float(out) if out.ndim == 0 else out


def q_tilde(z: float) -> float:
    """Q(sqrt(-2 ln z)) on [0, 1], with Q~(0) = 0 and Q~(1) = 1/2."""
    z = float(z)
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"q_tilde needs 0 <= z <= 1, got {z!r}")
    if z == 0.0:
        return 0.0
    if z == 1.0:
        return 0.5
    return q_function(math.sqrt(-2.0 * math.log(z)))


def alpha_of_t(t):
    """Normalized threshold sqrt(-2 ln t); t = 0 maps to +inf, t = 1 to 0."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.sqrt(np.maximum(-2.0 * np.log(t), 0.0))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights; ``sum(w * g(x))`` approximates an integral."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise DomainError("nodes and weights must be 1-D arrays of equal length")
        if not np.all(weights > 0.0):
            raise DomainError("quadrature weights must be strictly positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.nodes)

    def expect_normal(self, g: Callable, var: float, mean: float = 0.0) -> float:
        """E[g(Y)] for Y ~ N(mean, var), treating this as a Gauss-Hermite rule."""
        y = mean + math.sqrt(2.0 * var) * self.nodes
        vals = np.asarray(g(y), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("non-finite integrand at a quadrature node")
        return float(np.dot(self.weights, vals) / SQRT_PI)


def gauss_hermite(order: int) -> QuadratureRule:
    """Gauss-Hermite rule for the weight exp(-x^2), exact up to degree 2*order-1."""
    if not isinstance(order, (int, np.integer)) or not 2 <= order <= 256:
        raise DomainError(f"Gauss-Hermite order must be an integer in [2, 256], got {order!r}")
    nodes, weights = hermgauss(int(order))
    return QuadratureRule(nodes, weights)


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------

class SymMatrix:
    """Dense symmetric matrix with exactly mirrored storage.

    The upper triangle of the input is copied into the lower one, so
    ``m[i, j] == m[j, i]`` holds bit for bit.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DomainError("SymMatrix needs a non-empty square array")
        iu = np.triu_indices(a.shape[0], 1)
        a[(iu[1], iu[0])] = a[iu]
        a.setflags(write=False)
        self._a = a

    @property
    def dimension(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._a

    def __array__(self, dtype=None, copy=None):
        return self._a if dtype is None else self._a.astype(dtype)

    def __getitem__(self, idx):
        return self._a[idx]

    def __repr__(self):
        return f"SymMatrix({self._a!r})"

    def norm(self) -> float:
        return float(np.max(np.abs(self._a)))


def _as_sym(a) -> SymMatrix:
    return a if isinstance(a, SymMatrix) else SymMatrix(a)


def solve_spd(a, b) -> np.ndarray:
    """Solve a x = b for symmetric positive definite ``a`` via Cholesky."""
    a = _as_sym(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.dimension:
        raise DomainError(f"dimension mismatch: matrix {a.dimension}, rhs {b.shape[0]}")
    try:
        factor = sla.cho_factor(a.array, lower=True, check_finite=True)
    except sla.LinAlgError as exc:
        raise SingularMatrixError(f"matrix is not positive definite: {exc}") from None
    return sla.cho_solve(factor, b)


def sym_eig(a, max_sweeps: int = 100, tol: float = 1e-15):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as orthonormal columns.
    """
    a = _as_sym(a)
    if a.dimension > 128:
        raise DomainError("sym_eig supports dimension <= 128")
    try:
        w, v, _ = _backend.jacobi_eigen(np.ascontiguousarray(a.array), max_sweeps, tol)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from None
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def sqrt_spd(a) -> SymMatrix:
    """Symmetric PSD square root; tiny negative eigenvalues are clamped to 0."""
    a = _as_sym(a)
    w, v = sym_eig(a)
    floor = -1e-12 * max(a.norm(), np.finfo(float).tiny)
    if w[-1] < floor:
        raise DomainError(f"matrix has eigenvalue {w[-1]:.3e}, not positive semi-definite")
    root = np.sqrt(np.clip(w, 0.0, None))
    return SymMatrix((v * root) @ v.T)


def inv_sqrt_spd(a, rel_floor: float = 1e-12) -> SymMatrix:
    """Pseudo-inverse square root; eigenvalues below ``rel_floor * max`` are dropped."""
    a = _as_sym(a)
    w, v = sym_eig(a)
    if w[-1] < -1e-12 * max(a.norm(), np.finfo(float).tiny):
        raise DomainError("matrix is not positive semi-definite")
    keep = w > rel_floor * w[0]
    inv_root = np.zeros_like(w)
    inv_root[keep] = 1.0 / np.sqrt(w[keep])
    return SymMatrix((v * inv_root) @ v.T)


# ---------------------------------------------------------------------------
# Maximizers
# ---------------------------------------------------------------------------

def _checked(objective, x):
    val = objective(x)
    val = float(val)
    if not math.isfinite(val):
        raise EvaluationError(f"objective is not finite at {x!r}")
    return val


def maximize_scalar(
    objective: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = ARG_TOL,
    grid: int = 0,
) -> tuple[float, float]:
    """Maximize a scalar function on ``[lo, hi]`` by bounded Brent iteration.

    With ``grid > 0`` the bracket is first scanned on ``grid`` points and the
    search is narrowed to the neighbours of the best one, which guards against
    objectives that are not unimodal over the whole bracket. The argmax of a
    smooth maximum is only defined to about sqrt(machine eps) relative.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise DomainError(f"empty bracket ({lo}, {hi})")
    if grid > 0:
        xs = np.linspace(lo, hi, grid + 2)[1:-1]
        vals = [_checked(objective, x) for x in xs]
        k = int(np.argmax(vals))
        lo = xs[k - 1] if k > 0 else lo
        hi = xs[k + 1] if k + 1 < len(xs) else hi
    res = sopt.minimize_scalar(
        lambda x: -_checked(objective, x),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": tol, "maxiter": 10_000},
    )
    if not res.success:
        raise ConvergenceError(f"bounded scalar search failed: {res.message}", best=res.x)
    x = float(res.x)
    return x, _checked(objective, x)


def maximize_vector(
    objective: Callable[[np.ndarray], float],
    start: Sequence[float],
    tol: float = ARG_TOL,
    ftol: float = OBJ_TOL,
    restarts: int = 16,
    seed: int = 0,
    jitter: float = 0.5,
    maxiter: int | None = None,
) -> tuple[np.ndarray, float]:
    """Derivative-free maximization: Nelder-Mead from ``start`` plus seeded restarts.

    Restart points are ``start`` perturbed by Gaussian jitter drawn from a
    generator seeded with ``seed``. The best result is polished by repeated
    simplex restarts until the objective gains less than ``ftol``.
    """
    x0 = np.atleast_1d(np.asarray(start, dtype=float))
    _checked(objective, x0)
    dim = x0.size
    maxiter = maxiter or 400 * dim

    def neg(x):
        return -_checked(objective, x)

    opts = {"xatol": tol, "fatol": ftol, "maxiter": maxiter, "maxfev": 2 * maxiter, "adaptive": dim > 4}
    rng = np.random.default_rng(seed)
    starts = [x0] + [x0 + jitter * rng.standard_normal(dim) for _ in range(max(restarts - 1, 0))]
    best = None
    for s in starts:
        res = sopt.minimize(neg, s, method="Nelder-Mead", options=opts)
        if best is None or res.fun < best.fun:
            best = res

    x, fx = best.x, -best.fun
    for _ in range(50):
        res = sopt.minimize(neg, x, method="Nelder-Mead", options=opts)
        gain = -res.fun - fx
        if gain > 0.0:
            x, fx = res.x, -res.fun
        if gain <= ftol:
            break
    else:
        raise ConvergenceError("polish step did not settle", best=x)
    return np.asarray(x), float(fx)
