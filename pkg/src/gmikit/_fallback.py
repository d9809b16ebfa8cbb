"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same algorithms, same operation order per rotation, so results agree with the
compiled path to rounding.
"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _mix64_array(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniform_stream(key, start, count):
    counters = np.arange(1, count + 1, dtype=np.uint64) + np.uint64(start)
    z = _mix64_array(np.uint64(key) + counters * np.uint64(GOLDEN))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def jacobi_eigen(a_in, max_sweeps, tol):
    a = np.array(a_in, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(np.sum(a * a))
    if scale == 0.0:
        return np.zeros(n), v, 0
    iu = np.triu_indices(n, 1)
    sweep = 0
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(a[iu] ** 2))
        if off <= tol * scale or sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                g = a[:, p].copy()
                h = a[:, q].copy()
                a[:, p] = g - s * (h + g * tau)
                a[:, q] = h + s * (g - h * tau)
                a[p, :] = a[:, p]
                a[q, :] = a[:, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                g = v[:, p].copy()
                h = v[:, q].copy()
                v[:, p] = g - s * (h + g * tau)
                v[:, q] = h + s * (g - h * tau)
    if off > tol * scale:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    return np.diagonal(a).copy(), v, sweep
