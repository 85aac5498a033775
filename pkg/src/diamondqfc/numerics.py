"""Small numerical kernels: log-domain Lambert W and batched 2x2 exponentials."""

import numpy as np

from .errors import NumericalError


def lambertw_log(log_x, tol=1e-15, max_iter=60):
    """Principal-branch Lambert W evaluated from ``log(x)``, for x > 0.

    Iterates on v = log(w), solving ``exp(v) + v = log_x`` by Halley's
    method, so arguments far outside the float range of ``x`` itself
    (|log_x| ~ 1e5) stay finite.
    """
    y = np.asarray(log_x, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        near = np.log(np.log1p(np.exp(np.minimum(y, 700.0))))
    far = np.log(np.maximum(y - np.log(np.maximum(y, 1.0)), 1e-300))
    v = np.where(y > 1.0, far, np.where(y < -700.0, y, near))
    for _ in range(max_iter):
        ev = np.exp(v)
        f = ev + v - y
        fp = ev + 1.0
        step = f / (fp - 0.5 * f * ev / fp)
        v = v - step
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(v))):
            return np.exp(v)
    resid = np.max(np.abs(np.exp(v) + v - y))
    raise NumericalError(f"Lambert W did not converge (residual {resid:.3g})", achieved=resid)


def expm2(a):
    """Exponential of a stack of 2x2 complex matrices, shape (..., 2, 2).

    Uses exp(A) = exp(t) [cosh(s) I + sinh(s)/s (A - t I)] with t = tr(A)/2
    and s^2 = ((a - d)/2)^2 + b c. Near s = 0 the even series for cosh and
    sinh(s)/s replaces the closed form.
    """
    a = np.asarray(a, dtype=complex)
    t = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    q = (0.5 * (a[..., 0, 0] - a[..., 1, 1])) ** 2 + a[..., 0, 1] * a[..., 1, 0]
    s = np.sqrt(q)
    near = np.abs(s) < 1e-8
    s_safe = np.where(near, 1.0, s)
    ch = np.where(near, 1.0 + q / 2.0 + q * q / 24.0, np.cosh(s_safe))
    sh = np.where(near, 1.0 + q / 6.0 + q * q / 120.0, np.sinh(s_safe) / s_safe)
    et = np.exp(t)
    out = np.empty_like(a)
    out[..., 0, 0] = et * (ch + sh * (a[..., 0, 0] - t))
    out[..., 1, 1] = et * (ch + sh * (a[..., 1, 1] - t))
    out[..., 0, 1] = et * sh * a[..., 0, 1]
    out[..., 1, 0] = et * sh * a[..., 1, 0]
    return out


def ordered_product(mats):
    """Return ``mats[-1] @ ... @ mats[1] @ mats[0]`` by pairwise reduction."""
    m = np.asarray(mats)
    while m.shape[0] > 1:
        if m.shape[0] % 2:
            tail = m[-1:]
            m = np.concatenate([m[1:-1:2] @ m[0:-1:2], tail])
        else:
            m = m[1::2] @ m[0::2]
    return m[0]


def gauss_legendre(n, a=0.0, b=1.0):
    """Gauss-Legendre nodes and weights mapped to [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w
