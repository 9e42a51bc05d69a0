"""Closed-form kernels: heat kernel, drifted heat kernel, the comparison kernel K,
resolvent and Newtonian kernels, and the modified Bessel function K_nu.

All functions broadcast over leading axes: points are arrays of shape
``(..., d)`` and the result has the broadcast leading shape.  Single points
give Python floats.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DivergenceError, DomainError, SingularPointError, UsageError

# exp(x) for x below this is replaced by an exact 0.
UNDERFLOW_EXPONENT = -745.0


def as_point(coords, dim=None):
    """Return ``coords`` as a float array of shape ``(..., d)``.

    Scalars are read as 1-d points.  Raises UsageError on a dimension clash
    and DomainError on non-finite coordinates.
    """
    arr = np.asarray(coords, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if dim is not None and arr.shape[-1] != dim:
        raise UsageError(f"expected points of dimension {dim}, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("point coordinates must be finite")
    return arr


def _pair(x, y):
    x = as_point(x)
    y = as_point(y)
    if x.shape[-1] != y.shape[-1]:
        raise UsageError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    return x, y


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def safe_exp(expo):
    expo = np.asarray(expo, dtype=float)
    with np.errstate(under="ignore"):
        return np.where(expo < UNDERFLOW_EXPONENT, 0.0, np.exp(np.maximum(expo, UNDERFLOW_EXPONENT)))


def _check_time(t, name="t"):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError(f"{name} must be positive")
    return t


# --------------------------------------------------------------------------
# heat kernels


def _gauss(t, diff):
    d = diff.shape[-1]
    r2 = np.einsum("...i,...i->...", diff, diff)
    return (4.0 * np.pi * t) ** (-d / 2.0) * safe_exp(-r2 / (4.0 * t))


def gauss_weierstrass(t, x, y):
    """Heat kernel (4 pi t)^(-d/2) exp(-|y - x|^2 / (4t))."""
    t = _check_time(t)
    x, y = _pair(x, y)
    return _out(_gauss(t, y - x))


def drifted_kernel(alpha, s, x, z):
    """Fundamental solution of d/dt = Delta - 2 alpha . grad: g(s, x - 2 alpha s, z)."""
    s = _check_time(s, "s")
    x, z = _pair(x, z)
    alpha = as_point(alpha, x.shape[-1])
    return _out(_gauss(s, z - (x - 2.0 * alpha * s[..., None])))


# --------------------------------------------------------------------------
# comparison kernel K(t, x, y)


def _sharp_K(t, x, y):
    """Vectorised K(t, x, y) without argument checks.

    Returns +inf at x = 0 for d >= 2 when the indicator is on.
    """
    d = x.shape[-1]
    nx = np.sqrt(np.einsum("...i,...i->...", x, x))
    ny = np.sqrt(np.einsum("...i,...i->...", y, y))
    dot = np.einsum("...i,...i->...", x, y)
    prod = nx * ny
    # |x||y| - <x,y> >= 0 up to round-off
    factor = safe_exp(-np.maximum(prod - dot, 0.0) / 2.0)
    inside = nx <= t * ny
    with np.errstate(divide="ignore", invalid="ignore"):
        if d >= 3:
            shape = nx ** (2.0 - d) * (1.0 + prod) ** ((d - 3) / 2.0)
        elif d == 2:
            shape = np.log1p(1.0 / np.sqrt(prod))
        else:
            shape = np.sqrt(t) / np.sqrt(1.0 + t * ny**2)
    out = np.where(inside, factor * shape, 0.0)
    return out


def sharp_kernel_K(t, x, y):
    """The three-regime comparison kernel K(t, x, y).

    d >= 3: exp(-(|x||y| - <x,y>)/2) |x|^(2-d) (1 + |x||y|)^((d-3)/2) 1{|x| <= t|y|}
    d = 2:  exp(...) log(1 + (|x||y|)^(-1/2)) 1{|x| <= t|y|}
    d = 1:  exp(...) sqrt(t) (1 + t|y|^2)^(-1/2) 1{|x| <= t|y|}
    """
    t = _check_time(t)
    x, y = _pair(x, y)
    d = x.shape[-1]
    if d >= 2:
        nx = np.sqrt(np.einsum("...i,...i->...", x, x))
        if np.any(nx == 0.0):
            raise SingularPointError("K(t, x, y) is singular at x = 0 for d >= 2", point=0.0)
    return _out(_sharp_K(t, x, y))


# --------------------------------------------------------------------------
# modified Bessel function of the second kind


def bessel_k(nu, z):
    """K_nu(z) for real order |nu| <= 5 and z > 0 (vectorised)."""
    nu = np.asarray(nu, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("bessel_k requires z > 0")
    if np.any(np.abs(nu) > 5.0):
        raise DomainError("bessel_k supports orders in [-5, 5]")
    # K is even in nu; scipy's kv returns nan for subnormal orders, where K_nu = K_0 to rounding
    nu = np.abs(nu)
    nu = np.where(nu < 1e-150, 0.0, nu)
    return _out(special.kv(nu, z))


def bessel_k_integral(nu, z, rtol=1e-14):
    """K_nu(z) from the integral representation int_0^inf exp(-z cosh u) cosh(nu u) du.

    Independent oracle for :func:`bessel_k`: the integrand is even and entire,
    so the trapezoid rule converges geometrically; the step is halved until two
    successive sums agree to ``rtol``.
    """
    nu = abs(float(nu))
    z = float(z)
    if not z > 0:
        raise DomainError("bessel_k_integral requires z > 0")

    def log_f(u):
        # log(exp(-z cosh u) cosh(nu u)), overflow-free
        return -z * np.cosh(u) + nu * u + np.log1p(np.exp(-2.0 * nu * u)) - math.log(2.0)

    peak = math.asinh(nu / z) if nu > 0 else 0.0
    ref = float(log_f(np.array(peak)))
    upper = max(peak, 1.0)
    while float(log_f(np.array(upper))) > ref - 60.0:
        upper *= 1.5
    shift = ref

    def trapezoid(n):
        u = np.linspace(0.0, upper, n + 1)
        vals = np.exp(log_f(u) - shift)
        h = upper / n
        return h * (vals.sum() - 0.5 * vals[0] - 0.5 * vals[-1])

    n = 64
    prev = trapezoid(n)
    while True:
        n *= 2
        cur = trapezoid(n)
        if abs(cur - prev) <= rtol * abs(cur) or n > 2**22:
            return cur * math.exp(shift)
        prev = cur


# --------------------------------------------------------------------------
# resolvent and Newtonian kernels


def _resolvent(lam, alpha, w):
    """Laplace transform in time of the drifted kernel, w = z - x (no checks)."""
    d = w.shape[-1]
    nu = d / 2.0 - 1.0
    r = np.sqrt(np.einsum("...i,...i->...", w, w))
    kappa = np.sqrt(lam + np.einsum("...i,...i->...", alpha, alpha))
    arg = r * kappa
    dot = np.einsum("...i,...i->...", w, alpha)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # kve(nu, u) = kv(nu, u) e^u keeps the product finite; the exponent
        # -<w,alpha> - r kappa is <= 0.
        pref = (2.0 * np.pi) ** (-d / 2.0) * (kappa / r) ** nu * special.kve(nu, arg)
        out = pref * safe_exp(-dot - arg)
    return out


def resolvent_kernel(lam, alpha, x, z):
    """Kernel of (lambda - Delta + 2 alpha . grad)^(-1).

    (2 pi)^(-d/2) e^{-<z-x, alpha>} (sqrt(lambda + |alpha|^2)/|z-x|)^(d/2-1)
    K_{d/2-1}(|z-x| sqrt(lambda + |alpha|^2)).  lambda = 0 is allowed when the
    integral converges (alpha != 0 or d >= 3).
    """
    lam = float(lam)
    if lam < 0:
        raise DomainError("lambda must be nonnegative")
    x, z = _pair(x, z)
    d = x.shape[-1]
    alpha = as_point(alpha, d)
    w = z - x
    if lam == 0.0 and d <= 2 and np.any(np.einsum("...i,...i->...", alpha, alpha) == 0.0):
        raise DivergenceError("int_0^inf g ds diverges for d <= 2 (lambda = 0, alpha = 0)")
    if np.any(np.einsum("...i,...i->...", w, w) == 0.0):
        raise SingularPointError("resolvent kernel is singular at z = x", point=x)
    return _out(_resolvent(lam, alpha, w))


def newtonian_constant(d):
    return math.gamma(d / 2.0 - 1.0) / (4.0 * math.pi ** (d / 2.0))


def _newtonian(w):
    d = w.shape[-1]
    r = np.sqrt(np.einsum("...i,...i->...", w, w))
    with np.errstate(divide="ignore"):
        return newtonian_constant(d) * r ** (2.0 - d)


def newtonian_kernel(x, z):
    """int_0^inf g(s, x, z) ds = Gamma(d/2 - 1) / (4 pi^(d/2)) |x - z|^(2-d), d >= 3."""
    x, z = _pair(x, z)
    d = x.shape[-1]
    if d <= 2:
        raise DivergenceError("int_0^inf g ds = inf for d <= 2")
    w = z - x
    if np.any(np.einsum("...i,...i->...", w, w) == 0.0):
        raise SingularPointError("Newtonian kernel is singular at z = x", point=x)
    return _out(_newtonian(w))


def exponent_identity(z, alpha, lam):
    """Both sides of <z,a> + |z| sqrt(lam + |a|^2) = <z,a> + |z||a| + |z| lam/(sqrt(lam+|a|^2) + |a|)."""
    z = as_point(z)
    alpha = as_point(alpha, z.shape[-1])
    nz = np.linalg.norm(z, axis=-1)
    na = np.linalg.norm(alpha, axis=-1)
    dot = np.einsum("...i,...i->...", z, alpha)
    kappa = np.sqrt(lam + na**2)
    lhs = dot + nz * kappa
    den = kappa + na
    # lam = 0 and alpha = 0 make the last term 0/0; its value is 0
    frac = np.divide(lam, den, out=np.zeros_like(den, dtype=float), where=den > 0)
    rhs = dot + nz * na + nz * frac
    return _out(lhs), _out(rhs)
