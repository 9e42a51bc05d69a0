"""Symbolic potentials V: R^d -> R.

A potential is an immutable tree of nodes.  Besides pointwise evaluation every
node reports structural facts that the integrators and sup searches use:

* ``sup_abs()``  -- an upper bound for sup|V| (inf if none is derivable),
* ``sign()``     -- +1 if V >= 0, -1 if V <= 0, 0 for V = 0, None if mixed,
* ``support()``  -- a ball containing supp V, or None,
* ``breaks(P, u)`` -- line parameters where V may jump,
* ``symmetry()`` -- ("constant",), ("radial", c) or ("axial",),
* ``pieces()``   -- an exact decomposition into constants, ball indicators and
  cylinder pieces whose Gaussian masses have closed forms (None if not
  available, e.g. for truncations of non-constant nodes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats

from .errors import DomainError, UsageError
from .kernels import as_point
from .quadrature import line_ball_hits

E_INV = math.exp(-1.0)

# --------------------------------------------------------------------------
# profile functions of the d = 3 construction


def _check_small_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(~((r > 0) & (r < E_INV))):
        raise DomainError("r must lie in (0, 1/e)")
    return r


def rho(r):
    """1 / (r^2 |ln r| ln|ln r|) on (0, 1/e)."""
    r = _check_small_r(r)
    L = -np.log(r)
    out = 1.0 / (r * r * L * np.log(L))
    return float(out) if out.ndim == 0 else out


def f_profile(r):
    """1 / (r |ln r| ln|ln r|) on (0, 1/e)."""
    r = _check_small_r(r)
    return _f(r)


def _f(r):
    L = -np.log(r)
    out = 1.0 / (r * L * np.log(L))
    return float(out) if np.ndim(out) == 0 else out


def f_antiderivative_integral(a, b):
    """int_a^b f(r) dr = lnlnln(1/a) - lnlnln(1/b), 0 < a <= b < 1/e."""
    _check_small_r([a, b])
    return math.log(math.log(-math.log(a))) - math.log(math.log(-math.log(b)))


# --------------------------------------------------------------------------
# pieces with closed-form Gaussian masses

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_AXIAL_PANELS = 8
_WINDOW = 9.0


def _ball_prob(delta2, R, sigma, d):
    """P(|Z - c| <= R) for Z ~ N(m, sigma^2 I_d), |m - c|^2 = delta2."""
    delta2 = np.asarray(delta2, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), delta2.shape)
    out = np.empty(delta2.shape)
    tiny = sigma <= 1e-13 * max(R, 1.0)
    out[tiny] = (delta2[tiny] <= R * R).astype(float)
    ok = ~tiny
    if np.any(ok):
        s = sigma[ok]
        if d == 1:
            m = np.sqrt(delta2[ok])
            out[ok] = special.ndtr((R - m) / s) - special.ndtr((-R - m) / s)
        else:
            rr = R / s
            val = np.empty(s.shape)
            # the erf form cancels when the ball is small against sigma
            erf_ok = np.full(s.shape, d == 3) & (rr >= 0.5)
            if np.any(erf_ok):
                val[erf_ok] = _ball_prob3(np.sqrt(delta2[ok][erf_ok]) / s[erf_ok], rr[erf_ok])
            rest = ~erf_ok
            if np.any(rest):
                val[rest] = _chi_prob(rr[rest] ** 2, delta2[ok][rest] / s[rest] ** 2, d)
            out[ok] = val
    return out


def _chi_prob(x, nc, d):
    """P(noncentral chi^2_d(nc) <= x)."""
    val = np.empty(x.shape)
    zero = nc == 0
    val[zero] = stats.chi2.cdf(x[zero], d)
    far = (~zero) & (np.sqrt(nc) - np.sqrt(x) > 40.0)
    val[far] = 0.0
    rest = ~(zero | far)
    if np.any(rest):
        val[rest] = stats.ncx2.cdf(x[rest], d, nc[rest])
    return np.clip(val, 0.0, 1.0)


def _ball_prob3(mu, rho_):
    """P(|Z - m| <= rho) for a standard 3-d Gaussian Z and |m| = mu (erf closed form)."""
    mu = np.asarray(mu, dtype=float)
    rho_ = np.broadcast_to(np.asarray(rho_, dtype=float), mu.shape)
    phi = np.exp(-0.5 * (rho_ - mu) ** 2) / math.sqrt(2.0 * math.pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        # (phi(rho - mu) - phi(rho + mu)) / mu, written without cancellation
        corr = np.where(mu > 0, phi * -np.expm1(-2.0 * rho_ * mu) / mu,
                        2.0 * rho_ * np.exp(-0.5 * rho_**2) / math.sqrt(2.0 * math.pi))
    p = special.ndtr(rho_ - mu) - special.ndtr(-rho_ - mu) - corr
    return np.clip(p, 0.0, 1.0)


@dataclass(frozen=True)
class ConstPiece:
    amp: float

    def value(self, Z):
        return np.full(Z.shape[0], self.amp)

    def gauss_mass(self, M, sigma):
        return np.full(M.shape[0], self.amp)

    def scaled(self, c):
        return ConstPiece(c * self.amp)

    def dilated(self, s):
        return ConstPiece(s * self.amp)


@dataclass(frozen=True)
class BallPiece:
    center: tuple
    radius: float
    amp: float

    def value(self, Z):
        c = np.asarray(self.center)
        return np.where(np.sum((Z - c) ** 2, axis=1) <= self.radius**2, self.amp, 0.0)

    def gauss_mass(self, M, sigma):
        c = np.asarray(self.center)
        delta2 = np.sum((M - c) ** 2, axis=1)
        return self.amp * _ball_prob(delta2, self.radius, sigma, c.size)

    def scaled(self, c):
        return BallPiece(self.center, self.radius, c * self.amp)

    def dilated(self, s):
        q = math.sqrt(s)
        return BallPiece(tuple(np.asarray(self.center) / q), self.radius / q, s * self.amp)


@dataclass(frozen=True)
class CylinderPiece:
    """amp * f(scale * z1) on [a, b] x D_radius (axis along e1, d = 3)."""

    a: float
    b: float
    radius: float
    amp: float
    scale: float

    def value(self, Z):
        inside = (Z[:, 0] >= self.a) & (Z[:, 0] <= self.b) & (Z[:, 1] ** 2 + Z[:, 2] ** 2 <= self.radius**2)
        out = np.zeros(Z.shape[0])
        if np.any(inside):
            out[inside] = self.amp * _f(self.scale * Z[inside, 0])
        return out

    def gauss_mass(self, M, sigma):
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (M.shape[0],))
        disk = _ball_prob(M[:, 1] ** 2 + M[:, 2] ** 2, self.radius, sigma, 2)
        m1 = M[:, 0]
        lo = np.maximum(self.a, m1 - _WINDOW * sigma)
        hi = np.minimum(self.b, m1 + _WINDOW * sigma)
        axial = np.zeros(M.shape[0])
        active = (hi > lo) & (disk > 0)
        point = sigma <= 1e-13
        pt = point & (m1 >= self.a) & (m1 <= self.b)
        axial[pt] = _f(self.scale * m1[pt])
        act = active & ~point
        if np.any(act):
            lo_a, hi_a, m_a, s_a = lo[act], hi[act], m1[act], sigma[act]
            edges = np.linspace(0.0, 1.0, _AXIAL_PANELS + 1)
            total = np.zeros(lo_a.size)
            for e0, e1 in zip(edges[:-1], edges[1:]):
                c0 = lo_a + (hi_a - lo_a) * e0
                c1 = lo_a + (hi_a - lo_a) * e1
                half = 0.5 * (c1 - c0)
                z = 0.5 * (c0 + c1)[:, None] + half[:, None] * _GL_X[None, :]
                dens = np.exp(-0.5 * ((z - m_a[:, None]) / s_a[:, None]) ** 2) / (math.sqrt(2 * math.pi) * s_a[:, None])
                total += half * np.sum(_GL_W * _f(self.scale * z) * dens, axis=1)
            axial[act] = total
        return self.amp * disk * axial

    def scaled(self, c):
        return CylinderPiece(self.a, self.b, self.radius, c * self.amp, self.scale)

    def dilated(self, s):
        q = math.sqrt(s)
        return CylinderPiece(self.a / q, self.b / q, self.radius / q, s * self.amp, self.scale * q)


def pieces_value(pieces, Z):
    out = np.zeros(Z.shape[0])
    for p in pieces:
        out += p.value(Z)
    return out


def pieces_gauss_mass(pieces, M, sigma):
    """int sum(pieces)(z) N(M, sigma^2 I)(dz), vectorised over the rows of M."""
    out = np.zeros(M.shape[0])
    for p in pieces:
        out += p.gauss_mass(M, sigma)
    return out


# --------------------------------------------------------------------------
# node tree


def _enclosing_ball(balls, dim):
    balls = [b for b in balls if b is not None]
    if not balls:
        return None
    if len(balls) == 1:
        return balls[0]
    lo = np.min([c - r for c, r in balls], axis=0)
    hi = np.max([c + r for c, r in balls], axis=0)
    c0 = 0.5 * (lo + hi)
    r0 = max(float(np.linalg.norm(c - c0)) + r for c, r in balls)
    return c0, r0


def _combine_symmetry(syms):
    syms = [s for s in syms if s is not None and s[0] != "constant"]
    if any(s is None for s in syms):
        return None
    if not syms:
        return ("constant",)
    radial = [s for s in syms if s[0] == "radial"]
    if len(radial) == len(syms):
        c0 = radial[0][1]
        if all(np.allclose(s[1], c0, atol=0, rtol=0) for s in radial):
            return ("radial", c0)
    # axial about the e1 axis: radial nodes must sit on that axis
    if all(s[0] == "axial" or (s[0] == "radial" and len(s[1]) == 3 and s[1][1] == 0 and s[1][2] == 0) for s in syms):
        return ("axial",)
    return None


class Potential:
    dim: int

    # evaluation ---------------------------------------------------------
    def __call__(self, Z):
        Z = np.asarray(Z, dtype=float)
        single = Z.ndim == 1
        Z2 = Z.reshape(-1, self.dim)
        out = self._eval(Z2)
        return float(out[0]) if single else out

    def _eval(self, Z):
        raise NotImplementedError

    def abs_eval(self, Z):
        return np.abs(self._eval(Z))

    # structure ----------------------------------------------------------
    def sup_abs(self) -> float:
        raise NotImplementedError

    def sign(self):
        raise NotImplementedError

    def support(self):
        raise NotImplementedError

    def breaks(self, P, u):
        return np.zeros((P.shape[0], 0))

    def symmetry(self):
        return None

    def pieces(self):
        return None

    def is_zero(self) -> bool:
        return False

    def abs_pieces(self):
        """Pieces of |V| if |V| decomposes exactly, else None."""
        if self.is_zero():
            return []
        sgn = self.sign()
        pcs = self.pieces()
        if pcs is None or sgn is None:
            return None
        if sgn < 0:
            pcs = [p.scaled(-1.0) for p in pcs]
        if any(p.amp < 0 for p in pcs):
            return None
        return pcs

    def dsl(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<Potential d={self.dim} {self.dsl()}>"


class Zero(Potential):
    def __init__(self, dim: int):
        self.dim = _check_dim(dim)

    def _eval(self, Z):
        return np.zeros(Z.shape[0])

    def sup_abs(self):
        return 0.0

    def sign(self):
        return 0

    def support(self):
        return np.zeros(self.dim), 0.0

    def symmetry(self):
        return ("constant",)

    def pieces(self):
        return []

    def is_zero(self):
        return True

    def dsl(self):
        return "zero"


class Constant(Potential):
    def __init__(self, a: float, dim: int):
        self.dim = _check_dim(dim)
        self.a = _finite(a, "constant")

    def _eval(self, Z):
        return np.full(Z.shape[0], self.a)

    def sup_abs(self):
        return abs(self.a)

    def sign(self):
        return int(np.sign(self.a))

    def support(self):
        return (np.zeros(self.dim), 0.0) if self.a == 0 else None

    def symmetry(self):
        return ("constant",)

    def pieces(self):
        return [ConstPiece(self.a)] if self.a != 0 else []

    def is_zero(self):
        return self.a == 0

    def dsl(self):
        return f"const:{self.a!r}"


class BallIndicator(Potential):
    def __init__(self, center, r: float, amp: float, dim: Optional[int] = None):
        c = as_point(center, dim)
        if c.ndim != 1:
            raise UsageError("ball center must be a single point")
        self.center = c
        self.dim = c.size
        if not r > 0:
            raise DomainError("ball radius must be positive")
        self.r = float(r)
        self.amp = _finite(amp, "amplitude")

    def _eval(self, Z):
        return np.where(np.sum((Z - self.center) ** 2, axis=1) <= self.r**2, self.amp, 0.0)

    def sup_abs(self):
        return abs(self.amp)

    def sign(self):
        return int(np.sign(self.amp))

    def support(self):
        return self.center.copy(), self.r

    def breaks(self, P, u):
        return np.stack(line_ball_hits(P, u, self.center, self.r), axis=1)

    def symmetry(self):
        return ("radial", tuple(self.center))

    def pieces(self):
        return [BallPiece(tuple(self.center), self.r, self.amp)] if self.amp != 0 else []

    def is_zero(self):
        return self.amp == 0

    def dsl(self):
        tail = "" if not np.any(self.center) else "," + ",".join(repr(float(c)) for c in self.center)
        return f"ball:{self.r!r},{self.amp!r}{tail}"


class Cylinder3(Potential):
    """f(z1/(25n)) on the cylinders [k, k+1/4] x D_{sqrt(k/(25n))}, k = 1..n (d = 3)."""

    def __init__(self, n: int, dim: int = 3):
        if dim != 3:
            raise UsageError("cylinder potentials live in d = 3")
        if int(n) != n or n < 1:
            raise DomainError("cylinder index n must be a positive integer")
        self.dim = 3
        self.n = int(n)
        self.k = np.arange(1, self.n + 1, dtype=float)
        self.radii = np.sqrt(self.k / (25.0 * self.n))

    def _eval(self, Z):
        z1 = Z[:, 0]
        k = np.floor(z1)
        inside_axis = (k >= 1) & (k <= self.n) & (z1 - k <= 0.25)
        kk = np.clip(k, 1, self.n)
        r2 = Z[:, 1] ** 2 + Z[:, 2] ** 2
        inside = inside_axis & (r2 <= kk / (25.0 * self.n))
        out = np.zeros(Z.shape[0])
        if np.any(inside):
            out[inside] = _f(z1[inside] / (25.0 * self.n))
        return out

    def sup_abs(self):
        # f is decreasing below r ~ 0.1 and the argument never exceeds 0.05
        ends = np.concatenate([self.k, self.k + 0.25]) / (25.0 * self.n)
        return float(np.max(_f(ends)))

    def sign(self):
        return 1

    def support(self):
        return np.zeros(3), float(self.n + 1)

    def breaks(self, P, u):
        with np.errstate(divide="ignore", invalid="ignore"):
            planes = np.concatenate([self.k, self.k + 0.25])
            t_planes = (planes[None, :] - P[:, :1]) / u[:, :1]
        P2 = np.concatenate([np.zeros((P.shape[0], 1)), P[:, 1:]], axis=1)
        u2 = np.concatenate([np.zeros((u.shape[0], 1)), u[:, 1:]], axis=1)
        cols = [t_planes]
        for r in np.unique(self.radii):
            t1, t2 = line_ball_hits(P2, u2, np.zeros(3), r)
            cols += [t1[:, None], t2[:, None]]
        return np.concatenate(cols, axis=1)

    def symmetry(self):
        return ("axial",)

    def pieces(self):
        sc = 1.0 / (25.0 * self.n)
        return [CylinderPiece(float(k), float(k) + 0.25, float(r), 1.0, sc) for k, r in zip(self.k, self.radii)]

    def dsl(self):
        return f"cyl3:{self.n}"


class Dilate(Potential):
    """tau_s f(z) = s f(sqrt(s) z)."""

    def __init__(self, s: float, inner: Potential):
        if not s > 0:
            raise DomainError("dilatation parameter must be positive")
        self.s = float(s)
        self.q = math.sqrt(self.s)
        self.inner = inner
        self.dim = inner.dim

    def _eval(self, Z):
        return self.s * self.inner._eval(self.q * Z)

    def sup_abs(self):
        return self.s * self.inner.sup_abs()

    def sign(self):
        return self.inner.sign()

    def support(self):
        sb = self.inner.support()
        if sb is None:
            return None
        return sb[0] / self.q, sb[1] / self.q

    def breaks(self, P, u):
        return self.inner.breaks(self.q * P, self.q * u)

    def symmetry(self):
        sym = self.inner.symmetry()
        if sym is not None and sym[0] == "radial":
            return ("radial", tuple(np.asarray(sym[1]) / self.q))
        return sym

    def pieces(self):
        pcs = self.inner.pieces()
        return None if pcs is None else [p.dilated(self.s) for p in pcs]

    def is_zero(self):
        return self.inner.is_zero()

    def dsl(self):
        return f"dilate:{self.s!r}({self.inner.dsl()})"


class Truncate(Potential):
    """inner * 1_{B(0, r)}."""

    def __init__(self, r: float, inner: Potential):
        if not r > 0:
            raise DomainError("truncation radius must be positive")
        self.r = float(r)
        self.inner = inner
        self.dim = inner.dim

    def _eval(self, Z):
        return np.where(np.sum(Z * Z, axis=1) <= self.r**2, self.inner._eval(Z), 0.0)

    def sup_abs(self):
        return self.inner.sup_abs()

    def sign(self):
        return self.inner.sign()

    def support(self):
        own = (np.zeros(self.dim), self.r)
        sb = self.inner.support()
        if sb is None or sb[1] >= self.r:
            return own
        return sb

    def breaks(self, P, u):
        t1, t2 = line_ball_hits(P, u, np.zeros(self.dim), self.r)
        return np.concatenate([self.inner.breaks(P, u), t1[:, None], t2[:, None]], axis=1)

    def symmetry(self):
        sym = self.inner.symmetry()
        if sym is None:
            return None
        origin = tuple(np.zeros(self.dim))
        if sym[0] == "constant" or (sym[0] == "radial" and not np.any(sym[1])):
            return ("radial", origin)
        if sym[0] == "axial" or (sym[0] == "radial" and self.dim == 3 and sym[1][1] == 0 and sym[1][2] == 0):
            return ("axial",)
        return None

    def pieces(self):
        if self.inner.is_zero():
            return []
        if isinstance(self.inner, Constant):
            return [BallPiece(tuple(np.zeros(self.dim)), self.r, self.inner.a)]
        sb = self.inner.support()
        if sb is not None and np.linalg.norm(sb[0]) + sb[1] <= self.r:
            return self.inner.pieces()
        return None

    def is_zero(self):
        return self.inner.is_zero()

    def dsl(self):
        return f"trunc:{self.r!r}({self.inner.dsl()})"


class Scale(Potential):
    def __init__(self, c: float, inner: Potential):
        self.c = _finite(c, "scale factor")
        self.inner = inner
        self.dim = inner.dim

    def _eval(self, Z):
        return self.c * self.inner._eval(Z)

    def sup_abs(self):
        return abs(self.c) * self.inner.sup_abs() if self.c != 0 else 0.0

    def sign(self):
        s = self.inner.sign()
        if self.c == 0:
            return 0
        return None if s is None else int(np.sign(self.c)) * s

    def support(self):
        return (np.zeros(self.dim), 0.0) if self.c == 0 else self.inner.support()

    def breaks(self, P, u):
        return self.inner.breaks(P, u)

    def symmetry(self):
        return ("constant",) if self.c == 0 else self.inner.symmetry()

    def pieces(self):
        if self.c == 0:
            return []
        pcs = self.inner.pieces()
        return None if pcs is None else [p.scaled(self.c) for p in pcs]

    def is_zero(self):
        return self.c == 0 or self.inner.is_zero()

    def dsl(self):
        return f"scale:{self.c!r}({self.inner.dsl()})"


class Negate(Scale):
    def __init__(self, inner: Potential):
        super().__init__(-1.0, inner)

    def dsl(self):
        return f"neg({self.inner.dsl()})"


class Sum(Potential):
    def __init__(self, terms: Sequence[Potential]):
        terms = list(terms)
        if not terms:
            raise UsageError("sum needs at least one term")
        _same_dim(terms)
        self.terms = terms
        self.dim = terms[0].dim

    def _eval(self, Z):
        out = np.zeros(Z.shape[0])
        for t in self.terms:
            out += t._eval(Z)
        return out

    def sup_abs(self):
        return float(sum(t.sup_abs() for t in self.terms))

    def sign(self):
        signs = {t.sign() for t in self.terms if not t.is_zero()}
        if not signs:
            return 0
        if None in signs or len(signs) > 1:
            return None
        return signs.pop()

    def support(self):
        sbs = [t.support() for t in self.terms if not t.is_zero()]
        if any(sb is None for sb in sbs):
            return None
        if not sbs:
            return np.zeros(self.dim), 0.0
        return _enclosing_ball(sbs, self.dim)

    def breaks(self, P, u):
        return np.concatenate([t.breaks(P, u) for t in self.terms], axis=1)

    def symmetry(self):
        return _combine_symmetry([t.symmetry() for t in self.terms if not t.is_zero()] or [("constant",)])

    def pieces(self):
        out = []
        for t in self.terms:
            pcs = t.pieces()
            if pcs is None:
                return None
            out += pcs
        return out

    def is_zero(self):
        return all(t.is_zero() for t in self.terms)

    def dsl(self):
        return "sum(" + ";".join(t.dsl() for t in self.terms) + ")"


class Series(Potential):
    """sum_{i < L} w_i V_i; the remaining listed terms form the tail."""

    def __init__(self, weights: Sequence[float], terms: Sequence[Potential], truncation_len: int):
        weights = [float(w) for w in weights]
        terms = list(terms)
        if len(weights) != len(terms) or not terms:
            raise UsageError("series needs one weight per term")
        if any(not (w > 0 and math.isfinite(w)) for w in weights):
            raise DomainError("series weights must be positive and finite")
        if int(truncation_len) != truncation_len or not 1 <= truncation_len <= len(terms):
            raise UsageError("truncation_len must be between 1 and the number of terms")
        _same_dim(terms)
        self.weights = weights
        self.all_terms = terms
        self.L = int(truncation_len)
        self.dim = terms[0].dim
        self._head = Sum([Scale(w, t) for w, t in zip(weights[: self.L], terms[: self.L])])

    def truncated(self, L: int) -> "Series":
        return Series(self.weights, self.all_terms, L)

    def tail_bound(self) -> float:
        """sum_{i >= L} w_i sup|V_i| over the listed terms."""
        return float(sum(w * t.sup_abs() for w, t in zip(self.weights[self.L:], self.all_terms[self.L:])))

    def _eval(self, Z):
        return self._head._eval(Z)

    def sup_abs(self):
        return self._head.sup_abs()

    def sign(self):
        return self._head.sign()

    def support(self):
        return self._head.support()

    def breaks(self, P, u):
        return self._head.breaks(P, u)

    def symmetry(self):
        return self._head.symmetry()

    def pieces(self):
        return self._head.pieces()

    def is_zero(self):
        return self._head.is_zero()

    def dsl(self):
        # the DSL has no series form; emit the evaluated head
        return self._head.dsl()


def dilation_series(base: Potential, s_values, r_values, truncation_len: Optional[int] = None) -> Series:
    """sum_n 2^{-n} tau_{s_n}(base * 1_{B(0, r_n)}), the assembly pattern used for
    d >= 4 counterexamples.  The base potential is supplied by the caller."""
    s_values = list(s_values)
    r_values = list(r_values)
    if len(s_values) != len(r_values) or not s_values:
        raise UsageError("need matching, nonempty s and r sequences")
    terms = [Dilate(s, Truncate(r, base)) for s, r in zip(s_values, r_values)]
    weights = [2.0 ** -(i + 1) for i in range(len(terms))]
    return Series(weights, terms, truncation_len or len(terms))


def cylinder_potential(n: int) -> Cylinder3:
    return Cylinder3(n)


def evaluate(V: Potential, z) -> float:
    z = as_point(z, V.dim)
    return V(z)


def support_bound(V: Potential):
    """A ball (center, radius) containing supp V, or None if unbounded."""
    return V.support()


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise UsageError("dimension must be a positive integer")
    return int(dim)


def _finite(a, what):
    a = float(a)
    if not math.isfinite(a):
        raise DomainError(f"{what} must be finite")
    return a


def _same_dim(terms):
    dims = {t.dim for t in terms}
    if len(dims) != 1:
        raise UsageError(f"terms of different dimensions: {sorted(dims)}")
