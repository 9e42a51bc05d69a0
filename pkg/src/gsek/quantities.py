"""Functionals of a potential: S, N, K(V), A, Kato brackets, r_*, e_*, Delta^{-1}V
and their sup norms.

Two evaluation routes are used.

* Time route.  For a Gaussian kernel the inner space integral is a Gaussian
  mass of |V|, which has a closed form for every piece of a decomposable
  potential (constants, balls, cylinder pieces).  S, N, A, r_* and the
  Laplace-transform form of e_* reduce to one adaptive 1-d time integral.
* Space route.  Explicit singular kernels (K, the Kato brackets, the
  resolvent and Newtonian kernels) are integrated piece by piece along rays
  from the singular point x, or along lines parallel to a cylinder axis when x
  lies outside the cylinder.

Sup norms go through :func:`gsek.search.sup_search`; every sup is a lower
bound (see SupResult.lower_bound_only).
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from . import kernels as kn
from .errors import DivergenceError, DomainError, UsageError
from .potentials import BallPiece, ConstPiece, CylinderPiece, Potential, pieces_gauss_mass
from .quadrature import (
    DiskLines, Estimate, QuadConfig, RayFamily, ball_rays, fixed_lines, fixed_rule, graded_points,
    integrate_1d, integrate_lines, integrate_space, line_ball_hits, sum_estimates,
)
from .search import SearchConfig, SupResult, one_vector_reduction, sup_search, two_vector_reduction

DEFAULT_QUAD = QuadConfig()
DEFAULT_SEARCH = SearchConfig()

# grading levels of the time mesh toward singular endpoints
TIME_GRADE = 16
# Laplace-type time integrals are cut at this many decay times
LAPLACE_CUT = 40.0


def _check_t(t, name="t"):
    t = float(t)
    if not t > 0:
        raise DomainError(f"{name} must be positive")
    return t


def _pt(V: Potential, x, name="x"):
    x = kn.as_point(x, V.dim)
    if x.ndim != 1:
        raise UsageError(f"{name} must be a single point")
    return x


# --------------------------------------------------------------------------
# Gaussian masses of |V| (and of V)


class MassFunction:
    """(M, sigma) -> int |V(z)| N(M, sigma^2 I)(dz), vectorised over rows of M."""

    def __init__(self, V: Potential, signed: bool = False, config: QuadConfig = DEFAULT_QUAD):
        self.V = V
        self.dim = V.dim
        self.signed = signed
        self.pieces = V.pieces() if signed else V.abs_pieces()
        self.config = config

    @property
    def closed_form(self) -> bool:
        return self.pieces is not None

    def __call__(self, M, sigma):
        M = np.asarray(M, dtype=float).reshape(-1, self.dim)
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (M.shape[0],))
        if self.pieces is not None:
            return pieces_gauss_mass(self.pieces, M, sigma)
        return np.array([self._generic(m, s) for m, s in zip(M, sigma)])

    def _generic(self, m, s):
        V, d = self.V, self.dim
        if s <= 0:
            val = V(m)
            return val if self.signed else abs(val)
        sb = V.support()
        if sb is not None and sb[1] == 0:
            return 0.0
        weight = (2.0 * math.pi * s * s) ** (-d / 2.0)

        def f(Z):
            vals = V._eval(Z) if self.signed else V.abs_eval(Z)
            return vals * weight * np.exp(-np.sum((Z - m) ** 2, axis=1) / (2.0 * s * s))

        est = integrate_space(f, d, domain_hint=sb, config=self.config.loosened(1e-9),
                              gaussian=(m, 0.5 * s * s), breaks=V.breaks)
        return est.value


# --------------------------------------------------------------------------
# time-route integrands


def _bridge_params(t, x, y, s):
    """Mean and sigma of the Brownian-bridge marginal at times s (s[:, None] broadcast)."""
    frac = s / t
    mean = x + frac[..., None] * (y - x)
    sigma = np.sqrt(np.maximum(2.0 * s * (t - s) / t, 0.0))
    return mean, sigma


def _time_estimate(h, a, b, config, left=TIME_GRADE, right=TIME_GRADE):
    return integrate_1d(h, graded_points(a, b, left, right), config)


def S_value(V: Potential, t, x, y, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """S(V,t,x,y) = int_0^t int g(s,x,z) g(t-s,z,y) / g(t,x,y) |V(z)| dz ds."""
    t = _check_t(t)
    x, y = _pt(V, x), _pt(V, y, "y")
    if V.is_zero():
        return Estimate.zero()
    mass = MassFunction(V, config=config)

    def h(s):
        mean, sigma = _bridge_params(t, x, y, s)
        return mass(mean, sigma)

    return _time_estimate(h, 0.0, t, config)


def N_value(V: Potential, t, x, y, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """Two-piece tilted-Gaussian functional N(V,t,x,y)."""
    t = _check_t(t)
    x, y = _pt(V, x), _pt(V, y, "y")
    if V.is_zero():
        return Estimate.zero()
    d = V.dim
    mass = MassFunction(V, config=config)
    c = (4.0 * math.pi) ** (d / 2.0)

    def first(tau):
        mean = y - (tau / t)[:, None] * (y - x)
        return mass(mean, np.sqrt(2.0 * tau))

    def second(tau):
        mean = y - (tau / t)[:, None] * (y - x)
        return mass(mean, np.sqrt(2.0 * (t - tau)))

    half_cfg = config.replace(abs_tol=config.abs_tol / (2.0 * c))
    e1 = _time_estimate(first, 0.0, 0.5 * t, half_cfg, TIME_GRADE, 0)
    e2 = _time_estimate(second, 0.5 * t, t, half_cfg, 0, TIME_GRADE)
    return (e1 + e2).scaled(c)


def heat_mass_value(V: Potential, t, x, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """int_0^t int g(s,x,z) |V(z)| dz ds (the quantity under the sup in A(t))."""
    t = _check_t(t)
    x = _pt(V, x)
    if V.is_zero():
        return Estimate.zero()
    mass = MassFunction(V, config=config)
    return _time_estimate(lambda s: mass(np.broadcast_to(x, (s.size, V.dim)), np.sqrt(2.0 * s)),
                          0.0, t, config, TIME_GRADE, 0)


def drift_mass_value(V: Potential, t, alpha, x, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """int_0^t int p_alpha(s,x,z) |V(z)| dz ds (the quantity under the sup in r_*)."""
    t = _check_t(t)
    x, alpha = _pt(V, x), _pt(V, alpha, "alpha")
    if V.is_zero():
        return Estimate.zero()
    mass = MassFunction(V, config=config)
    return _time_estimate(lambda s: mass(x - 2.0 * s[:, None] * alpha, np.sqrt(2.0 * s)),
                          0.0, t, config, TIME_GRADE, 0)


def resolvent_mass_time(V: Potential, lam, alpha, x, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """int_0^inf e^{-lam s} int p_alpha(s,x,z)|V(z)| dz ds by the time route."""
    lam = _check_t(lam, "lambda")
    x, alpha = _pt(V, x), _pt(V, alpha, "alpha")
    if V.is_zero():
        return Estimate.zero()
    mass = MassFunction(V, config=config)
    return _time_estimate(lambda s: np.exp(-lam * s) * mass(x - 2.0 * s[:, None] * alpha, np.sqrt(2.0 * s)),
                          0.0, LAPLACE_CUT / lam, config, TIME_GRADE, 0)


# --------------------------------------------------------------------------
# space route: kernels integrated against the pieces of |V|


def _cyl_exit(x, u, piece: CylinderPiece):
    with np.errstate(divide="ignore", invalid="ignore"):
        ax = np.where(u[:, 0] > 0, (piece.b - x[0]) / u[:, 0],
                      np.where(u[:, 0] < 0, (piece.a - x[0]) / u[:, 0], np.inf))
        a = u[:, 1] ** 2 + u[:, 2] ** 2
        b = x[1] * u[:, 1] + x[2] * u[:, 2]
        c = x[1] ** 2 + x[2] ** 2 - piece.radius**2
        lat = np.where(a > 0, (-b + np.sqrt(np.maximum(b * b - a * c, 0.0))) / a, np.inf)
    return np.maximum(np.minimum(ax, lat), 0.0)


def _cyl_kink_angles(x, w, piece: CylinderPiece, reach=None):
    """Polar angles (from e1), per transverse direction w, where the ray
    length min(exit, reach) from an inside point x is not smooth: the two
    rims and, for a finite reach, where the reach sphere crosses side and caps."""
    pw = x[1] * w[:, 1] + x[2] * w[:, 2]
    side = -pw + np.sqrt(np.maximum(pw * pw - x[1] ** 2 - x[2] ** 2 + piece.radius**2, 0.0))
    up, down = piece.b - x[0], x[0] - piece.a
    out = [np.arctan2(side, up), math.pi - np.arctan2(side, down)]
    if reach is not None:
        g = np.arcsin(np.minimum(side / reach, 1.0))
        n = w.shape[0]
        out += [g, math.pi - g, np.full(n, math.acos(min(up / reach, 1.0))),
                np.full(n, math.pi - math.acos(min(down / reach, 1.0)))]
    return np.stack(out, axis=1)


def _inside_cyl(x, piece):
    return piece.a <= x[0] <= piece.b and x[1] ** 2 + x[2] ** 2 <= piece.radius**2


class SpaceIntegral:
    """int kernel(z - x) |V(z)| dz (or V(z) if ``signed``) split over pieces.

    ``reach`` (float) says the kernel vanishes for |z - x| > reach;
    ``reach_fn(u)`` gives a per-direction cut for kernels that decay
    exponentially; one of them is required for unbounded potentials.
    """

    def __init__(self, V: Potential, kernel, reach=None, reach_fn=None, signed=False):
        self.V = V
        self.d = V.dim
        self.kernel = kernel
        self.reach = reach
        self.reach_fn = reach_fn
        self.signed = signed
        self.pieces = V.pieces() if signed else V.abs_pieces()

    def _jobs(self, x):
        """(family, integrand, breaks, grade) per piece."""
        d, kernel, reach = self.d, self.kernel, self.reach
        jobs = []

        def reach_break(P, u):
            if reach is None:
                return np.zeros((P.shape[0], 0))
            t1, t2 = line_ball_hits(P, u, x, reach)
            return np.stack([t1, t2], axis=1)

        def ray_reach_break(P, u):
            if reach is None:
                return np.zeros((P.shape[0], 0))
            return np.full((P.shape[0], 1), reach)

        pieces = self.pieces
        if pieces is None:
            sb = self.V.support()
            V = self.V
            if sb is None:
                if reach is None and self.reach_fn is None:
                    raise DivergenceError("unbounded potential needs a kernel with finite reach")
                R = reach if reach is not None else None
                fam = RayFamily(x, rho_max=(R if R is not None else self.reach_fn))
            else:
                fam = ball_rays(x, sb[0], sb[1], reach=reach) if sb[1] > 0 else None
            if fam is None:
                return jobs
            vals = V._eval if self.signed else V.abs_eval

            def integrand(Z, vals=vals):
                return kernel(Z - x) * vals(Z)

            def brk(P, u):
                return np.concatenate([V.breaks(P, u), ray_reach_break(P, u)], axis=1)
            inside = sb is None or float(np.linalg.norm(x - sb[0])) < sb[1]
            jobs.append((fam, integrand, brk, inside))
            return jobs

        for p in pieces:
            if isinstance(p, ConstPiece):
                if p.amp == 0:
                    continue
                if reach is None and self.reach_fn is None:
                    raise DivergenceError("the kernel integral of a constant potential diverges")
                fam = RayFamily(x, rho_max=(reach if reach is not None else self.reach_fn))
                jobs.append((fam, lambda Z, a=p.amp: a * kernel(Z - x), None, True))
            elif isinstance(p, BallPiece):
                c = np.asarray(p.center)
                if reach is not None and np.linalg.norm(c - x) - p.radius >= reach:
                    continue
                fam = ball_rays(x, c, p.radius, reach=reach)
                inside = float(np.linalg.norm(c - x)) < p.radius
                jobs.append((fam, lambda Z, a=p.amp: a * kernel(Z - x), ray_reach_break, inside))
            elif isinstance(p, CylinderPiece):
                if _inside_cyl(x, p):
                    fam = RayFamily(x, span=lambda u, p=p: (np.zeros(u.shape[0]), _cyl_exit(x, u, p)),
                                    polar_break_fn=lambda w, p=p: _cyl_kink_angles(x, w, p, reach),
                                    n_polar_breaks=2 if reach is None else 6)
                    jobs.append((fam, lambda Z, p=p: p.value(Z) * kernel(Z - x), ray_reach_break, True))
                else:
                    fam = DiskLines(p.a, p.b, p.radius)
                    jobs.append((fam, lambda Z, p=p: p.amp * _profile(p, Z) * kernel(Z - x), reach_break, False))
            else:  # pragma: no cover
                raise UsageError(f"unknown piece {p!r}")
        return jobs

    def estimate(self, x, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
        x = np.asarray(x, dtype=float)
        jobs = self._jobs(x)
        if not jobs:
            return Estimate.zero()
        cfg = config.replace(abs_tol=config.abs_tol / len(jobs))
        return sum_estimates(integrate_lines(fam, fn, cfg, breaks=brk, grade_start=g) for fam, fn, brk, g in jobs)

    def quick(self, x, outer_order=6, inner_order=8) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(fixed_lines(fam, fn, breaks=brk, outer_order=outer_order, inner_order=inner_order,
                                     grade_start=g) for fam, fn, brk, g in self._jobs(x)))


def _profile(p: CylinderPiece, Z):
    from .potentials import _f
    return _f(p.scale * Z[:, 0])


def _K_kernel(t, y):
    y = np.asarray(y, dtype=float)

    def k(W):
        return kn._sharp_K(t, W, np.broadcast_to(y, W.shape))
    return k


def K_potential_value(V: Potential, t, x, y, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """K(V,t,x,y) = int K(t, z - x, y) |V(z)| dz (rays from z = x)."""
    t = _check_t(t)
    x, y = _pt(V, x), _pt(V, y, "y")
    reach = t * float(np.linalg.norm(y))
    if V.is_zero() or reach == 0:
        return Estimate.zero()
    return SpaceIntegral(V, _K_kernel(t, y), reach=reach).estimate(x, config)


def _bracket_kernel(t, d):
    def k(W):
        r = np.sqrt(np.sum(W * W, axis=1))
        if d >= 3:
            with np.errstate(divide="ignore"):
                return r ** (2.0 - d)
        if d == 2:
            with np.errstate(divide="ignore"):
                return np.log(4.0 * t / (r * r))
        return np.full(W.shape[0], math.sqrt(t))
    return k


def bracket_value(V: Potential, t, x, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """Dimension-dependent Kato bracket at x (restricted to |z - x| < sqrt(4t))."""
    t = _check_t(t)
    x = _pt(V, x)
    if V.is_zero():
        return Estimate.zero()
    return SpaceIntegral(V, _bracket_kernel(t, V.dim), reach=math.sqrt(4.0 * t)).estimate(x, config)


def _resolvent_kernel_fn(lam, alpha):
    alpha = np.asarray(alpha, dtype=float)

    def k(W):
        return kn._resolvent(lam, np.broadcast_to(alpha, W.shape), W)
    return k


def _resolvent_reach(lam, alpha):
    kappa = math.sqrt(lam + float(alpha @ alpha))

    def reach(u):
        rate = kappa + u @ alpha
        return LAPLACE_CUT / np.maximum(rate, 1e-300)
    return reach


def resolvent_mass_space(V: Potential, lam, alpha, x, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """int R_lambda,alpha(x, z) |V(z)| dz with the explicit resolvent kernel."""
    lam = _check_t(lam, "lambda")
    x, alpha = _pt(V, x), _pt(V, alpha, "alpha")
    if V.is_zero():
        return Estimate.zero()
    return SpaceIntegral(V, _resolvent_kernel_fn(lam, alpha), reach_fn=_resolvent_reach(lam, alpha)).estimate(x, config)


def delta_inverse(V: Potential, x, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """Delta^{-1}V(x) = -int_0^inf int g(s,x,z) V(z) dz ds = -int N(z - x) V(z) dz."""
    x = _pt(V, x)
    if V.is_zero():
        return Estimate.zero()
    if V.dim <= 2:
        raise DivergenceError("int_0^inf g ds = inf for d <= 2; Delta^{-1}V diverges")
    if V.support() is None:
        raise DivergenceError("Delta^{-1} of a potential with unbounded support diverges")
    return SpaceIntegral(V, kn._newtonian, signed=True).estimate(x, config).scaled(-1.0)


def delta_inverse_time(V: Potential, x, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """Time-route counterpart of :func:`delta_inverse` (independent oracle).

    int_0^inf is split at S0; on [S0, inf) the substitution s = S0/u^2 makes
    the s^{-d/2} tail a smooth integrand on (0, 1].
    """
    x = _pt(V, x)
    if V.is_zero():
        return Estimate.zero()
    d = V.dim
    if d <= 2:
        raise DivergenceError("int_0^inf g ds = inf for d <= 2; Delta^{-1}V diverges")
    sb = V.support()
    if sb is None:
        raise DivergenceError("Delta^{-1} of a potential with unbounded support diverges")
    mass = MassFunction(V, signed=True, config=config)
    S0 = max(1.0, (float(np.linalg.norm(x - sb[0])) + sb[1]) ** 2)
    near = _time_estimate(lambda s: mass(np.broadcast_to(x, (s.size, d)), np.sqrt(2.0 * s)),
                          0.0, S0, config, TIME_GRADE, 0)

    def tail(u):
        s = S0 / (u * u)
        return mass(np.broadcast_to(x, (u.size, d)), np.sqrt(2.0 * s)) * 2.0 * S0 / u**3

    far = _time_estimate(tail, 0.0, 1.0, config, TIME_GRADE, 0)
    return (near + far).scaled(-1.0)


# --------------------------------------------------------------------------
# pointwise helpers for the p_alpha time integrals


def drift_kernel_time_integral(t, alpha, x, z, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """int_0^t p_alpha(s, x, z) ds."""
    t = _check_t(t)
    x, z = kn._pair(x, z)
    alpha = kn.as_point(alpha, x.shape[-1])
    w = z - x

    def h(s):
        return kn._gauss(s, np.broadcast_to(w, (s.size, w.size)) + 2.0 * s[:, None] * alpha)
    return _time_estimate(h, 0.0, t, config, 40, 0)


def drift_kernel_laplace(lam, alpha, x, z, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """int_0^inf e^{-lam s} p_alpha(s, x, z) ds by time quadrature.

    lam = 0 is allowed when the integral converges; the tail beyond the
    bulk is handled with s = S0/u^2.
    """
    lam = float(lam)
    x, z = kn._pair(x, z)
    d = x.shape[-1]
    alpha = kn.as_point(alpha, d)
    w = z - x

    def g(s):
        return np.exp(-lam * s) * kn._gauss(s, np.broadcast_to(w, (s.size, d)) + 2.0 * s[:, None] * alpha)

    scale = float(w @ w) + 1.0
    a2 = float(alpha @ alpha)
    if lam > 0:
        S0 = min(LAPLACE_CUT / lam, max(scale, 1.0))
    else:
        S0 = max(scale, 1.0)
    if a2 > 0:
        S0 = max(S0, math.sqrt(scale / a2))
    near = _time_estimate(g, 0.0, S0, config, 40, 0)

    def tail(u):
        s = S0 / (u * u)
        return g(s) * 2.0 * S0 / u**3

    far = _time_estimate(tail, 0.0, 1.0, config, 40, 0)
    return near + far


# --------------------------------------------------------------------------
# sup norms


def _piece_box(V: Potential):
    """Bounding box of the non-constant pieces (None if V is constant)."""
    pieces = V.abs_pieces() if V.abs_pieces() is not None else None
    d = V.dim
    boxes = []
    if pieces is not None:
        for p in pieces:
            if isinstance(p, BallPiece):
                c = np.asarray(p.center)
                boxes.append((c - p.radius, c + p.radius))
            elif isinstance(p, CylinderPiece):
                boxes.append((np.array([p.a, -p.radius, -p.radius]), np.array([p.b, p.radius, p.radius])))
    else:
        sb = V.support()
        if sb is None:
            raise UsageError("potential without a support bound or closed-form pieces needs an explicit search box")
        boxes.append((sb[0] - sb[1], sb[0] + sb[1]))
    if not boxes:
        return None
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    return lo, hi


def search_boxes(V: Potential, t: float, search: SearchConfig = DEFAULT_SEARCH):
    """Default boxes: positions in the support box inflated by sqrt(4t)*search_sigma;
    drifts up to (diam + sqrt(4t)*search_sigma)/(2t) per coordinate."""
    d = V.dim
    infl = math.sqrt(4.0 * t) * search.search_sigma
    box = _piece_box(V)
    if box is None:
        lo, hi, diam = np.zeros(d), np.zeros(d), 0.0
    else:
        lo, hi = box
        diam = float(np.linalg.norm(hi - lo))
    A = (diam + infl) / (2.0 * t)
    return lo - infl, hi + infl, A


def _symmetry(V):
    sym = V.symmetry()
    if sym is not None and sym[0] == "axial" and V.dim != 3:
        return None
    return sym


def _time_rule(a, b, left, right, order=8):
    return fixed_rule(graded_points(a, b, left, right), 1, order)


_CACHE: dict = {}


def _cached(key, compute):
    if key not in _CACHE:
        _CACHE[key] = compute()
    return _CACHE[key]


def clear_cache():
    _CACHE.clear()


def _key(name, V, *args):
    def norm(a):
        if isinstance(a, (QuadConfig, SearchConfig)):
            return tuple(sorted(a.as_dict().items()))
        if isinstance(a, np.ndarray):
            return tuple(np.round(a.ravel(), 15))
        if isinstance(a, (list, tuple)):
            return tuple(norm(b) for b in a)
        return a
    return (name, V.dim, V.dsl()) + tuple(norm(a) for a in args)


def _medium(config: QuadConfig, rel=1e-6):
    return config.loosened(rel, max_evals=min(config.max_evals, 2_000_000))


def sup_S(V: Potential, T, config: QuadConfig = DEFAULT_QUAD, search: SearchConfig = DEFAULT_SEARCH,
          box=None) -> SupResult:
    """sup over (x, y) of S(V, T, x, y)."""
    T = _check_t(T, "T")
    return _cached(_key("S", V, T, config, search, box),
                   lambda: _sup_two_position(V, T, config, search, box, S_value, _S_screen))


def sup_N(V: Potential, t, config: QuadConfig = DEFAULT_QUAD, search: SearchConfig = DEFAULT_SEARCH,
          box=None) -> SupResult:
    """sup over (x, y) of N(V, t, x, y)."""
    t = _check_t(t)
    return _cached(_key("N", V, t, config, search, box),
                   lambda: _sup_two_position(V, t, config, search, box, N_value, _N_screen))


def _S_screen(V, t, mass, X, Y):
    s, w = _time_rule(0.0, t, 6, 6)
    n, k, d = X.shape[0], s.size, V.dim
    mean = X[:, None, :] + (s / t)[None, :, None] * (Y - X)[:, None, :]
    sigma = np.broadcast_to(np.sqrt(2.0 * s * (t - s) / t), (n, k))
    return mass(mean.reshape(-1, d), sigma.ravel()).reshape(n, k) @ w


def _N_screen(V, t, mass, X, Y):
    d = V.dim
    c = (4.0 * math.pi) ** (d / 2.0)
    s1, w1 = _time_rule(0.0, 0.5 * t, 6, 0)
    s2, w2 = _time_rule(0.5 * t, t, 0, 6)
    n = X.shape[0]
    total = np.zeros(n)
    for s, w, sig in ((s1, w1, np.sqrt(2.0 * s1)), (s2, w2, np.sqrt(2.0 * (t - s2)))):
        mean = Y[:, None, :] - (s / t)[None, :, None] * (Y - X)[:, None, :]
        sigma = np.broadcast_to(sig, (n, s.size))
        total += mass(mean.reshape(-1, d), sigma.ravel()).reshape(n, s.size) @ w
    return c * total


def _screen_in_blocks(fn, rows, block=2048):
    return np.concatenate([fn(rows[i:i + block]) for i in range(0, rows.shape[0], block)]) if rows.shape[0] else np.zeros(0)


def _sup_two_position(V, t, config, search, box, value_fn, screen_fn):
    d = V.dim
    if V.is_zero():
        return _zero_sup(V, 2)
    lo, hi, _ = search_boxes(V, t, search) if box is None else (*map(np.asarray, box), 0.0)
    sym = _symmetry(V)
    red = two_vector_reduction(sym, d, lo, hi, lo, hi, second_is_position=True)
    mass = MassFunction(V, config=config)
    med_cfg = _medium(config)

    def screen(P):
        def blk(Pb):
            X, Y = red.to_vectors(Pb)
            if mass.closed_form:
                return screen_fn(V, t, mass, X, Y)
            return np.array([value_fn(V, t, x, y, config.loosened(1e-3)).value for x, y in zip(X, Y)])
        return _screen_in_blocks(blk, P)

    def medium(p):
        X, Y = red.to_vectors(p.reshape(1, -1))
        return value_fn(V, t, X[0], Y[0], med_cfg).value

    def fine(p):
        X, Y = red.to_vectors(p.reshape(1, -1))
        return value_fn(V, t, X[0], Y[0], config)

    return sup_search(red, screen, medium, fine, search)


def _zero_sup(V, nvec):
    return SupResult(0.0, tuple(np.zeros(V.dim) for _ in range(nvec)), 0, 0, True, 0.0, 0.0, True, 0)


def A_value(V: Potential, t, config: QuadConfig = DEFAULT_QUAD, search: SearchConfig = DEFAULT_SEARCH,
            box=None) -> SupResult:
    """A(t) = sup_x int_0^t int g(s,x,z) |V(z)| dz ds."""
    t = _check_t(t)

    def compute():
        if V.is_zero():
            return _zero_sup(V, 1)
        mass = MassFunction(V, config=config)

        def screen_fn(X):
            s, w = _time_rule(0.0, t, 8, 0)
            n, d = X.shape[0], V.dim
            mean = np.repeat(X, s.size, axis=0)
            sig = np.tile(np.sqrt(2.0 * s), n)
            return mass(mean, sig).reshape(n, s.size) @ w

        return _sup_one(V, t, config, search, box, heat_mass_value, screen_fn, mass.closed_form)
    return _cached(_key("A", V, t, config, search, box), compute)


def kato_bracket(V: Potential, t, config: QuadConfig = DEFAULT_QUAD, search: SearchConfig = DEFAULT_SEARCH,
                 box=None) -> SupResult:
    """sup_x of the dimension-dependent Kato bracket."""
    t = _check_t(t)

    def compute():
        if V.is_zero():
            return _zero_sup(V, 1)
        integ = SpaceIntegral(V, _bracket_kernel(t, V.dim), reach=math.sqrt(4.0 * t))

        def screen_fn(X):
            return np.array([integ.quick(x) for x in X])
        return _sup_one(V, t, config, search, box, bracket_value, screen_fn, True,
                        medium_fn=lambda x: integ.quick(x, 8, 12))
    return _cached(_key("bracket", V, t, config, search, box), compute)


def _sup_one(V, t, config, search, box, value_fn, screen_rows, vectorised, medium_fn=None, center=None):
    d = V.dim
    lo, hi, _ = search_boxes(V, t, search) if box is None else (*map(np.asarray, box), 0.0)
    sym = _symmetry(V)
    red = one_vector_reduction(sym, d, lo, hi, center=center)
    med_cfg = _medium(config)

    def screen(P):
        (X,) = red.to_vectors(P)
        if vectorised:
            return _screen_in_blocks(screen_rows, X)
        return np.array([value_fn(V, t, x, config.loosened(1e-3)).value for x in X])

    def medium(p):
        (X,) = red.to_vectors(p.reshape(1, -1))
        if medium_fn is not None:
            return medium_fn(X[0])
        return value_fn(V, t, X[0], med_cfg).value

    def fine(p):
        (X,) = red.to_vectors(p.reshape(1, -1))
        return value_fn(V, t, X[0], config)

    return sup_search(red, screen, medium, fine, search)


def r_star(V: Potential, t, config: QuadConfig = DEFAULT_QUAD, search: SearchConfig = DEFAULT_SEARCH,
           box=None) -> SupResult:
    """r_*(V,t) = sup over (alpha, x) of int_0^t int p_alpha(s,x,z) |V(z)| dz ds.

    ``box`` = (x_lo, x_hi, alpha_max) overrides the default search box.
    The argmax is reported as (x, alpha).
    """
    t = _check_t(t)

    def compute():
        if V.is_zero():
            return _zero_sup(V, 2)
        mass = MassFunction(V, config=config)

        def screen_fn(X, Al):
            s, w = _time_rule(0.0, t, 8, 0)
            n, d = X.shape[0], V.dim
            mean = X[:, None, :] - 2.0 * s[None, :, None] * Al[:, None, :]
            sig = np.broadcast_to(np.sqrt(2.0 * s), (n, s.size))
            return mass(mean.reshape(-1, d), sig.ravel()).reshape(n, s.size) @ w

        def value(x, al, cfg):
            return drift_mass_value(V, t, al, x, cfg)
        return _sup_drift(V, t, config, search, box, value, screen_fn if mass.closed_form else None)
    return _cached(_key("r_star", V, t, config, search, box), compute)


def e_star(V: Potential, lam, config: QuadConfig = DEFAULT_QUAD, search: SearchConfig = DEFAULT_SEARCH,
           box=None, route: str = "space") -> SupResult:
    """e_*(V,lambda) = sup over (alpha, x) of int R_{lambda,alpha}(x,z) |V(z)| dz.

    Screening and local refinement use the Laplace-transform (time) route;
    the reported values use ``route`` ("space": explicit resolvent kernel
    along rays from x, or "time").
    """
    lam = _check_t(lam, "lambda")
    t = 1.0 / lam
    if route not in ("space", "time"):
        raise UsageError("route must be 'space' or 'time'")

    def compute():
        if V.is_zero():
            return _zero_sup(V, 2)
        mass = MassFunction(V, config=config)

        def screen_fn(X, Al):
            s, w = _time_rule(0.0, LAPLACE_CUT / lam, 12, 0)
            n, d = X.shape[0], V.dim
            mean = X[:, None, :] - 2.0 * s[None, :, None] * Al[:, None, :]
            sig = np.broadcast_to(np.sqrt(2.0 * s), (n, s.size))
            return mass(mean.reshape(-1, d), sig.ravel()).reshape(n, s.size) @ (w * np.exp(-lam * s))

        def value(x, al, cfg):
            return resolvent_mass_time(V, lam, al, x, cfg)

        def final(x, al, cfg):
            if route == "space":
                return resolvent_mass_space(V, lam, al, x, cfg)
            return resolvent_mass_time(V, lam, al, x, cfg)
        return _sup_drift(V, t, config, search, box, value, screen_fn if mass.closed_form else None, final)
    return _cached(_key("e_star", V, lam, config, search, box, route), compute)


def _sup_drift(V, t, config, search, box, value, screen_fn, final=None):
    d = V.dim
    if box is None:
        lo, hi, A = search_boxes(V, t, search)
    else:
        lo, hi, A = np.asarray(box[0], float), np.asarray(box[1], float), float(box[2])
    sym = _symmetry(V)
    red = two_vector_reduction(sym, d, lo, hi, -A * np.ones(d), A * np.ones(d), second_is_position=False,
                               names=("x", "alpha"))
    med_cfg = _medium(config)
    final = final or value

    def screen(P):
        def blk(Pb):
            X, Al = red.to_vectors(Pb)
            if screen_fn is not None:
                return screen_fn(X, Al)
            return np.array([value(x, a, config.loosened(1e-3)).value for x, a in zip(X, Al)])
        return _screen_in_blocks(blk, P, 1024)

    def medium(p):
        X, Al = red.to_vectors(p.reshape(1, -1))
        return value(X[0], Al[0], med_cfg).value

    def fine(p):
        X, Al = red.to_vectors(p.reshape(1, -1))
        return final(X[0], Al[0], config)

    # the zero drift is a natural candidate (symmetric potentials)
    extra = None
    if red.p:
        z = np.clip(np.zeros(red.p), red.lo, red.hi)
        extra = z[None, :]
    return sup_search(red, screen, medium, fine, search, extra_points=extra)


def K_norm(V: Potential, t, config: QuadConfig = DEFAULT_QUAD, search: SearchConfig = DEFAULT_SEARCH,
           box=None) -> SupResult:
    """||K(V,t)||_inf = sup over (x, y) of K(V,t,x,y).

    The y-box is |y_i| <= 2 * alpha_max (y plays the role of -2 alpha).
    ``box`` = (x_lo, x_hi, y_max) overrides the default.
    """
    t = _check_t(t)

    def compute():
        d = V.dim
        if V.is_zero():
            return _zero_sup(V, 2)
        if box is None:
            lo, hi, A = search_boxes(V, t, search)
            B = 2.0 * A
        else:
            lo, hi, B = np.asarray(box[0], float), np.asarray(box[1], float), float(box[2])
        sym = _symmetry(V)
        red = two_vector_reduction(sym, d, lo, hi, -B * np.ones(d), B * np.ones(d), second_is_position=False)
        def quick(x, y, outer, inner):
            reach = t * float(np.linalg.norm(y))
            return 0.0 if reach == 0 else SpaceIntegral(V, _K_kernel(t, y), reach=reach).quick(x, outer, inner)

        def screen(P):
            X, Y = red.to_vectors(P)
            return np.array([quick(x, y, 5, 6) for x, y in zip(X, Y)])

        def medium(p):
            X, Y = red.to_vectors(p.reshape(1, -1))
            return quick(X[0], Y[0], 8, 12)

        def fine(p):
            X, Y = red.to_vectors(p.reshape(1, -1))
            return K_potential_value(V, t, X[0], Y[0], config)

        return sup_search(red, screen, medium, fine, search)
    return _cached(_key("K", V, t, config, search, box), compute)


def delta_inverse_norm(V: Potential, config: QuadConfig = DEFAULT_QUAD, search: SearchConfig = DEFAULT_SEARCH,
                       box=None) -> SupResult:
    """||Delta^{-1}V||_inf = sup_x |Delta^{-1}V(x)| (d >= 3)."""

    def compute():
        d = V.dim
        if V.is_zero():
            return _zero_sup(V, 1)
        if d <= 2:
            raise DivergenceError("int_0^inf g ds = inf for d <= 2; Delta^{-1}V diverges")
        sb = V.support()
        if sb is None:
            raise DivergenceError("Delta^{-1} of a potential with unbounded support diverges")
        if box is None:
            blo, bhi = _piece_box(V) or (sb[0] - sb[1], sb[0] + sb[1])
            pad = 0.5 * float(np.max(bhi - blo))
            lo, hi = blo - pad, bhi + pad
        else:
            lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
        sym = _symmetry(V)
        red = one_vector_reduction(sym, d, lo, hi)
        mass = MassFunction(V, signed=True, config=config)
        S0 = max(1.0, float(np.max(np.abs(np.concatenate([lo, hi])))) ** 2 * 4.0)
        s_near, w_near = _time_rule(0.0, S0, 10, 0)
        u, wu = _time_rule(0.0, 1.0, 10, 0)

        def screen(P):
            (X,) = red.to_vectors(P)
            n = X.shape[0]
            vals = np.zeros(n)
            for s, w in ((s_near, w_near), (S0 / u**2, wu * 2.0 * S0 / u**3)):
                mean = np.repeat(X, s.size, axis=0)
                sig = np.tile(np.sqrt(2.0 * s), n)
                vals += mass(mean, sig).reshape(n, s.size) @ w
            return np.abs(vals)

        def medium(p):
            (X,) = red.to_vectors(p.reshape(1, -1))
            return abs(delta_inverse_time(V, X[0], _medium(config)).value)

        def fine(p):
            (X,) = red.to_vectors(p.reshape(1, -1))
            est = delta_inverse(V, X[0], config)
            return Estimate(abs(est.value), est.err_bound, est.evals, est.converged)

        return sup_search(red, screen, medium, fine, search)
    return _cached(_key("dinv", V, config, search, box), compute)


def ball_mass_value(V: Potential, radius, w, config: QuadConfig = DEFAULT_QUAD) -> Estimate:
    """int_{|z - w| <= radius} |V(z)| dz."""
    w = _pt(V, w, "w")
    if V.is_zero():
        return Estimate.zero()
    return SpaceIntegral(V, lambda W: np.ones(W.shape[0]), reach=float(radius)).estimate(w, config)


def ball_mass_sup(V: Potential, radius, config: QuadConfig = DEFAULT_QUAD, search: SearchConfig = DEFAULT_SEARCH,
                  box=None) -> SupResult:
    """sup_w int_{|z - w| <= radius} |V(z)| dz."""
    radius = _check_t(radius, "radius")

    def compute():
        if V.is_zero():
            return _zero_sup(V, 1)
        if box is None:
            pb = _piece_box(V)
            lo, hi = (np.zeros(V.dim), np.zeros(V.dim)) if pb is None else (pb[0] - radius, pb[1] + radius)
        else:
            lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
        integ = SpaceIntegral(V, lambda W: np.ones(W.shape[0]), reach=radius)
        return _sup_one(V, 1.0, config, search, (lo, hi),
                        lambda V_, t_, w, cfg: ball_mass_value(V, radius, w, cfg),
                        lambda X: np.array([integ.quick(x) for x in X]), True,
                        medium_fn=lambda x: integ.quick(x, 8, 12))
    return _cached(_key("ball_mass", V, radius, config, search, box), compute)
