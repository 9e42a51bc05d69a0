"""Deterministic adaptive quadrature.

Two engines do the work:

* :func:`integrate_1d` -- vectorised adaptive Gauss-Kronrod (G10/K21) on a
  set of panels, with optional geometric grading toward either end.  Used for
  all time integrals.
* :func:`integrate_lines` -- integrates over a family of lines (rays from a
  point, or parallel lines through a box/disk).  The outer parameters of the
  family are handled by adaptive tensor G7/K15 cubature, the inner line
  integral by G10/K21 panels split at caller-supplied breakpoints (where the
  integrand jumps or kinks).  Rays carry the polar Jacobian rho^(d-1), which is
  how singularities at the ray origin are removed.

:func:`integrate_space`, :func:`integrate_time_space` and
:func:`grid_oracle_integrate` are the public wrappers.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import UsageError

_EPMACH = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny

# --------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class QuadConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_evals: int = 20_000_000
    tail_sigma: float = 6.0
    singularity_mode: str = "none"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise UsageError("abs_tol and rel_tol must be positive")
        if self.max_evals < 1:
            raise UsageError("max_evals must be positive")
        if not self.tail_sigma > 0:
            raise UsageError("tail_sigma must be positive")
        if self.singularity_mode not in ("none", "radial_origin"):
            raise UsageError(f"unknown singularity_mode {self.singularity_mode!r}")

    @property
    def effective_tail_sigma(self) -> float:
        # exp(-36) is not small enough below rel_tol 1e-10
        return self.tail_sigma if self.rel_tol >= 1e-10 else max(self.tail_sigma, 8.0)

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))

    def replace(self, **changes) -> "QuadConfig":
        return dataclasses.replace(self, **changes)

    def loosened(self, rel_tol: float, max_evals: Optional[int] = None) -> "QuadConfig":
        return self.replace(
            rel_tol=max(self.rel_tol, rel_tol),
            abs_tol=max(self.abs_tol, rel_tol * 1e-3),
            max_evals=max_evals or self.max_evals,
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Estimate:
    value: float
    err_bound: float
    evals: int
    converged: bool

    def __add__(self, other: "Estimate") -> "Estimate":
        return Estimate(
            self.value + other.value,
            self.err_bound + other.err_bound,
            self.evals + other.evals,
            self.converged and other.converged,
        )

    def scaled(self, c: float) -> "Estimate":
        return Estimate(c * self.value, abs(c) * self.err_bound, self.evals, self.converged)

    @staticmethod
    def zero() -> "Estimate":
        return Estimate(0.0, 0.0, 0, True)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def sum_estimates(estimates) -> Estimate:
    total = Estimate.zero()
    for est in estimates:
        total = total + est
    return total


# --------------------------------------------------------------------------
# Gauss-Kronrod rules on [-1, 1] (QUADPACK qk15 / qk21)


@dataclass(frozen=True)
class GKRule:
    nodes: np.ndarray
    wk: np.ndarray
    wg: np.ndarray  # zero at Kronrod-only nodes


def _symmetric_rule(xgk, wgk, wg_at):
    xgk = np.asarray(xgk)
    wgk = np.asarray(wgk)
    nodes = np.concatenate([-xgk[:-1], xgk[::-1]])
    wk = np.concatenate([wgk[:-1], wgk[::-1]])
    wg_half = np.zeros_like(xgk)
    for idx, w in wg_at.items():
        wg_half[idx] = w
    wg = np.concatenate([wg_half[:-1], wg_half[::-1]])
    return GKRule(nodes, wk, wg)


GK15 = _symmetric_rule(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.0,
    ],
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ],
    {
        1: 0.129484966168869693270611432679082,
        3: 0.279705391489276667901467771423780,
        5: 0.381830050505118944950369775488975,
        7: 0.417959183673469387755102040816327,
    },
)

GK21 = _symmetric_rule(
    [
        0.995657163025808080735527280689003,
        0.973906528517171720077964012084452,
        0.930157491355708226001207180059508,
        0.865063366688984510732096688423493,
        0.780817726586416897063717578345042,
        0.679409568299024406234327365114874,
        0.562757134668604683339000099272694,
        0.433395394129247190799265943165784,
        0.294392862701460198131126603103866,
        0.148874338981631210884826001129720,
        0.0,
    ],
    [
        0.011694638867371874278064396062192,
        0.032558162307964727478818972459390,
        0.054755896574351996031381300244580,
        0.075039674810919952767043140916190,
        0.093125454583697605535065465083366,
        0.109387158802297641899210590325805,
        0.123491976262065851077715221732520,
        0.134709217311473325928054001771707,
        0.142775938577060080797094273138717,
        0.147739104901338491374841515972068,
        0.149445554002916905664936468389821,
    ],
    {
        1: 0.066671344308688137593568809893332,
        3: 0.149451349150580593145776339657697,
        5: 0.219086362515982043995534934228163,
        7: 0.269266719309996355091226921569469,
        9: 0.295524224714752870173892994651338,
    },
)


def _quadpack_error(resk, resg, resasc, resabs):
    """QUADPACK's error heuristic applied elementwise."""
    err = np.abs(resk - resg)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50.0 * _EPMACH * resabs
    err = np.where(resabs > _UFLOW / (50.0 * _EPMACH), np.maximum(floor, err), err)
    return err


def _panel_sums(fvals, half, rule):
    """fvals (..., n) at mapped rule nodes, half (...) half-widths.  Returns K, err, |K|."""
    resk = fvals @ rule.wk * half
    resg = fvals @ rule.wg * half
    resabs = np.abs(fvals) @ rule.wk * half
    mean = resk / (2.0 * np.where(half == 0, 1.0, half))
    resasc = np.abs(fvals - mean[..., None]) @ rule.wk * half
    return resk, _quadpack_error(resk, resg, resasc, resabs), resabs


# --------------------------------------------------------------------------
# 1-d adaptive engine


def graded_points(a: float, b: float, grade_left: int = 0, grade_right: int = 0, ratio: float = 0.5):
    """Geometric mesh toward the ends of [a, b] (ratio 0.5 by default)."""
    pts = [a, b]
    length = b - a
    for j in range(1, grade_left + 1):
        pts.append(a + 0.5 * length * ratio ** (j - 1))
    for j in range(1, grade_right + 1):
        pts.append(b - 0.5 * length * ratio ** (j - 1))
    return np.unique(np.clip(pts, a, b))


def integrate_1d(
    h: Callable[[np.ndarray], np.ndarray],
    points,
    config: QuadConfig = QuadConfig(),
    max_panels_per_pass: int = 4096,
    with_errors: bool = False,
) -> Estimate:
    """Adaptive G10/K21 integral of vectorised ``h`` over the mesh ``points``.

    ``points`` is a sorted sequence of breakpoints; the integrand may be
    non-smooth there.  If ``with_errors`` is set, ``h`` returns
    ``(values, errors)`` and the pointwise errors are integrated into the
    reported bound.
    """
    pts = np.unique(np.asarray(points, dtype=float))
    if pts.size < 2:
        return Estimate.zero()
    lo = pts[:-1]
    hi = pts[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]

    def evaluate(lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * GK21.nodes[None, :]
        out = h(x.ravel())
        if with_errors:
            vals, errs = out
            errs = np.abs(np.asarray(errs, dtype=float)).reshape(x.shape) @ GK21.wk * half
        else:
            vals, errs = out, 0.0
        vals = np.asarray(vals, dtype=float).reshape(x.shape)
        resk, err, _ = _panel_sums(vals, half, GK21)
        return resk, err + errs

    values, errors = evaluate(lo, hi)
    evals = lo.size * GK21.nodes.size
    while True:
        total = float(values.sum())
        total_err = float(errors.sum())
        tol = config.tolerance(total)
        if total_err <= tol:
            return Estimate(total, total_err, evals, True)
        if evals >= config.max_evals or not np.all(np.isfinite(values)):
            return Estimate(total, total_err, evals, False)
        length = hi - lo
        local_tol = tol * length / max(length.sum(), _UFLOW)
        bad = np.flatnonzero(errors > local_tol)
        if bad.size == 0:
            bad = np.array([int(np.argmax(errors))])
        if bad.size > max_panels_per_pass:
            bad = bad[np.argsort(errors[bad])[::-1][:max_panels_per_pass]]
        # resolution floor: stop splitting panels that are already at round-off width
        splittable = (hi[bad] - lo[bad]) > 64 * _EPMACH * np.maximum(1.0, np.abs(lo[bad]))
        bad = bad[splittable]
        if bad.size == 0:
            return Estimate(total, total_err, evals, False)
        mid = 0.5 * (lo[bad] + hi[bad])
        new_lo = np.concatenate([lo[bad], mid])
        new_hi = np.concatenate([mid, hi[bad]])
        new_vals, new_errs = evaluate(new_lo, new_hi)
        evals += new_lo.size * GK21.nodes.size
        keep = np.ones(lo.size, dtype=bool)
        keep[bad] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        values = np.concatenate([values[keep], new_vals])
        errors = np.concatenate([errors[keep], new_errs])


@functools.lru_cache(maxsize=None)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def fixed_rule(points, panels_per_interval: int = 1, order: int = 10):
    """Composite Gauss-Legendre nodes and weights on the mesh ``points``.

    Non-adaptive; used by sup searches to screen many parameter values with
    one vectorised evaluation.
    """
    pts = np.unique(np.asarray(points, dtype=float))
    xg, wg = _leggauss(order)
    nodes, weights = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        sub = np.linspace(a, b, panels_per_interval + 1)
        for c, e in zip(sub[:-1], sub[1:]):
            half = 0.5 * (e - c)
            nodes.append(0.5 * (c + e) + half * xg)
            weights.append(half * wg)
    return np.concatenate(nodes), np.concatenate(weights)


# --------------------------------------------------------------------------
# line families


def orthonormal_frame(axis):
    """Rotation matrix whose first column is ``axis`` (normalised)."""
    axis = np.asarray(axis, dtype=float)
    d = axis.size
    n = np.linalg.norm(axis)
    if n == 0:
        axis = np.eye(d)[0]
    else:
        axis = axis / n
    # Householder reflection sending e1 to axis
    e1 = np.eye(d)[0]
    v = e1 - axis
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        return np.eye(d)
    v = v / nv
    return np.eye(d) - 2.0 * np.outer(v, v)


class LineFamily:
    """A parameterised family of lines z = P + tau u, tau in [tmin, tmax]."""

    dim: int
    outer_dim: int
    jac_power: int = 0

    def bounds(self):
        raise NotImplementedError

    def initial_splits(self):
        return [1] * self.outer_dim

    def initial_edges(self):
        """Cell edges per outer axis; subclasses add known kink locations."""
        lo, hi = self.bounds()
        return [np.linspace(lo[j], hi[j], n + 1) for j, n in enumerate(self.initial_splits())]

    def lines(self, U):
        """U (n, outer_dim) -> P (n,d), u (n,d), weight (n,), tmin (n,), tmax (n,)."""
        raise NotImplementedError


class RayFamily(LineFamily):
    """Rays from ``center``; full sphere or a cone of half-angle ``half_angle``
    about ``axis``.  Cone boundaries use a sine substitution so that chord
    lengths with square-root behaviour at a silhouette become smooth.

    ``rho_max`` is a float or a callable of the unit directions.
    """

    def __init__(self, center, axis=None, half_angle=math.pi, rho_min=0.0, rho_max=1.0, span=None,
                 polar_breaks=(), polar_break_fn=None, n_polar_breaks=0):
        self.center = np.asarray(center, dtype=float)
        self.dim = self.center.size
        self.outer_dim = self.dim - 1
        self.jac_power = self.dim - 1
        if axis is None:
            axis = np.eye(self.dim)[0]
        self.frame = orthonormal_frame(axis)
        self.half_angle = min(float(half_angle), math.pi)
        self.cone = self.half_angle < math.pi
        self.rho_min = float(rho_min)
        self.rho_max = rho_max
        # span(u) -> (tmin, tmax) overrides rho_min / rho_max per ray
        self.span = span
        # polar angles (from ``axis``) where the integrand has an angular kink
        self.polar_breaks = tuple(float(g) for g in polar_breaks)
        # d = 3 only: polar_break_fn(w) gives, per unit vector w orthogonal to
        # ``axis``, n_polar_breaks sorted polar angles of kinks that move with
        # the azimuth; the polar coordinate is warped piecewise linearly so
        # that they sit at the fixed knots pi * j / (n_polar_breaks + 1)
        self.polar_break_fn = polar_break_fn
        self.n_polar_breaks = int(n_polar_breaks)
        if polar_break_fn is not None and (self.dim != 3 or self.cone or self.n_polar_breaks < 1):
            raise UsageError("polar_break_fn needs d = 3, a full sphere and n_polar_breaks >= 1")

    def bounds(self):
        d = self.dim
        if d == 1:
            return np.zeros(0), np.zeros(0)
        if d == 2:
            return (np.array([-1.0]), np.array([1.0])) if self.cone else (
                np.array([-math.pi]), np.array([math.pi]))
        lo = [0.0] + [0.0] * (d - 3) + [0.0]
        hi = [1.0 if self.cone else math.pi] + [math.pi] * (d - 3) + [2.0 * math.pi]
        return np.array(lo), np.array(hi)

    def initial_splits(self):
        d = self.dim
        if d == 1:
            return []
        if d == 2:
            return [2] if self.cone else [8]
        return [2 if self.cone else 4] + [2] * (d - 3) + [4]

    def _polar_coord(self, gamma):
        if self.cone:
            return (2.0 / math.pi) * math.asin(min(1.0, gamma / self.half_angle))
        return gamma

    def _warp_knots(self):
        return math.pi * np.arange(self.n_polar_breaks + 2) / (self.n_polar_breaks + 1)

    def initial_edges(self):
        edges = super().initial_edges()
        if self.polar_break_fn is not None:
            edges[0] = np.unique(np.concatenate([edges[0], self._warp_knots()]))
            edges[1] = np.unique(np.concatenate([edges[1], self._azimuth_kinks()]))
            return edges
        if self.dim == 1 or not self.polar_breaks:
            return edges
        lo, hi = self.bounds()
        extra = []
        for g in self.polar_breaks:
            if 0.0 < g < self.half_angle:
                c = self._polar_coord(g)
                extra += [c, -c] if self.dim == 2 else [c]
        e = np.unique(np.concatenate([edges[0], np.clip(extra, lo[0], hi[0])]))
        edges[0] = e[np.concatenate([[True], np.diff(e) > 1e-12])]
        return edges

    def _directions(self, U):
        d = self.dim
        n = U.shape[0]
        if d == 1:
            local = np.array([[1.0], [-1.0]])
            return local, np.ones(2)
        if d == 2:
            if self.cone:
                v = U[:, 0]
                theta = self.half_angle * np.sin(0.5 * math.pi * v)
                jac = self.half_angle * 0.5 * math.pi * np.cos(0.5 * math.pi * v)
            else:
                theta = U[:, 0]
                jac = np.ones(n)
            local = np.stack([np.cos(theta), np.sin(theta)], axis=1)
            return local, jac
        if self.cone:
            v = U[:, 0]
            gamma = self.half_angle * np.sin(0.5 * math.pi * v)
            jac = self.half_angle * 0.5 * math.pi * np.cos(0.5 * math.pi * v)
        elif self.polar_break_fn is not None:
            gamma, jac = self._warped_polar(U[:, 0], U[:, 1])
        else:
            gamma = U[:, 0]
            jac = np.ones(n)
        angles = [gamma] + [U[:, j] for j in range(1, d - 1)]
        local = np.empty((n, d))
        sin_prod = np.ones(n)
        for j, ang in enumerate(angles[:-1]):
            local[:, j] = sin_prod * np.cos(ang)
            jac = jac * np.sin(ang) ** (d - 2 - j)
            sin_prod = sin_prod * np.sin(ang)
        local[:, d - 2] = sin_prod * np.cos(angles[-1])
        local[:, d - 1] = sin_prod * np.sin(angles[-1])
        return local, jac

    def _break_curves(self, psi):
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        w = np.stack([np.zeros(psi.size), np.cos(psi), np.sin(psi)], axis=1) @ self.frame.T
        g = np.asarray(self.polar_break_fn(w), dtype=float).reshape(psi.size, self.n_polar_breaks)
        return np.clip(g, 0.0, math.pi)

    def _azimuth_kinks(self, samples=2048, tol=1e-13):
        """Azimuths where two break curves cross, meet or separate.

        Sorting the curves swaps their roles there, so the warped
        coordinate has a kink along those azimuths."""
        psi = np.linspace(0.0, 2.0 * math.pi, samples + 1)
        g = self._break_curves(psi)
        out = []
        for i, j in itertools.combinations(range(self.n_polar_breaks), 2):
            diff = g[:, i] - g[:, j]
            state = np.where(np.abs(diff) <= tol, 0, np.sign(diff))
            for k in np.flatnonzero(state[1:] != state[:-1]):
                a, b, sa = psi[k], psi[k + 1], state[k]
                for _ in range(60):
                    m = 0.5 * (a + b)
                    dm = self._break_curves(m)[0]
                    sm = 0 if abs(dm[i] - dm[j]) <= tol else np.sign(dm[i] - dm[j])
                    if sm == sa:
                        a = m
                    else:
                        b = m
                out.append(0.5 * (a + b))
        return np.asarray(out, dtype=float)

    def _warped_polar(self, v, psi):
        n = v.size
        w = np.stack([np.zeros(n), np.cos(psi), np.sin(psi)], axis=1) @ self.frame.T
        g = np.asarray(self.polar_break_fn(w), dtype=float).reshape(n, self.n_polar_breaks)
        g = np.sort(np.clip(g, 0.0, math.pi), axis=1)
        gam = np.concatenate([np.zeros((n, 1)), g, np.full((n, 1), math.pi)], axis=1)
        knots = self._warp_knots()
        j = np.clip(np.searchsorted(knots, v, side="right") - 1, 0, knots.size - 2)
        rows = np.arange(n)
        h = knots[1] - knots[0]
        slope = (gam[rows, j + 1] - gam[rows, j]) / h
        return gam[rows, j] + slope * (v - knots[j]), slope

    def lines(self, U):
        local, jac = self._directions(U)
        u = local @ self.frame.T
        n = u.shape[0]
        P = np.broadcast_to(self.center, (n, self.dim))
        if self.span is not None:
            tmin, tmax = self.span(u)
            tmin = np.asarray(tmin, dtype=float)
            return P, u, jac, tmin, np.maximum(np.asarray(tmax, dtype=float), tmin)
        tmin = np.full(n, self.rho_min)
        if callable(self.rho_max):
            tmax = np.asarray(self.rho_max(u), dtype=float)
        else:
            tmax = np.full(n, float(self.rho_max))
        return P, u, jac, tmin, np.maximum(tmax, tmin)


# offsets, in units of the Gaussian width sqrt(4t), of the extra mesh points
# placed around a Gaussian peak so that narrow peaks are never stepped over
FOCUS_OFFSETS = np.array([-4.0, -2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0, 4.0])


def focus_points(c, width, lo, hi):
    pts = c + width * FOCUS_OFFSETS
    return pts[(pts > lo) & (pts < hi)]


class BoxLines(LineFamily):
    """Lines parallel to the first axis through the box [lo, hi].

    ``focus`` = (center, width) adds cell edges around a Gaussian peak.
    """

    def __init__(self, lo, hi, focus=None):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.dim = self.lo.size
        self.outer_dim = self.dim - 1
        self.focus = focus

    def bounds(self):
        return self.lo[1:], self.hi[1:]

    def initial_splits(self):
        return [2] * self.outer_dim

    def initial_edges(self):
        edges = super().initial_edges()
        if self.focus is None:
            return edges
        c, w = self.focus
        return [np.unique(np.concatenate([e, focus_points(c[j + 1], w, e[0], e[-1])])) for j, e in enumerate(edges)]

    def lines(self, U):
        n = U.shape[0] if self.outer_dim else 1
        P = np.zeros((n, self.dim))
        if self.outer_dim:
            P[:, 1:] = U
        u = np.zeros((n, self.dim))
        u[:, 0] = 1.0
        return P, u, np.ones(n), np.full(n, self.lo[0]), np.full(n, self.hi[0])


class BoxBallLines(BoxLines):
    """BoxLines with every line clipped to its chord through B(center, radius)."""

    def __init__(self, lo, hi, center, radius, focus=None):
        super().__init__(lo, hi, focus)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def lines(self, U):
        P, u, w, tmin, tmax = super().lines(U)
        t1, t2 = line_ball_hits(P, u, self.center, self.radius)
        a = np.where(np.isfinite(t1), np.maximum(t1, tmin), tmin)
        b = np.where(np.isfinite(t2), np.minimum(t2, tmax), tmin)
        b = np.maximum(a, b)
        return P, u, w, a, b


class BallLines(LineFamily):
    """Lines parallel to the first axis through the ball B(center, radius).

    The cross-section radius is substituted as r = R sin(pi v / 2), which
    makes the chord half-length R cos(pi v / 2) smooth in v.
    """

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.dim = self.center.size
        self.outer_dim = self.dim - 1

    def bounds(self):
        d = self.dim
        if d == 1:
            return np.zeros(0), np.zeros(0)
        if d == 2:
            return np.array([-1.0]), np.array([1.0])
        lo = [0.0] + [0.0] * (d - 3) + [0.0]
        hi = [1.0] + [math.pi] * (d - 3) + [2.0 * math.pi]
        return np.array(lo), np.array(hi)

    def initial_splits(self):
        d = self.dim
        if d == 1:
            return []
        if d == 2:
            return [2]
        return [2] + [2] * (d - 3) + [4]

    def lines(self, U):
        d, R = self.dim, self.radius
        n = U.shape[0] if d > 1 else 1
        P = np.tile(self.center, (n, 1))
        u = np.zeros((n, d))
        u[:, 0] = 1.0
        if d == 1:
            return P, u, np.ones(1), np.full(1, -R), np.full(1, R)
        v = U[:, 0]
        r = R * np.sin(0.5 * math.pi * np.abs(v)) * np.sign(v)
        dr = R * 0.5 * math.pi * np.cos(0.5 * math.pi * v)
        half = R * np.cos(0.5 * math.pi * v)
        if d == 2:
            P[:, 1] += r
            return P, u, dr, -half, half
        # polar coordinates on the (d-1)-dimensional cross-section
        angles = [U[:, j] for j in range(1, d - 1)]
        m = d - 1
        local = np.empty((n, m))
        sin_prod = np.ones(n)
        jac = dr * r ** (m - 1)
        for j, ang in enumerate(angles[:-1]):
            local[:, j] = sin_prod * np.cos(ang)
            jac = jac * np.sin(ang) ** (m - 2 - j)
            sin_prod = sin_prod * np.sin(ang)
        local[:, m - 2] = sin_prod * np.cos(angles[-1])
        local[:, m - 1] = sin_prod * np.sin(angles[-1])
        P[:, 1:] += r[:, None] * local
        return P, u, jac, -half, half


class DiskLines(LineFamily):
    """Lines parallel to the first axis (d = 3) through the disk of radius
    ``radius`` about the axis, tau in [a, b]; outer parameters (r, phi)."""

    def __init__(self, a, b, radius):
        self.dim = 3
        self.outer_dim = 2
        self.a, self.b, self.radius = float(a), float(b), float(radius)

    def bounds(self):
        return np.array([0.0, 0.0]), np.array([self.radius, 2.0 * math.pi])

    def initial_splits(self):
        return [1, 4]

    def lines(self, U):
        n = U.shape[0]
        r, phi = U[:, 0], U[:, 1]
        P = np.stack([np.zeros(n), r * np.cos(phi), r * np.sin(phi)], axis=1)
        u = np.zeros((n, 3))
        u[:, 0] = 1.0
        return P, u, r, np.full(n, self.a), np.full(n, self.b)


# --------------------------------------------------------------------------
# the line engine


def _tensor_rule(q, rule):
    if q == 0:
        return np.zeros((1, 0)), np.ones(1), np.ones(1), np.ones((0, 1))
    grids = np.meshgrid(*([rule.nodes] * q), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    wk = np.ones(nodes.shape[0])
    wg = np.ones(nodes.shape[0])
    per_axis_g = []
    wks = np.meshgrid(*([rule.wk] * q), indexing="ij")
    wgs = np.meshgrid(*([rule.wg] * q), indexing="ij")
    for j in range(q):
        wk = wk * wks[j].ravel()
        wg = wg * wgs[j].ravel()
    for j in range(q):
        w = np.ones(nodes.shape[0])
        for i in range(q):
            w = w * (wgs[i].ravel() if i == j else wks[i].ravel())
        per_axis_g.append(w)
    return nodes, wk, wg, np.array(per_axis_g)


_OUTER = {q: _tensor_rule(q, GK15) for q in range(0, 4)}

GRADE_LEVELS = 10
MAX_LEVEL = 7


def _line_integrals(family, fn, P, u, tmin, tmax, breaks, grade_start, level):
    """Inner G10/K21 integrals along each line.  Returns (value, err, evals)."""
    n = P.shape[0]
    parts = [tmin[:, None], tmax[:, None]]
    if breaks is not None:
        extra = np.asarray(breaks(P, u), dtype=float)
        if extra.size:
            extra = extra.reshape(n, -1)
            extra = np.where(np.isfinite(extra), extra, tmax[:, None])
            extra = np.clip(extra, tmin[:, None], tmax[:, None])
            parts.append(extra)
    bp = np.sort(np.concatenate(parts, axis=1), axis=1)
    if grade_start:
        # geometric mesh toward the ray origin inside the first segment
        above = np.where(bp > tmin[:, None], bp, np.inf)
        first = np.min(above, axis=1)
        first = np.where(np.isfinite(first), first, tmax)
        span = first - tmin
        scales = 0.5 ** np.arange(1, GRADE_LEVELS + 1)
        bp = np.sort(np.concatenate([bp, tmin[:, None] + span[:, None] * scales[None, :]], axis=1), axis=1)
    seg_lo = bp[:, :-1]
    seg_hi = bp[:, 1:]
    m = 2**level
    frac = np.arange(m + 1) / m
    sub = seg_lo[..., None] + (seg_hi - seg_lo)[..., None] * frac  # (n, S, m+1)
    sub_lo = sub[..., :-1]
    sub_hi = sub[..., 1:]
    half = 0.5 * (sub_hi - sub_lo)
    mid = 0.5 * (sub_hi + sub_lo)
    tau = mid[..., None] + half[..., None] * GK21.nodes  # (n, S, m, 21)
    active = half > 0
    vals = np.zeros(tau.shape)
    idx = np.nonzero(active)
    if idx[0].size:
        t_act = tau[idx]  # (k, 21)
        lines_idx = idx[0]
        Z = P[lines_idx][:, None, :] + t_act[..., None] * u[lines_idx][:, None, :]
        f = np.asarray(fn(Z.reshape(-1, P.shape[1])), dtype=float).reshape(t_act.shape)
        if family.jac_power:
            f = f * t_act**family.jac_power
        vals[idx] = f
    resk, err, _ = _panel_sums(vals, half, GK21)
    evals = int(idx[0].size) * GK21.nodes.size
    return resk.sum(axis=(1, 2)), err.sum(axis=(1, 2)), evals


def _eval_cells(family, fn, lo, hi, level, breaks, grade_start):
    """Evaluate cells (m, q) at inner refinement ``level`` (m,)."""
    q = family.outer_dim
    nodes, wk, wg, wg_axis = _OUTER[q]
    m = lo.shape[0]
    k = nodes.shape[0]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    U = (mid[:, None, :] + half[:, None, :] * nodes[None, :, :]).reshape(m * k, q)
    if q == 0:
        P, u, weight, tmin, tmax = family.lines(np.zeros((0, 0)))
        k = P.shape[0]
        wk = np.ones(k)
        wg = np.ones(k)
        wg_axis = np.ones((0, k))
        P = np.tile(P, (m, 1))
        u = np.tile(u, (m, 1))
        weight = np.tile(weight, m)
        tmin = np.tile(tmin, m)
        tmax = np.tile(tmax, m)
    else:
        P, u, weight, tmin, tmax = family.lines(U)
    vol = np.prod(half, axis=1) if q else np.ones(m)
    inner_val = np.empty(m * k)
    inner_err = np.empty(m * k)
    evals = 0
    for lev in np.unique(level):
        cells = np.flatnonzero(level == lev)
        rows = (cells[:, None] * k + np.arange(k)[None, :]).ravel()
        # bound memory: ~1e6 nodes per block
        per_line = 21 * (2**int(lev)) * 24
        block = max(1, int(1_500_000 // per_line))
        for start in range(0, rows.size, block):
            r = rows[start:start + block]
            val, err, ev = _line_integrals(family, fn, P[r], u[r], tmin[r], tmax[r], breaks, grade_start, int(lev))
            inner_val[r] = val
            inner_err[r] = err
            evals += ev
    vals = (weight * inner_val).reshape(m, k)
    errs = (np.abs(weight) * inner_err).reshape(m, k)
    resk = vals @ wk * vol
    if q == 0:
        return resk, np.zeros(m), errs @ wk * vol, np.zeros((m, 0)), evals
    resg = vals @ wg * vol
    resabs = np.abs(vals) @ wk * vol
    mean = resk / (np.sum(wk) * np.where(vol == 0, 1.0, vol))
    resasc = np.abs(vals - mean[:, None]) @ wk * vol
    outer_err = _quadpack_error(resk, resg, resasc, resabs)
    axis_diff = np.abs(vals @ wg_axis.T * vol[:, None] - resk[:, None])
    inner = errs @ wk * vol
    return resk, outer_err, inner, axis_diff, evals


def integrate_lines(
    family: LineFamily,
    fn: Callable[[np.ndarray], np.ndarray],
    config: QuadConfig = QuadConfig(),
    breaks=None,
    grade_start: bool = False,
    max_cells_per_pass: int = 256,
) -> Estimate:
    """Integrate ``fn`` over the region swept by ``family``.

    For a ray family the result is int fn(z) dz over the swept ball/cone; for
    parallel-line families it is the integral over the swept cylinder/box.
    ``breaks(P, u)`` returns per-line parameters where ``fn`` is not smooth.
    """
    q = family.outer_dim
    lo_b, hi_b = family.bounds()
    if q:
        edges = family.initial_edges()
        cells = list(itertools.product(*[list(zip(e[:-1], e[1:])) for e in edges]))
        lo = np.array([[c[j][0] for j in range(q)] for c in cells])
        hi = np.array([[c[j][1] for j in range(q)] for c in cells])
    else:
        lo = np.zeros((1, 0))
        hi = np.zeros((1, 0))
    level = np.zeros(lo.shape[0], dtype=int)
    val, oerr, ierr, adiff, evals = _eval_cells(family, fn, lo, hi, level, breaks, grade_start)
    total_vol = float(np.prod(hi_b - lo_b)) if q else 1.0
    while True:
        total = float(val.sum())
        err = oerr + ierr
        total_err = float(err.sum())
        tol = config.tolerance(total)
        if total_err <= tol:
            return Estimate(total, total_err, evals, True)
        if evals >= config.max_evals or not np.all(np.isfinite(val)):
            return Estimate(total, total_err, evals, False)
        vol = np.prod(hi - lo, axis=1) if q else np.ones(1)
        local_tol = tol * vol / max(total_vol, _UFLOW)
        bad = np.flatnonzero(err > local_tol)
        if bad.size == 0:
            bad = np.array([int(np.argmax(err))])
        if bad.size > max_cells_per_pass:
            bad = bad[np.argsort(err[bad])[::-1][:max_cells_per_pass]]
        deepen = bad[(ierr[bad] > oerr[bad]) & (level[bad] < MAX_LEVEL)]
        split = np.setdiff1d(bad, deepen)
        if q == 0:
            split = np.array([], dtype=int)
        # cells too small to split any further are left alone
        if split.size:
            ax = np.argmax(adiff[split], axis=1)
            width = (hi - lo)[split, ax]
            ok = width > 1e-12 * np.maximum(1.0, np.abs(hi_b - lo_b)[ax])
            split, ax = split[ok], ax[ok]
        if deepen.size == 0 and split.size == 0:
            return Estimate(total, total_err, evals, False)
        new_lo, new_hi, new_level = [], [], []
        if deepen.size:
            new_lo.append(lo[deepen])
            new_hi.append(hi[deepen])
            new_level.append(level[deepen] + 1)
        if split.size:
            ax = np.argmax(adiff[split], axis=1)
            mid = 0.5 * (lo[split, ax] + hi[split, ax])
            lo1, hi1 = lo[split].copy(), hi[split].copy()
            hi1[np.arange(split.size), ax] = mid
            lo2, hi2 = lo[split].copy(), hi[split].copy()
            lo2[np.arange(split.size), ax] = mid
            new_lo += [lo1, lo2]
            new_hi += [hi1, hi2]
            new_level += [level[split], level[split]]
        new_lo = np.concatenate(new_lo)
        new_hi = np.concatenate(new_hi)
        new_level = np.concatenate(new_level)
        nv, no, ni, nd, ne = _eval_cells(family, fn, new_lo, new_hi, new_level, breaks, grade_start)
        evals += ne
        keep = np.ones(lo.shape[0], dtype=bool)
        keep[bad[np.isin(bad, np.concatenate([deepen, split]))]] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        level = np.concatenate([level[keep], new_level])
        val = np.concatenate([val[keep], nv])
        oerr = np.concatenate([oerr[keep], no])
        ierr = np.concatenate([ierr[keep], ni])
        adiff = np.concatenate([adiff[keep], nd])


def fixed_lines(family: LineFamily, fn, breaks=None, outer_order: int = 6, inner_order: int = 8,
                grade_start: bool = False, grade_levels: int = 4) -> float:
    """Non-adaptive counterpart of :func:`integrate_lines` (no error estimate).

    Gauss-Legendre of ``outer_order`` points per axis on each initial cell of
    the family and ``inner_order`` points on each segment between breaks.
    Used to screen many parameter values quickly.
    """
    q = family.outer_dim
    xg, wg = _leggauss(outer_order)
    if q:
        axes_nodes, axes_w = [], []
        for e in family.initial_edges():
            half = 0.5 * np.diff(e)
            mid = 0.5 * (e[:-1] + e[1:])
            axes_nodes.append((mid[:, None] + half[:, None] * xg).ravel())
            axes_w.append((half[:, None] * wg).ravel())
        grids = np.meshgrid(*axes_nodes, indexing="ij")
        U = np.stack([g.ravel() for g in grids], axis=1)
        wgrids = np.meshgrid(*axes_w, indexing="ij")
        W = np.prod(np.stack([w.ravel() for w in wgrids], axis=1), axis=1)
        P, u, weight, tmin, tmax = family.lines(U)
    else:
        P, u, weight, tmin, tmax = family.lines(np.zeros((0, 0)))
        W = np.ones(P.shape[0])
    n = P.shape[0]
    parts = [tmin[:, None], tmax[:, None]]
    if breaks is not None:
        extra = np.asarray(breaks(P, u), dtype=float).reshape(n, -1)
        if extra.size:
            extra = np.where(np.isfinite(extra), extra, tmax[:, None])
            parts.append(np.clip(extra, tmin[:, None], tmax[:, None]))
    bp = np.sort(np.concatenate(parts, axis=1), axis=1)
    if grade_start:
        above = np.where(bp > tmin[:, None], bp, np.inf)
        first = np.min(above, axis=1)
        first = np.where(np.isfinite(first), first, tmax)
        scales = 0.5 ** np.arange(1, grade_levels + 1)
        bp = np.sort(np.concatenate([bp, tmin[:, None] + (first - tmin)[:, None] * scales], axis=1), axis=1)
    xi, wi = _leggauss(inner_order)
    half = 0.5 * (bp[:, 1:] - bp[:, :-1])
    mid = 0.5 * (bp[:, 1:] + bp[:, :-1])
    tau = mid[..., None] + half[..., None] * xi  # (n, S, k)
    active = half > 0
    idx = np.nonzero(active)
    total = 0.0
    if idx[0].size:
        t_act = tau[idx]
        li = idx[0]
        Z = P[li][:, None, :] + t_act[..., None] * u[li][:, None, :]
        f = np.asarray(fn(Z.reshape(-1, P.shape[1])), dtype=float).reshape(t_act.shape)
        if family.jac_power:
            f = f * t_act**family.jac_power
        seg = (f @ wi) * half[idx]
        per_line = np.bincount(li, weights=seg, minlength=n)
        total = float(np.sum(W * weight * per_line))
    return total


# --------------------------------------------------------------------------
# geometry helpers shared with potentials


def line_ball_hits(P, u, center, radius):
    """Parameters where z = P + tau u crosses the sphere |z - center| = radius.

    Returns (tau_in, tau_out), NaN where the line misses.  ``u`` need not be
    a unit vector.
    """
    w = P - center
    a = np.einsum("ij,ij->i", u, u)
    b = np.einsum("ij,ij->i", w, u)
    c = np.einsum("ij,ij->i", w, w) - radius**2
    disc = b * b - a * c
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.sqrt(disc)
        t1 = (-b - root) / a
        t2 = (-b + root) / a
    miss = ~(disc > 0)
    t1 = np.where(miss, np.nan, t1)
    t2 = np.where(miss, np.nan, t2)
    return t1, t2


def ray_exit_ball(center_ray, u, center, radius):
    """Distance along unit rays from ``center_ray`` (inside the ball) to its boundary."""
    n = u.shape[0]
    P = np.broadcast_to(center_ray, (n, u.shape[1]))
    _, t2 = line_ball_hits(P, u, center, radius)
    return np.where(np.isfinite(t2), np.maximum(t2, 0.0), 0.0)


# --------------------------------------------------------------------------
# public wrappers


def ball_rays(x0, center, radius, reach=None) -> RayFamily:
    """Rays from ``x0`` sweeping exactly the ball B(center, radius).

    From inside the ball: the full sphere of directions, each ray running to
    the boundary.  From outside: the tangent cone, each ray running from
    entry to exit.
    """
    x0 = np.asarray(x0, dtype=float)
    center = np.asarray(center, dtype=float)
    dist = float(np.linalg.norm(center - x0))
    polar = ()
    if reach is not None and dist > 0:
        # rays of length ``reach`` end on the sphere at one polar angle
        c = (reach * reach + dist * dist - radius * radius) / (2.0 * reach * dist)
        if -1.0 < c < 1.0:
            polar = (math.acos(c),)
    if dist < radius:
        def span(u):
            return np.zeros(u.shape[0]), ray_exit_ball(x0, u, center, radius)
        return RayFamily(x0, axis=center - x0 if dist > 0 else None, span=span, polar_breaks=polar)

    def span(u):
        P = np.broadcast_to(x0, u.shape)
        t1, t2 = line_ball_hits(P, u, center, radius)
        t1 = np.where(np.isfinite(t1), np.maximum(t1, 0.0), 0.0)
        t2 = np.where(np.isfinite(t2), np.maximum(t2, 0.0), 0.0)
        return t1, t2

    half = math.asin(min(1.0, radius / dist)) if dist > 0 else math.pi
    return RayFamily(x0, axis=center - x0, half_angle=half, span=span, polar_breaks=polar)


def _collect_breaks(P, u, *sources):
    cols = []
    for src in sources:
        if src is None:
            continue
        extra = np.asarray(src(P, u), dtype=float).reshape(P.shape[0], -1)
        cols.append(extra)
    return np.concatenate(cols, axis=1) if cols else np.zeros((P.shape[0], 0))


def integrate_space(
    f: Callable[[np.ndarray], np.ndarray],
    dim: int,
    domain_hint=None,
    config: QuadConfig = QuadConfig(),
    gaussian=None,
    singular_point=None,
    breaks=None,
) -> Estimate:
    """Adaptive integral of ``f`` over R^dim.

    The integration domain is the ball ``domain_hint`` = (center, radius)
    when given (``f`` is treated as zero outside it), otherwise the tail box
    of the Gaussian factor ``gaussian`` = (center, t) with half-width
    ``tail_sigma * sqrt(4t)``.  In ``radial_origin`` mode the integral is
    taken along rays from ``singular_point`` (default the origin), whose
    polar Jacobian absorbs |z|^(2-d)-type singularities.  ``breaks(P, u)``
    optionally lists where ``f`` jumps along the line P + tau u.
    """
    if domain_hint is None and gaussian is None:
        raise UsageError("integrate_space needs a domain_hint or a Gaussian factor to bound the domain")
    if domain_hint is None:
        gc = np.asarray(gaussian[0], dtype=float).reshape(dim)
        half = config.effective_tail_sigma * math.sqrt(4.0 * gaussian[1])
        dc, dr = gc, half * math.sqrt(dim)
    else:
        dc, dr = np.asarray(domain_hint[0], dtype=float).reshape(dim), float(domain_hint[1])
    if dr <= 0:
        return Estimate.zero()

    if config.singularity_mode == "radial_origin":
        x0 = np.zeros(dim) if singular_point is None else np.asarray(singular_point, dtype=float).reshape(dim)
        family = ball_rays(x0, dc, dr)
        inside = float(np.linalg.norm(dc - x0)) < dr
        return integrate_lines(family, f, config, breaks=breaks, grade_start=inside)

    if domain_hint is not None and gaussian is None:
        return integrate_lines(BallLines(dc, dr), f, config, breaks=breaks)
    if domain_hint is not None:
        # Gaussian factor and bounded domain: integrate over the tail box of the
        # Gaussian intersected with the domain, with lines clipped to the ball
        gc = np.asarray(gaussian[0], dtype=float).reshape(dim)
        width = math.sqrt(4.0 * gaussian[1])
        half = config.effective_tail_sigma * width
        lo = np.maximum(gc - half, dc - dr)
        hi = np.minimum(gc + half, dc + dr)
        if np.any(hi <= lo):
            return Estimate.zero()

        def gauss_breaks(P, u):
            pts = gc[0] + width * FOCUS_OFFSETS
            return np.broadcast_to(pts, (P.shape[0], pts.size)) - P[:, :1]

        return integrate_lines(BoxBallLines(lo, hi, dc, dr, focus=(gc, width)), f, config,
                               breaks=lambda P, u: _collect_breaks(P, u, breaks, gauss_breaks))
    lo, hi = gc - half, gc + half

    def center_break(P, u):
        return np.full((P.shape[0], 1), gc[0])

    return integrate_lines(BoxLines(lo, hi), f, config,
                           breaks=lambda P, u: _collect_breaks(P, u, breaks, center_break))


def integrate_time_space(
    f: Callable[[float, np.ndarray], np.ndarray],
    t: float,
    dim: int,
    config: QuadConfig = QuadConfig(),
    domain_hint=None,
    gaussian: Optional[Callable[[float], tuple]] = None,
    singular_point=None,
    breaks=None,
    grade_levels: int = 12,
) -> Estimate:
    """Integral of ``f(s, z)`` over (0, t) x R^dim.

    The time mesh is graded geometrically (ratio 0.5) toward both ends.
    ``gaussian(s)`` returns the (center, variance-time) of a Gaussian factor of
    the slice integrand, used to truncate each slice.
    """
    if not t > 0:
        raise UsageError("t must be positive")
    inner_cfg = config.replace(rel_tol=config.rel_tol * 0.1, abs_tol=config.abs_tol * 0.1 / t)
    total_inner = [0]

    def h(s_arr):
        vals = np.empty(s_arr.size)
        errs = np.empty(s_arr.size)
        for i, s in enumerate(s_arr):
            est = integrate_space(
                lambda Z: f(s, Z), dim, domain_hint=domain_hint, config=inner_cfg,
                gaussian=None if gaussian is None else gaussian(s),
                singular_point=singular_point, breaks=breaks,
            )
            vals[i] = est.value
            errs[i] = est.err_bound
            total_inner[0] += est.evals
        return vals, errs

    est = integrate_1d(h, graded_points(0.0, t, grade_levels, grade_levels), config, with_errors=True)
    return Estimate(est.value, est.err_bound, est.evals // GK21.nodes.size + total_inner[0], est.converged)


def grid_oracle_integrate(f, domain, resolution: int) -> Estimate:
    """Midpoint tensor-grid sum over the box ``domain`` = [(a1, b1), ...].

    Error estimate: difference from the same sum at half resolution.
    Intentionally simple; used to validate the adaptive engines.
    """
    domain = np.asarray(domain, dtype=float).reshape(-1, 2)
    dim = domain.shape[0]
    if resolution < 2:
        raise UsageError("resolution must be >= 2")

    def midpoint(n):
        axes = [a + (np.arange(n) + 0.5) * (b - a) / n for a, b in domain]
        cell = float(np.prod((domain[:, 1] - domain[:, 0]) / n))
        total = 0.0
        # chunk along the first axis to bound memory
        rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, dim - 1) if dim > 1 else None
        for x0 in axes[0]:
            if rest is None:
                Z = np.array([[x0]])
            else:
                Z = np.concatenate([np.full((rest.shape[0], 1), x0), rest], axis=1)
            total += float(np.sum(f(Z)))
        return total * cell, n**dim

    fine, n_fine = midpoint(resolution)
    coarse, n_coarse = midpoint(max(1, resolution // 2))
    return Estimate(fine, abs(fine - coarse), n_fine + n_coarse, True)
