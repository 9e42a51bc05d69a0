"""Sup-norm search over the free parameters of a functional.

The search is: coarse grid over a box (9 points per axis, capped in total),
the best few grid points as seeds, coordinatewise bounded Brent refinement,
then one evaluation at full tolerance of the refined points.  The reported
value is the largest evaluated value, so it is a lower bound for the true
sup.  Symmetries of the potential shrink the parameter space first.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import UsageError


@dataclass(frozen=True)
class SearchConfig:
    grid_per_axis: int = 9
    max_grid_points: int = 6561
    seeds: int = 5
    sweeps: int = 2
    xatol: float = 1e-4
    # inflation of the support box in units of sqrt(4t)
    search_sigma: float = 2.0

    def replace(self, **changes) -> "SearchConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SupResult:
    value: float
    argmax: tuple
    grid_points: int
    refinements: int
    lower_bound_only: bool = True
    err_bound: float = 0.0
    search_err: float = 0.0
    converged: bool = True
    evaluations: int = 0
    names: tuple = ()

    def scaled(self, c: float) -> "SupResult":
        return dataclasses.replace(self, value=c * self.value, err_bound=abs(c) * self.err_bound,
                                   search_err=abs(c) * self.search_err)

    @property
    def total_err(self) -> float:
        return self.err_bound + self.search_err

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["argmax"] = [list(map(float, v)) if np.ndim(v) else float(v) for v in self.argmax]
        return out


# --------------------------------------------------------------------------
# parameter reductions


@dataclass
class Reduction:
    """Maps a reduced parameter vector to the functional's vector arguments."""

    names: tuple
    lo: np.ndarray
    hi: np.ndarray
    to_vectors: Callable[[np.ndarray], tuple]

    @property
    def p(self) -> int:
        return len(self.names)


def _axis_vec(d, comps):
    def build(cols):
        n = cols[0].shape[0] if cols else 1
        out = np.zeros((n, d))
        for j, c in enumerate(cols):
            out[:, j] = c
        return out
    return build


def one_vector_reduction(sym, d, box_lo, box_hi, center=None) -> Reduction:
    """Reductions for functionals of one position x.

    ``box_lo``/``box_hi`` bound x; ``center`` is the symmetry center for
    radial potentials.
    """
    box_lo = np.asarray(box_lo, dtype=float)
    box_hi = np.asarray(box_hi, dtype=float)
    kind = sym[0] if sym else None
    if kind == "constant":
        return Reduction((), np.zeros(0), np.zeros(0), lambda P: (np.zeros((max(P.shape[0], 1), d)),))
    if kind == "radial":
        c = np.asarray(center if center is not None else sym[1], dtype=float)
        R = float(np.max(np.maximum(np.abs(box_hi - c), np.abs(box_lo - c))))

        def f(P):
            X = np.tile(c, (P.shape[0], 1))
            X[:, 0] += P[:, 0]
            return (X,)
        return Reduction(("x_r",), np.array([0.0]), np.array([R]), f)
    if kind == "axial" and d == 3:
        Rr = float(max(np.max(np.abs(box_lo[1:])), np.max(np.abs(box_hi[1:]))))

        def f(P):
            X = np.zeros((P.shape[0], 3))
            X[:, 0] = P[:, 0]
            X[:, 1] = P[:, 1]
            return (X,)
        return Reduction(("x_1", "x_r"), np.array([box_lo[0], 0.0]), np.array([box_hi[0], Rr]), f)
    names = tuple(f"x_{i + 1}" for i in range(d))
    return Reduction(names, box_lo.copy(), box_hi.copy(), lambda P: (P[:, :d].copy(),))


def two_vector_reduction(sym, d, box_lo, box_hi, second_lo, second_hi, second_is_position, center=None,
                         names=("x", "y")) -> Reduction:
    """Reductions for functionals of (x, v): S, N, K (v = y) and r_*, e_* (v = alpha).

    ``second_is_position`` says whether v moves with the symmetry center (a
    point y) or is a free vector (a drift alpha, or the K-kernel argument y).
    """
    box_lo = np.asarray(box_lo, dtype=float)
    box_hi = np.asarray(box_hi, dtype=float)
    second_lo = np.asarray(second_lo, dtype=float)
    second_hi = np.asarray(second_hi, dtype=float)
    a, b = names
    kind = sym[0] if sym else None
    if kind == "constant":
        B = float(np.max(np.maximum(np.abs(second_lo), np.abs(second_hi))))

        def f(P):
            X = np.zeros((P.shape[0], d))
            Y = np.zeros((P.shape[0], d))
            Y[:, 0] = P[:, 0]
            return X, Y
        return Reduction((f"{b}_r",), np.array([0.0]), np.array([B]), f)
    if kind == "radial":
        c = np.asarray(center if center is not None else sym[1], dtype=float)
        R1 = float(np.max(np.maximum(np.abs(box_hi - c), np.abs(box_lo - c))))
        off = c if second_is_position else np.zeros(d)
        B = float(np.max(np.maximum(np.abs(second_hi - off), np.abs(second_lo - off))))
        if d == 1:
            def f(P):
                return (c + P[:, :1]), (off + P[:, 1:2])
            return Reduction((f"{a}_r", f"{b}_1"), np.array([0.0, -B]), np.array([R1, B]), f)

        def f(P):
            X = np.tile(c, (P.shape[0], 1))
            X[:, 0] += P[:, 0]
            Y = np.tile(off, (P.shape[0], 1))
            Y[:, 0] += P[:, 1]
            Y[:, 1] += P[:, 2]
            return X, Y
        return Reduction((f"{a}_r", f"{b}_1", f"{b}_2"), np.array([0.0, -B, 0.0]), np.array([R1, B, B]), f)
    if kind == "axial" and d == 3:
        Rr = float(max(np.max(np.abs(box_lo[1:])), np.max(np.abs(box_hi[1:]))))
        Br = float(max(np.max(np.abs(second_lo[1:])), np.max(np.abs(second_hi[1:]))))

        def f(P):
            X = np.zeros((P.shape[0], 3))
            X[:, 0] = P[:, 0]
            X[:, 1] = P[:, 1]
            Y = P[:, 2:5].copy()
            return X, Y
        return Reduction(
            (f"{a}_1", f"{a}_r", f"{b}_1", f"{b}_2", f"{b}_3"),
            np.array([box_lo[0], 0.0, second_lo[0], -Br, 0.0]),
            np.array([box_hi[0], Rr, second_hi[0], Br, Br]),
            f,
        )
    nm = tuple(f"{a}_{i + 1}" for i in range(d)) + tuple(f"{b}_{i + 1}" for i in range(d))

    def f(P):
        return P[:, :d].copy(), P[:, d:2 * d].copy()
    return Reduction(nm, np.concatenate([box_lo, second_lo]), np.concatenate([box_hi, second_hi]), f)


# --------------------------------------------------------------------------
# the search


def grid_points(lo, hi, per_axis: int, cap: int) -> np.ndarray:
    p = len(lo)
    if p == 0:
        return np.zeros((1, 0))
    n = per_axis
    if n**p > cap:
        n = int(math.floor(cap ** (1.0 / p) + 1e-9))
    if n % 2 == 0:
        n -= 1
    n = max(n, 3)
    axes = [np.linspace(l, h, n) if h > l else np.array([l]) for l, h in zip(lo, hi)]
    return np.array(list(itertools.product(*axes)))


def sup_search(
    reduction: Reduction,
    screen: Callable[[np.ndarray], np.ndarray],
    medium: Callable[[np.ndarray], float],
    fine: Callable[[np.ndarray], "object"],
    config: SearchConfig = SearchConfig(),
    extra_points: Optional[np.ndarray] = None,
) -> SupResult:
    """Maximise a functional over the reduced parameter box.

    ``screen(P)`` evaluates many parameter rows cheaply, ``medium(p)`` is a
    moderately accurate scalar evaluation used by the local refinement, and
    ``fine(p)`` returns an Estimate at full tolerance.  ``extra_points`` are
    added to the grid (e.g. known symmetric candidates).
    """
    lo, hi = reduction.lo, reduction.hi
    if np.any(hi < lo):
        raise UsageError("empty search box")
    P = grid_points(lo, hi, config.grid_per_axis, config.max_grid_points)
    if extra_points is not None and len(extra_points):
        P = np.concatenate([P, np.clip(np.asarray(extra_points, dtype=float).reshape(-1, reduction.p), lo, hi)])
    vals = np.asarray(screen(P), dtype=float)
    evaluations = P.shape[0]
    order = np.argsort(-vals, kind="stable")
    seeds = []
    for i in order:
        if len(seeds) >= config.seeds:
            break
        if not any(np.array_equal(P[i], s) for s in seeds):
            seeds.append(P[i].copy())

    refined = []
    refinements = 0
    if reduction.p:
        for seed in seeds:
            point = seed.copy()
            best = medium(point)
            evaluations += 1
            gain = 0.0
            for sweep in range(config.sweeps):
                start = best
                for j in range(reduction.p):
                    if hi[j] <= lo[j]:
                        continue

                    def neg(v, j=j):
                        q = point.copy()
                        q[j] = v
                        return -medium(q)

                    res = optimize.minimize_scalar(neg, bounds=(lo[j], hi[j]), method="bounded",
                                                   options={"xatol": config.xatol})
                    evaluations += int(res.nfev)
                    refinements += 1
                    if -res.fun > best:
                        best = -res.fun
                        point[j] = res.x
                gain = best - start
                if gain <= 0:
                    break
            # the gain of the final sweep estimates how far the point still is from a local max
            refined.append((best, point, max(gain, 0.0)))
    else:
        refined = [(float(vals[0]), P[0], 0.0)]
    gains = {tuple(pt): g for _, pt, g in refined}

    # full-tolerance evaluation of the refined points and of the best seeds
    candidates = [pt for _, pt, _ in sorted(refined, key=lambda r: -r[0])]
    candidates += seeds
    uniq = []
    for c in candidates:
        if not any(np.allclose(c, u, rtol=0, atol=1e-12) for u in uniq):
            uniq.append(c)
    best_est, best_pt = None, None
    converged = True
    for c in uniq[: max(2, config.seeds)]:
        est = fine(c)
        evaluations += 1
        converged = converged and est.converged
        if best_est is None or est.value > best_est.value:
            best_est, best_pt = est, c
    vectors = reduction.to_vectors(best_pt.reshape(1, -1))
    argmax = tuple(v[0].copy() for v in vectors)
    return SupResult(
        value=float(best_est.value),
        argmax=argmax,
        grid_points=int(P.shape[0]),
        refinements=refinements,
        lower_bound_only=True,
        err_bound=float(best_est.err_bound),
        search_err=float(gains.get(tuple(best_pt), 0.0)),
        converged=bool(converged),
        evaluations=int(evaluations),
        names=reduction.names,
    )
