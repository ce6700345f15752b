"""Exact minimizers for box-constrained quadratic dispatch subproblems.

All three dispatch algorithms reduce to one scalar question: how much total
output t should a fleet of generators produce, and how is t split across
them.  For convex quadratic costs the cost-minimal split at a given t follows
the fleet's marginal-cost curve, a nondecreasing piecewise-linear function of
t.  This module builds that curve exactly (one knot per generator bound) and
solves both problems in closed form per segment:

- allocate: split a fixed total t at minimum cost (used by the centralized
  solver and to finish every local subproblem);
- minimize_coupled: minimize fleet cost plus a convex quadratic coupling
  g(t), the shape of every ADMM local objective after eliminating the
  injection identity.

No iterative tolerance is involved; results are exact up to float rounding.
Generators tied at the same marginal price are filled lowest index first.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Piece:
    """One stretch of the marginal-price curve nu(t).

    kind "linear": quadratic generators are marginal; nu rises with slope
    1/sigma.  kind "flat": zero-curvature generators supply at fixed price.
    kind "kink": zero width in t; the price jumps from nu0 to nu1 (the
    subgradient interval at t0).
    """

    kind: str
    t0: float
    t1: float
    nu0: float
    nu1: float
    sigma: float = 0.0
    jumpers: tuple[int, ...] = ()


class Fleet:
    """Cost and capacity arrays for one collection of generators."""

    def __init__(self, a, b, c, p_max):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.p_max = np.asarray(p_max, dtype=float)
        if not (self.a.shape == self.b.shape == self.c.shape == self.p_max.shape):
            raise ValueError("fleet arrays must share one shape")
        if self.a.ndim != 1 or self.a.size == 0:
            raise ValueError("fleet arrays must be 1-D and nonempty")
        if np.any(self.a < 0.0):
            raise ValueError("fleet has a generator with negative curvature")
        if np.any(self.p_max <= 0.0):
            raise ValueError("fleet has a generator with nonpositive capacity")

    @property
    def size(self) -> int:
        return int(self.a.size)

    @property
    def capacity(self) -> float:
        return float(np.sum(self.p_max))

    def cost(self, p: np.ndarray) -> float:
        p = np.asarray(p, dtype=float)
        return float(np.sum(self.a * p * p + self.b * p + self.c))

    @cached_property
    def pieces(self) -> tuple[Piece, ...]:
        return _build_pieces(self)

    @cached_property
    def price_floor(self) -> float:
        """Lowest marginal price at which any generator starts producing."""
        return float(np.min(self.b))


def _build_pieces(fleet: Fleet) -> tuple[Piece, ...]:
    slope_delta: dict[float, float] = {}
    jumps: dict[float, list[int]] = {}
    for idx in range(fleet.size):
        a = fleet.a[idx]
        b = fleet.b[idx]
        if a > 0.0:
            exit_nu = b + 2.0 * a * fleet.p_max[idx]
            slope_delta[b] = slope_delta.get(b, 0.0) + 1.0 / (2.0 * a)
            slope_delta[exit_nu] = slope_delta.get(exit_nu, 0.0) - 1.0 / (2.0 * a)
        else:
            jumps.setdefault(b, []).append(idx)

    pieces: list[Piece] = []
    t = 0.0
    sigma = 0.0
    prev_nu = None
    for nu in sorted(set(slope_delta) | set(jumps)):
        if prev_nu is not None:
            if sigma > 0.0:
                t_next = t + sigma * (nu - prev_nu)
                pieces.append(Piece("linear", t, t_next, prev_nu, nu, sigma))
                t = t_next
            else:
                pieces.append(Piece("kink", t, t, prev_nu, nu))
        jumpers = jumps.get(nu)
        if jumpers:
            cap = float(np.sum(fleet.p_max[jumpers]))
            pieces.append(Piece("flat", t, t + cap, nu, nu, jumpers=tuple(sorted(jumpers))))
            t += cap
        sigma += slope_delta.get(nu, 0.0)
        prev_nu = nu
    return tuple(pieces)


def _assemble(fleet: Fleet, total: float, price: float, matched: int) -> np.ndarray:
    """Dispatch every generator given the marginal price and the index of the
    matched piece.

    Quadratic generators follow the price formula; flat-price generators are
    full when their piece lies below the matched one, zero above it, and the
    matched flat piece itself is filled from the remainder lowest index
    first.  The final float residual is pinned on one generator with room.
    """
    pieces = fleet.pieces
    p = np.zeros(fleet.size)
    quad = fleet.a > 0.0
    if np.any(quad):
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = (price - fleet.b) / (2.0 * fleet.a)
        p[quad] = np.clip(raw[quad], 0.0, fleet.p_max[quad])
    fill_here: tuple[int, ...] = ()
    for k, piece in enumerate(pieces):
        if piece.kind != "flat":
            continue
        if k < matched:
            for idx in piece.jumpers:
                p[idx] = fleet.p_max[idx]
        elif k == matched:
            fill_here = piece.jumpers
    if fill_here:
        remainder = total - float(np.sum(p))
        for idx in fill_here:
            grant = min(float(fleet.p_max[idx]), max(remainder, 0.0))
            p[idx] = grant
            remainder -= grant

    # pin the rounding residual on one generator with room, preferring one
    # that is strictly interior (it is the marginal unit)
    residual = total - float(np.sum(p))
    if residual != 0.0 and abs(residual) <= 1e-6 * max(1.0, abs(total)):
        for pool in (
            np.flatnonzero((p > 0.0) & (p < fleet.p_max)),
            np.arange(fleet.size),
        ):
            done = False
            for idx in pool:
                fixed = p[idx] + residual
                if 0.0 <= fixed <= fleet.p_max[idx]:
                    p[idx] = fixed
                    done = True
                    break
            if done:
                break
    return p


def allocate(fleet: Fleet, total: float) -> tuple[np.ndarray, float]:
    """Split ``total`` MW across the fleet at minimum cost.

    Returns (outputs, marginal_price).  ``total`` must lie in
    [0, fleet.capacity] up to a small rounding slack; it is clipped into that
    interval before dispatch.
    """
    cap = fleet.capacity
    slack = 1e-9 * max(1.0, cap)
    if total < -slack or total > cap + slack:
        raise ValueError(f"total {total} MW outside [0, {cap}] MW")
    total = min(max(total, 0.0), cap)
    pieces = fleet.pieces
    if total == 0.0:
        return np.zeros(fleet.size), fleet.price_floor
    if total == cap:
        return fleet.p_max.copy(), pieces[-1].nu1
    for k, piece in enumerate(pieces):
        if total > piece.t1 or piece.t1 <= piece.t0:
            continue
        if piece.kind == "linear":
            price = piece.nu0 + (total - piece.t0) / piece.sigma
        else:
            price = piece.nu0
        return _assemble(fleet, total, price, k), price
    # rounding pushed total past the last accumulated knot; treat as capacity
    return _assemble(fleet, total, pieces[-1].nu1, len(pieces)), pieces[-1].nu1


def minimize_coupled(fleet: Fleet, g_lin: float, g_quad: float) -> tuple[np.ndarray, float, float]:
    """Minimize fleet cost plus the coupling g(t) over t = sum(outputs).

    g enters through its derivative g'(t) = g_lin + g_quad*t with g_quad >= 0
    (every ADMM local objective has g_quad > 0, which makes the minimizer
    unique).  Returns (outputs, t, marginal_price).
    """
    if g_quad < 0.0:
        raise ValueError("coupling curvature must be nonnegative")
    pieces = fleet.pieces
    cap = fleet.capacity

    if fleet.price_floor + g_lin >= 0.0:
        return np.zeros(fleet.size), 0.0, fleet.price_floor

    t_star = None
    for piece in pieces:
        f_start = piece.nu0 + g_lin + g_quad * piece.t0
        if f_start >= 0.0:
            t_star = piece.t0
            break
        f_end = piece.nu1 + g_lin + g_quad * piece.t1
        if f_end < 0.0:
            continue
        if piece.kind == "linear":
            m = 1.0 / piece.sigma
            t_star = (m * piece.t0 - piece.nu0 - g_lin) / (m + g_quad)
        elif piece.kind == "flat":
            t_star = -(piece.nu0 + g_lin) / g_quad if g_quad > 0.0 else piece.t0
        else:  # kink: price jumps across zero at fixed t
            t_star = piece.t0
        t_star = min(max(t_star, piece.t0), piece.t1)
        break
    if t_star is None:
        t_star = cap
    t_star = min(max(t_star, 0.0), cap)
    p, price = allocate(fleet, t_star)
    return p, t_star, price
