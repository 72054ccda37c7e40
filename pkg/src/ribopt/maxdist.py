"""Maximum of the distance function to (network U boundary) over the domain,
the limiting objective of the eigenvalue problem for large exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .geometry import Domain, SigmaNetwork, distance_to_network


@dataclass(frozen=True)
class DistanceFieldSummary:
    max_distance: float
    argmax: tuple[float, float]
    h_final: float
    levels: int
    upper_bound: float


def _polish(domain, sigma, x0, r):
    """Local Nelder-Mead ascent of the distance field, clipped to the domain."""

    def neg(x):
        if not domain.contains_point(x[0], x[1]):
            return 1.0
        return -float(distance_to_network([x], sigma, domain)[0])

    res = optimize.minimize(neg, np.asarray(x0), method='Nelder-Mead',
                            options={'xatol': 1e-12, 'fatol': 1e-14,
                                     'initial_simplex': np.array(
                                         [x0, (x0[0] + r, x0[1]), (x0[0], x0[1] + r)]),
                                     'maxiter': 400})
    if res.fun < 0:
        return (float(res.x[0]), float(res.x[1])), -float(res.fun)
    return tuple(x0), float(distance_to_network([x0], sigma, domain)[0])


def max_distance(domain: Domain, sigma: SigmaNetwork | None,
                 tolerance: float = 1e-4) -> DistanceFieldSummary:
    """Certified maximization of the 1-Lipschitz distance field.

    Branch-and-bound on boxes: a box of half-diagonal r with center value d_c
    cannot contain values above d_c + r, so boxes are split until the best
    surviving upper bound is within `tolerance` of the best inside value.
    A local simplex polish then sharpens the reported maximum.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    xlo, ylo, xhi, yhi = domain.bbox
    span = max(xhi - xlo, yhi - ylo)
    n0 = 32
    size = span / n0
    cx = xlo + size * (np.arange(math.ceil((xhi - xlo) / size)) + 0.5)
    cy = ylo + size * (np.arange(math.ceil((yhi - ylo) / size)) + 0.5)
    CX, CY = np.meshgrid(cx, cy)
    centers = np.column_stack([CX.ravel(), CY.ravel()])

    levels = 0
    best_val, best_arg = -math.inf, (float(centers[0, 0]), float(centers[0, 1]))
    ub = math.inf
    while True:
        r = size * math.sqrt(2) / 2
        d = distance_to_network(centers, sigma, domain)
        inside = domain.contains(centers)
        # boxes fully outside the domain cannot meet it
        d_bdry = domain.distance_to_boundary(centers)
        feasible = inside | (d_bdry <= r)
        if inside.any():
            k = int(np.argmax(np.where(inside, d, -math.inf)))
            if d[k] > best_val:
                best_val = float(d[k])
                best_arg = (float(centers[k, 0]), float(centers[k, 1]))
        ub_arr = d + r
        ub = float(ub_arr[feasible].max()) if feasible.any() else best_val
        if ub - best_val <= tolerance or size <= tolerance / 8:
            break
        keep = feasible & (ub_arr > best_val)
        seeds = centers[keep]
        size /= 2
        off = size / 2
        centers = np.concatenate([
            seeds + (-off, -off), seeds + (off, -off),
            seeds + (-off, off), seeds + (off, off)])
        levels += 1

    arg, val = _polish(domain, sigma, best_arg, size)
    if val > best_val:
        best_val, best_arg = val, arg
    return DistanceFieldSummary(best_val, best_arg, size, levels,
                                max(ub, best_val))


def scaled_maxdist_lower_bound(budget: float) -> float:
    """Certified lower bound on budget * (max distance) for any admissible
    network of length `budget` on the unit square:

        L / ((L+4) + sqrt((L+4)^2 + 2*pi))
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    L = float(budget)
    return L / ((L + 4) + math.sqrt((L + 4) ** 2 + 2 * math.pi))
