"""Closed-form constants and explicit eigenvalue/area inequalities for
length-constrained Dirichlet networks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (Domain, SigmaNetwork, OVERLAP_TOL,
                       point_segment_distance, _merge_intervals)


def interval_eigenvalue(p: float) -> float:
    """First Dirichlet p-eigenvalue of the unit interval.

    (p-1) * (2*pi / (p*sin(pi/p)))**p for p > 1, and 2 at p = 1.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        return 2.0
    return (p - 1) * (2 * math.pi / (p * math.sin(math.pi / p))) ** p


def saturation_radius(sigma_len: float, area: float, kappa: int) -> float:
    """Positive root of 2*sigma_len*t + (kappa+1)*pi*t^2 = area.

    This is the radius at which the quadratic sublevel-area bound saturates
    the domain area. sigma_len is the total length of the Dirichlet set
    (network united with the boundary), kappa the boundary component count.
    """
    if area <= 0:
        raise ValueError("area must be positive")
    if sigma_len < 0 or kappa < 1:
        raise ValueError("need sigma_len >= 0 and kappa >= 1")
    k = (kappa + 1) * math.pi
    return area / (sigma_len + math.sqrt(sigma_len ** 2 + k * area))


def sublevel_area_bound(t: float, sigma_len: float, area: float, kappa: int) -> float:
    """Upper bound 2*sigma_len*t + (kappa+1)*pi*t^2 on the area of the
    distance sublevel set, capped at the domain area."""
    if t <= 0:
        return 0.0
    tbar = saturation_radius(sigma_len, area, kappa)
    if t > tbar:
        return area
    return 2 * sigma_len * t + (kappa + 1) * math.pi * t * t


def dirichlet_length(domain: Domain, sigma: SigmaNetwork | None) -> float:
    """Length of (network U boundary) as a measure: overlaps counted once.

    Network edges running along a boundary edge (collinear within 1e-9)
    contribute only through the boundary.
    """
    total = domain.perimeter
    if sigma is None:
        return total
    bsegs = domain.boundary_segments
    for seg in sigma.segments:
        a, b = seg[0:2], seg[2:4]
        ab = (b[0] - a[0], b[1] - a[1])
        L = math.hypot(*ab)
        remove = []
        for bs in bsegs:
            c, d = (bs[0], bs[1]), (bs[2], bs[3])
            cd = (d[0] - c[0], d[1] - c[1])
            if abs(ab[0] * cd[1] - ab[1] * cd[0]) > OVERLAP_TOL:
                continue
            mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
            offset = point_segment_distance(mid[0], mid[1], c[0], c[1], d[0], d[1])
            if offset > OVERLAP_TOL:
                ends = (point_segment_distance(a[0], a[1], c[0], c[1], d[0], d[1]),
                        point_segment_distance(b[0], b[1], c[0], c[1], d[0], d[1]))
                if min(ends) > OVERLAP_TOL:
                    continue
            t1 = ((c[0] - a[0]) * ab[0] + (c[1] - a[1]) * ab[1]) / (L * L)
            t2 = ((d[0] - a[0]) * ab[0] + (d[1] - a[1]) * ab[1]) / (L * L)
            lo, hi = max(0.0, min(t1, t2)), min(1.0, max(t1, t2))
            if hi <= lo:
                continue
            pm = (a[0] + (lo + hi) / 2 * ab[0], a[1] + (lo + hi) / 2 * ab[1])
            if point_segment_distance(pm[0], pm[1], c[0], c[1], d[0], d[1]) <= OVERLAP_TOL:
                remove.append((lo, hi))
        overlap = sum(hi - lo for lo, hi in _merge_intervals(remove)) * L
        total += L - overlap
    # isolated vertices have zero length
    return total


def eigenvalue_upper_bound(domain: Domain, sigma: SigmaNetwork | None, p: float) -> float:
    """Explicit upper bound on the first Dirichlet p-eigenvalue of
    (domain minus network) in terms of lengths only:

        Lambda_p / (2*tbar)^p * (1 + (kappa+1)*pi*tbar / sigma_len)
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    sl = dirichlet_length(domain, sigma)
    kappa = domain.boundary_component_count
    tbar = saturation_radius(sl, domain.area, kappa)
    lam = interval_eigenvalue(p)
    return lam / (2 * tbar) ** p * (1 + (kappa + 1) * math.pi * tbar / sl)


def rectangle_lambda2(n: float) -> float:
    """First Laplace-Dirichlet eigenvalue of the (1/n) x 1 rectangle."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.pi ** 2 * (n * n + 1)


def rectangle_cheeger(n: float) -> float:
    """Cheeger constant of the (1/n) x 1 rectangle, stable algebraic form."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (1 + 1 / n + math.sqrt((1 - 1 / n) ** 2 + math.pi / n)) * n


def rectangle_cheeger_ratio_form(n: float) -> float:
    """Equivalent (4-pi)/(1+1/n-sqrt((1-1/n)^2+pi/n)) form, for cross-checks."""
    return (4 - math.pi) / (1 + 1 / n - math.sqrt((1 - 1 / n) ** 2 + math.pi / n))


@dataclass(frozen=True)
class LengthBoundContext:
    """Length data entering the explicit bounds for one configuration."""

    sigma_len: float        # length of (network U boundary) as a measure
    area: float
    kappa: int
    tbar: float
    max_distance: float | None = None

    def __post_init__(self):
        resid = abs(2 * self.sigma_len * self.tbar
                    + (self.kappa + 1) * math.pi * self.tbar ** 2 - self.area)
        if resid > 1e-12 * max(self.area, 1.0):
            raise ValueError("tbar does not solve its quadratic identity")
        if self.max_distance is not None and self.tbar > self.max_distance + 1e-12:
            raise ValueError("tbar must not exceed the max distance")

    @classmethod
    def from_config(cls, domain: Domain, sigma: SigmaNetwork | None,
                    max_distance: float | None = None) -> "LengthBoundContext":
        sl = dirichlet_length(domain, sigma)
        kappa = domain.boundary_component_count
        return cls(sl, domain.area, kappa,
                   saturation_radius(sl, domain.area, kappa), max_distance)
