"""Large-budget asymptotics: limit functionals of length densities, the
optimal density, empirical measures of networks, scaled objectives and
ratio studies for the explicit comb/grid families."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import interval_eigenvalue
from .geometry import (CoefficientField, Domain, FittedMeasure, SigmaNetwork,
                       GEOM_TOL)
from .maxdist import max_distance
from .spectral import lambda2, lambda_p


# ---------------------------------------------------------------------------
# quadrature over the domain
# ---------------------------------------------------------------------------

def domain_quadrature(domain: Domain, resolution: int = 256):
    """Quadrature points and weights: midpoints on full cells, clipped-cell
    centroids on boundary cells (exact for affine integrands)."""
    xlo, ylo, xhi, yhi = domain.bbox
    nx = ny = int(resolution)
    hx, hy = (xhi - xlo) / nx, (yhi - ylo) / ny
    cx = xlo + hx * (np.arange(nx) + 0.5)
    cy = ylo + hy * (np.arange(ny) + 0.5)
    X, Y = np.meshgrid(cx, cy)
    centers = np.column_stack([X.ravel(), Y.ravel()])

    # cells whose closed square avoids the boundary entirely are full iff
    # their center is inside
    d = domain.distance_to_boundary(centers)
    r = math.hypot(hx, hy) / 2
    inside = domain.contains(centers)
    full = inside & (d > r)
    partial = d <= r

    pts = [centers[full]]
    wts = [np.full(int(full.sum()), hx * hy)]
    for k in np.nonzero(partial)[0]:
        x0 = xlo + (k % nx) * hx
        y0 = ylo + (k // nx) * hy
        a, c = domain.clipped_cell_area_centroid(x0, y0, x0 + hx, y0 + hy)
        if a > 0 and c is not None:
            pts.append(np.array([c]))
            wts.append(np.array([a]))
    return np.vstack(pts), np.concatenate(wts)


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityField:
    """Probability density on the domain: either the normalized coefficient
    ratio (rho/sigma)^(1/p) or the piecewise-constant density of a fitted
    measure."""

    kind: str                                   # 'ratio-power' | 'cells'
    domain: Domain
    rho: CoefficientField | None = None
    sigma_coef: CoefficientField | None = None
    p: float = 2.0
    norm: float = 1.0
    fitted: FittedMeasure | None = None

    def __call__(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if self.kind == 'ratio-power':
            if math.isinf(self.p):
                vals = np.ones(np.broadcast(x, y).shape)
            else:
                vals = (self.rho(x, y) / self.sigma_coef(x, y)) ** (1.0 / self.p)
            return vals / self.norm
        s = self.fitted.cell_side
        ix = np.floor(np.asarray(x) / s + GEOM_TOL).astype(int)
        iy = np.floor(np.asarray(y) / s + GEOM_TOL).astype(int)
        table = {(c.ix, c.iy): c.weight for c in self.fitted.cells}

        def lookup(a, b):
            # points on the far lattice lines of the support take the value
            # of the adjacent covered cell
            for da, db in ((0, 0), (-1, 0), (0, -1), (-1, -1)):
                v = table.get((a + da, b + db))
                if v is not None:
                    return v
            return 0.0

        flat_ix, flat_iy = np.ravel(ix), np.ravel(iy)
        out = np.array([lookup(int(a), int(b))
                        for a, b in zip(flat_ix, flat_iy)])
        return out.reshape(np.shape(ix))

    def integral(self, resolution: int = 256) -> float:
        pts, wts = domain_quadrature(self.domain, resolution)
        return float((self(pts[:, 0], pts[:, 1]) * wts).sum())


def density_from_fitted(fitted: FittedMeasure, domain: Domain) -> DensityField:
    return DensityField('cells', domain, fitted=fitted)


def optimal_density(rho: CoefficientField, sigma_coef: CoefficientField,
                    p: float, domain: Domain, resolution: int = 256) -> DensityField:
    """The unique minimizer of the limit functional: density proportional
    to (rho/sigma)^(1/p), normalized over the domain."""
    if p < 1:
        raise ValueError("p must be >= 1")
    pts, wts = domain_quadrature(domain, resolution)
    if math.isinf(p):
        vals = np.ones(len(pts))
    else:
        vals = (rho(pts[:, 0], pts[:, 1]) / sigma_coef(pts[:, 0], pts[:, 1])) ** (1.0 / p)
    norm = float((vals * wts).sum())
    return DensityField('ratio-power', domain, rho, sigma_coef, p, norm)


# ---------------------------------------------------------------------------
# limit functionals and values
# ---------------------------------------------------------------------------

def domain_samples(domain: Domain, resolution: int = 256):
    """Lattice nodes in the closed domain, boundary included; for continuous
    integrands the esssup over the open domain is the sup over these."""
    xlo, ylo, xhi, yhi = domain.bbox
    xs = np.linspace(xlo, xhi, resolution + 1)
    ys = np.linspace(ylo, yhi, resolution + 1)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return pts[domain.contains(pts)]


def limit_functional(density, rho: CoefficientField, sigma_coef: CoefficientField,
                     p: float, domain: Domain, resolution: int = 256) -> float:
    """Scaled limit of budget^p / eigenvalue along a length density f:

        (1 / Lambda_p) * esssup rho / (sigma * f^p)

    The esssup is a max over closed-domain lattice samples; +inf where the
    density vanishes.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    pts = domain_samples(domain, resolution)
    f = np.asarray(density(pts[:, 0], pts[:, 1]), float)
    r = np.asarray(rho(pts[:, 0], pts[:, 1]), float)
    s = np.asarray(sigma_coef(pts[:, 0], pts[:, 1]), float)
    lam = interval_eigenvalue(p)
    if (f < 1e-12).any():
        return math.inf
    return float(np.max(r / (s * f ** p)) / lam)


def limit_functional_maxdist(density, domain: Domain, resolution: int = 256) -> float:
    """Limit of budget * maxdist along a length density: (1/2) esssup 1/f."""
    pts = domain_samples(domain, resolution)
    f = np.asarray(density(pts[:, 0], pts[:, 1]), float)
    if (f < 1e-12).any():
        return math.inf
    return float(0.5 * np.max(1.0 / f))


def optimal_limit_value(rho: CoefficientField, sigma_coef: CoefficientField,
                        p: float, domain: Domain, resolution: int = 256) -> float:
    """Minimal limit value (integral (rho/sigma)^(1/p))^p / Lambda_p."""
    if p < 1:
        raise ValueError("p must be >= 1")
    pts, wts = domain_quadrature(domain, resolution)
    vals = (rho(pts[:, 0], pts[:, 1]) / sigma_coef(pts[:, 0], pts[:, 1])) ** (1.0 / p)
    integral = float((vals * wts).sum())
    return integral ** p / interval_eigenvalue(p)


# ---------------------------------------------------------------------------
# empirical measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalMeasure:
    """Per-cell share of network length on the lattice (s Z)^2; cells are
    half-open so every length element lands in exactly one cell."""

    cell_side: float
    masses: tuple[tuple[tuple[int, int], float], ...]

    def as_dict(self) -> dict[tuple[int, int], float]:
        return dict(self.masses)

    @property
    def total(self) -> float:
        return sum(m for _, m in self.masses)


def empirical_measure(sigma: SigmaNetwork, cell_side: float) -> EmpiricalMeasure:
    """Exact segment clipping of the network onto lattice cells."""
    if sigma.length <= 0:
        raise ValueError("network must have positive length")
    s = float(cell_side)
    acc: dict[tuple[int, int], float] = {}
    for seg in sigma.segments:
        ax, ay, bx, by = map(float, seg)
        L = math.hypot(bx - ax, by - ay)
        # parameter breakpoints at lattice lines
        ts = {0.0, 1.0}
        for (a, b) in ((ax, bx), (ay, by)):
            lo, hi = min(a, b), max(a, b)
            k0, k1 = math.floor(lo / s), math.ceil(hi / s)
            for k in range(k0, k1 + 1):
                v = k * s
                if abs(b - a) > GEOM_TOL and lo - GEOM_TOL <= v <= hi + GEOM_TOL:
                    t = (v - a) / (b - a)
                    if 0.0 < t < 1.0:
                        ts.add(t)
        tl = sorted(ts)
        for t0, t1 in zip(tl[:-1], tl[1:]):
            if t1 - t0 < GEOM_TOL:
                continue
            tm = (t0 + t1) / 2
            mx, my = ax + tm * (bx - ax), ay + tm * (by - ay)
            key = (math.floor(mx / s), math.floor(my / s))
            acc[key] = acc.get(key, 0.0) + (t1 - t0) * L
    total = sigma.length
    masses = tuple(sorted((k, v / total) for k, v in acc.items()))
    return EmpiricalMeasure(s, masses)


# ---------------------------------------------------------------------------
# scaled objectives and ratio studies
# ---------------------------------------------------------------------------

def scaled_objective(sigma: SigmaNetwork, budget: float, p: float,
                     rho: CoefficientField | None, sigma_coef: CoefficientField | None,
                     domain: Domain, h: float) -> float:
    """budget^p divided by the computed first p-eigenvalue of the cut domain."""
    if p == 2.0:
        lam = lambda2(domain, sigma, rho, sigma_coef, h=h).eigenvalue
    else:
        lam = lambda_p(domain, sigma, rho, sigma_coef, p=p, h=h).eigenvalue
    return budget ** p / lam


def scaled_objective_maxdist(sigma: SigmaNetwork, budget: float, domain: Domain,
                             tolerance: float = 1e-4) -> float:
    """budget times the maximum distance to (network U boundary)."""
    return budget * max_distance(domain, sigma, tolerance).max_distance


@dataclass(frozen=True)
class StudyRow:
    n: int
    budget: float
    value: float        # eigenvalue, or max distance for the inf study
    ratio: float        # scaled objective
    limit: float        # predicted limit of the ratio


def ratio_study(p, n_values, builder, budget_of=None, h_rule=None,
                domain: Domain | None = None) -> list[StudyRow]:
    """Scaled-objective table for a family of configurations.

    p may be the string 'inf' (or math.inf) for the max-distance study.
    builder(n) produces the network; budget_of(n) its nominal budget
    (defaults to the exact length); h_rule(n) the solver spacing.
    """
    domain = domain or Domain.unit_square()
    infinite = p in ('inf', math.inf)
    rows = []
    for n in n_values:
        sig = builder(n)
        L = budget_of(n) if budget_of else sig.length
        if infinite:
            T = max_distance(domain, sig, 1e-5 if n <= 8 else 1e-4).max_distance
            rows.append(StudyRow(n, L, T, L * T, 0.5))
        else:
            h = h_rule(n) if h_rule else 1.0 / (16 * n)
            if p == 2.0:
                lam = lambda2(domain, sig, h=h).eigenvalue
            else:
                lam = lambda_p(domain, sig, p=p, h=h).eigenvalue
            rows.append(StudyRow(n, L, lam, L ** p / lam,
                                 1.0 / interval_eigenvalue(p)))
    return rows


def comb_ratio_study(p, n_values, h_rule=None) -> list[StudyRow]:
    from .geometry import build_comb
    return ratio_study(p, n_values, build_comb, h_rule=h_rule)


def grid_ratio_study(p, n_values, h_rule=None) -> list[StudyRow]:
    from .geometry import build_grid_structure
    return ratio_study(p, n_values, build_grid_structure,
                       h_rule=h_rule or (lambda n: 1.0 / (16 * n)))
