"""Placement optimization of the Dirichlet network: maximize the first
p-eigenvalue or minimize the maximum distance under a length budget.

Strategies: a structured comb family (parallel chords plus a connecting
spine), a density-adapted family (chord positions from quantiles of the
optimal length density), the periodic tiling construction, simulated
annealing over vertex positions and topology, and a portfolio of all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import domain_quadrature, optimal_density
from .bounds import LengthBoundContext, eigenvalue_upper_bound
from .geometry import (CoefficientField, Domain, NetworkError, SigmaNetwork,
                       _segment_domain_intervals, _subtract_boundary_overlap,
                       build_tiled_sigma, fit_measure_to_grid, unit_tile,
                       distance_to_network)
from .maxdist import max_distance
from .spectral import lambda2, lambda_p

STRATEGIES = ('comb-family', 'adapted-tiling', 'anneal', 'portfolio')


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizationReport:
    best: SigmaNetwork
    best_value: float
    objective: str                      # 'eigen-p' | 'maxdist'
    evaluations: int
    history: tuple[tuple[int, float], ...]
    seed: int
    budget: float
    strategy: str
    budget_exhausted: bool = False


@dataclass(frozen=True)
class Certificate:
    achieved: float
    bound: float
    gap: float


# ---------------------------------------------------------------------------
# structured candidates
# ---------------------------------------------------------------------------

def _clip_line_to_domain(domain, p0, dirv, span):
    """Sub-segments of the line p0 + t*dirv inside the domain, with parts
    running along the boundary removed."""
    a = (p0[0] - span * dirv[0], p0[1] - span * dirv[1])
    b = (p0[0] + span * dirv[0], p0[1] + span * dirv[1])
    pieces = []
    for t0, t1 in _segment_domain_intervals(a, b, domain):
        q = (a[0] + t0 * (b[0] - a[0]), a[1] + t0 * (b[1] - a[1]))
        w = (a[0] + t1 * (b[0] - a[0]), a[1] + t1 * (b[1] - a[1]))
        for u0, u1 in _subtract_boundary_overlap(q, w, domain):
            r = (q[0] + u0 * (w[0] - q[0]), q[1] + u0 * (w[1] - q[1]))
            t = (q[0] + u1 * (w[0] - q[0]), q[1] + u1 * (w[1] - q[1]))
            pieces.append((r, t))
    return pieces


def _assemble(segments):
    verts: list = []
    edges = []
    for a, b in segments:
        verts.append(a)
        verts.append(b)
        edges.append((len(verts) - 2, len(verts) - 1))
    return SigmaNetwork(tuple(verts), tuple(edges))


def _comb_candidate(domain, angle, n_teeth, spine_frac, positions, budget,
                    interior_only=True):
    """Parallel teeth at the given normal offsets (or n_teeth equispaced)
    plus one spine chord; None if infeasible or disconnected."""
    dirv = (math.cos(angle), math.sin(angle))
    nrm = (-math.sin(angle), math.cos(angle))
    xlo, ylo, xhi, yhi = domain.bbox
    corners = ((xlo, ylo), (xhi, ylo), (xhi, yhi), (xlo, yhi))
    cvals = [c[0] * nrm[0] + c[1] * nrm[1] for c in corners]
    evals = [c[0] * dirv[0] + c[1] * dirv[1] for c in corners]
    c0, c1 = min(cvals), max(cvals)
    e0, e1 = min(evals), max(evals)
    span = math.hypot(xhi - xlo, yhi - ylo) + 1.0

    if positions is None:
        if interior_only:
            positions = [c0 + (j + 1) * (c1 - c0) / (n_teeth + 1)
                         for j in range(n_teeth)]
        else:
            positions = [c0 + j * (c1 - c0) / max(n_teeth - 1, 1)
                         for j in range(n_teeth)]
    segments = []
    for c in positions:
        p0 = (c * nrm[0], c * nrm[1])
        segments.extend(_clip_line_to_domain(domain, p0, dirv, span))
    e_spine = e0 + spine_frac * (e1 - e0)
    p0 = (e_spine * dirv[0], e_spine * dirv[1])
    spine = []
    for t0, t1 in _segment_domain_intervals(
            (p0[0] - span * nrm[0], p0[1] - span * nrm[1]),
            (p0[0] + span * nrm[0], p0[1] + span * nrm[1]), domain):
        a = (p0[0] + (2 * t0 - 1) * span * nrm[0], p0[1] + (2 * t0 - 1) * span * nrm[1])
        b = (p0[0] + (2 * t1 - 1) * span * nrm[0], p0[1] + (2 * t1 - 1) * span * nrm[1])
        spine.append((a, b))
    segments.extend(spine)
    if not segments:
        return None
    total = sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in segments)
    if total > budget + 1e-12 or total <= 0:
        return None
    try:
        return _assemble(segments)
    except NetworkError:
        return None


def _tiny_candidates(domain, budget):
    """Degenerate networks for very small budgets: a short segment or cross
    at the current max-distance point."""
    arg = max_distance(domain, None, 1e-3).argmax
    out = []
    ell = budget / 2
    for dx, dy in ((1, 0), (0, 1)):
        a = (arg[0] - ell * dx, arg[1] - ell * dy)
        b = (arg[0] + ell * dx, arg[1] + ell * dy)
        pieces = []
        for t0, t1 in _segment_domain_intervals(a, b, domain):
            pieces.append(((a[0] + t0 * (b[0] - a[0]), a[1] + t0 * (b[1] - a[1])),
                           (a[0] + t1 * (b[0] - a[0]), a[1] + t1 * (b[1] - a[1]))))
        try:
            cand = _assemble(pieces)
            if cand.length <= budget + 1e-12:
                out.append(cand)
        except NetworkError:
            pass
    if not out:
        out.append(SigmaNetwork((arg,), ()))
    return out


def _comb_family(domain, budget, rng, extra_angles=2):
    """Structured candidate list under the budget."""
    cands = []
    angles = [math.pi / 2, 0.0, math.pi / 4]
    angles += [float(rng.uniform(0.1, math.pi)) for _ in range(extra_angles)]
    k_cap = int(math.ceil(budget * 8)) + 8
    for ai, angle in enumerate(angles):
        fracs = (0.0, 0.5) if ai < 2 else (0.25, 0.5)
        for spine_frac in fracs:
            for interior_only in (True, False):
                # largest feasible tooth count, then a couple below it
                k_hi = None
                k = 1
                while k < k_cap:
                    c = _comb_candidate(domain, angle, k, spine_frac, None,
                                        budget, interior_only)
                    if c is None:
                        break
                    k_hi = k
                    k += 1
                if k_hi is None:
                    continue
                for kk in {k_hi, max(k_hi - 1, 1), max(k_hi - 2, 1)}:
                    c = _comb_candidate(domain, angle, kk, spine_frac, None,
                                        budget, interior_only)
                    if c is not None:
                        cands.append(c)
    if not cands:
        cands = _tiny_candidates(domain, budget)
    return cands


def _quantile_curve(domain, density, axis, resolution=256):
    """Cumulative axis marginal of the density, for quantile tooth placement."""
    pts, wts = domain_quadrature(domain, resolution)
    coord = pts[:, 0] if axis == 'x' else pts[:, 1]
    mass = np.asarray(density(pts[:, 0], pts[:, 1]), float) * wts
    order = np.argsort(coord)
    coord, mass = coord[order], mass[order]
    cum = np.cumsum(mass)
    cum /= cum[-1]
    return cum, coord


def _axis_offsets(axis_positions, axis, angle):
    """Convert axis coordinates of teeth into normal offsets for the angle."""
    nrm = (-math.sin(angle), math.cos(angle))
    if axis == 'x':
        return [q * nrm[0] for q in axis_positions]
    return [q * nrm[1] for q in axis_positions]


def _adapted_candidates(domain, budget, rho, sigma_coef, p, tile_cell_side):
    """Density-adapted combs (quantile tooth positions) plus, when feasible,
    the periodic tiling of the optimal density."""
    density = optimal_density(rho, sigma_coef, p if not math.isinf(p) else math.inf,
                              domain)
    cands = []
    k_cap = int(math.ceil(budget * 8)) + 8
    for axis, angle in (('x', math.pi / 2), ('y', 0.0)):
        cum, coord = _quantile_curve(domain, density, axis)

        def positions(k):
            qs = [float(np.interp((j + 1) / (k + 1), cum, coord))
                  for j in range(k)]
            return _axis_offsets(qs, axis, angle)

        for spine_frac in (0.0, 0.5):
            k_hi = None
            k = 1
            while k < k_cap:
                c = _comb_candidate(domain, angle, k, spine_frac, positions(k),
                                    budget)
                if c is None:
                    break
                k_hi = k
                k += 1
            if k_hi is not None:
                for kk in {k_hi, max(k_hi - 1, 1)}:
                    c = _comb_candidate(domain, angle, kk, spine_frac,
                                        positions(kk), budget)
                    if c is not None:
                        cands.append(c)
    try:
        fitted = fit_measure_to_grid(density, tile_cell_side, domain)
        cands.append(build_tiled_sigma(budget, fitted, unit_tile(1), domain))
    except (ValueError, NetworkError):
        pass
    return cands


# ---------------------------------------------------------------------------
# annealing
# ---------------------------------------------------------------------------

def _perturb(sigma: SigmaNetwork, rng, step, domain, budget):
    """One random move: vertex slide / spur add / spur remove / edge split.
    Returns a new network or None when the move is invalid."""
    verts = [list(v) for v in sigma.vertices]
    edges = [tuple(e) for e in sigma.edges]
    u = rng.uniform()
    try:
        if u < 0.60 and verts:
            k = int(rng.integers(0, len(verts)))
            verts[k][0] += rng.normal(0.0, step)
            verts[k][1] += rng.normal(0.0, step)
            if not domain.contains_point(verts[k][0], verts[k][1]):
                return None
        elif u < 0.725 and edges:
            # spur add: new leaf from a random point on an edge
            ei = int(rng.integers(0, len(edges)))
            i, j = edges[ei]
            t = rng.uniform(0.2, 0.8)
            base = (verts[i][0] + t * (verts[j][0] - verts[i][0]),
                    verts[i][1] + t * (verts[j][1] - verts[i][1]))
            ang = rng.uniform(0, 2 * math.pi)
            ell = rng.uniform(0.5, 1.5) * step
            tip = (base[0] + ell * math.cos(ang), base[1] + ell * math.sin(ang))
            if not domain.contains_point(*tip):
                return None
            verts.append(list(base))
            verts.append(list(tip))
            edges[ei] = (i, len(verts) - 2)
            edges.append((len(verts) - 2, j))
            edges.append((len(verts) - 2, len(verts) - 1))
        elif u < 0.85:
            # spur remove: drop a leaf edge
            deg = {}
            for i, j in edges:
                deg[i] = deg.get(i, 0) + 1
                deg[j] = deg.get(j, 0) + 1
            leaves = [k for k, (i, j) in enumerate(edges)
                      if deg[i] == 1 or deg[j] == 1]
            if len(leaves) <= 1:
                return None
            edges.pop(int(leaves[int(rng.integers(0, len(leaves)))]))
        elif edges:
            # edge split: insert a midpoint vertex (enables future slides)
            ei = int(rng.integers(0, len(edges)))
            i, j = edges[ei]
            mid = ((verts[i][0] + verts[j][0]) / 2, (verts[i][1] + verts[j][1]) / 2)
            verts.append(list(mid))
            edges[ei] = (i, len(verts) - 1)
            edges.append((len(verts) - 1, j))
        used = sorted({i for e in edges for i in e}) or [0]
        remap = {old: new for new, old in enumerate(used)}
        net = SigmaNetwork(tuple(tuple(verts[i]) for i in used),
                           tuple((remap[i], remap[j]) for i, j in edges))
        if net.length > budget + 1e-12:
            return None
        return net
    except (NetworkError, IndexError):
        return None


def _anneal(domain, init, objective, rng, budget, evals_left, maximize,
            cooling=0.995):
    """Simulated annealing; the probe phase sets the start temperature so
    that about half of the first moves would be accepted."""
    cur = init
    cur_val = objective(cur)
    evals = 1
    best, best_val = cur, cur_val
    history = [(0, best_val)]
    sign = 1.0 if maximize else -1.0
    step = max(budget, 1.0) / max(math.sqrt(evals_left), 1.0) * 0.05

    probe = []
    state = cur
    while evals < min(evals_left, 100) and len(probe) < 30:
        cand = _perturb(state, rng, step, domain, budget)
        if cand is None:
            continue
        v = objective(cand)
        evals += 1
        probe.append(abs(v - cur_val))
        if sign * (v - best_val) > 0:
            best, best_val = cand, v
        history.append((evals, best_val))
    temp = (np.median(probe) / math.log(2) if probe else 1.0) or 1.0

    k = 0
    while evals < evals_left:
        cand = _perturb(cur, rng, step, domain, budget)
        k += 1
        temp_k = temp * cooling ** k
        if cand is None:
            continue
        v = objective(cand)
        evals += 1
        delta = sign * (v - cur_val)
        if delta >= 0 or rng.uniform() < math.exp(delta / max(temp_k, 1e-12)):
            cur, cur_val = cand, v
            if sign * (v - best_val) > 0:
                best, best_val = cand, v
        history.append((evals, best_val))
    return best, best_val, evals, history


# ---------------------------------------------------------------------------
# budget post-processing
# ---------------------------------------------------------------------------

def _top_up_length(sigma: SigmaNetwork, domain: Domain, budget: float):
    """Append short axis-aligned hair segments toward the max-distance point
    until the network uses at least 98% of the budget."""
    for _ in range(64):
        if sigma.length >= 0.98 * budget:
            return sigma
        room = budget - sigma.length
        if room <= 1e-9:
            return sigma
        arg = max_distance(domain, sigma, 1e-3).argmax
        segs = sigma.segments
        if len(segs):
            from .geometry import point_segment_distance
            d = point_segment_distance(arg[0], arg[1], segs[:, 0], segs[:, 1],
                                       segs[:, 2], segs[:, 3])
            k = int(np.argmin(d))
            ax, ay, bx, by = segs[k]
            abx, aby = bx - ax, by - ay
            den = abx * abx + aby * aby
            t = ((arg[0] - ax) * abx + (arg[1] - ay) * aby) / den
            t = min(max(t, 0.0), 1.0)
            q = (ax + t * abx, ay + t * aby)
        else:
            q = sigma.vertices[0]
        hairs = []
        rem = min(room, abs(arg[0] - q[0]) + abs(arg[1] - q[1]))
        if rem <= 1e-9:
            # argmax equidistant: drop a small cross instead
            ell = min(room / 4, 1e-2)
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                tip = (q[0] + ell * dx, q[1] + ell * dy)
                if domain.contains_point(*tip):
                    hairs.append((q, tip))
        else:
            dx1 = math.copysign(min(abs(arg[0] - q[0]), rem), arg[0] - q[0])
            mid = (q[0] + dx1, q[1])
            if abs(dx1) > 1e-9:
                hairs.append((q, mid))
            rem2 = rem - abs(dx1)
            if rem2 > 1e-9:
                dy1 = math.copysign(min(abs(arg[1] - mid[1]), rem2), arg[1] - mid[1])
                if abs(dy1) > 1e-9:
                    hairs.append((mid, (mid[0], mid[1] + dy1)))
        if not hairs:
            return sigma
        verts = list(sigma.vertices)
        edges = list(sigma.edges)
        for a, b in hairs:
            verts.append(a)
            verts.append(b)
            edges.append((len(verts) - 2, len(verts) - 1))
        try:
            sigma = SigmaNetwork(tuple(verts), tuple(edges))
        except NetworkError:
            return sigma
    return sigma


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def _run_optimization(domain, budget, strategy, seed, eval_budget, objective,
                      final_objective, maximize, adapted_fn, objective_name):
    if budget <= 0:
        raise InfeasibleError("budget must be positive")
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    rng = np.random.default_rng(seed)
    sign = 1.0 if maximize else -1.0

    history: list[tuple[int, float]] = []
    evals = 0
    best, best_val = None, None

    def consider(cand):
        nonlocal best, best_val, evals
        if evals >= eval_budget:
            return False
        v = objective(cand)
        evals += 1
        if best is None or sign * (v - best_val) > 0:
            best, best_val = cand, v
        history.append((evals, best_val))
        return True

    cands = []
    if strategy in ('comb-family', 'anneal', 'portfolio'):
        cands.extend(_comb_family(domain, budget, rng))
    if strategy in ('adapted-tiling', 'portfolio'):
        adapted = adapted_fn()
        if not adapted:   # infeasible tiling budget: fall back
            adapted = _comb_family(domain, budget, rng)
        cands.extend(adapted)
    exhausted = False
    for cand in cands:
        if not consider(cand):
            exhausted = True
            break

    if strategy in ('anneal', 'portfolio') and evals < eval_budget and best is not None:
        b, v, used, hist = _anneal(domain, best, objective, rng, budget,
                                   eval_budget - evals, maximize)
        history.extend((evals + i, max(bv, best_val) if maximize else min(bv, best_val))
                       for i, bv in hist)
        evals += used
        if sign * (v - best_val) > 0:
            best, best_val = b, v

    if best is None:
        raise InfeasibleError("no feasible candidate under the budget")

    best = _top_up_length(best, domain, budget)
    final_val = final_objective(best)
    history.append((evals, final_val))
    return OptimizationReport(best, final_val, objective_name, evals,
                              tuple(history), seed, budget,
                              strategy, exhausted)


def maximize_lambda(domain: Domain, rho: CoefficientField | None,
                    sigma_coef: CoefficientField | None, p: float, budget: float,
                    strategy: str = 'portfolio', seed: int = 0,
                    eval_budget: int = 60, h_search: float = 1 / 64,
                    h_final: float = 1 / 128,
                    tile_cell_side: float = 0.5) -> OptimizationReport:
    """Search for the network maximizing the first p-eigenvalue under the
    length budget; candidate objectives are evaluated at h_search, the
    returned report value at h_final."""
    rho = rho or CoefficientField.constant(1.0)
    sigma_coef = sigma_coef or CoefficientField.constant(1.0)

    def lam(sigma, h):
        if p == 2.0:
            return lambda2(domain, sigma, rho, sigma_coef, h=h).eigenvalue
        return lambda_p(domain, sigma, rho, sigma_coef, p=p, h=h).eigenvalue

    return _run_optimization(
        domain, budget, strategy, seed, eval_budget,
        objective=lambda s: lam(s, h_search),
        final_objective=lambda s: lam(s, h_final),
        maximize=True,
        adapted_fn=lambda: _adapted_candidates(domain, budget, rho, sigma_coef,
                                               p, tile_cell_side),
        objective_name=f'eigen-{p:g}')


def minimize_maxdist(domain: Domain, budget: float, strategy: str = 'portfolio',
                     seed: int = 0, eval_budget: int = 120,
                     tolerance: float = 1e-4) -> OptimizationReport:
    """Search for the network minimizing the maximum distance to
    (network U boundary) under the length budget."""
    one = CoefficientField.constant(1.0)

    def obj(sigma):
        return max_distance(domain, sigma, tolerance).max_distance

    return _run_optimization(
        domain, budget, strategy, seed, eval_budget,
        objective=obj, final_objective=obj, maximize=False,
        adapted_fn=lambda: _adapted_candidates(domain, budget, one, one,
                                               math.inf, 0.5),
        objective_name='maxdist')


def certify(report: OptimizationReport, domain: Domain, p) -> Certificate:
    """Attach the closed-form certificate: for eigenvalue reports the length
    upper bound (gap = bound/achieved >= 1), for max-distance reports the
    saturation-radius lower bound (gap = bound/achieved <= 1)."""
    if report.objective == 'maxdist' or p in ('inf', math.inf):
        ctx = LengthBoundContext.from_config(domain, report.best)
        return Certificate(report.best_value, ctx.tbar,
                           ctx.tbar / report.best_value)
    bound = eigenvalue_upper_bound(domain, report.best, float(p))
    return Certificate(report.best_value, bound, bound / report.best_value)
