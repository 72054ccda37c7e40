"""First Dirichlet eigenvalues of the weighted p-Laplacian on a grid
discretization of (domain minus network).

p = 2 uses a 5-point generalized sparse eigenproblem (inverse power
iteration with sparse LU inner solves and adaptive spectral shifts).
General p > 1 minimizes the discrete Rayleigh quotient

    sum_cells sigma_c * |grad u|_c^p * h^2  /  sum_nodes rho_i * |u_i|^p * h^2

by Barzilai-Borwein gradient descent on the log-quotient with a
non-monotone Armijo safeguard. The eigenvalue splits over connected
components, so every component is solved and the minimum returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy import sparse
from scipy.sparse import linalg as spla

from .geometry import CoefficientField, Domain, SigmaNetwork
from .discretize import GridDiscretization, INTERIOR, connected_components, discretize
from .maxdist import max_distance

RESIDUAL_TOL = 1e-8
MAX_OUTER = 500


class SolverError(RuntimeError):
    pass


@dataclass
class EigenResult:
    eigenvalue: float
    eigenfunction: np.ndarray      # full (ny, nx) field, zero off the support
    residual: float
    iterations: int
    h: float
    component_id: int
    converged: bool = True
    grid: GridDiscretization | None = None


def _const_field(f):
    return f if f is not None else CoefficientField.constant(1.0)


# ---------------------------------------------------------------------------
# p = 2: sparse generalized eigenproblem
# ---------------------------------------------------------------------------

def _assemble_component(grid: GridDiscretization, comp_idx, rho, sigma_coef):
    """5-point stiffness (edge-midpoint sigma) and lumped mass (node rho)."""
    h = grid.h
    r_all, c_all = grid.interior_rc
    rows, cols = r_all[comp_idx], c_all[comp_idx]
    local = -np.ones(grid.n_interior, dtype=np.int64)
    local[comp_idx] = np.arange(len(comp_idx))
    xs, ys = grid.node_x, grid.node_y

    I, J, V = [], [], []
    diag = np.zeros(len(comp_idx))
    for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        nr, nc = rows + dr, cols + dc
        mx = xs[cols] + 0.5 * dc * h
        my = ys[rows] + 0.5 * dr * h
        sig = np.asarray(sigma_coef(mx, my), float)
        diag += sig
        nbr_interior = grid.node_class[nr, nc] == INTERIOR
        gi = grid.interior_index[nr[nbr_interior], nc[nbr_interior]]
        li = local[gi]
        own = np.nonzero(nbr_interior)[0]
        keep = li >= 0   # neighbor inside this component
        I.extend(own[keep])
        J.extend(li[keep])
        V.extend(-sig[nbr_interior][keep])
    n = len(comp_idx)
    K = sparse.coo_matrix((V, (I, J)), shape=(n, n)).tocsr()
    K += sparse.diags(diag)
    m = np.asarray(rho(xs[cols], ys[rows]), float) * h * h
    return K.tocsc(), m


def _smallest_eigenpair(K, m, tol=RESIDUAL_TOL, max_outer=MAX_OUTER):
    """Inverse power iteration with sparse LU solves; spectral shifts are
    tightened adaptively when the eigenvalue gap is small."""
    n = K.shape[0]
    if n == 1:
        lam = float(K[0, 0]) / float(m[0])
        return lam, np.ones(1), 0.0, 1
    if n <= 200:
        Kd = K.toarray()
        w, v = sla.eigh(Kd, np.diag(m))
        lam, u = float(w[0]), v[:, 0]
        res = np.linalg.norm(Kd @ u - lam * m * u) / np.linalg.norm(m * u)
        return lam, u, float(res), 1
    u = np.ones(n)
    u /= math.sqrt(float(u @ (m * u)))
    shift = 0.0
    lu = spla.splu(K)
    lam = float(u @ (K @ u))
    it = 0
    while it < max_outer:
        it += 1
        w = lu.solve(m * u)
        nw = math.sqrt(float(w @ (m * w)))
        if not np.isfinite(nw) or nw == 0:
            raise SolverError("inverse iteration broke down")
        u = w / nw
        lam = float(u @ (K @ u))
        res = np.linalg.norm(K @ u - lam * (m * u)) / np.linalg.norm(m * u)
        if res <= tol:
            if u.sum() < 0:
                u = -u
            return lam, u, float(res), it
        # tighten the shift every 8 iterations once the estimate settles
        if it % 8 == 0:
            new_shift = lam * (1 - 10.0 ** (-1 - it // 8))
            if new_shift > shift:
                shift = new_shift
                lu = spla.splu((K - shift * sparse.diags(m)).tocsc())
    raise SolverError(
        f"eigen iteration did not reach residual {tol} in {max_outer} "
        f"iterations (last residual {res:.3e}, value {lam:.6g})")


def lambda2(domain: Domain, sigma: SigmaNetwork | None,
            rho: CoefficientField | None = None,
            sigma_coef: CoefficientField | None = None,
            h: float = 1 / 64, grid: GridDiscretization | None = None) -> EigenResult:
    """Smallest eigenvalue of the weighted 5-point Laplacian, minimum over
    connected components of the discretization."""
    rho, sigma_coef = _const_field(rho), _const_field(sigma_coef)
    if grid is None:
        grid = discretize(domain, sigma, h)
    rho.check_positive(domain.bbox)
    sigma_coef.check_positive(domain.bbox)
    comps = connected_components(grid)
    best = None
    total_it = 0
    for cid, comp in enumerate(comps):
        if len(comp) == 0:
            continue
        K, m = _assemble_component(grid, comp, rho, sigma_coef)
        lam, u, res, it = _smallest_eigenpair(K, m)
        total_it += it
        if best is None or lam < best[0]:
            best = (lam, u, res, cid, comp)
    if best is None:
        raise SolverError("no non-empty component")
    lam, u, res, cid, comp = best
    if u.min() < -1e-8 * max(u.max(), 1e-300):
        raise SolverError("first eigenfunction changed sign")
    # normalize: h^2 * sum rho * u^2 = 1
    r_all, c_all = grid.interior_rc
    rows, cols = r_all[comp], c_all[comp]
    w = np.asarray(rho(grid.node_x[cols], grid.node_y[rows]), float)
    u = u / math.sqrt(float((w * u * u).sum()) * grid.h ** 2)
    uf = np.zeros(grid.n_interior)
    uf[comp] = u
    return EigenResult(lam, grid.full_field(uf), res, total_it, grid.h, cid,
                       True, grid)


# ---------------------------------------------------------------------------
# general p: Rayleigh quotient descent
# ---------------------------------------------------------------------------

def _cell_data(grid: GridDiscretization, rho, sigma_coef, support=None):
    """Active cells and node weights for the p-quotient.

    The cell gradient uses forward differences anchored at the lower-left
    corner, so the discrete energy has no spurious kernel and reduces to
    the 5-point form at p = 2. A cell is active when any node it touches
    is interior.
    """
    cls = grid.node_class == INTERIOR
    if support is not None:
        cls = cls & support
    corner = cls[:-1, :-1] | cls[:-1, 1:] | cls[1:, :-1]
    xs, ys = grid.node_x, grid.node_y
    cxm = 0.5 * (xs[:-1] + xs[1:])
    cym = 0.5 * (ys[:-1] + ys[1:])
    CX, CY = np.meshgrid(cxm, cym)
    sig = np.asarray(sigma_coef(CX, CY), float)
    rho_n = np.asarray(rho(*np.meshgrid(xs, ys)), float)
    return corner, sig, rho_n, cls


def _p_quotient(U, h, p, corner, sig, rho_n, mask, eps=0.0):
    ux = (U[:-1, 1:] - U[:-1, :-1]) / h
    uy = (U[1:, :-1] - U[:-1, :-1]) / h
    g2 = ux * ux + uy * uy + eps * eps
    num = float((sig * np.where(corner, g2 ** (p / 2), 0.0)).sum()) * h * h
    den = float((rho_n * np.where(mask, np.abs(U) ** p, 0.0)).sum()) * h * h
    return num, den, ux, uy, g2


def _p_grad_logq(U, h, p, corner, sig, rho_n, mask, eps):
    num, den, ux, uy, g2 = _p_quotient(U, h, p, corner, sig, rho_n, mask, eps)
    w = np.where(corner, sig * p * g2 ** (p / 2 - 1), 0.0) * h * h
    gx, gy = w * ux / h, w * uy / h
    dnum = np.zeros_like(U)
    dnum[:-1, 1:] += gx
    dnum[1:, :-1] += gy
    dnum[:-1, :-1] += -gx - gy
    dden = np.where(mask, rho_n * p * np.abs(U) ** (p - 1) * np.sign(U), 0.0) * h * h
    grad = dnum / num - dden / den
    grad[~mask] = 0.0
    return num / den, grad


def _descend_quotient(U0, h, p, corner, sig, rho_n, mask, max_iter=20000):
    """Quasi-Newton descent (L-BFGS line search) on log(quotient); returns
    (value, U, residual, iterations, converged)."""
    eps = 1e-8 / h if p < 2 else 0.0
    U = U0.copy()
    U[~mask] = 0.0
    nrm = np.abs(U).max()
    if nrm == 0:
        raise SolverError("zero initial guess")
    U /= nrm
    rows, cols = np.nonzero(mask)
    shape = U.shape

    def fg(v):
        W = np.zeros(shape)
        W[rows, cols] = v
        q, g = _p_grad_logq(W, h, p, corner, sig, rho_n, mask, eps)
        return math.log(q), g[rows, cols]

    from scipy import optimize
    res = optimize.minimize(
        fg, U[rows, cols], jac=True, method='L-BFGS-B',
        options={'maxiter': max_iter, 'maxfun': 2 * max_iter,
                 'ftol': 1e-14, 'gtol': 1e-10, 'maxcor': 25})
    Uopt = np.zeros(shape)
    Uopt[rows, cols] = res.x
    # report the unregularized quotient at the minimizer
    num, den, *_ = _p_quotient(Uopt, h, p, corner, sig, rho_n, mask)
    q = num / den
    gn = float(np.linalg.norm(res.jac))
    converged = bool(res.success) or res.status == 1  # 1: hit the iter cap
    return q, Uopt, gn, int(res.nit), bool(res.success)


def lambda_p(domain: Domain, sigma: SigmaNetwork | None,
             rho: CoefficientField | None = None,
             sigma_coef: CoefficientField | None = None,
             p: float = 2.0, h: float = 1 / 64, seed: int = 0,
             grid: GridDiscretization | None = None,
             max_iter: int = 20000) -> EigenResult:
    """Discrete first p-eigenvalue via Rayleigh quotient minimization,
    per connected component; restarts from the p = 2 eigenfunction."""
    if p <= 1:
        raise ValueError("lambda_p needs p > 1 (the p = 1 problem reduces to "
                         "the rectangle Cheeger formula only)")
    rho, sigma_coef = _const_field(rho), _const_field(sigma_coef)
    if grid is None:
        grid = discretize(domain, sigma, h)
    rho.check_positive(domain.bbox)
    sigma_coef.check_positive(domain.bbox)
    comps = connected_components(grid)
    rng = np.random.default_rng(seed)
    best = None
    total_it = 0
    r_all, c_all = grid.interior_rc
    for cid, comp in enumerate(comps):
        support = np.zeros_like(grid.node_class, dtype=bool)
        support[r_all[comp], c_all[comp]] = True
        corner, sig, rho_n, mask = _cell_data(grid, rho, sigma_coef, support)
        if p == 2.0:
            init = None
        else:
            K, m = _assemble_component(grid, comp, rho, sigma_coef)
            lam2c, u2, _, _ = _smallest_eigenpair(K, m)
            init = np.zeros((grid.ny, grid.nx))
            init[r_all[comp], c_all[comp]] = np.abs(u2)
        if init is None:
            init = np.zeros((grid.ny, grid.nx))
            init[r_all[comp], c_all[comp]] = rng.uniform(0.2, 1.0, len(comp))
        q, U, res, it, conv = _descend_quotient(
            init, grid.h, p, corner, sig, rho_n, mask, max_iter=max_iter)
        total_it += it
        if best is None or q < best[0]:
            best = (q, U, res, cid, conv, comp)
    if best is None:
        raise SolverError("no non-empty component")
    q, U, res, cid, conv, comp = best
    rows, cols = r_all[comp], c_all[comp]
    w = np.asarray(rho(grid.node_x[cols], grid.node_y[rows]), float)
    scale = (float((w * np.abs(U[rows, cols]) ** p).sum()) * grid.h ** 2) ** (1 / p)
    U = U / scale
    return EigenResult(q, U, res, total_it, grid.h, cid, conv, grid)


def rayleigh_quotient(u, domain: Domain, sigma: SigmaNetwork | None,
                      rho: CoefficientField | None = None,
                      sigma_coef: CoefficientField | None = None,
                      p: float = 2.0, h: float = 1 / 64,
                      grid: GridDiscretization | None = None) -> float:
    """Discrete p-Rayleigh quotient of a given admissible field u.

    u must be a full (ny, nx) node array vanishing off the interior nodes;
    any admissible u upper-bounds the first eigenvalue.
    """
    rho, sigma_coef = _const_field(rho), _const_field(sigma_coef)
    if grid is None:
        grid = discretize(domain, sigma, h)
    U = np.asarray(u, float)
    if U.shape != (grid.ny, grid.nx):
        raise ValueError(f"u must have grid shape {(grid.ny, grid.nx)}")
    corner, sig, rho_n, mask = _cell_data(grid, rho, sigma_coef)
    if np.abs(U[~mask]).max(initial=0.0) > 1e-9 * max(np.abs(U).max(), 1e-300):
        raise ValueError("u must vanish on Dirichlet and exterior nodes")
    U = np.where(mask, U, 0.0)
    num, den, *_ = _p_quotient(U, grid.h, p, corner, sig, rho_n, mask)
    if den <= 0:
        raise ValueError("u must not vanish identically")
    return num / den


def lambda_infinity(domain: Domain, sigma: SigmaNetwork | None,
                    tolerance: float = 1e-4) -> float:
    """Reciprocal of the maximum distance to (network U boundary)."""
    T = max_distance(domain, sigma, tolerance).max_distance
    if T <= 0:
        raise SolverError("distance field vanishes identically")
    return 1.0 / T


def lambda_1d(p: float, n_nodes: int = 2000, max_iter: int = 40000) -> float:
    """Discrete first Dirichlet p-eigenvalue of the unit interval,
    an oracle independent of the closed form."""
    if p <= 1:
        raise ValueError("p must be > 1")
    if n_nodes < 64:
        raise ValueError("need at least 64 nodes")
    h = 1.0 / (n_nodes + 1)
    x = h * np.arange(1, n_nodes + 1)
    u0 = np.sin(math.pi * x)
    eps = 1e-10 if p < 2 else 0.0

    def fg(v):
        w = np.concatenate([[0.0], v, [0.0]])
        dw = np.diff(w) / h
        a2 = dw * dw + eps * eps
        num = float((a2 ** (p / 2)).sum()) * h
        den = float((np.abs(v) ** p).sum()) * h
        gw = p * a2 ** (p / 2 - 1) * dw
        dnum = (gw[:-1] - gw[1:])
        dden = p * np.abs(v) ** (p - 1) * np.sign(v) * h
        return math.log(num / den), dnum / num - dden / den

    from scipy import optimize
    res = optimize.minimize(fg, u0, jac=True, method='L-BFGS-B',
                            options={'maxiter': max_iter, 'maxfun': 2 * max_iter,
                                     'ftol': 1e-15, 'gtol': 1e-11, 'maxcor': 30})
    v = res.x
    w = np.concatenate([[0.0], v, [0.0]])
    dw = np.diff(w) / h
    num = float((np.abs(dw) ** p).sum()) * h
    den = float((np.abs(v) ** p).sum()) * h
    return num / den
