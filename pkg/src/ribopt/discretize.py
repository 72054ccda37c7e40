"""Uniform-grid discretization of (domain minus network) with Dirichlet node
classification, the geometric substrate for the eigensolvers."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

from .geometry import Domain, SigmaNetwork, distance_to_network

INTERIOR, DIRICHLET, EXTERIOR = 0, 1, 2


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class GridDiscretization:
    """Axis-aligned node lattice covering the domain box plus one pad layer.

    Node (i, j) sits at (origin[0] + i*h, origin[1] + j*h). node_class is
    indexed [j, i] (row-major, y first).
    """

    origin: tuple[float, float]
    h: float
    nx: int
    ny: int
    node_class: np.ndarray
    interior_index: np.ndarray
    n_interior: int

    @cached_property
    def node_x(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    @cached_property
    def node_y(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    @cached_property
    def interior_rc(self) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of interior nodes ordered by unknown index."""
        rows, cols = np.nonzero(self.node_class == INTERIOR)
        order = np.argsort(self.interior_index[rows, cols])
        return rows[order], cols[order]

    def full_field(self, u_interior) -> np.ndarray:
        """Scatter interior unknowns into a (ny, nx) field, zero elsewhere."""
        field = np.zeros((self.ny, self.nx))
        r, c = self.interior_rc
        field[r, c] = u_interior
        return field


def _warn_unresolved_pairs(sigma: SigmaNetwork, h: float):
    segs = sigma.segments
    m = len(segs)
    if m < 2 or m > 2000:
        return
    d = segs[:, 2:4] - segs[:, 0:2]
    lens = np.hypot(d[:, 0], d[:, 1])
    d = d / lens[:, None]
    for i in range(m):
        for j in range(i + 1, m):
            if abs(d[i, 0] * d[j, 1] - d[i, 1] * d[j, 0]) > 1e-9:
                continue
            from .geometry import segment_segment_distance
            dist = segment_segment_distance(
                segs[i, 0:2], segs[i, 2:4], segs[j, 0:2], segs[j, 2:4])
            if 1e-12 < dist < 4 * h:
                warnings.warn(
                    f"parallel network segments {dist:.4g} apart are not "
                    f"resolved by spacing h={h:.4g} (need h < d/4)",
                    RuntimeWarning)
                return


def discretize(domain: Domain, sigma: SigmaNetwork | None, h: float,
               band_factor: float = 0.5) -> GridDiscretization:
    """Classify lattice nodes as INTERIOR / DIRICHLET / EXTERIOR.

    Nodes outside the closed domain are EXTERIOR; nodes inside within
    band_factor*h of (network union boundary) are DIRICHLET.
    """
    if h <= 0:
        raise ValueError("spacing must be positive")
    xlo, ylo, xhi, yhi = domain.bbox
    x0, y0 = xlo - h, ylo - h
    nx = int(math.ceil((xhi - x0) / h - 1e-12)) + 2
    ny = int(math.ceil((yhi - y0) / h - 1e-12)) + 2
    xs = x0 + h * np.arange(nx)
    ys = y0 + h * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])

    inside = domain.contains(pts).reshape(ny, nx)
    dist = distance_to_network(pts, sigma, domain).reshape(ny, nx)

    cls = np.full((ny, nx), EXTERIOR, dtype=np.uint8)
    cls[inside] = INTERIOR
    cls[inside & (dist <= band_factor * h + 1e-15)] = DIRICHLET

    interior_index = np.full((ny, nx), -1, dtype=np.int64)
    mask = cls == INTERIOR
    n_int = int(mask.sum())
    if n_int < 1:
        raise ResolutionError("resolution too coarse: no interior node survives")
    interior_index[mask] = np.arange(n_int)

    if sigma is not None:
        _warn_unresolved_pairs(sigma, h)

    return GridDiscretization((float(x0), float(y0)), float(h), nx, ny,
                              cls, interior_index, n_int)


def connected_components(grid: GridDiscretization) -> list[np.ndarray]:
    """4-neighbor components of interior nodes, as arrays of unknown indices."""
    mask = grid.node_class == INTERIOR
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels, n = ndimage.label(mask, structure=structure)
    comps = []
    for k in range(1, n + 1):
        rows, cols = np.nonzero(labels == k)
        comps.append(np.sort(grid.interior_index[rows, cols]))
    return comps


def sublevel_area(domain: Domain, sigma: SigmaNetwork | None, t: float,
                  h: float) -> float:
    """Grid measure of {x in domain : dist(x, network U boundary) < t}."""
    if t <= 0:
        return 0.0
    xlo, ylo, xhi, yhi = domain.bbox
    nx = int(round((xhi - xlo) / h))
    ny = int(round((yhi - ylo) / h))
    nx, ny = max(nx, 1), max(ny, 1)
    hx, hy = (xhi - xlo) / nx, (yhi - ylo) / ny
    cx = xlo + hx * (np.arange(nx) + 0.5)
    cy = ylo + hy * (np.arange(ny) + 0.5)
    X, Y = np.meshgrid(cx, cy)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = domain.contains(pts)
    d = distance_to_network(pts[inside], sigma, domain)
    return float(np.count_nonzero(d < t) * hx * hy)


def dump_raster(grid: GridDiscretization, stream, field: np.ndarray | None = None):
    """Write `rows cols h x0 y0` then row-major values (class codes or field)."""
    data = grid.node_class if field is None else np.asarray(field)
    stream.write(f"{grid.ny} {grid.nx} {grid.h!r} {grid.origin[0]!r} {grid.origin[1]!r}\n")
    for row in data:
        if field is None:
            stream.write(" ".join(str(int(v)) for v in row) + "\n")
        else:
            stream.write(" ".join(f"{v:.12g}" for v in row) + "\n")
