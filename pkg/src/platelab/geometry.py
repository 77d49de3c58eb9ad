"""Analytic domains, uniform grids, interior masks, erosion and C2 cutoffs.

Domains carry an exact signed Euclidean distance function (negative inside).
Clamped boundary conditions are realized downstream by zero extension: every
stencil read outside the interior mask returns 0, which enforces u = 0 and,
at stencil order, du/dn = 0 on the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BandUnresolved, EmptyErosion, GridTooCoarse


@dataclass(frozen=True)
class AnalyticDomain:
    """A 2D domain described by an exact signed distance function.

    ``sdf`` is vectorized over coordinate arrays and 1-Lipschitz in the
    Euclidean norm; ``bbox`` is (xmin, xmax, ymin, ymax) containing {sdf <= 0}.
    """

    kind: str
    params: dict
    sdf: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bbox: tuple
    inradius: float


def disk(radius: float) -> AnalyticDomain:
    r = float(radius)
    if r <= 0:
        raise ValueError("disk radius must be positive")

    def sdf(x, y):
        return np.hypot(x, y) - r

    return AnalyticDomain("disk", {"radius": r}, sdf, (-r, r, -r, r), r)


def rectangle(width: float, height: float) -> AnalyticDomain:
    w, ht = float(width), float(height)
    if w <= 0 or ht <= 0:
        raise ValueError("rectangle sides must be positive")
    hx, hy = w / 2.0, ht / 2.0

    def sdf(x, y):
        qx = np.abs(x) - hx
        qy = np.abs(y) - hy
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return outside + inside

    return AnalyticDomain(
        "rectangle", {"width": w, "height": ht}, sdf, (-hx, hx, -hy, hy), min(hx, hy)
    )


def superellipse(a: float, b: float, p: float, n_boundary: int = 4096) -> AnalyticDomain:
    """|x/a|^p + |y/b|^p = 1 boundary; distance via a dense boundary polyline."""
    a, b, p = float(a), float(b), float(p)
    if p < 2:
        raise ValueError("superellipse exponent must be >= 2")
    t = np.linspace(0.0, 2.0 * np.pi, n_boundary, endpoint=False)
    ct, st = np.cos(t), np.sin(t)
    bx = a * np.sign(ct) * np.abs(ct) ** (2.0 / p)
    by = b * np.sign(st) * np.abs(st) ** (2.0 / p)
    pts = np.column_stack([bx, by])
    seg_a = pts
    seg_b = np.roll(pts, -1, axis=0)
    seg_d = seg_b - seg_a
    seg_len2 = np.maximum(np.sum(seg_d**2, axis=1), 1e-300)

    def sdf(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shp = np.broadcast(x, y).shape
        q = np.column_stack([np.ravel(np.broadcast_to(x, shp)),
                             np.ravel(np.broadcast_to(y, shp))])
        dist = np.empty(q.shape[0])
        # chunked point-to-polyline distance
        for lo in range(0, q.shape[0], 2048):
            qc = q[lo:lo + 2048]
            w = qc[:, None, :] - seg_a[None, :, :]
            s = np.clip(np.einsum("qsk,sk->qs", w, seg_d) / seg_len2, 0.0, 1.0)
            proj = seg_a[None, :, :] + s[..., None] * seg_d[None, :, :]
            d2 = np.sum((qc[:, None, :] - proj) ** 2, axis=2)
            dist[lo:lo + 2048] = np.sqrt(d2.min(axis=1))
        lvl = (np.abs(q[:, 0] / a) ** p + np.abs(q[:, 1] / b) ** p) - 1.0
        out = np.where(lvl < 0.0, -dist, dist)
        return out.reshape(shp) if shp else float(out[0])

    return AnalyticDomain(
        "superellipse", {"a": a, "b": b, "p": p}, sdf, (-a, a, -b, b), min(a, b)
    )


def _offset(base: AnalyticDomain, eps: float) -> AnalyticDomain:
    xmin, xmax, ymin, ymax = base.bbox

    def sdf(x, y):
        return base.sdf(x, y) + eps

    return AnalyticDomain(
        "offset", {"base": base.kind, "eps": eps, **base.params}, sdf,
        (xmin + eps, xmax - eps, ymin + eps, ymax - eps), base.inradius - eps
    )


def erode(domain: AnalyticDomain, eps: float) -> AnalyticDomain:
    """Erosion {d > eps}; for these convex/star kinds the sdf shifts by eps."""
    eps = float(eps)
    if eps <= 0:
        raise ValueError("erosion width must be positive")
    if eps >= domain.inradius:
        raise EmptyErosion(f"eps={eps} >= inradius={domain.inradius}")
    if domain.kind == "disk":
        return disk(domain.params["radius"] - eps)
    if domain.kind == "rectangle":
        return rectangle(domain.params["width"] - 2 * eps,
                         domain.params["height"] - 2 * eps)
    return _offset(domain, eps)


@dataclass(frozen=True)
class Grid:
    """Uniform node lattice: node(i, j) = origin + (j*h, i*h)."""

    h: float
    origin: tuple
    nx: int
    ny: int

    def xs(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    def meshgrid(self):
        return np.meshgrid(self.xs(), self.ys(), indexing="xy")

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny


@dataclass(frozen=True)
class GridMask:
    """Strictly interior nodes (sdf < 0) and the dof <-> node index maps."""

    interior: np.ndarray          # bool, shape (ny, nx)
    dof_of_node: np.ndarray       # int, shape (ny, nx), -1 outside
    node_of_dof: np.ndarray       # int, shape (count, 2) as (iy, ix)
    count: int


def build_grid(domain: AnalyticDomain, h: float, min_interior: int = 25):
    """Lattice covering the bbox (one halo ring) plus the interior mask."""
    if h <= 0:
        raise ValueError("grid spacing must be positive")
    xmin, xmax, ymin, ymax = domain.bbox
    i0 = int(np.floor(xmin / h)) - 1
    i1 = int(np.ceil(xmax / h)) + 1
    j0 = int(np.floor(ymin / h)) - 1
    j1 = int(np.ceil(ymax / h)) + 1
    nx, ny = i1 - i0 + 1, j1 - j0 + 1
    if nx < 3 or ny < 3:
        raise GridTooCoarse("fewer than 3 nodes per axis")
    grid = Grid(h=float(h), origin=(i0 * h, j0 * h), nx=nx, ny=ny)
    X, Y = grid.meshgrid()
    interior = domain.sdf(X, Y) < 0.0
    count = int(interior.sum())
    if count < min_interior:
        raise GridTooCoarse(f"only {count} interior nodes (need {min_interior})")
    dof_of_node = np.full((ny, nx), -1, dtype=np.int64)
    iy, ix = np.nonzero(interior)
    dof_of_node[iy, ix] = np.arange(count)
    node_of_dof = np.column_stack([iy, ix])
    return grid, GridMask(interior, dof_of_node, node_of_dof, count)


def smoothstep(t):
    """Quintic smoothstep 6t^5 - 15t^4 + 10t^3, clamped to [0, 1]; C2 at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


@dataclass(frozen=True)
class CutoffField:
    """Grid samples of the C2 cutoff tau with measured derivative bounds."""

    tau: np.ndarray       # (ny, nx), in [0, 1]
    epsilon: float
    grad_bound: float     # measured sup |grad tau|
    hess_bound: float     # measured sup |hess tau| (Frobenius)

    @property
    def grad_constant(self) -> float:
        """C in |grad tau| <= C / eps."""
        return self.grad_bound * self.epsilon

    @property
    def hess_constant(self) -> float:
        """C in |hess tau| <= C / eps^2."""
        return self.hess_bound * self.epsilon**2


def build_cutoff(grid: Grid, dist, eps: float) -> CutoffField:
    """tau = smoothstep((d - eps)/eps): 0 where d <= eps, 1 where d >= 2*eps."""
    eps = float(eps)
    if eps < 4.0 * grid.h:
        raise BandUnresolved(f"eps={eps} < 4h={4 * grid.h}")
    d = dist.d
    tau = smoothstep((d - eps) / eps)
    tau = np.where(d > 0.0, tau, 0.0)
    h = grid.h
    tx = (tau[:, 2:] - tau[:, :-2]) / (2 * h)
    ty = (tau[2:, :] - tau[:-2, :]) / (2 * h)
    gmax = float(np.sqrt(np.max(tx[1:-1, :] ** 2 + ty[:, 1:-1] ** 2)))
    txx = (tau[:, 2:] - 2 * tau[:, 1:-1] + tau[:, :-2]) / h**2
    tyy = (tau[2:, :] - 2 * tau[1:-1, :] + tau[:-2, :]) / h**2
    txy = (tau[2:, 2:] + tau[:-2, :-2] - tau[2:, :-2] - tau[:-2, 2:]) / (4 * h**2)
    hmax = float(np.sqrt(np.max(
        txx[1:-1, :] ** 2 + tyy[:, 1:-1] ** 2 + 2.0 * txy**2)))
    return CutoffField(tau=tau, epsilon=eps, grad_bound=gmax, hess_bound=hmax)
