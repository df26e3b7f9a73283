"""Sampled fields on centered square grids, with the shift machinery used
by the quadrature code.

A field lives on the (2m+1)^2 grid over [-L, L]^2 with spacing h = L/m.
Integrals carry the cell weight h^2.  Two interpolation flavors exist on
purpose: bilinear shifts match the splatted-kernel convolution identically,
cubic spline shifts are used where smooth inputs need the extra order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage


class MarginError(ValueError):
    """Field support reaches too close to the grid boundary."""


SUPPORT_REL_TOL = 1e-9


@dataclass
class GridField:
    L: float
    h: float
    values: np.ndarray
    boundary_free: bool = False  # stands for a global object (e.g. constant 1)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        m = int(round(self.L / self.h))
        if abs(m * self.h - self.L) > 1e-12 * self.L:
            raise ValueError("L must be an integer multiple of h")
        if self.L < 1.0 + self.h:
            raise ValueError("domain must extend past the unit circle")
        n = 2 * m + 1
        if self.values.shape != (n, n):
            raise ValueError(f"values must be ({n}, {n}), got {self.values.shape}")

    @property
    def m(self) -> int:
        return int(round(self.L / self.h))

    @property
    def size(self) -> int:
        return 2 * self.m + 1

    def axis(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.size)

    def copy_with(self, values: np.ndarray, boundary_free: bool = False) -> "GridField":
        return GridField(self.L, self.h, values, boundary_free)

    def compatible(self, other: "GridField") -> bool:
        return self.size == other.size and abs(self.h - other.h) < 1e-15

    def integral(self) -> float:
        return float(np.sum(self.values)) * self.h ** 2

    def support_radius(self, rel_tol: float = SUPPORT_REL_TOL) -> float:
        """Chebyshev radius of the cells above rel_tol * max |value|."""
        amax = float(np.max(np.abs(self.values)))
        if amax == 0.0:
            return 0.0
        mask = np.abs(self.values) > rel_tol * amax
        idx = np.argwhere(mask)
        m = self.m
        cheb = np.max(np.abs(idx - m))
        return float(cheb) * self.h

    def check_margin(self, clearance: float) -> None:
        """Require support to stay `clearance` away from the boundary."""
        if self.boundary_free:
            return
        if self.support_radius() > self.L - clearance:
            raise MarginError(
                f"support radius {self.support_radius():.4f} leaves less than "
                f"{clearance:.4f} of boundary margin on [-{self.L}, {self.L}]^2")

    def sample_bilinear(self, pts: np.ndarray) -> np.ndarray:
        """Bilinear values at (k, 2) physical coordinates; zero outside."""
        pts = np.asarray(pts, dtype=float)
        gx = (pts[..., 0] + self.L) / self.h
        gy = (pts[..., 1] + self.L) / self.h
        n = self.size
        i0 = np.floor(gx).astype(int)
        j0 = np.floor(gy).astype(int)
        fx = gx - i0
        fy = gy - j0
        out = np.zeros(pts.shape[:-1])
        for di in (0, 1):
            for dj in (0, 1):
                ii = i0 + di
                jj = j0 + dj
                ok = (ii >= 0) & (ii < n) & (jj >= 0) & (jj < n)
                wgt = (fx if di else 1 - fx) * (fy if dj else 1 - fy)
                vals = np.zeros_like(out)
                vals[ok] = self.values[jj[ok], ii[ok]]  # rows are y
                out += wgt * vals
        return out


def field_from_function(L: float, h: float,
                        fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                        boundary_free: bool = False) -> GridField:
    """Sample fn(x, y) at cell centers."""
    m = int(round(L / h))
    ax = np.linspace(-m * h, m * h, 2 * m + 1)
    X, Y = np.meshgrid(ax, ax)  # rows index y
    return GridField(m * h, h, fn(X, Y), boundary_free)


def grid_spacing(L: float, points: int) -> float:
    """Spacing so the grid has `points` samples per axis (rounded odd)."""
    m = (points - 1) // 2
    return L / m


# shifts -------------------------------------------------------------------


def _shift_int(arr: np.ndarray, di: int, dj: int) -> np.ndarray:
    """Integer shift with zero fill: out[j, i] = arr[j - dj, i - di]."""
    out = np.zeros_like(arr)
    n, m = arr.shape
    js = slice(max(dj, 0), n + min(dj, 0))
    is_ = slice(max(di, 0), m + min(di, 0))
    js_src = slice(max(-dj, 0), n + min(-dj, 0))
    is_src = slice(max(-di, 0), m + min(-di, 0))
    out[js, is_] = arr[js_src, is_src]
    return out


def shift_bilinear(f: GridField, dx: float, dy: float) -> np.ndarray:
    """Values of x -> f(x - (dx, dy)) on the same grid, bilinear, zero fill."""
    sx = dx / f.h
    sy = dy / f.h
    i0 = math.floor(sx)
    j0 = math.floor(sy)
    fx = sx - i0
    fy = sy - j0
    a = f.values
    out = np.zeros_like(a)
    for di, wx in ((0, 1 - fx), (1, fx)):
        if wx == 0.0:
            continue
        for dj, wy in ((0, 1 - fy), (1, fy)):
            if wy == 0.0:
                continue
            out += (wx * wy) * _shift_int(a, i0 + di, j0 + dj)
    return out


_CUBIC_MODE = "constant"


def cubic_prefilter(f: GridField) -> np.ndarray:
    """Spline coefficients for repeated order-3 shifted sampling."""
    return ndimage.spline_filter(f.values, order=3, mode=_CUBIC_MODE)


def _bspline3_weights(t: float) -> tuple[float, float, float, float]:
    """Cubic B-spline evaluation weights at taps floor-1..floor+2."""
    s = 1.0 - t
    w0 = s * s * s / 6.0
    w1 = (4.0 - 6.0 * t * t + 3.0 * t * t * t) / 6.0
    w2 = (4.0 - 6.0 * s * s + 3.0 * s * s * s) / 6.0
    w3 = t * t * t / 6.0
    return w0, w1, w2, w3


def shift_cubic(prefiltered: np.ndarray, h: float, dx: float, dy: float) -> np.ndarray:
    """Order-3 spline values of x -> f(x - (dx, dy)); zero outside."""
    sx = dx / h
    sy = dy / h
    i0 = math.floor(sx)
    j0 = math.floor(sy)
    wx = _bspline3_weights(sx - i0)
    wy = _bspline3_weights(sy - j0)
    # separable: filter along x first, then y
    tmp = None
    for k, w in enumerate(wx, start=-1):
        if w == 0.0:
            continue
        part = w * _shift_int(prefiltered, i0 + k, 0)
        tmp = part if tmp is None else tmp + part
    out = None
    for k, w in enumerate(wy, start=-1):
        if w == 0.0:
            continue
        part = w * _shift_int(tmp, 0, j0 + k)
        out = part if out is None else out + part
    return out


# norms and inner products --------------------------------------------------


def lp_norm(f: GridField, p: float) -> float:
    """Discrete L^p norm with cell weight h^2; max norm at p = inf."""
    if p != math.inf and p < 1:
        raise ValueError(f"norm exponent must be >= 1, got {p}")
    a = np.abs(f.values)
    if p == math.inf:
        return float(np.max(a))
    return float(np.sum(a ** p) * f.h ** 2) ** (1.0 / p)


def inner(f: GridField, g_values: np.ndarray) -> float:
    return float(np.sum(f.values * g_values)) * f.h ** 2
