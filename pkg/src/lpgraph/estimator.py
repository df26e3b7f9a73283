"""Discretized evaluation of mollified circle-kernel forms on planar grids.

The kernel is the unit circle measure convolved with a quartic bump of
width epsilon and normalized to total mass one, so averaging a constant
returns that constant.  Quadrature nodes (angular midpoints times a radial
Gauss rule across the bump) are shared between the splatted-kernel FFT
path and the explicit node-sum paths, which makes the two agree to
rounding error by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.signal import fftconvolve

from .graphs import Graph, is_tree
from . import grids
from .grids import GridField, MarginError, field_from_function, inner, lp_norm

TWO_PI = 2.0 * math.pi

# two-rotation reduction prefactor for the triple kernel: the crossing of two
# unit circles is transversal at 60 degrees, contributing 2/sqrt(3) per
# crossing on top of the two 1/(2 pi) mass normalizations
RADON_PAIR_FACTOR = 1.0 / (2.0 * math.sqrt(3.0) * math.pi ** 2)


def bump(t: np.ndarray | float) -> np.ndarray | float:
    """C^1 quartic bump on [-1, 1] with unit integral."""
    t = np.asarray(t, dtype=float)
    out = np.where(np.abs(t) < 1.0, (15.0 / 16.0) * (1.0 - t * t) ** 2, 0.0)
    return out


@dataclass(frozen=True)
class MollifiedCircleKernel:
    epsilon: float
    M: int  # angular nodes
    radial_nodes: int = 8

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.5):
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if self.M < 64:
            raise ValueError(f"need at least 64 angular nodes, got {self.M}")
        if self.radial_nodes < 2:
            raise ValueError("need at least 2 radial nodes")

    def radial_rule(self) -> tuple[np.ndarray, np.ndarray]:
        """Radii and weights of the bump cross-section, sum of weights 1."""
        t, w = leggauss(self.radial_nodes)
        r = 1.0 + self.epsilon * t
        wt = w * bump(t) * r
        return r, wt / np.sum(wt)

    def angles(self) -> np.ndarray:
        return TWO_PI * (np.arange(self.M) + 0.5) / self.M

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """All quadrature node offsets (K, 2) and weights summing to one."""
        r, wr = self.radial_rule()
        th = self.angles()
        rr, tt = np.meshgrid(r, th)
        ww = np.broadcast_to(wr / self.M, tt.shape)
        pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1)
        return pts.reshape(-1, 2), ww.reshape(-1).copy()

    def raster(self, like: GridField) -> np.ndarray:
        """Quadrature weights splatted bilinearly onto a grid patch.

        Discrete convolution with this patch equals the node-sum with
        bilinear field interpolation, term for term.
        """
        h = like.h
        half = int(math.ceil((1.0 + self.epsilon) / h)) + 1
        size = 2 * half + 1
        K = np.zeros((size, size))
        pts, ww = self.nodes()
        gx = pts[:, 0] / h + half
        gy = pts[:, 1] / h + half
        i0 = np.floor(gx).astype(int)
        j0 = np.floor(gy).astype(int)
        fx = gx - i0
        fy = gy - j0
        for di in (0, 1):
            for dj in (0, 1):
                wgt = ww * (fx if di else 1 - fx) * (fy if dj else 1 - fy)
                np.add.at(K, (j0 + dj, i0 + di), wgt)
        return K


def make_kernel(epsilon: float, M: int, radial_nodes: int = 8) -> MollifiedCircleKernel:
    return MollifiedCircleKernel(epsilon=epsilon, M=M, radial_nodes=radial_nodes)


def policy_angular_nodes(h: float) -> int:
    """Resolve the annulus at the working grid spacing."""
    return max(512, int(math.ceil(16.0 / h)))


# ---------------------------------------------------------------------------
# averaging and the bilinear rotation transform


def circular_average(f: GridField, k: MollifiedCircleKernel,
                     allow_boundary: bool = False) -> GridField:
    """Af(x): average of f over the mollified unit circle around x.

    With the unit-mass normalization the average of the constant one stays
    one on the interior.  Fields standing for global objects (boundary_free)
    are accepted; their averages are then only valid 1 + eps away from the
    boundary.
    """
    if not allow_boundary and not f.boundary_free:
        f.check_margin(1.0 + k.epsilon)
    out = fftconvolve(f.values, k.raster(f), mode="same")
    return f.copy_with(out, boundary_free=f.boundary_free)


def circular_average_nodesum(f: GridField, k: MollifiedCircleKernel) -> GridField:
    """Same operator as an explicit quadrature loop (no FFT)."""
    pts, ww = k.nodes()
    out = np.zeros_like(f.values)
    for (ox, oy), w in zip(pts, ww):
        out += w * grids.shift_bilinear(f, ox, oy)
    return f.copy_with(out)


def bilinear_radon(g: GridField, h: GridField, theta: float,
                   k: MollifiedCircleKernel) -> GridField:
    """B_theta(g, h)(x) = average over y of g(x - y) h(x - R_theta y).

    Shared angular/radial quadrature with cubic-spline field sampling;
    the rotation is applied to the quadrature node, not the grid.
    """
    if not g.compatible(h):
        raise ValueError("fields must share a grid")
    for fld in (g, h):
        # global (boundary_free) factors are allowed; the result is then only
        # trusted 1 + eps inside, mirroring circular_average
        if not fld.boundary_free:
            fld.check_margin(1.0 + k.epsilon)
    gp = grids.cubic_prefilter(g)
    hp = grids.cubic_prefilter(h)
    ct, st = math.cos(theta), math.sin(theta)
    r, wr = k.radial_rule()
    out = np.zeros_like(g.values)
    for th in k.angles():
        ux, uy = math.cos(th), math.sin(th)
        vx, vy = ct * ux - st * uy, st * ux + ct * uy
        for rad, w in zip(r, wr):
            gs = grids.shift_cubic(gp, g.h, rad * ux, rad * uy)
            hs = grids.shift_cubic(hp, g.h, rad * vx, rad * vy)
            out += (w / k.M) * gs * hs
    return g.copy_with(out)


# ---------------------------------------------------------------------------
# form evaluation


class MethodError(ValueError):
    pass


def _tree_root(g: Graph) -> int:
    adj = g.adjacency()
    best, score = 1, -1
    for v in range(1, g.n + 1):
        d = len(adj[v])
        if d > score:
            best, score = v, d
    return best


def _tree_factor(g: Graph, fields: Sequence[GridField],
                 k: MollifiedCircleKernel, use_fft: bool = True) -> float:
    """Leaf-to-root nested averages; integrate against the root factor."""
    root = _tree_root(g)
    adj = g.adjacency()
    order = [root]
    parent = {root: 0}
    depth = {root: 0}
    for v in order:
        for w in sorted(adj[v]):
            if w not in parent:
                parent[w] = v
                depth[w] = depth[v] + 1
                order.append(w)

    _guard_tree_margins(fields, depth, k.epsilon)

    partial: dict[int, np.ndarray] = {}
    for v in reversed(order):
        vals = fields[v - 1].values.copy()
        kids = [w for w in adj[v] if parent.get(w) == v]
        for w in kids:
            vals = vals * partial.pop(w)
        if v == root:
            return float(np.sum(vals)) * fields[0].h ** 2
        fld = fields[v - 1].copy_with(vals)
        if use_fft:
            partial[v] = fftconvolve(vals, k.raster(fld), mode="same")
        else:
            partial[v] = circular_average_nodesum(fld, k).values
    raise AssertionError("unreachable")


def _guard_tree_margins(fields: Sequence[GridField], depth: dict[int, int],
                        eps: float) -> None:
    """Global (boundary_free) factors poison a boundary layer that grows by
    1 + eps per averaging level; the read region of the root integrand must
    stay clear of it."""
    L = fields[0].L
    free = [v for v in depth if fields[v - 1].boundary_free]
    if not free:
        return
    bounded = [v for v in depth if not fields[v - 1].boundary_free]
    if not bounded:
        raise MarginError("all factors are global objects; nothing bounds the read region")
    read = min(fields[v - 1].support_radius() + (1.0 + eps) * depth[v]
               for v in bounded)
    for v in free:
        valid = L - (1.0 + eps) * max(depth[v], 1)
        if read > valid:
            raise MarginError(
                f"global factor at vertex {v} is only valid within radius "
                f"{valid:.3f} but the integrand reaches {read:.3f}")


def _radon_pair(g: Graph, fields: Sequence[GridField],
                k: MollifiedCircleKernel) -> float:
    f, gg, hh = fields
    total = 0.0
    for theta in (math.pi / 3.0, -math.pi / 3.0):
        b = bilinear_radon(gg, hh, theta, k)
        total += inner(f, b.values)
    return RADON_PAIR_FACTOR * total


def _direct_triangle(g: Graph, fields: Sequence[GridField],
                     k: MollifiedCircleKernel, m_alpha: int = 128,
                     n_radial: int = 3, n_lens: int = 3) -> float:
    """Honest quadrature of the triple-kernel form.

    Outer polar nodes on the first kernel annulus; for each node the inner
    double shell is integrated in annular offset coordinates around the two
    exact circle intersections, with the transversality Jacobian.
    """
    f, gg, hh = fields
    for fld in fields:
        if fld.boundary_free:
            raise MarginError("direct quadrature needs compactly supported fields")
    eps = k.epsilon
    gp = grids.cubic_prefilter(gg)
    hp = grids.cubic_prefilter(hh)
    tu, wu = leggauss(n_radial)
    tl, wl = leggauss(n_lens)
    h2 = f.h ** 2

    total = 0.0
    for mi in range(m_alpha):
        th = TWO_PI * (mi + 0.5) / m_alpha
        ux, uy = math.cos(th), math.sin(th)
        for a in range(n_radial):
            r = 1.0 + eps * tu[a]
            w_u = bump(tu[a]) * (1.0 + eps * tu[a]) * wu[a] / (TWO_PI) * (TWO_PI / m_alpha)
            gs = grids.shift_cubic(gp, f.h, r * ux, r * uy)
            P = f.values * gs
            inner_sum = 0.0
            for b in range(n_lens):
                R1 = 1.0 + eps * tl[b]
                for c in range(n_lens):
                    R2 = 1.0 + eps * tl[c]
                    d = (r * r + R1 * R1 - R2 * R2) / (2.0 * r)
                    perp_sq = R1 * R1 - d * d
                    if perp_sq <= 0.0:
                        continue
                    perp = math.sqrt(perp_sq)
                    jac = (R1 * R2) / (r * perp)
                    w_lens = (bump(tl[b]) * wl[b] / TWO_PI) * \
                             (bump(tl[c]) * wl[c] / TWO_PI) * jac
                    for sgn in (1.0, -1.0):
                        vx = d * ux - sgn * perp * uy
                        vy = d * uy + sgn * perp * ux
                        hs = grids.shift_cubic(hp, f.h, vx, vy)
                        inner_sum += w_lens * float(np.sum(P * hs))
            total += w_u * inner_sum * h2
    return total


def _direct_chain(g: Graph, fields: Sequence[GridField],
                  k: MollifiedCircleKernel) -> float:
    """Node-sum evaluation of a 3-chain or edge: no FFT anywhere."""
    return _tree_factor(g, fields, k, use_fft=False)


def form_evaluate(g: Graph, fields: Sequence[GridField],
                  k: MollifiedCircleKernel, method: str = "auto",
                  mc_samples: int = 200_000, master_seed: int = 0,
                  direct_params: dict | None = None) -> float:
    """Value of the mollified n-linear form of the graph.

    Methods: "tree-factor" (trees, FFT convolutions), "radon-pair"
    (triangle only, two-rotation reduction), "direct" (n <= 3, explicit
    quadrature), "leray-mc" (any graph, shell Monte Carlo normalized to
    the unit-mass kernel), "auto" picks the cheapest applicable one.
    """
    g.require_connected()
    if len(fields) != g.n:
        raise MethodError(f"need {g.n} fields, got {len(fields)}")
    for fld in fields[1:]:
        if not fields[0].compatible(fld):
            raise MethodError("fields must share one grid")

    if method == "auto":
        if is_tree(g):
            method = "tree-factor"
        elif g.n == 3 and g.num_edges == 3:
            method = "radon-pair"
        else:
            method = "leray-mc"

    if method == "tree-factor":
        if not is_tree(g):
            raise MethodError("tree-factor applies to trees only")
        if g.n == 1:
            return fields[0].integral()
        return _tree_factor(g, fields, k)
    if method == "radon-pair":
        if not (g.n == 3 and g.num_edges == 3):
            raise MethodError("radon-pair applies to the triangle only")
        return _radon_pair(g, fields, k)
    if method == "direct":
        if g.n > 3:
            raise MethodError("direct quadrature restricted to n <= 3")
        if g.n == 1:
            return fields[0].integral()
        if is_tree(g):
            return _direct_chain(g, fields, k)
        return _direct_triangle(g, fields, k, **(direct_params or {}))
    if method == "leray-mc":
        from .rigidity import leray_mc_form

        est = leray_mc_form(g, fields, epsilon=k.epsilon, samples=mc_samples,
                            master_seed=master_seed)
        return est.value / (TWO_PI ** g.num_edges)
    raise MethodError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# test families


def test_family(kind: str, L: float, h: float, delta: float | None = None,
                center: tuple[float, float] = (0.0, 0.0),
                width: float | None = None) -> GridField:
    """Indicator and reference inputs sampled with the cell-center rule."""
    cx, cy = center
    if kind == "ball":
        if delta is None or delta <= 0:
            raise ValueError("ball needs a positive radius")
        if math.hypot(cx, cy) + delta >= L:
            raise ValueError("ball does not fit inside the domain")
        return field_from_function(
            L, h, lambda X, Y: ((X - cx) ** 2 + (Y - cy) ** 2 <= delta ** 2) * 1.0)
    if kind == "annulus":
        if delta is None or delta <= 0:
            raise ValueError("annulus needs a positive thickness")
        if 1.0 + delta / 2.0 >= L:
            raise ValueError("annulus does not fit inside the domain")
        lo, hi = 1.0 - delta / 2.0, 1.0 + delta / 2.0
        return field_from_function(
            L, h, lambda X, Y: ((X ** 2 + Y ** 2 >= lo ** 2)
                                & (X ** 2 + Y ** 2 <= hi ** 2)) * 1.0)
    if kind == "constant":
        return field_from_function(L, h, lambda X, Y: np.ones_like(X),
                                   boundary_free=True)
    if kind == "gaussian":
        if width is None or width <= 0:
            raise ValueError("gaussian needs a positive width")
        return field_from_function(
            L, h,
            lambda X, Y: np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * width ** 2)))
    raise ValueError(f"unknown family {kind!r}")


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ScalingRow:
    param: float
    value: float
    norms: list[float]
    slope_running: float | None


@dataclass
class ScalingResult:
    rows: list[ScalingRow]
    slope: float
    residual: float

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {
                    "param": r.param,
                    "lambda": r.value,
                    "norms": r.norms,
                    "slope_running": r.slope_running,
                }
                for r in self.rows
            ],
            "slope": self.slope,
            "residual": self.residual,
        }

    def csv_lines(self) -> list[str]:
        n = len(self.rows[0].norms) if self.rows else 0
        head = "param,lambda," + ",".join(f"norm_{i+1}" for i in range(n)) \
            + ",slope_running"
        lines = [head]
        for r in self.rows:
            cells = [f"{r.param:.17g}", f"{r.value:.17g}"]
            cells += [f"{v:.17g}" for v in r.norms]
            cells.append("" if r.slope_running is None else f"{r.slope_running:.17g}")
            lines.append(",".join(cells))
        return lines


def fit_loglog(params: Sequence[float], values: Sequence[float]
               ) -> tuple[float, float]:
    """Least-squares slope of log value against log param, plus residual."""
    pairs = [(p, v) for p, v in zip(params, values) if v > 0.0]
    if len(pairs) < 2:
        raise ValueError("need at least two positive rows to fit a slope")
    x = np.log([p for p, _ in pairs])
    y = np.log([v for _, v in pairs])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(res[0]) if res.size else 0.0
    return float(coef[0]), residual


def _scaled_field(spec: str, param: float, L: float, h: float) -> GridField:
    if spec == "ball":
        return test_family("ball", L, h, delta=param)
    if spec == "annulus":
        return test_family("annulus", L, h, delta=param)
    if spec == "constant":
        return test_family("constant", L, h)
    raise ValueError(f"unknown assignment entry {spec!r}")


def scaling_experiment(g: Graph, assignment: Sequence[str],
                       params: Sequence[float], grid_points: int = 513,
                       L: float | None = None,
                       epsilon_policy: str = "quarter",
                       fixed_epsilon: float = 1.0 / 16.0,
                       method: str = "auto") -> ScalingResult:
    """Form values along a shrinking-parameter family, with a log-log fit.

    epsilon_policy "quarter" couples the kernel width to the parameter
    (eps = delta / 4) so mollification never smears the test geometry;
    "fixed" keeps fixed_epsilon (used for growing-ball runs).
    """
    if len(assignment) != g.n:
        raise ValueError("assignment must name one family per vertex")
    ps = sorted(params, reverse=True)
    rows: list[ScalingRow] = []
    for p in ps:
        if epsilon_policy == "quarter":
            eps = p / 4.0
        elif epsilon_policy == "fixed":
            eps = fixed_epsilon
        else:
            raise ValueError(f"unknown epsilon policy {epsilon_policy!r}")
        if L is None:
            geom = 0.0
            for spec in assignment:
                if spec == "ball":
                    geom = max(geom, p)
                elif spec == "annulus":
                    geom = max(geom, 1.0 + p / 2.0)
            if "constant" in assignment:
                # a global factor is only averaged correctly 1+eps inside
                dom = geom + 1.0 + eps + 0.05
            else:
                # zero padding is exact for compact supports: keep the grid
                # tight so the fixed point count buys resolution
                dom = geom + 0.1
        else:
            dom = L
        h = grids.grid_spacing(dom, grid_points)
        k = make_kernel(eps, policy_angular_nodes(h))
        fields = [_scaled_field(spec, p, dom, h) for spec in assignment]
        val = form_evaluate(g, fields, k, method=method)
        norms = [lp_norm(f, 1.0) for f in fields]
        rows.append(ScalingRow(param=p, value=val, norms=norms,
                               slope_running=None))
    for prev, cur in zip(rows, rows[1:]):
        if prev.value > 0 and cur.value > 0:
            cur.slope_running = (math.log(cur.value) - math.log(prev.value)) / (
                math.log(cur.param) - math.log(prev.param))
    if all(r.value <= 0 for r in rows):
        raise ValueError("all form values vanished; nothing to fit")
    slope, residual = fit_loglog([r.param for r in rows],
                                 [r.value for r in rows])
    return ScalingResult(rows=rows, slope=slope, residual=residual)


@dataclass
class RatioRow:
    param: float
    input_norm: float
    output_norm: float

    @property
    def ratio(self) -> float:
        return self.output_norm / self.input_norm


def ratio_experiment(p: float, q: float, family: str,
                     params: Sequence[float], grid_points: int = 1025,
                     epsilon_policy: str = "quarter",
                     fixed_epsilon: float = 1.0 / 32.0) -> list[RatioRow]:
    """Averaging-operator norm ratios |Af|_q / |f|_p along a family."""
    if p < 1 or q < 1:
        raise ValueError("exponents must be >= 1")
    rows = []
    for prm in sorted(params, reverse=True):
        eps = prm / 4.0 if epsilon_policy == "quarter" else fixed_epsilon
        dom = 1.0 + prm / 2.0 + 1.0 + eps + 0.05
        h = grids.grid_spacing(dom, grid_points)
        k = make_kernel(eps, policy_angular_nodes(h))
        f = _scaled_field(family, prm, dom, h)
        nf = lp_norm(f, p)
        if nf == 0.0:
            raise ValueError(f"zero-norm input at parameter {prm}")
        af = circular_average(f, k)
        rows.append(RatioRow(param=prm, input_norm=nf,
                             output_norm=lp_norm(af, q)))
    return rows


def kernel_decay_check(k: MollifiedCircleKernel, freqs: Sequence[float],
                       h: float = 1.0 / 256.0, directions: int = 8
                       ) -> list[tuple[float, float, float]]:
    """Fourier magnitude of the rasterized kernel with the decay weight.

    Returns rows (|xi|, |sigma_hat|, |sigma_hat| * (1 + |xi|)^(1/2)).
    Frequencies beyond the grid Nyquist limit are rejected.
    """
    nyquist = 0.5 / h
    for xi in freqs:
        if xi > nyquist:
            raise ValueError(f"frequency {xi} beyond Nyquist {nyquist}")
    m = int(math.ceil((1.0 + k.epsilon) / h)) + 1
    probe = GridField(m * h, h, np.zeros((2 * m + 1, 2 * m + 1)))
    K = k.raster(probe)
    half = K.shape[0] // 2
    ax = (np.arange(K.shape[0]) - half) * h
    X, Y = np.meshgrid(ax, ax)
    nz = K != 0.0
    xs, ys, ws = X[nz], Y[nz], K[nz]
    rows = []
    for xi in freqs:
        mags = []
        for dstep in range(directions):
            ang = math.pi * dstep / directions
            kx, ky = xi * math.cos(ang), xi * math.sin(ang)
            z = np.sum(ws * np.exp(-2j * math.pi * (kx * xs + ky * ys)))
            mags.append(abs(z))
        mag = float(np.mean(mags))
        rows.append((float(xi), mag, mag * math.sqrt(1.0 + xi)))
    return rows
