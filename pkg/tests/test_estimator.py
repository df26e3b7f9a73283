import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import j0

from lpgraph.estimator import (
    MethodError,
    bilinear_radon,
    bump,
    circular_average,
    circular_average_nodesum,
    form_evaluate,
    kernel_decay_check,
    make_kernel,
    ratio_experiment,
    scaling_experiment,
    test_family as field_family,
)
from lpgraph.graphs import Graph, path3, single_edge, triangle
from lpgraph.grids import GridField, MarginError, lp_norm
from lpgraph import grids

L0 = 2.2
H0 = L0 / 256


def test_kernel_parameter_validation():
    with pytest.raises(ValueError):
        make_kernel(0.6, 512)
    with pytest.raises(ValueError):
        make_kernel(1 / 16, 32)


def test_kernel_mass_one():
    k = make_kernel(1 / 16, 512)
    _, w = k.nodes()
    assert abs(w.sum() - 1.0) < 1e-12
    probe = field_family("ball", L0, H0, delta=0.5)
    assert abs(k.raster(probe).sum() - 1.0) < 1e-6


def test_bump_support_and_symmetry():
    assert bump(1.0) == 0.0 and bump(-1.0) == 0.0
    ts = np.linspace(0, 0.99, 20)
    np.testing.assert_allclose(bump(ts), bump(-ts))
    # unit integral
    t = np.linspace(-1, 1, 20001)
    assert abs(np.trapezoid(bump(t), t) - 1.0) < 1e-6


def test_average_of_constant_is_one_inside():
    k = make_kernel(1 / 16, 512)
    f = field_family("constant", L0, H0)
    af = circular_average(f, k)
    mid = af.size // 2
    inner = af.values[mid - 40:mid + 41, mid - 40:mid + 41]
    np.testing.assert_allclose(inner, 1.0, atol=1e-12)


def test_average_of_big_ball_is_nearly_one_deep_inside():
    L = 4.2
    h = L / 256
    k = make_kernel(1 / 16, 512)
    f = field_family("ball", L, h, delta=3.0)
    af = circular_average(f, k)
    mid = af.size // 2
    assert af.values[mid, mid] > 0.999


def test_average_of_thin_annulus_peaks_at_origin():
    k = make_kernel(1 / 32, 512)
    f = field_family("annulus", L0, H0, delta=1 / 8)
    af = circular_average(f, k)
    mid = af.size // 2
    assert af.values[mid, mid] > 0.95


def test_margin_guard_raises():
    k = make_kernel(1 / 16, 512)
    f = field_family("ball", 1.5, 1.5 / 256, delta=1.4)
    with pytest.raises(MarginError):
        circular_average(f, k)
    circular_average(f, k, allow_boundary=True)  # explicit opt-in works


def test_fft_equals_node_sum():
    k = make_kernel(1 / 16, 128, radial_nodes=4)
    L, h = 1.6, 1.6 / 64
    f = field_family("ball", L, h, delta=0.4)
    a1 = circular_average(f, k, allow_boundary=True).values
    a2 = circular_average_nodesum(f, k).values
    assert np.max(np.abs(a1 - a2)) < 1e-10


def test_radon_second_factor_constant_reduces_to_average():
    # with h == 1 everywhere the transform collapses to the plain average
    k = make_kernel(1 / 16, 128, radial_nodes=3)
    L, h = 2.4, 2.4 / 128
    g = field_family("gaussian", L, h, center=(0.2, -0.1), width=0.15)
    ones = field_family("constant", L, h)
    b = bilinear_radon(g, ones, math.pi / 3, k)
    a = circular_average(g, k)
    mid = b.size // 2
    sl = slice(mid - 30, mid + 31)
    np.testing.assert_allclose(b.values[sl, sl], a.values[sl, sl], atol=2e-4)


def test_radon_zero_angle_pairs_the_same_point():
    k = make_kernel(1 / 16, 128, radial_nodes=3)
    L, h = 2.4, 2.4 / 128
    g = field_family("gaussian", L, h, center=(0.3, 0.0), width=0.15)
    hfield = field_family("gaussian", L, h, center=(0.3, 0.0), width=0.15)
    b0 = bilinear_radon(g, hfield, 0.0, k)
    # same quadrature applied to the pointwise product
    prod = g.copy_with(g.values * hfield.values)

    def sq(field):
        out = np.zeros_like(field.values)
        pf = grids.cubic_prefilter(field)
        r, wr = k.radial_rule()
        for th in k.angles():
            for rad, w in zip(r, wr):
                out += (w / k.M) * grids.shift_cubic(
                    pf, field.h, rad * math.cos(th), rad * math.sin(th))
        return out

    # separate interpolation of the two factors vs interpolation of their
    # product: equal in the continuum, equal here to interpolation accuracy
    ref = sq(prod)
    tol = 1e-4 * float(np.max(np.abs(ref)))
    np.testing.assert_allclose(b0.values, ref, atol=tol)


def test_radon_matches_dense_double_quadrature_at_origin():
    # independent oracle: brute-force polar double integral of
    # g(x-y) h(x-Theta y) w(|y|) at x = 0, much denser than the kernel rule;
    # centers chosen so the transform is large at the origin
    theta = math.pi / 3
    cg = (-1.0, 0.0)
    ch = (-math.cos(theta), -math.sin(theta))
    k = make_kernel(1 / 32, 256, radial_nodes=4)
    L, h = 3.1, 3.1 / 96
    g = field_family("gaussian", L, h, center=cg, width=0.15)
    hf = field_family("gaussian", L, h, center=ch, width=0.15)
    b = bilinear_radon(g, hf, theta, k)
    mid = b.size // 2

    def ga(x, y, c, w=0.15):
        return math.exp(-((x - c[0]) ** 2 + (y - c[1]) ** 2) / (2 * w * w))

    ct, st_ = math.cos(theta), math.sin(theta)
    val = 0.0
    nr, na = 40, 4096
    for tr in np.linspace(-1 + 1e-9, 1 - 1e-9, nr):
        r = 1 + k.epsilon * tr
        wr = bump(tr) * r
        for a in range(na):
            th = 2 * math.pi * (a + 0.5) / na
            ux, uy = r * math.cos(th), r * math.sin(th)
            vx, vy = ct * ux - st_ * uy, st_ * ux + ct * uy
            val += wr * ga(-ux, -uy, cg) * ga(-vx, -vy, ch)
    # normalize the oracle rule the same way (weights sum to one)
    norm = 0.0
    for tr in np.linspace(-1 + 1e-9, 1 - 1e-9, nr):
        norm += bump(tr) * (1 + k.epsilon * tr) * na
    val /= norm
    assert abs(b.values[mid, mid] - val) / abs(val) < 1e-3


def test_form_tree_factor_equals_direct_chain():
    k = make_kernel(1 / 16, 256, radial_nodes=6)
    L, h = 2.2, 2.2 / 128
    fs = [field_family("ball", L, h, delta=0.25),
          field_family("ball", L, h, delta=0.25),
          field_family("annulus", L, h, delta=0.25)]
    v1 = form_evaluate(path3(), fs, k, method="tree-factor")
    v2 = form_evaluate(path3(), fs, k, method="direct")
    assert abs(v1 - v2) / abs(v1) < 1e-6


def test_form_radon_vs_direct_triangle():
    k = make_kernel(1 / 64, 384, radial_nodes=4)
    L, N = 2.6, 193
    h = 2 * L / (N - 1)
    r0 = 1 / math.sqrt(3)
    cs = [(r0 * math.cos(a), r0 * math.sin(a))
          for a in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
    fs = [field_family("gaussian", L, h, center=c, width=0.15) for c in cs]
    v1 = form_evaluate(triangle(), fs, k, method="radon-pair")
    v2 = form_evaluate(triangle(), fs, k, method="direct",
                       direct_params=dict(m_alpha=96, n_radial=3, n_lens=3))
    assert abs(v1 - v2) / abs(v2) < 2e-3


def test_form_zero_field_gives_zero():
    k = make_kernel(1 / 16, 128, radial_nodes=3)
    L, h = 2.2, 2.2 / 64
    f = field_family("ball", L, h, delta=0.3)
    z = f.copy_with(np.zeros_like(f.values))
    assert form_evaluate(path3(), [f, z, f], k) == 0.0


def test_form_multilinearity():
    k = make_kernel(1 / 16, 128, radial_nodes=3)
    L, h = 2.2, 2.2 / 64
    f = field_family("ball", L, h, delta=0.3)
    g = field_family("annulus", L, h, delta=0.3)
    hh = field_family("ball", L, h, delta=0.5)
    base = form_evaluate(path3(), [f, g, hh], k)
    scaled = form_evaluate(path3(), [f.copy_with(3.0 * f.values), g, hh], k)
    assert abs(scaled - 3.0 * base) <= 1e-12 * max(1.0, abs(base) * 3)
    f2 = field_family("ball", L, h, delta=0.45)
    add = form_evaluate(path3(), [f.copy_with(f.values + f2.values), g, hh], k)
    parts = base + form_evaluate(path3(), [f2, g, hh], k)
    assert abs(add - parts) <= 1e-10 * max(1.0, abs(parts))


def test_form_positivity_and_monotonicity():
    k = make_kernel(1 / 16, 128, radial_nodes=3)
    L, h = 2.2, 2.2 / 64
    f = field_family("ball", L, h, delta=0.3)
    g = field_family("annulus", L, h, delta=0.3)
    hh = field_family("ball", L, h, delta=0.5)
    v = form_evaluate(path3(), [f, g, hh], k)
    assert v >= 0
    bigger = field_family("ball", L, h, delta=0.4)
    assert form_evaluate(path3(), [bigger, g, hh], k) >= v


def test_form_symmetry_leaf_swap_and_triangle_permutations():
    k = make_kernel(1 / 16, 128, radial_nodes=3)
    L, h = 2.2, 2.2 / 64
    f = field_family("ball", L, h, delta=0.3)
    g = field_family("annulus", L, h, delta=0.2)
    hh = field_family("ball", L, h, delta=0.5)
    assert math.isclose(form_evaluate(path3(), [f, g, hh], k),
                        form_evaluate(path3(), [g, f, hh], k), rel_tol=1e-12)
    import itertools

    ks = make_kernel(1 / 16, 128, radial_nodes=3)
    cs = [(0.4, 0.0), (-0.3, 0.3), (0.0, -0.5)]
    fields = [field_family("gaussian", 2.6, 2.6 / 96, center=c, width=0.15)
              for c in cs]
    vals = [form_evaluate(triangle(), [fields[i] for i in perm], ks,
                          method="radon-pair")
            for perm in itertools.permutations(range(3))]
    # permuting swaps which factor the quadrature treats as the weight, so
    # the symmetry holds at quadrature accuracy, not rounding accuracy
    assert max(vals) - min(vals) <= 1e-4 * max(map(abs, vals))


def test_form_translation_covariance():
    # shifting every sampled array by the same whole number of cells (with
    # the supports staying clear of the boundary) leaves the value unchanged
    from lpgraph.grids import _shift_int

    k = make_kernel(1 / 16, 128, radial_nodes=3)
    L, h = 2.4, 2.4 / 96
    fs = [field_family("ball", L, h, delta=0.3),
          field_family("ball", L, h, delta=0.3),
          field_family("annulus", L, h, delta=0.25)]
    moved = [f.copy_with(_shift_int(f.values, 4, 4)) for f in fs]
    v1 = form_evaluate(path3(), fs, k)
    v2 = form_evaluate(path3(), moved, k)
    assert abs(v1 - v2) / abs(v1) < 1e-9


def test_form_method_guards():
    k = make_kernel(1 / 16, 128, radial_nodes=3)
    L, h = 2.2, 2.2 / 64
    f = field_family("ball", L, h, delta=0.3)
    with pytest.raises(MethodError):
        form_evaluate(triangle(), [f, f, f], k, method="tree-factor")
    with pytest.raises(MethodError):
        form_evaluate(path3(), [f, f, f], k, method="radon-pair")
    with pytest.raises(MethodError):
        form_evaluate(path3(), [f, f], k)


def test_families_geometry():
    ball = field_family("ball", L0, H0, delta=1 / 8)
    assert abs(ball.integral() - math.pi / 64) / (math.pi / 64) < 0.05
    ann = field_family("annulus", L0, H0, delta=1 / 8)
    assert abs(ann.integral() - 2 * math.pi / 8) / (2 * math.pi / 8) < 0.05
    const = field_family("constant", L0, H0)
    assert np.all(const.values == 1.0) and const.boundary_free
    with pytest.raises(ValueError):
        field_family("ball", 1.0 + H0, H0, delta=1.5)


def test_lp_norm_values():
    ball = field_family("ball", L0, H0, delta=1 / 8)
    for p in (1.0, 1.5, 2.0, 3.0):
        ref = (math.pi / 64) ** (1 / p)
        assert abs(lp_norm(ball, p) - ref) / ref < 0.05
    const = field_family("constant", L0, H0)
    assert lp_norm(const, math.inf) == 1.0
    with pytest.raises(ValueError):
        lp_norm(ball, 0.5)


@given(st.floats(min_value=1.0, max_value=8.0),
       st.floats(min_value=0.1, max_value=3.0))
@settings(max_examples=20, deadline=None)
def test_lp_norm_homogeneity(p, c):
    ball = field_family("ball", 1.5, 1.5 / 64, delta=0.4)
    scaled = ball.copy_with(c * ball.values)
    assert math.isclose(lp_norm(scaled, p), c * lp_norm(ball, p),
                        rel_tol=1e-9)


def test_scaling_experiment_shape_and_csv():
    res = scaling_experiment(path3(), ("ball", "ball", "annulus"),
                             [1 / 8, 1 / 16], grid_points=257)
    assert len(res.rows) == 2
    assert res.rows[0].param == 1 / 8  # descending order
    lines = res.csv_lines()
    assert lines[0] == "param,lambda,norm_1,norm_2,norm_3,slope_running"
    assert lines[1].endswith(",")  # first row has no running slope
    assert len(lines) == 3


def test_ratio_experiment_l1_contraction():
    rows = ratio_experiment(1.0, 1.0, "annulus", [1 / 8], grid_points=257)
    assert rows[0].ratio <= 1.0 + 1e-6


def test_refinement_convergence():
    k = make_kernel(1 / 8, 256, radial_nodes=4)
    vals = []
    for n in (129, 257, 513):
        L = 2.2
        h = 2 * L / (n - 1)
        fs = [field_family("ball", L, h, delta=0.25),
              field_family("ball", L, h, delta=0.25),
              field_family("annulus", L, h, delta=0.25)]
        vals.append(form_evaluate(path3(), fs, k))
    d1 = abs(vals[1] - vals[0])
    d2 = abs(vals[2] - vals[1])
    assert d2 < d1


def test_kernel_decay_unit_mass_at_zero():
    k = make_kernel(1 / 32, 256, radial_nodes=4)
    rows = kernel_decay_check(k, [0.0], h=1 / 128)
    assert abs(rows[0][1] - 1.0) < 1e-6


def test_kernel_decay_matches_bessel_oracle():
    eps = 1 / 64
    k = make_kernel(eps, 512, radial_nodes=6)
    rows = kernel_decay_check(k, [1.0], h=1 / 256)
    assert abs(rows[0][1] - abs(j0(2 * math.pi))) < 1e-3 + eps


def test_kernel_decay_bound_on_band():
    k = make_kernel(1 / 64, 512, radial_nodes=6)
    freqs = [float(v) for v in range(2, 65, 2)]
    rows = kernel_decay_check(k, freqs, h=1 / 256)
    assert max(r[2] for r in rows) <= 1.0


def test_kernel_decay_rejects_aliased_frequencies():
    k = make_kernel(1 / 32, 256, radial_nodes=4)
    with pytest.raises(ValueError, match="Nyquist"):
        kernel_decay_check(k, [200.0], h=1 / 128)
