import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isoloewner.errors import DegenerateInput, StencilTooCoarse
from isoloewner.isomonodromy import diagonal_family, family_to_dict, random_family
from isoloewner.verify import (
    bpz_ladder,
    bpz_residual,
    convergence_report,
    cross_module_suite,
    diagonal_derivative,
    expected_rank,
    forcepoint_pde_residual,
    grid_from_function,
    hormander_determinant,
    hormander_matrix,
    hormander_rank,
)


def manufactured(z, lam, s):
    # cubic in z and quadratic in each parameter: centered differences are exact
    return z**3 + lam[0] ** 2 * z + 3 * s[0] * lam[0] + s[0] ** 2


def manufactured_operator(z, lam, s, alpha):
    w = z - lam
    d2z = 6 * z
    d_lam = 2 * lam * z + 3 * s
    d_s = 3 * lam + 2 * s
    pot = alpha**2 / w**2 + 2 * s * alpha / w**3 + s**2 / w**4
    return d2z - (d_lam / w + s * d_s / w**2 + pot * manufactured(z, [lam], [s]))


@settings(max_examples=40)
@given(st.floats(-2, 2), st.floats(0.5, 2), st.floats(-1, 1), st.floats(0.2, 2), st.floats(-1, 1))
def test_stencil_on_manufactured_polynomial(x, y, s_re, alpha, lam_re):
    z0, lam, s = complex(x, y) + 3, complex(lam_re, 0.3), complex(s_re, 0.5)
    grid = grid_from_function(manufactured, z0, [lam], [s], 1e-3)
    exact = manufactured_operator(z0, lam, s, alpha)
    assert abs(bpz_residual(grid, [alpha], [s]) - exact) <= 1e-6 * (1 + abs(exact))


def test_trivial_residuals():
    const = grid_from_function(lambda z, lam, s: 1.0, 3.0, [1j], [0.0], 1e-2)
    assert abs(bpz_residual(const, [0.0], [0.0])) < 1e-12
    affine = grid_from_function(lambda z, lam, s: z, 3.0 + 1j, [], [], 1e-2)
    assert abs(bpz_residual(affine, [], [])) < 1e-12
    const_xi = grid_from_function(lambda z, lam, s, xi: 1.0, 3.0, [1j], [0.0], 1e-2, xi=5.0)
    assert abs(forcepoint_pde_residual(const_xi, [0.0], [0.0])) < 1e-12


def test_forcepoint_far_xi_decays():
    vals = []
    for xi in (1e2, 1e3, 1e4):
        g = grid_from_function(lambda z, lam, s, x: z, 0.5, [], [], 1e-2, xi=xi)
        vals.append(forcepoint_pde_residual(g, [], []))
        assert abs(vals[-1] - 1 / (xi - 0.5)) < 1e-10
    assert abs(vals[2]) < abs(vals[1]) < abs(vals[0])


def test_stencil_too_coarse():
    with pytest.raises(StencilTooCoarse):
        grid_from_function(manufactured, 1.0, [1.05], [1.0], 1e-2)


def test_diagonal_coincidence_derivative():
    fam = diagonal_family(2.0)
    assert abs(diagonal_derivative(fam, 3.0 + 0.5j, 1e-3, z_base=3.5)) < 1e-6


def test_bpz_ladder_diagonal():
    rep = bpz_ladder(diagonal_family(2.0), 3.0, [1e-2, 5e-3, 2.5e-3], z_base=3.5)
    assert rep.fitted_order >= 1.8
    assert abs(rep.residual[-1]) <= 100 * 1e-10 / 2.5e-3**2
    assert rep.to_csv().splitlines()[0] == "h,residual_re,residual_im,order_estimate"


def test_bpz_ladder_random_family():
    fam = random_family(np.random.default_rng(0), 2)
    rep = bpz_ladder(fam, 3 + 3j, [1e-2, 5e-3, 2.5e-3], z_base=3.2 + 3j)
    assert rep.fitted_order >= 1.8


def test_forcepoint_ladder_diagonal():
    rep = bpz_ladder(diagonal_family(2.0), 3.0, [1e-2, 5e-3, 2.5e-3], z_base=3.5, xi=4.5)
    assert rep.fitted_order >= 1.8


def test_convergence_report_exact_power():
    h = np.array([0.1, 0.05, 0.025])
    rep = convergence_report(h, 3 * h**2)
    assert abs(rep.fitted_order - 2) < 1e-12
    assert np.isnan(rep.order_estimate[0]) and np.allclose(rep.order_estimate[1:], 2)


def test_hormander_examples():
    assert abs(hormander_determinant(0.0, 1.0, [], []) - 2) < 1e-14
    m = hormander_matrix(0.0, 2.0, [1 + 1j], [1.0])
    assert abs(hormander_determinant(0.0, 2.0, [1 + 1j], [1.0])) > 1e-12 * m.scale
    assert hormander_rank(0.0, 2.0, [1 + 1j], [1.0]) == 5
    assert hormander_rank(0.0, 2.0, [1.5], [1.0]) < 5
    assert hormander_rank(0.0, 2.0, [1.5], [1.0]) == expected_rank([1.5]) == 3


def test_hormander_degenerate_inputs():
    for args in ((1.0, 1.0, [2j], [1.0]), (0.0, 1.0, [0.0], [1.0]), (0.0, 1.0, [1j, -1j], [1.0, 1.0])):
        with pytest.raises(DegenerateInput):
            hormander_matrix(*args)


generic = st.tuples(st.floats(0.5, 2.0), st.floats(0.15 * np.pi, 0.85 * np.pi), st.floats(0.5, 2.0))


@settings(max_examples=30, deadline=None)
@given(generic, st.floats(-3, 3), st.floats(0.3, 3.0))
def test_hormander_translation_dilation(p, shift, c):
    r, th, d = p
    lam = [r * np.exp(1j * th)]
    s = [0.7 + 0.2j]
    base = hormander_matrix(0.0, d, lam, s)
    ratio = abs(np.linalg.det(base.normalized))
    moved = hormander_matrix(shift, d + shift, [lam[0] + shift], s)
    scaled = hormander_matrix(0.0, c * d, [c * lam[0]], [c * s[0]])
    for other in (moved, scaled):
        assert abs(abs(np.linalg.det(other.normalized)) - ratio) <= 1e-8 * max(ratio, 1e-12)
    rank = hormander_rank(0.0, d, lam, s)
    assert rank == hormander_rank(shift, d + shift, [lam[0] + shift], s)
    assert rank == hormander_rank(0.0, c * d, [c * lam[0]], [c * s[0]])


def test_suite_empty_family_passes():
    rep = cross_module_suite({"poles": []})
    assert rep.passed


def test_suite_diagonal_family():
    rep = cross_module_suite(diagonal_family(2j))
    assert rep.passed
    assert all(c.deviation < 1e-8 for c in rep.checks)
    assert {c["status"] for c in rep.to_json()["checks"]} == {"pass"}


def test_suite_random_family():
    assert cross_module_suite(random_family(np.random.default_rng(0), 2)).passed


def test_suite_reports_corrupted_family():
    data = family_to_dict(diagonal_family(2j))
    data["poles"][0]["A1"][0][0] = [-0.9, 0.0]  # trace 0.1
    rep = cross_module_suite(data)
    assert not rep.passed
    names = [c.name for c in rep.checks if not c.passed]
    assert names == ["family_validation"]
