import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isoloewner.algebra import det2, diag, trace
from isoloewner.errors import ContourTooClose, InvalidFamily, PoleHit, ZeroBirkhoff
from isoloewner.isomonodromy import (
    LaxFamily,
    advance_isomonodromy,
    deform,
    deformation_U,
    deformation_V,
    diagonal_family,
    family_from_dict,
    family_from_json,
    family_to_dict,
    hamiltonians,
    integrate_Y_in_z,
    lax_eval,
    random_family,
    residue_sums,
    schlesinger_rhs,
    tau_increment,
    trace_square_coeffs,
)

# closed-form diagonal solution on 3 -> 4 for lam = 2, A0 = diag(.5,-.5), A1 = diag(-1,1)
Y11 = np.sqrt(2) * np.exp(-0.5)
Y22 = np.exp(0.5) / np.sqrt(2)

EMPTY = LaxFamily.create([], [], [])


def circle_residue(fn, centre, r=0.05, m=2000):
    """Residue of fn at centre via the trapezoid rule on a small circle."""
    w = r * np.exp(2j * np.pi * np.arange(m) / m)
    return np.mean([fn(centre + x) * x for x in w])


def test_lax_eval_examples(diag_fam):
    assert np.all(lax_eval(EMPTY, 1.0) == 0)
    assert np.allclose(lax_eval(diag_fam, 3.0), diag(-0.5, 0.5), atol=1e-15)
    with pytest.raises(PoleHit):
        lax_eval(diag_fam, 2.0)


def test_deformation_U_V_examples(diag_fam):
    assert np.allclose(deformation_U(diag_fam, 3.0, 0), diag(0.5, -0.5), atol=1e-15)
    assert np.allclose(deformation_V(diag_fam, 3.0, 0), diag(1, -1), atol=1e-15)
    zero = LaxFamily.create([2.0], [np.zeros((2, 2))], [np.zeros((2, 2))])
    assert np.all(deformation_U(zero, 3.0, 0) == 0)
    with pytest.raises(ZeroBirkhoff):
        deformation_V(zero, 3.0, 0)


def test_deformation_V_homogeneous(fam2):
    doubled = LaxFamily.create(fam2.lam, fam2.A0, 2 * fam2.A1, 2 * fam2.s)
    for z in (3 + 1j, -1 + 0.2j):
        assert np.allclose(deformation_V(doubled, z, 0), deformation_V(fam2, z, 0), atol=1e-13)


def test_U_sum_matches_lax(fam2):
    # a uniform translation of all punctures moves A(z) by -d/dz: sum U_i = -A
    for z in (3 + 1j, -2 + 0.1j, 0.5 + 4j):
        total = sum(deformation_U(fam2, z, i) for i in range(fam2.n))
        assert np.allclose(total, -lax_eval(fam2, z), atol=1e-12)


def test_ell_examples(diag_fam):
    ell = trace_square_coeffs(diag_fam)
    assert np.allclose([ell.coeff(0, k) for k in range(1, 5)], [0, 0.5, -2, 2], atol=1e-15)
    zero = LaxFamily.create([2.0], [np.zeros((2, 2))], [np.zeros((2, 2))])
    assert np.all(trace_square_coeffs(zero).ell == 0)


def test_ell_reconstruction(fam2):
    ell = trace_square_coeffs(fam2)
    rng = np.random.default_rng(7)
    for _ in range(20):
        z = complex(rng.uniform(-4, 4), rng.uniform(-4, 4))
        A = lax_eval(fam2, z)
        assert abs(ell.evaluate(fam2.lam, z) - trace(A @ A)) < 1e-10


def test_ell_by_quadrature(fam2):
    ell = trace_square_coeffs(fam2).ell
    for i in range(fam2.n):
        lam = fam2.lam[i]
        for k in range(1, 5):
            def fn(z, k=k):
                A = lax_eval(fam2, z)
                return trace(A @ A) * (z - lam) ** (k - 1)
            assert abs(circle_residue(fn, lam) - ell[i, k - 1]) < 1e-9


def test_hamiltonian_examples(diag_fam):
    h = hamiltonians(diag_fam)
    assert abs(h.H_lambda[0]) < 1e-15 and abs(h.H_s[0]) < 1e-15
    pure = LaxFamily.create([2.0], [np.zeros((2, 2))], [diag(-1, 1)])
    h = hamiltonians(pure)
    assert abs(h.H_lambda[0]) < 1e-15 and abs(h.H_s[0]) < 1e-15


def test_hamiltonians_by_quadrature():
    fam = random_family(np.random.default_rng(3), 2)
    h = hamiltonians(fam)
    ell4 = trace_square_coeffs(fam).ell[:, 3]
    for i in range(fam.n):
        lam, s = fam.lam[i], fam.s[i]

        def tr2(z):
            A = lax_eval(fam, z)
            return trace(A @ A)

        assert abs(0.5 * circle_residue(tr2, lam) - h.H_lambda[i]) < 1e-8

        # root of Tr A^2 on the branch sqrt(l4) = sqrt(2) s
        def root(z):
            w = z - lam
            return np.sqrt(2) * s * np.sqrt(tr2(z) * w**4 / ell4[i]) / w**2

        hs = np.sqrt(2) * circle_residue(lambda z: root(z) / (z - lam), lam)
        assert abs(hs - h.H_s[i]) < 1e-8


def test_residue_sums_vanish_first(fam2):
    assert abs(residue_sums(fam2)[0]) < 1e-12


def test_schlesinger_diagonal_example(diag_fam):
    (dA0, dA1), = schlesinger_rhs(diag_fam, [0.0], [0.01])
    assert np.allclose(dA1, diag(-0.01, 0.01), atol=1e-15)
    assert np.allclose(dA0, 0, atol=1e-15)


def test_schlesinger_zero_velocity(fam2):
    for dA0, dA1 in schlesinger_rhs(fam2, [0, 0], [0, 0]):
        assert np.all(dA0 == 0) and np.all(dA1 == 0)
    assert advance_isomonodromy(fam2, [0, 0], [0, 0], 0.1).A0.tolist() == fam2.A0.tolist()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_schlesinger_translation_and_trace(seed):
    fam = random_family(np.random.default_rng(seed), 3)
    # moving all punctures together is a symmetry
    for dA0, dA1 in schlesinger_rhs(fam, np.ones(3), np.zeros(3)):
        assert np.allclose(dA0, 0, atol=1e-12) and np.allclose(dA1, 0, atol=1e-12)
    rng = np.random.default_rng(seed + 1)
    dl = rng.normal(size=3) + 1j * rng.normal(size=3)
    ds = rng.normal(size=3) + 1j * rng.normal(size=3)
    for dA0, dA1 in schlesinger_rhs(fam, dl, ds):
        assert abs(trace(dA0)) < 1e-12 and abs(trace(dA1)) < 1e-12


def test_diagonal_flow_scales_A1(diag_fam):
    moved, _, _ = deform(diag_fam, [2.0], [1.5], steps=32)
    assert np.allclose(moved.A1, diag(-1.5, 1.5), atol=1e-12)
    assert np.allclose(moved.A0, diag_fam.A0, atol=1e-12)


def test_flatness(fam2):
    h = 1e-4
    e = np.eye(2)
    one = advance_isomonodromy(advance_isomonodromy(fam2, e[0], [0, 0], h), e[1], [0, 0], h)
    two = advance_isomonodromy(advance_isomonodromy(fam2, e[1], [0, 0], h), e[0], [0, 0], h)
    assert np.max(np.abs(one.A0 - two.A0)) <= 1e-6
    assert np.max(np.abs(one.A1 - two.A1)) <= 1e-6


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_alpha_constant_along_deformation(seed):
    fam = random_family(np.random.default_rng(seed), 2)
    rng = np.random.default_rng(seed + 1)
    target = fam.lam + 0.2 * (rng.normal(size=2) + 1j * rng.normal(size=2))
    moved, _, _ = deform(fam, target, fam.s * (1 + 0.1j), steps=64)
    assert np.max(np.abs(moved.alpha - fam.alpha)) < 1e-7


def test_tau_loop_closes():
    fam = random_family(np.random.default_rng(1), 2)
    h = 1e-3
    corners = [np.array([0, 0]), np.array([h, 0]), np.array([h, 1j * h]), np.array([0, 1j * h]), np.array([0, 0])]
    total, cur = 0j, fam
    for a, b in zip(corners[:-1], corners[1:]):
        cur, dlog, _ = deform(cur, fam.lam + b, fam.s, steps=8)
        total += dlog
    assert abs(total) <= 1e-5


def test_tau_increment_examples(diag_fam):
    assert tau_increment(diag_fam, [0.3], [0.2]) == 0
    assert tau_increment(EMPTY, [], []) == 0


def test_integrate_Y_diagonal(diag_fam):
    Y = integrate_Y_in_z(diag_fam, [3.0, 4.0])
    assert abs(Y[0, 0] - Y11) < 1e-7 and abs(Y[1, 1] - Y22) < 1e-7
    assert abs(Y[0, 1]) < 1e-12 and abs(Y[1, 0]) < 1e-12


def test_integrate_Y_empty_family():
    Y0 = np.array([[1, 2], [3, 7]], dtype=complex)
    assert np.array_equal(integrate_Y_in_z(EMPTY, [0, 1], Y0), Y0)


def test_integrate_Y_contour_too_close(diag_fam):
    with pytest.raises(ContourTooClose):
        integrate_Y_in_z(diag_fam, [1.0, 3.0])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_integrate_Y_keeps_det(seed):
    fam = random_family(np.random.default_rng(seed), 2)
    Y = integrate_Y_in_z(fam, [5 - 1j, 5 + 5j, -4 + 5j])
    assert abs(det2(Y) - 1) < 1e-8


def test_deformation_compatible_with_z_transport(fam2):
    # transport in z then in parameters equals parameters then z
    zb, z1 = 4 - 1j, 4 + 4j
    target = fam2.lam + 0.1
    moved, _, Yb = deform(fam2, target, fam2.s, steps=64, z=zb)
    path_a = integrate_Y_in_z(moved, [zb, z1], Yb)
    Y1 = integrate_Y_in_z(fam2, [zb, z1])
    _, _, path_b = deform(fam2, target, fam2.s, steps=64, z=z1, Y0=Y1)
    assert np.max(np.abs(path_a - path_b)) < 1e-8


def test_family_validation():
    with pytest.raises(InvalidFamily):
        LaxFamily.create([1j], [diag(0.5, 0.4)], [diag(-1, 1)])
    with pytest.raises(InvalidFamily):
        LaxFamily.create([1j, 1j], [diag(0.5, -0.5)] * 2, [diag(-1, 1)] * 2)
    with pytest.raises(InvalidFamily):
        LaxFamily.create([1j], [diag(0.5, -0.5)], [[[0, 1], [0, 0]]])
    with pytest.raises(InvalidFamily):
        LaxFamily.create([1j], [diag(0.5, -0.5)], [diag(-1, 1)], [2.0])


def test_family_roundtrip(fam2):
    back = family_from_dict(family_to_dict(fam2))
    assert np.array_equal(back.A0, fam2.A0) and np.array_equal(back.lam, fam2.lam)
    import json

    again = family_from_json(json.dumps(family_to_dict(fam2)))
    assert np.allclose(again.s, fam2.s)


def test_alpha_of_diagonal_family(diag_fam):
    assert np.allclose(diag_fam.alpha, [-0.5])
    assert np.allclose(diagonal_family(2.0, a=0.5, s=1.0).s, [1.0])
