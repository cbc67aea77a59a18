import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfspace import (BadShape, EllipticityViolation, build_system,
                       characteristic_roots, ellipticity_constant,
                       symbol_pencil)


def test_laplacian_margin_exact():
    for n in (2, 3, 4):
        sys_ = build_system("laplacian", n=n)
        assert abs(ellipticity_constant(sys_) - 1.0) < 1e-12


def test_lame_accepts_and_margin(lame2):
    # analytic margin: min(Re mu, Re(2 mu + lambda)) over the sphere sweep
    assert abs(lame2.ellipticity_margin - 1.0) < 1e-10


def test_lame_rejects_bad_moduli():
    with pytest.raises(EllipticityViolation):
        build_system("lame", n=2, mu=1.0, lam=-3.0)


def test_indefinite_scalar_rejected():
    # brute-force sweep finds Re[a xi xi] < 0 on the sphere
    with pytest.raises(EllipticityViolation):
        build_system("scalar", A=[[1.0, 0.0], [0.0, -2.0]])


def test_complex_offdiagonal_scalar_is_elliptic():
    # Re[xi1^2 + 10i xi1 xi2 + xi2^2] = |xi|^2: brute-force sweep agrees
    sys_ = build_system("scalar", A=[[1.0, 10j], [0.0, 1.0]])
    assert abs(sys_.ellipticity_margin - 1.0) < 1e-10


def test_raw_tensor_shape_validation():
    with pytest.raises(BadShape):
        build_system("raw", tensor=np.zeros((2, 3, 2, 2)))
    with pytest.raises(BadShape):
        build_system("raw", tensor=np.full((1, 1, 2, 2), np.nan))


def test_roots_laplacian_2d(lap2):
    split = characteristic_roots(symbol_pencil(lap2, [1.0]))
    assert np.allclose(split.upper, [1j])
    assert np.allclose(split.lower, [-1j])


def test_roots_laplacian_3d(lap3):
    # |xi'| = 5 from the 3-4 right triangle
    split = characteristic_roots(symbol_pencil(lap3, [3.0, 4.0]))
    assert np.allclose(split.upper, [5j], atol=1e-10)


def test_roots_lame_double(lame2):
    split = characteristic_roots(symbol_pencil(lame2, [1.0]))
    assert np.allclose(split.upper, [1j, 1j], atol=1e-6)
    assert np.allclose(split.lower, [-1j, -1j], atol=1e-6)
    assert split.margin > 0.999


def test_roots_need_nonzero_frequency(lap2):
    with pytest.raises(BadShape):
        characteristic_roots(symbol_pencil(lap2, [0.0]))


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([0.5, 2.0, 3.7]))
@settings(max_examples=25, deadline=None)
def test_symbol_homogeneity(seed, lam):
    rng = np.random.default_rng(seed)
    n = rng.integers(2, 4)
    # elliptic perturbation of the identity tensor
    tensor = np.eye(n)[None, None] + 0.2 * (
        rng.standard_normal((1, 1, n, n)) + 1j * rng.standard_normal((1, 1, n, n)))
    sys_ = build_system("raw", tensor=tensor)
    xi = rng.standard_normal(n)
    lhs = sys_.symbol(lam * xi)
    rhs = lam ** 2 * sys_.symbol(xi)
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(np.abs(rhs).max(), 1.0)


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([0.5, 2.0]))
@settings(max_examples=25, deadline=None)
def test_root_scaling(seed, lam):
    rng = np.random.default_rng(seed)
    sys_ = build_system("lame", n=2, mu=1.0 + 0.3j, lam=0.5)
    xi = rng.uniform(0.2, 3.0) * rng.choice([-1.0, 1.0], size=1)
    base = characteristic_roots(symbol_pencil(sys_, xi))
    scaled = characteristic_roots(symbol_pencil(sys_, lam * xi))
    assert np.allclose(np.sort_complex(scaled.upper),
                       np.sort_complex(lam * base.upper), atol=1e-8)


def test_split_always_balanced(lame2, complex_scalar, rng):
    for sys_ in (lame2, complex_scalar):
        for _ in range(1000):
            xi = rng.standard_normal(sys_.n - 1)
            if np.linalg.norm(xi) < 1e-6:
                continue
            split = characteristic_roots(symbol_pencil(sys_, xi))
            assert len(split.upper) == sys_.M
            assert len(split.lower) == sys_.M


def test_pencil_matrices(lame2):
    pencil = symbol_pencil(lame2, [2.0])
    # M2 row: vertical-vertical coefficients; full symbol at (2, tau)
    for tau in (0.7, 1.3 + 0.2j):
        direct = lame2.symbol(np.array([2.0, 0.0])) if tau == 0 else None
        lhs = pencil(tau)
        a = lame2.coeffs
        xi = np.array([2.0, tau], dtype=complex)
        rhs = np.einsum("abrs,r,s->ab", a, xi, xi)
        assert np.abs(lhs - rhs).max() < 1e-12
