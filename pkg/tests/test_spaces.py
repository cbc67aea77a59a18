import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from halfspace import (BoundaryData, DyadicCubeFamily, FiniteAtomicSum, Grid,
                       HalfSpaceField, make_atom, molecule_check, norm,
                       poisson_extend, star_seminorm, validate_atom)
from halfspace.errors import BadDescriptor, CubeTooSmall, EmptyWindow
from halfspace.spaces import carleson_norms


@pytest.fixture(scope="module")
def grid():
    return Grid(n=2, N=1024, h=0.125)


@pytest.fixture(scope="module")
def cubes(grid):
    return DyadicCubeFamily(grid, 8)


def as_data(grid, values, **kw):
    return BoundaryData(grid=grid, samples=np.asarray(values, complex)[..., None],
                        **kw)


def clipped_log(grid, lam=1.0):
    rad = grid.radii()
    vals = np.where(rad > 0, np.log(np.maximum(lam * rad, 1e-300)),
                    np.log(lam * grid.h / 2))
    return as_data(grid, vals)


class TestNorms:
    def test_constants(self, grid, cubes):
        f = as_data(grid, np.full(grid.N, 3.0))
        assert norm(f, "bmo", cubes=cubes) == 0.0
        assert norm(f, "holder", theta=0.5) == 0.0
        assert np.isclose(norm(f, "slg", theta=0.5), 3.0)

    def test_lp_scaling(self, grid):
        f = as_data(grid, np.exp(-grid.axis() ** 2))
        for p in (1.0, 2.0, 4.0):
            assert np.isclose(norm(BoundaryData(grid=grid, samples=2 * f.samples),
                                   "lp", p=p), 2 * norm(f, "lp", p=p))

    def test_l2_gaussian_exact(self, grid):
        # ||exp(-x^2)||_2 = (pi/2)^(1/4)
        f = as_data(grid, np.exp(-grid.axis() ** 2))
        assert abs(norm(f, "lp", p=2.0) - (np.pi / 2) ** 0.25) < 1e-6

    def test_bmo_half_indicator_matches_bruteforce(self, grid, cubes):
        f = as_data(grid, (grid.axis() >= 0).astype(float))
        got = norm(f, "bmo", cubes=cubes)
        best = 0.0
        for level in cubes.levels:
            for index in cubes.iter_cubes(level):
                sl = cubes.cube_slices(level, index)
                block = f.samples[sl][..., 0].real
                best = max(best, np.abs(block - block.mean()).mean())
        assert got == pytest.approx(best)
        assert got == pytest.approx(0.5)

    def test_bmo_dilation_invariance_log(self, grid, cubes):
        base = norm(clipped_log(grid), "bmo", cubes=cubes)
        for lam in (0.25, 4.0):
            scaled = norm(clipped_log(grid, lam), "bmo", cubes=cubes)
            assert abs(scaled - base) / base < 0.05

    def test_bmo_constant_shift_invariance(self, grid, cubes):
        f = clipped_log(grid)
        g = BoundaryData(grid=grid, samples=f.samples + 7.5)
        assert norm(f, "bmo", cubes=cubes) == pytest.approx(
            norm(g, "bmo", cubes=cubes))

    def test_bmo_translation_invariance(self, grid, cubes):
        # exact when the shift maps every family cube onto a family cube
        # (a half-box roll); leaf-size shifts only move the norm slightly
        rng = np.random.default_rng(3)
        vals = np.repeat(rng.standard_normal(grid.N // 4), 4)
        f = as_data(grid, vals)
        g = as_data(grid, np.roll(vals, grid.N // 2))
        assert norm(f, "bmo", cubes=cubes) == pytest.approx(
            norm(g, "bmo", cubes=cubes))
        leaf = as_data(grid, np.roll(vals, cubes.block(cubes.depth)))
        got = norm(leaf, "bmo", cubes=cubes)
        base = norm(f, "bmo", cubes=cubes)
        assert abs(got - base) / base < 0.25

    def test_vmo_modulus_monotone(self, grid, cubes):
        f = clipped_log(grid)
        small = norm(f, "vmo_modulus", cubes=cubes, r=1.0)
        large = norm(f, "vmo_modulus", cubes=cubes, r=16.0)
        assert small <= large + 1e-15

    def test_holder_weierstrass_finite(self, grid):
        theta = 0.5
        base = 4 * np.pi / grid.R
        x = grid.axis()
        prof = sum(2.0 ** (-k * theta) * np.cos(base * 2 ** k * x)
                   for k in range(8))
        f = as_data(grid, prof)
        s = norm(f, "holder", theta=theta)
        assert 0.1 < s < 100.0

    def test_holder_inclusion_in_slg(self, grid):
        # Hoelder datum admitted with comparable growth norm
        x = grid.axis()
        f = as_data(grid, np.abs(np.sin(x)) ** 0.5)
        h = norm(f, "holder", theta=0.5)
        s = norm(f, "slg", theta=0.5)
        assert s <= 2.0 * (h + float(np.abs(f.samples[grid.N // 2]).max()))

    def test_morrey_constant(self, grid, cubes):
        f = as_data(grid, np.ones(grid.N))
        lam = 0.5
        # largest cube dominates: (side^(1-lam))^(1/p) with p = 2
        want = max((cubes.side(j) ** (1 - lam)) for j in cubes.levels) ** 0.5
        assert np.isclose(norm(f, "morrey", cubes=cubes, p=2.0, lam=lam), want)

    def test_bad_descriptor(self, grid):
        with pytest.raises(BadDescriptor):
            norm(as_data(grid, np.ones(grid.N)), "sobolev")

    @given(st.integers(0, 2 ** 31 - 1),
           st.sampled_from(["lp", "bmo", "slg", "holder"]))
    @settings(max_examples=16, deadline=None)
    def test_absolute_homogeneity(self, grid, cubes, seed, which):
        rng = np.random.default_rng(seed)
        vals = rng.standard_normal(grid.N) * np.exp(-0.1 * grid.axis() ** 2)
        f = as_data(grid, vals)
        g = BoundaryData(grid=grid, samples=-2.5j * f.samples)
        kw = {"lp": {"p": 2.0}, "bmo": {"cubes": cubes},
              "slg": {"theta": 0.5}, "holder": {"theta": 0.5}}[which]
        assert norm(g, which, **kw) == pytest.approx(2.5 * norm(f, which, **kw))


class TestStarSeminorm:
    def test_constant(self, grid):
        hts = np.geomspace(0.01, 8, 30)
        u = HalfSpaceField(grid=grid, heights=hts,
                           values=np.full((30, grid.N, 1), 2.0 + 0j))
        assert star_seminorm(u, 4.0) == pytest.approx(0.5)

    def test_linear_field_windowed(self, grid):
        rho = 3.0
        hts = np.array([0.5, 1.0, rho * (1 - 1e-9)])
        vals = hts[:, None, None] * np.ones((3, grid.N, 1))
        u = HalfSpaceField(grid=grid, heights=hts, values=vals.astype(complex))
        got = star_seminorm(u, rho, epsilon=0.1)
        assert abs(got - 1.0) < 1e-8

    def test_window_inequality(self, grid, rng):
        hts = np.geomspace(0.05, 12, 25)
        vals = (rng.standard_normal((25, grid.N, 1))
                * np.exp(-0.01 * grid.radii())[None, :, None]).astype(complex)
        u = HalfSpaceField(grid=grid, heights=hts, values=vals)
        for rho in (1.0, 3.0, 7.0):
            lhs = star_seminorm(u, rho, epsilon=0.1)
            rhs = np.sqrt(2) * star_seminorm(u, np.sqrt(2) * rho)
            assert lhs <= rhs + 1e-12

    def test_averaging_bound(self, grid, rng):
        # ||u||_{*,rho} <= (2/log 2) int_rho^{2 rho} ||u||_{*,t} dt/t
        hts = np.geomspace(0.05, 12, 25)
        vals = (rng.standard_normal((25, grid.N, 1))
                * np.exp(-0.02 * grid.radii())[None, :, None]).astype(complex)
        u = HalfSpaceField(grid=grid, heights=hts, values=vals)
        for rho in (1.0, 2.0, 4.0):
            ts = np.linspace(rho, 2 * rho, 65)
            integral = integrate.trapezoid(
                [star_seminorm(u, t) / t for t in ts], ts)
            assert star_seminorm(u, rho) <= (2.0 / np.log(2.0)) * integral + 1e-12

    def test_empty_window(self, grid):
        u = HalfSpaceField(grid=grid, heights=np.array([5.0]),
                           values=np.ones((1, grid.N, 1), complex))
        with pytest.raises(EmptyWindow):
            star_seminorm(u, 1.0, epsilon=0.5)


class TestAtoms:
    def test_haar_unit_cube(self, grid):
        atom = make_atom(grid, [0.0], 1.0, p=1.0, q=2.0, profile="haar")
        check = validate_atom(atom)
        assert check["valid"]
        # |Q| = 1: L2 bound is exactly 1 and the haar profile saturates it
        assert check["lq_bound"] == pytest.approx(1.0)
        assert check["lq_norm"] == pytest.approx(1.0, rel=1e-9)

    def test_mean_zero(self, grid):
        atom = make_atom(grid, [2.0], 1.5, p=0.95, q=2.0, profile="random",
                         seed=7)
        total = np.abs(atom.samples.sum(axis=tuple(range(grid.d)))
                       * grid.cell_volume).max()
        assert total <= atom.measure * 1e-10

    def test_scaled_cube_passes(self, grid):
        for lam in (0.5, 2.0):
            atom = make_atom(grid, [0.0], lam * 2.0, p=1.0, q=2.0,
                             profile="haar")
            assert validate_atom(atom)["valid"]

    def test_cube_too_small(self, grid):
        with pytest.raises(CubeTooSmall):
            make_atom(grid, [0.0], grid.h / 2, p=1.0, q=2.0)

    def test_quasi_norm(self, grid):
        a1 = make_atom(grid, [0.0], 1.0, p=1.0, q=2.0)
        a2 = make_atom(grid, [4.0], 2.0, p=1.0, q=2.0, profile="random")
        s = FiniteAtomicSum(p=1.0, q=2.0, terms=[(2.0, a1), (-1j, a2)])
        assert s.quasi_norm_bound == pytest.approx(3.0)
        f = s.as_boundary_data()
        assert f.meta["quasi_norm_bound"] == pytest.approx(3.0)

    def test_quasi_norm_scaling(self, grid):
        a1 = make_atom(grid, [0.0], 1.0, p=0.95, q=2.0)
        s1 = FiniteAtomicSum(p=0.95, q=2.0, terms=[(1.0, a1)])
        s2 = FiniteAtomicSum(p=0.95, q=2.0, terms=[(-3.0, a1)])
        assert s2.quasi_norm_bound == pytest.approx(3.0 * s1.quasi_norm_bound)


class TestMolecule:
    def test_vertical_derivative_molecule(self, lap2):
        rep = molecule_check(lap2, (0, 1), (0.0, 1.0), 0.95, 2.0,
                             two_sided_slope=True)
        assert rep.passed
        assert rep.value("cancellation_residual") < 1e-6
        assert abs(rep.fingerprint["fitted_slope"]
                   - rep.fingerprint["predicted_slope"]) < 0.15

    def test_shell_norms_match_bruteforce_oracle(self, lap2):
        # closed-form differentiated harmonic kernel, brute-force quadrature
        rep = molecule_check(lap2, (0, 1), (0.0, 1.0), 0.95, 2.0)
        ks, norms = rep.plot_data["shell_norms"].T
        f = lambda z: (1 / np.pi) * (z * z - 1) / (1 + z * z) ** 2
        for k, got in zip(ks, norms):
            lo, hi = 2.0 ** (k - 1), 2.0 ** k
            val, _ = integrate.quad(lambda z: f(z) ** 2, lo, hi)
            want = np.sqrt(2 * val)
            assert abs(got - want) / want < 0.05

    def test_translation_scale_covariance(self, lap2):
        r1 = molecule_check(lap2, (0, 1), (0.0, 1.0), 0.95, 2.0)
        r2 = molecule_check(lap2, (0, 1), (10.0, 2.0), 0.95, 2.0)
        c1 = r1.value("central_ball_constant")
        c2 = r2.value("central_ball_constant")
        assert abs(c1 - c2) / c1 < 0.05

    def test_tangential_derivative_beats_bound(self, lap2):
        rep = molecule_check(lap2, (1, 0), (0.0, 1.0), 0.95, 2.0)
        assert rep.passed      # one-sided: faster decay is compliant


class TestCarleson:
    def test_constant_zero(self, lap2, grid, cubes):
        f = as_data(grid, np.full(grid.N, 5.0))
        u = poisson_extend(lap2, f, np.geomspace(grid.h / 4, 2 * grid.R, 60),
                           gradient=True)
        c, size, profile = carleson_norms(u, cubes)
        assert c == 0.0 and size == 0.0

    def test_log_comparable_to_bmo(self, lap2, grid, cubes):
        f = clipped_log(grid)
        u = poisson_extend(lap2, f, np.geomspace(grid.h / 4, 2 * grid.R, 60),
                           gradient=True)
        _, size, _ = carleson_norms(u, cubes)
        b = norm(f, "bmo", cubes=cubes)
        assert 0.2 < size / b < 5.0

    def test_vanishing_profile_for_smooth(self, lap2, grid, cubes):
        x = grid.axis()
        w = np.exp(-(x / 8) ** 2)
        f = as_data(grid, w)
        u = poisson_extend(lap2, f, np.geomspace(grid.h / 4, 2 * grid.R, 60),
                           gradient=True)
        _, size, profile = carleson_norms(u, cubes)
        sides = [s for s, _ in profile]
        vals = dict(profile)
        assert vals[min(sides)] < 0.1 * vals[max(sides)]

    def test_gradient_required(self, lap2, grid, cubes):
        f = as_data(grid, np.exp(-grid.axis() ** 2))
        u = poisson_extend(lap2, f, np.geomspace(grid.h / 4, 2 * grid.R, 30))
        from halfspace.errors import InsufficientLevels
        with pytest.raises(InsufficientLevels):
            carleson_norms(u, cubes)


class TestMatrixMolecule:
    def test_lame_vertical_molecule(self, lame2):
        rep = molecule_check(lame2, (0, 1), (0.0, 1.0), 0.95, 2.0)
        assert rep.passed, "\n".join(rep.summary_lines())
        assert rep.value("cancellation_residual") < 1e-6


class TestAtomSupNormalised:
    def test_sup_normalised_atom(self, grid):
        # q = inf: the L^q bound becomes measure^(-1/p)
        atom = make_atom(grid, [0.0], 2.0, p=1.0, q=np.inf, profile="haar")
        check = validate_atom(atom)
        assert check["valid"]
        assert check["lq_bound"] == pytest.approx(atom.measure ** -1.0)


class TestVmoGuard:
    def test_no_small_cube(self, grid, cubes):
        from halfspace.errors import CubeTooSmall
        f = as_data(grid, np.ones(grid.N))
        with pytest.raises(CubeTooSmall):
            norm(f, "vmo_modulus", cubes=cubes, r=grid.h / 8)
