"""Fiber assembly, band structure, threshold extraction, gap counting."""

import numpy as np
import pytest
import scipy.sparse as sp

from wellspec import (BandStructure, ConfigurationError, DirectNumerics, FiberProblem,
                      ThresholdError, assemble_fiber, build_array, build_grid,
                      count_gaps, essential_threshold, ground_energy, lowest_band,
                      make_profile)
from wellspec.floquet import _laplace_1d, _lowest_eigs


def small_fiber(theta, profile=None, h=0.1, L=4.0):
    prof = profile or make_profile("gaussian_truncated", nu=2, depth=5.0, sigma=0.5,
                                   support_radius=1.0)
    return FiberProblem(profile=prof, spacing=5.0, theta=theta,
                        transverse_cutoff=L, grid_step=h)


class TestFiberProblem:
    def test_validation(self):
        prof = make_profile("gaussian_truncated", nu=2, depth=5.0, sigma=0.5,
                            support_radius=1.0)
        with pytest.raises(ConfigurationError):
            FiberProblem(profile=prof, spacing=5.0, theta=0.0, transverse_cutoff=3.0,
                         grid_step=0.1)   # L < 4R
        with pytest.raises(ConfigurationError):
            FiberProblem(profile=prof, spacing=5.0, theta=0.0, transverse_cutoff=4.0,
                         grid_step=0.3)   # h > sigma/2
        with pytest.raises(ConfigurationError):
            FiberProblem(profile=prof, spacing=5.0, theta=0.0, transverse_cutoff=4.0,
                         grid_step=0.13)  # does not divide the cell
        prof3 = make_profile("gaussian_truncated", nu=3, depth=5.0, sigma=0.5,
                             support_radius=1.0)
        with pytest.raises(ConfigurationError):
            FiberProblem(profile=prof3, spacing=5.0, theta=0.0, transverse_cutoff=4.0,
                         grid_step=0.1)


class TestAssembleFiber:
    def test_theta_zero_real_symmetric(self):
        mat = assemble_fiber(small_fiber(0.0))
        assert not np.iscomplexobj(mat.toarray())
        assert (mat - mat.T).nnz == 0

    def test_hermitian_at_generic_theta(self):
        mat = assemble_fiber(small_fiber(np.pi / 3))
        diff = mat - mat.conjugate().T
        assert np.abs(diff.toarray()).max() == 0.0

    def test_near_zero_coupling_nonnegative_ground(self):
        prof = make_profile("gaussian_truncated", nu=2, depth=5.0, sigma=0.5,
                            support_radius=1.0, coupling=1e-12)
        vals, _ = _lowest_eigs(assemble_fiber(small_fiber(0.0, profile=prof)), 2,
                               -2.0, 0.0)
        assert vals[0] >= -1e-10

    def test_theta_zero_equals_neumann_cell(self):
        # mirror-symmetric well: the periodic ground coincides with the
        # Neumann-walled cell exactly, node for node
        fp = small_fiber(0.0, h=0.05, L=4.0)
        vals, _ = _lowest_eigs(assemble_fiber(fp), 1, -6.0, 0.0)
        neumann = _cell_with_ends(fp, "neumann")
        nvals, _ = _lowest_eigs(neumann, 1, -6.0, 0.0)
        assert vals[0] == pytest.approx(nvals[0], abs=1e-9)

    def test_theta_pi_equals_dirichlet_cell(self):
        fp = small_fiber(np.pi, h=0.05, L=4.0)
        vals, _ = _lowest_eigs(assemble_fiber(fp), 1, -6.0, 0.0)
        dirichlet = _cell_with_ends(fp, "dirichlet")
        dvals, _ = _lowest_eigs(dirichlet, 1, -6.0, 0.0)
        assert vals[0] == pytest.approx(dvals[0], abs=1e-9)


def _cell_with_ends(fp, bc):
    nx, ny = fp.shape
    h = fp.grid_step
    xs, ys = fp.node_axes()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    v = fp.profile.potential(np.column_stack([X.ravel(), Y.ravel()]))
    lx = _laplace_1d(nx, h, bc)
    ly = _laplace_1d(ny, h, "dirichlet")
    return (sp.kron(lx, sp.identity(ny)) + sp.kron(sp.identity(nx), ly)
            - sp.diags(v)).tocsr()


class TestLowestBand:
    @pytest.fixture(scope="class")
    def band(self):
        prof = make_profile("gaussian_truncated", nu=2, depth=5.0, sigma=0.5,
                            support_radius=1.0)
        thetas = np.linspace(-np.pi, np.pi, 8, endpoint=False)
        return lowest_band(prof, 5.0, thetas, 2, 4.0, 0.1)

    def test_lowest_band_negative(self, band):
        assert band.energies[:, 0].max() < 0.0

    def test_band_even_in_theta(self, band):
        for i, theta in enumerate(band.thetas):
            j = np.argmin(np.abs(band.thetas + theta))
            assert band.energies[i, 0] == pytest.approx(band.energies[j, 0], rel=1e-8)

    def test_lower_edge_at_zero_quasimomentum(self, band):
        i0 = np.argmin(np.abs(band.thetas))
        assert band.energies[:, 0].min() == band.energies[i0, 0]

    def test_continuity_between_samples(self, band):
        # adjacent-sample jumps bounded by the sweep resolution
        e = band.energies[:, 0]
        width = e.max() - e.min()
        dtheta = 2 * np.pi / len(band.thetas)
        jumps = np.abs(np.diff(e))
        assert jumps.max() <= 2.0 * width * dtheta


class TestEssentialThreshold:
    def test_threshold_regression(self, paper_profile, grid12, floquet_threshold):
        kappa0, psi0 = floquet_threshold
        assert kappa0 == pytest.approx(0.89072031, abs=1e-6)
        assert -kappa0 ** 2 < 0.0

    def test_array_threshold_below_single_well(self, floquet_threshold,
                                               single_well_direct):
        kappa0, _ = floquet_threshold
        assert -kappa0 ** 2 < single_well_direct[0.05]

    def test_psi0_strictly_positive(self, floquet_threshold):
        _, psi0 = floquet_threshold
        assert np.all(psi0 > 0)

    def test_large_spacing_approaches_single_well(self, paper_profile, grid12,
                                                  single_well_direct):
        e1 = single_well_direct[0.05]
        k12, _ = essential_threshold(paper_profile, 12.0, grid12, 6.0, 0.05)
        k5, _ = essential_threshold(paper_profile, 5.0, grid12, 6.0, 0.05)
        assert abs(-k12 ** 2 - e1) < abs(-k5 ** 2 - e1)

    def test_no_negative_band_raises(self, grid12):
        prof = make_profile("gaussian_truncated", nu=2, depth=5.0, sigma=0.5,
                            support_radius=1.0, coupling=1e-12)
        with pytest.raises(ThresholdError):
            essential_threshold(prof, 5.0, grid12, 6.0, 0.1)


class TestCountGaps:
    def test_overlapping_bands_no_gap(self):
        band = BandStructure(thetas=np.array([0.0, 1.0]),
                             energies=np.array([[-2.0, -1.5], [-1.6, -1.0]]))
        # bands [-2, -1.6] and [-1.5, -1.0] leave (-1.6, -1.5) and (-1.0, 0) open
        assert count_gaps(band) == 2

    def test_contiguous_bands(self):
        band = BandStructure(thetas=np.array([0.0, 1.0]),
                             energies=np.array([[-2.0, -1.0], [-1.5, -0.0]]))
        assert count_gaps(band) == 0

    def test_positive_bands_ignored(self):
        band = BandStructure(thetas=np.array([0.0, 1.0]),
                             energies=np.array([[-2.0, 0.5], [-1.9, 0.7]]))
        # single negative band, gap up to zero
        assert count_gaps(band) == 1
