"""Band structure of the straight periodic array via fiber operators (nu = 2).

The periodic chain decomposes over the quasimomentum theta in [-pi, pi) into
fiber operators on one periodicity cell (-a/2, a/2) x (-L, L).  Each fiber
carries the momentum-shifted form (-i d/dx1 - theta/a)^2 - d^2/dxperp^2 - V
with periodic conditions in x1 and Dirichlet walls at |xperp| = L; the
longitudinal shift is discretized as a phase on the hopping terms, which
keeps the matrix Hermitian and reduces to the plain stencil at theta = 0.

The spectral threshold of the infinite array is the minimum of the lowest
band; for mirror-symmetric wells it sits at theta = 0 and the ground fiber
eigenfunction psi0 (positive) is the generalized eigenfunction there.

Grids are cell-centered with the step dividing both a and 2L exactly, so the
chain solver on midplane-walled boxes reproduces fiber energies without any
alignment error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .bs_solver import ConvergenceError, QuadratureGrid
from .geometry import WellProfile


class ThresholdError(RuntimeError):
    """The periodic array has no negative spectrum at these parameters."""


class ConfigurationError(ValueError):
    """Grid or domain parameters are unusable (too coarse, too small...)."""


@dataclass(frozen=True)
class FiberProblem:
    """One quasimomentum fiber on the periodicity slab, nu = 2 only."""

    profile: WellProfile
    spacing: float
    theta: float               # dimensionless, in [-pi, pi)
    transverse_cutoff: float   # L, Dirichlet walls at +-L
    grid_step: float

    def __post_init__(self):
        if self.profile.nu != 2:
            raise ConfigurationError("fiber problems are implemented for nu = 2 only")
        if self.spacing <= 2 * self.profile.rho:
            raise ConfigurationError("spacing must exceed 2*rho")
        if self.transverse_cutoff < 4 * self.profile.radius:
            raise ConfigurationError(
                f"transverse cutoff L={self.transverse_cutoff} must be >= 4R="
                f"{4 * self.profile.radius}")
        if self.profile.kind == "gaussian_truncated" and self.grid_step > self.profile.sigma / 2:
            raise ConfigurationError(
                f"grid step {self.grid_step} too coarse for sigma={self.profile.sigma} "
                f"(need h <= sigma/2)")
        for name, length in (("spacing", self.spacing),
                             ("2L", 2 * self.transverse_cutoff)):
            ratio = length / self.grid_step
            if abs(ratio - round(ratio)) > 1e-9:
                raise ConfigurationError(
                    f"grid step {self.grid_step} must divide {name} = {length} exactly")

    @property
    def shape(self):
        nx = int(round(self.spacing / self.grid_step))
        ny = int(round(2 * self.transverse_cutoff / self.grid_step))
        return nx, ny

    def node_axes(self):
        nx, ny = self.shape
        h = self.grid_step
        xs = -0.5 * self.spacing + (np.arange(nx) + 0.5) * h
        ys = -self.transverse_cutoff + (np.arange(ny) + 0.5) * h
        return xs, ys


def _laplace_1d(n: int, h: float, bc: str) -> sp.csr_matrix:
    """Cell-centered 1D second-difference matrix for -d^2/dx^2."""
    main = np.full(n, 2.0)
    off = np.full(n - 1, -1.0)
    mat = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if bc == "dirichlet":
        mat[0, 0] = 3.0
        mat[-1, -1] = 3.0
    elif bc == "neumann":
        mat[0, 0] = 1.0
        mat[-1, -1] = 1.0
    elif bc == "periodic":
        mat[0, -1] -= 1.0
        mat[-1, 0] -= 1.0
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    return sp.csr_matrix(mat) / h ** 2


def _laplace_1d_bloch(n: int, h: float, phase: complex) -> sp.csr_matrix:
    """Momentum-shifted longitudinal operator: hopping carries the Bloch phase."""
    main = np.full(n, 2.0, dtype=complex)
    fwd = np.full(n - 1, -phase, dtype=complex)
    bwd = np.full(n - 1, -np.conj(phase), dtype=complex)
    mat = sp.diags([bwd, main, fwd], [-1, 0, 1], format="lil", dtype=complex)
    mat[0, -1] = -np.conj(phase)
    mat[-1, 0] = -phase
    return sp.csr_matrix(mat) / h ** 2


def assemble_fiber(fp: FiberProblem) -> sp.csr_matrix:
    """Sparse Hermitian fiber matrix; real symmetric when theta = 0."""
    nx, ny = fp.shape
    h = fp.grid_step
    xs, ys = fp.node_axes()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    v = fp.profile.potential(pts)
    q = fp.theta / fp.spacing
    if fp.theta == 0.0:
        lx = _laplace_1d(nx, h, "periodic")
    else:
        lx = _laplace_1d_bloch(nx, h, np.exp(1j * q * h))
    ly = _laplace_1d(ny, h, "dirichlet")
    ham = sp.kron(lx, sp.identity(ny)) + sp.kron(sp.identity(nx), ly) - sp.diags(v)
    return ham.tocsr()


def _lowest_eigs(matrix, k: int, sigma_floor: float, theta: float):
    try:
        vals, vecs = eigsh(matrix.tocsc(), k=k, sigma=sigma_floor, which="LM")
    except ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"fiber eigensolver failed to converge at theta={theta:.6f}: {exc}") from exc
    order = np.argsort(vals.real)
    return vals.real[order], vecs[:, order]


@dataclass(frozen=True)
class BandStructure:
    """Sampled band energies: energies[i, b] is band b at thetas[i]."""

    thetas: np.ndarray
    energies: np.ndarray

    @property
    def n_bands(self) -> int:
        return self.energies.shape[1]

    def band_edges(self):
        """Per-band (min, max) over the sampled quasimomenta."""
        return [(float(self.energies[:, b].min()), float(self.energies[:, b].max()))
                for b in range(self.n_bands)]


def lowest_band(profile: WellProfile, spacing: float, thetas, n_bands: int,
                transverse_cutoff: float, grid_step: float) -> BandStructure:
    """Sweep the fibers over a theta grid, keeping the lowest n_bands eigenvalues."""
    thetas = np.asarray(thetas, dtype=float)
    out = np.empty((thetas.size, n_bands))
    floor = -(_max_potential(profile) + 1.0)
    for idx, theta in enumerate(thetas):
        fp = FiberProblem(profile=profile, spacing=spacing, theta=float(theta),
                          transverse_cutoff=transverse_cutoff, grid_step=grid_step)
        vals, _ = _lowest_eigs(assemble_fiber(fp), n_bands, floor, theta)
        out[idx] = vals[:n_bands]
    return BandStructure(thetas=thetas, energies=out)


def _max_potential(profile: WellProfile) -> float:
    if profile.kind == "gaussian_truncated":
        return profile.coupling * profile.depth
    probe = np.linspace(-0.98, 0.98, 41)
    xx, yy = np.meshgrid(profile.rho * probe, profile.radius * probe, indexing="ij")
    vals = profile.potential(np.column_stack([xx.ravel(), yy.ravel()]))
    return float(np.max(vals))


def essential_threshold(profile: WellProfile, spacing: float, grid: QuadratureGrid,
                        transverse_cutoff: float, grid_step: float,
                        mirror_symmetric: bool = True, thetas=None):
    """Threshold kappa0 of the periodic array and psi0 resampled onto `grid`.

    For mirror-symmetric wells the band minimum sits at theta = 0, which is
    solved directly; otherwise supply a theta grid to scan.  Returns
    (kappa0, psi0_values); psi0 is positive and normalized to unit L2 norm
    over the slab.  Raises ThresholdError when the lowest band is
    nonnegative.
    """
    if mirror_symmetric:
        theta_min = 0.0
    else:
        if thetas is None:
            raise ValueError("non-symmetric profiles need an explicit theta grid")
        band = lowest_band(profile, spacing, thetas, 1, transverse_cutoff, grid_step)
        theta_min = float(band.thetas[np.argmin(band.energies[:, 0])])
    fp = FiberProblem(profile=profile, spacing=spacing, theta=theta_min,
                      transverse_cutoff=transverse_cutoff, grid_step=grid_step)
    vals, vecs = _lowest_eigs(assemble_fiber(fp), 2, -(_max_potential(profile) + 1.0),
                              theta_min)
    e0 = float(vals[0])
    if e0 >= 0:
        raise ThresholdError(
            f"lowest band energy {e0:.6g} is nonnegative; no threshold below zero")
    vec = np.real(vecs[:, 0])
    nx, ny = fp.shape
    psi = vec.reshape(nx, ny) / fp.grid_step   # unit L2 over the slab
    if psi.sum() < 0:
        psi = -psi
    xs, ys = fp.node_axes()
    spline = RectBivariateSpline(xs, ys, psi)
    psi0 = spline.ev(grid.nodes[:, 0], grid.nodes[:, 1])
    return float(np.sqrt(-e0)), psi0


def count_gaps(band: BandStructure, tol: float = 1e-12) -> int:
    """Open intervals inside (E0, 0) left uncovered by the sampled band ranges."""
    edges = [(lo, hi) for (lo, hi) in band.band_edges() if lo < 0.0]
    if not edges:
        return 0
    edges.sort()
    e0 = edges[0][0]
    gaps = 0
    covered_to = edges[0][1]
    for lo, hi in edges[1:]:
        if lo > covered_to + tol and covered_to < 0.0:
            gaps += 1
        covered_to = max(covered_to, hi)
    if covered_to < -tol:
        gaps += 1   # gap from the top covered energy up to zero
    return gaps
