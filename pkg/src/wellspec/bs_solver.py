"""Birman-Schwinger block operator over well supports and its spectral root.

The operator V^(1/2) (-Delta + kappa^2)^(-1) V^(1/2) acts block-wise between
well supports; block (i, j) has the weakly singular kernel

    V^(1/2)(xi) R_kappa(|xi - xi' + y_i - y_j|) V^(1/2)(xi')

discretized by Nystrom on a tensor Gauss-Legendre grid per well.  A number
-kappa^2 below the essential-spectrum threshold is an eigenvalue of the
Hamiltonian exactly when the largest eigenvalue mu_max of this operator
equals one; since mu_max is strictly decreasing in kappa, the root is found
by bisection.

Diagonal blocks hit the kernel singularity at xi = xi'; the self entry uses
the exact average of R_kappa over a ball whose volume equals the quadrature
weight (closed form for nu = 2, 3; radial quadrature otherwise).  Blocks
depend on the center difference y_i - y_j only, which the assembler caches.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma as _gamma

import numpy as np

from .geometry import ArrayGeometry, GeometryError, WellProfile
from .specialfn import KernelParams, bessel_k_scaled, resolvent_kernel


class ConvergenceError(RuntimeError):
    """Eigensolver or root finder failed to converge; message carries diagnostics."""


class BracketError(ValueError):
    """Invalid kappa bracket for the ground-state bisection."""


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor Gauss-Legendre rule on the well-support box (-rho,rho) x (-R,R)^(nu-1)."""

    nodes: np.ndarray    # (n, nu)
    weights: np.ndarray  # (n,)
    counts: tuple

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.weights.size


def build_grid(profile: WellProfile, n_axis) -> QuadratureGrid:
    """Tensor Gauss-Legendre grid; n_axis is one count or a per-axis sequence."""
    nu = profile.nu
    if np.isscalar(n_axis):
        counts = (int(n_axis),) * nu
    else:
        counts = tuple(int(n) for n in n_axis)
        if len(counts) != nu:
            raise ValueError(f"n_axis needs {nu} entries, got {len(counts)}")
    if any(n < 2 for n in counts):
        raise ValueError(f"need at least 2 nodes per axis, got {counts}")
    half = [profile.rho] + [profile.radius] * (nu - 1)
    axes, wts = [], []
    for n, hl in zip(counts, half):
        x, w = np.polynomial.legendre.leggauss(n)
        axes.append(hl * x)
        wts.append(hl * w)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([m.ravel() for m in mesh])
    wmesh = np.meshgrid(*wts, indexing="ij")
    weights = np.ones(nodes.shape[0])
    for w in wmesh:
        weights = weights * w.ravel()
    return QuadratureGrid(nodes=nodes, weights=weights, counts=counts)


def _selfcell_average(profile_nu: int, kappa: float, weights: np.ndarray) -> np.ndarray:
    """Average of R_kappa over the volume-matched ball, one value per node weight."""
    w = np.asarray(weights, dtype=float)
    if profile_nu == 2:
        rad = np.sqrt(w / np.pi)
        x = kappa * rad
        # int_{B_2(r)} K0(kappa|u|)/(2pi) du = (1 - x K1(x)) / kappa^2
        small = x < 1e-3
        xk1 = np.where(small, 1.0, x * np.exp(-x) * bessel_k_scaled(1.0, np.maximum(x, 1e-3)))
        integral = (1.0 - xk1) / kappa ** 2
        if np.any(small):
            xs = x[small]
            # 1 - x K1(x) = (x^2/4) (1 - 2 gamma_E - 2 ln(x/2)) + O(x^4 ln x)
            integral[small] = (xs ** 2 / 4.0) * (1.0 - 2.0 * 0.5772156649015329
                                                 - 2.0 * np.log(xs / 2.0)) / kappa ** 2
        return integral / w
    if profile_nu == 3:
        rad = (3.0 * w / (4.0 * np.pi)) ** (1.0 / 3.0)
        x = kappa * rad
        # int_{B_3(r)} e^(-kappa s)/(4 pi s) du = (1 - (1+x) e^-x) / kappa^2
        integral = -np.expm1(-x) / kappa ** 2 - x * np.exp(-x) / kappa ** 2
        return integral / w
    # general nu: surface area * int_0^rad R(s) s^(nu-1) ds by Gauss-Legendre
    nu = profile_nu
    rad = (w * _gamma(nu / 2.0 + 1.0)) ** (1.0 / nu) / np.sqrt(np.pi)
    surface = 2.0 * np.pi ** (nu / 2.0) / _gamma(nu / 2.0)
    gl_x, gl_w = np.polynomial.legendre.leggauss(64)
    p = KernelParams(nu, kappa)
    out = np.empty_like(w)
    for idx, r_b in enumerate(rad):
        s = 0.5 * r_b * (gl_x + 1.0)
        ds = 0.5 * r_b * gl_w
        out[idx] = surface * np.sum(resolvent_kernel(p, s) * s ** (nu - 1) * ds)
    return out / w


def _block_for_offset(profile: WellProfile, grid: QuadratureGrid, offset: np.ndarray,
                      kappa: float) -> np.ndarray:
    sqrt_wv = np.sqrt(grid.weights * profile.potential(grid.nodes))
    # r^2 = |p + offset|^2 + |q|^2 - 2 (p + offset).q, formed without an (n, n, nu) array
    shifted = grid.nodes + offset[None, :]
    r2 = (np.sum(shifted ** 2, axis=1)[:, None]
          + np.sum(grid.nodes ** 2, axis=1)[None, :]
          - 2.0 * shifted @ grid.nodes.T)
    np.maximum(r2, 0.0, out=r2)
    r = np.sqrt(r2)
    p = KernelParams(profile.nu, kappa)
    if np.all(offset == 0.0):
        iu = np.arange(grid.size)
        r[iu, iu] = 1.0
        kern = resolvent_kernel(p, r)
        kern[iu, iu] = _selfcell_average(profile.nu, kappa, grid.weights)
    else:
        kern = resolvent_kernel(p, r)
    return sqrt_wv[:, None] * kern * sqrt_wv[None, :]


def assemble_block(g: ArrayGeometry, q: QuadratureGrid, i: int, j: int,
                   kappa: float) -> np.ndarray:
    """Dense block between wells with labels i and j (labels run -M..M)."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    m = g.half_count
    for label in (i, j):
        if not -m <= label <= m:
            raise ValueError(f"well label {label} outside [{-m}, {m}]")
    offset = g.centers[i + m] - g.centers[j + m]
    return _block_for_offset(g.profile, q, offset, kappa)


@dataclass
class BSBlockOperator:
    """Assembled symmetric PSD block operator at fixed kappa.

    Physically identical blocks (same center difference) share storage; far
    pairs whose norm would underflow the tail tolerance are dropped.
    """

    kappa: float
    geometry: ArrayGeometry
    grid: QuadratureGrid
    _distinct: dict          # canonical offset key -> matrix
    _pairs: list             # (i_pos, j_pos, key, transposed)

    @property
    def dim(self) -> int:
        return self.geometry.count * self.grid.size

    def block(self, i: int, j: int) -> np.ndarray:
        """Block for well labels (i, j); zero matrix if dropped as negligible."""
        m = self.geometry.half_count
        target = (i + m, j + m)
        for (pi, pj, key, tr) in self._pairs:
            if (pi, pj) == target:
                mat = self._distinct[key]
                return mat.T if tr else mat
        return np.zeros((self.grid.size, self.grid.size))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        nq = self.grid.size
        out = np.zeros_like(x)
        for (ip, jp, key, tr) in self._pairs:
            mat = self._distinct[key]
            seg = x[jp * nq:(jp + 1) * nq]
            if tr:
                out[ip * nq:(ip + 1) * nq] += mat.T @ seg
            else:
                out[ip * nq:(ip + 1) * nq] += mat @ seg
        return out

    def dense(self) -> np.ndarray:
        """Full matrix; intended for small problems and tests."""
        nq = self.grid.size
        n = self.dim
        full = np.zeros((n, n))
        for (ip, jp, key, tr) in self._pairs:
            mat = self._distinct[key]
            full[ip * nq:(ip + 1) * nq, jp * nq:(jp + 1) * nq] = mat.T if tr else mat
        return full


def _offset_key(offset: np.ndarray):
    return tuple(np.round(offset, 12))


def assemble_operator(g: ArrayGeometry, q: QuadratureGrid, kappa: float,
                      tail_tol: float = 1e-18) -> BSBlockOperator:
    """All blocks of K(-kappa^2) for the chain, deduplicated by center offset.

    Pairs with separation d where exp(-kappa d) < tail_tol are omitted; their
    norms are below that factor times the single-well scale.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    cutoff = -np.log(tail_tol) / kappa if tail_tol > 0 else np.inf
    count = g.count
    distinct = {}
    pairs = []
    for ip in range(count):
        for jp in range(count):
            offset = g.centers[ip] - g.centers[jp]
            dist = float(np.linalg.norm(offset))
            if dist > cutoff:
                continue
            key = _offset_key(offset)
            tkey = _offset_key(-offset)
            if key in distinct:
                pairs.append((ip, jp, key, False))
            elif tkey in distinct:
                pairs.append((ip, jp, tkey, True))
            else:
                distinct[key] = _block_for_offset(g.profile, q, offset, kappa)
                pairs.append((ip, jp, key, False))
    return BSBlockOperator(kappa=kappa, geometry=g, grid=q,
                           _distinct=distinct, _pairs=pairs)


def principal_eigenvalue(op: BSBlockOperator, tol: float = 1e-10,
                         max_iterations: int = 200000, v0=None):
    """Largest eigenvalue mu_max by power iteration with Rayleigh quotients.

    Returns (mu, eigenvector).  Stops when the Rayleigh quotient is stable to
    `tol` relative and the residual confirms it; raises ConvergenceError at
    the iteration cap.
    """
    n = op.dim
    v = np.ones(n) / np.sqrt(n) if v0 is None else np.asarray(v0, dtype=float).copy()
    v /= np.linalg.norm(v)
    mu_prev = np.inf
    for it in range(1, max_iterations + 1):
        w = op.matvec(v)
        mu = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0, v
        residual = np.linalg.norm(w - mu * v)
        v = w / norm_w
        if abs(mu - mu_prev) <= tol * abs(mu) and residual <= np.sqrt(tol) * abs(mu):
            return mu, v
        mu_prev = mu
    raise ConvergenceError(
        f"power iteration: no convergence after {max_iterations} iterations "
        f"(kappa={op.kappa}, dim={n}, last mu={mu:.6e}, residual={residual:.3e})")


@dataclass
class SpectralResult:
    """Ground-state numbers: root kappa*, energy -kappa*^2, binding above threshold."""

    kappa_star: float
    energy: float
    threshold_energy: float
    binding_energy: float
    converged: bool
    iterations: int
    dn_spread: float | None = None   # direct solver: Dirichlet/Neumann truncation estimate
    inconclusive: bool = False


def solve_ground_state(g: ArrayGeometry, q: QuadratureGrid, kappa_lo: float,
                       kappa_hi: float, kappa0: float, mu_tol: float = 1e-8,
                       tail_tol: float = 1e-18, max_bisections: int = 200):
    """Bisect mu_max(kappa) = 1 inside [kappa_lo, kappa_hi].

    kappa0 is the essential-spectrum threshold supplied by the caller (from
    the band solver or from a long unperturbed chain); it only enters the
    reported binding energy.  Returns None when mu_max(kappa_lo) <= 1, i.e.
    no bound state inside the bracket.  Monotonicity of mu_max guarantees
    bisection converges whenever the bracket is valid.
    """
    if not 0 < kappa_lo < kappa_hi:
        raise BracketError(f"need 0 < kappa_lo < kappa_hi, got [{kappa_lo}, {kappa_hi}]")
    vec = None

    def mu_at(k):
        nonlocal vec
        mu, vec = principal_eigenvalue(
            assemble_operator(g, q, k, tail_tol=tail_tol), v0=vec)
        return mu

    mu_lo = mu_at(kappa_lo)
    if mu_lo <= 1.0:
        return None
    mu_hi = mu_at(kappa_hi)
    if mu_hi >= 1.0:
        raise BracketError(
            f"mu_max(kappa_hi={kappa_hi}) = {mu_hi:.6f} >= 1; root lies above the bracket")
    lo, hi = kappa_lo, kappa_hi
    kappa_star, mu_star = lo, mu_lo
    for it in range(1, max_bisections + 1):
        mid = 0.5 * (lo + hi)
        mu_mid = mu_at(mid)
        kappa_star, mu_star = mid, mu_mid
        if abs(mu_mid - 1.0) <= mu_tol:
            break
        if mu_mid > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    else:
        raise ConvergenceError(
            f"bisection: |mu-1| = {abs(mu_star - 1):.2e} > {mu_tol} "
            f"after {max_bisections} steps")
    energy = -kappa_star ** 2
    threshold = -kappa0 ** 2
    return SpectralResult(
        kappa_star=kappa_star, energy=energy, threshold_energy=threshold,
        binding_energy=max(0.0, threshold - energy), converged=True, iterations=it)


def make_trial_vector(profile: WellProfile, grid: QuadratureGrid,
                      psi0: np.ndarray) -> np.ndarray:
    """phi0 = sqrt(V) psi0 on the grid, the per-well trial density."""
    psi0 = np.asarray(psi0, dtype=float)
    if psi0.shape != (grid.size,):
        raise ValueError(f"psi0 must have {grid.size} samples, got {psi0.shape}")
    return np.sqrt(profile.potential(grid.nodes)) * psi0


def trial_functional(gY: ArrayGeometry, gY0: ArrayGeometry, grid: QuadratureGrid,
                     phi0: np.ndarray, kappa: float, tail_tol: float = 1e-18) -> float:
    """Sum over well pairs of (phi0, [K_Y^(ij) - K_Y0^(ij)] phi0).

    phi0 holds pointwise samples on the shared quadrature grid, replicated
    per well.  Only pairs whose center difference changed contribute;
    diagonal blocks are identical by construction.  A positive value at
    kappa = kappa0 certifies a bound state below the threshold.
    """
    if gY.count != gY0.count or gY.spacing != gY0.spacing \
            or gY.profile is not gY0.profile and gY.profile != gY0.profile:
        raise ValueError("geometries must share profile, spacing, and well count")
    phi0 = np.asarray(phi0, dtype=float)
    if phi0.shape != (grid.size,):
        raise ValueError(f"phi0 must have {grid.size} samples, got {phi0.shape}")
    if np.any(phi0 < 0):
        raise ValueError("phi0 samples must be nonnegative")
    x = np.sqrt(grid.weights) * phi0
    cutoff = -np.log(tail_tol) / kappa if tail_tol > 0 else np.inf
    cache = {}

    def offset_block(offset):
        key = _offset_key(offset)
        tkey = _offset_key(-offset)
        if key in cache:
            return cache[key], False
        if tkey in cache:
            return cache[tkey], True
        cache[key] = _block_for_offset(gY.profile, grid, offset, kappa)
        return cache[key], False

    total = 0.0
    for ip in range(gY.count):
        for jp in range(gY.count):
            if ip == jp:
                continue
            off_y = gY.centers[ip] - gY.centers[jp]
            off_y0 = gY0.centers[ip] - gY0.centers[jp]
            if np.array_equal(off_y, off_y0):
                continue
            term = 0.0
            if np.linalg.norm(off_y) <= cutoff:
                mat, tr = offset_block(off_y)
                term += float(x @ (mat.T @ x if tr else mat @ x))
            if np.linalg.norm(off_y0) <= cutoff:
                mat, tr = offset_block(off_y0)
                term -= float(x @ (mat.T @ x if tr else mat @ x))
            total += term
    return total
