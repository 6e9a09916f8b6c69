"""Well profiles, arrays of well centers, and displacement bookkeeping.

A single well is a nonnegative potential supported in the box
Sigma = (-rho, rho) x B_R(0), with B_R a ball in the nu-1 transverse
dimensions.  An array places translated copies at centers y_j; the
unperturbed reference is the equidistant on-axis array y_j = (j*a, 0).
Local perturbations move finitely many centers while keeping the supports
pairwise disjoint and the longitudinal order intact.

Relative-shift quantities for a perturbed array:

    delta_j = (y_{j+1} - y_j)_1 - a          (neighbor gap defect)
    eta_ij  = (y_i - y_i0 - y_j + y_j0)_1    (pairwise longitudinal offset)

Both vanish for the unperturbed array; sum(delta) telescopes to zero for
any perturbation with unmoved ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

GAUSSIAN = "gaussian_truncated"
CUSTOM = "custom_sampled"

_SHIFT_NONE = "none"
_SHIFT_LONGITUDINAL = "longitudinal"
_SHIFT_TRANSVERSAL = "transversal"
_SHIFT_MIXED = "mixed"


class GeometryError(ValueError):
    """Raised for invalid profiles, spacings, or overlapping supports."""


@dataclass(frozen=True)
class WellProfile:
    """Shape of one potential well: magnitude V >= 0 supported in Sigma_{rho,R}.

    The stored function is the nonnegative magnitude; Hamiltonians apply -V.
    ``coupling`` scales the magnitude (lambda * V).
    """

    nu: int
    kind: str
    depth: float                 # V0
    sigma: float
    support_half_length: float   # rho
    support_radius: float        # R
    coupling: float = 1.0
    sample_fn: object = None     # custom profiles: callable (n, nu) -> (n,)

    def __post_init__(self):
        if self.nu < 2 or int(self.nu) != self.nu:
            raise GeometryError(f"nu must be an integer >= 2, got {self.nu}")
        for name in ("depth", "sigma", "support_half_length", "support_radius", "coupling"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be positive, got {getattr(self, name)}")
        if self.kind == GAUSSIAN:
            if self.support_half_length < self.support_radius:
                raise GeometryError(
                    f"gaussian profile needs rho >= R, got rho={self.support_half_length}, "
                    f"R={self.support_radius}")
        elif self.kind == CUSTOM:
            if self.sample_fn is None:
                raise GeometryError("custom_sampled profile needs a sample_fn callable")
        else:
            raise GeometryError(f"unknown profile kind {self.kind!r}")

    @property
    def rho(self) -> float:
        return self.support_half_length

    @property
    def radius(self) -> float:
        return self.support_radius

    def potential(self, points) -> np.ndarray:
        """Potential magnitude lambda*V at points, shape (n, nu) -> (n,).

        Vanishes outside the support Sigma = (-rho, rho) x B_R(0); inside,
        the gaussian kind evaluates V0 exp(-|x|^2 / (2 sigma^2)).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.nu:
            raise GeometryError(f"points must have {self.nu} coordinates, got {pts.shape[1]}")
        long = pts[:, 0]
        perp2 = np.sum(pts[:, 1:] ** 2, axis=1)
        inside = (np.abs(long) < self.rho) & (perp2 < self.radius ** 2)
        if self.kind == GAUSSIAN:
            vals = self.depth * np.exp(-np.sum(pts ** 2, axis=1) / (2.0 * self.sigma ** 2))
        else:
            vals = np.asarray(self.sample_fn(pts), dtype=float)
        return np.where(inside, self.coupling * vals, 0.0)


def make_profile(kind: str, *, nu: int = 2, depth: float = 5.0, sigma: float = 0.5,
                 support_radius: float = 1.0, support_half_length: float | None = None,
                 coupling: float = 1.0, sample_fn=None) -> WellProfile:
    """Build and validate a well profile.

    For the gaussian kind, rho defaults to R (support box just containing
    the transverse ball).  Custom profiles are probed on a grid over the
    support and rejected if negative or identically zero.
    """
    if support_half_length is None:
        support_half_length = support_radius
    prof = WellProfile(nu=nu, kind=kind, depth=depth, sigma=sigma,
                       support_half_length=support_half_length,
                       support_radius=support_radius, coupling=coupling,
                       sample_fn=sample_fn)
    # probe for sign violations / the excluded trivial case V = 0
    n_probe = 13
    axes = [np.linspace(-0.98 * prof.rho, 0.98 * prof.rho, n_probe)]
    axes += [np.linspace(-0.98 * prof.radius, 0.98 * prof.radius, n_probe)] * (nu - 1)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    if prof.kind == CUSTOM:
        raw = np.asarray(prof.sample_fn(pts), dtype=float)
        if np.any(raw < 0):
            raise GeometryError("potential samples must be nonnegative")
    vals = prof.potential(pts)
    if not np.any(vals > 0):
        raise GeometryError("potential is identically zero on its support")
    return prof


@dataclass(frozen=True)
class ArrayGeometry:
    """Finite chain of wells: centers y_j for j = -M..M plus the unperturbed reference."""

    profile: WellProfile
    spacing: float
    centers: np.ndarray            # (count, nu)
    reference_centers: np.ndarray  # (count, nu), y_j0 = (j*a, 0)
    perturbation_window: int       # y_j = y_j0 for |j| > window
    shift_kind: str = _SHIFT_NONE

    def __post_init__(self):
        object.__setattr__(self, "centers", np.array(self.centers, dtype=float))
        object.__setattr__(self, "reference_centers",
                           np.array(self.reference_centers, dtype=float))
        self.centers.setflags(write=False)
        self.reference_centers.setflags(write=False)
        _validate_geometry(self)

    @property
    def count(self) -> int:
        return self.centers.shape[0]

    @property
    def half_count(self) -> int:
        return (self.count - 1) // 2

    @property
    def indices(self) -> np.ndarray:
        """Well labels j = -M..M."""
        m = self.half_count
        return np.arange(-m, m + 1)

    def center(self, j: int) -> np.ndarray:
        return self.centers[j + self.half_count]

    def is_perturbed(self) -> bool:
        return bool(np.any(self.centers != self.reference_centers))

    def unperturbed(self) -> "ArrayGeometry":
        """The matching straight array (same profile, spacing, count)."""
        return replace(self, centers=self.reference_centers.copy(),
                       perturbation_window=0, shift_kind=_SHIFT_NONE)


def _validate_geometry(g: ArrayGeometry) -> None:
    rho, radius = g.profile.rho, g.profile.radius
    if not g.spacing > 2 * rho:
        raise GeometryError(f"spacing a={g.spacing} must exceed 2*rho={2 * rho}")
    x1 = g.centers[:, 0]
    if np.any(np.diff(x1) <= 0):
        raise GeometryError("longitudinal order violated: centers must satisfy "
                            "y_{j,1} < y_{j+1,1}")
    # pairwise support boxes disjoint: longitudinal gap > 2 rho or transverse gap > 2 R
    for i in range(g.count):
        for j in range(i + 1, g.count):
            dlong = abs(x1[j] - x1[i])
            dperp = np.linalg.norm(g.centers[j, 1:] - g.centers[i, 1:])
            if dlong <= 2 * rho and dperp <= 2 * radius:
                raise GeometryError(
                    f"supports of wells {i - g.half_count} and {j - g.half_count} overlap "
                    f"(long gap {dlong:.4g} <= {2 * rho}, transverse gap {dperp:.4g} <= "
                    f"{2 * radius})")


def build_array(profile: WellProfile, a: float, count: int) -> ArrayGeometry:
    """Straight equidistant array of `count` wells centered at j*a, j = -M..M."""
    if count < 1 or count % 2 == 0:
        raise GeometryError(f"count must be an odd positive integer, got {count}")
    m = (count - 1) // 2
    centers = np.zeros((count, profile.nu))
    centers[:, 0] = a * np.arange(-m, m + 1)
    return ArrayGeometry(profile=profile, spacing=a, centers=centers,
                         reference_centers=centers.copy(), perturbation_window=0)


def shift_well(g: ArrayGeometry, index: int, dx: float, dperp=0.0) -> ArrayGeometry:
    """Displace well `index` (label j) by (dx, dperp); returns a new geometry.

    dperp is a scalar for nu=2, a (nu-1)-vector otherwise.  Raises
    GeometryError if the move breaks support disjointness or ordering.
    """
    m = g.half_count
    if not -m <= index <= m:
        raise GeometryError(f"well index {index} outside array range [{-m}, {m}]")
    dperp_vec = np.atleast_1d(np.asarray(dperp, dtype=float))
    if dperp_vec.size == 1 and g.profile.nu > 2:
        dperp_vec = np.full(g.profile.nu - 1, dperp_vec[0])
    if dperp_vec.size != g.profile.nu - 1:
        raise GeometryError(f"dperp must have {g.profile.nu - 1} components")
    centers = g.centers.copy()
    centers[index + m, 0] += dx
    centers[index + m, 1:] += dperp_vec

    moved = np.any(centers != g.reference_centers, axis=1)
    window = int(np.max(np.abs(g.indices[moved]))) if np.any(moved) else 0
    dlong = centers[:, 0] - g.reference_centers[:, 0]
    dtrans = centers[:, 1:] - g.reference_centers[:, 1:]
    has_long = bool(np.any(dlong != 0))
    has_trans = bool(np.any(dtrans != 0))
    kind = (_SHIFT_MIXED if has_long and has_trans
            else _SHIFT_LONGITUDINAL if has_long
            else _SHIFT_TRANSVERSAL if has_trans
            else _SHIFT_NONE)
    return replace(g, centers=centers, perturbation_window=window, shift_kind=kind)


@dataclass(frozen=True)
class ShiftData:
    """delta_j gaps and eta_ij pairwise offsets of a perturbed array."""

    delta_indices: np.ndarray   # j values for which delta_j is defined (-M..M-1)
    deltas: np.ndarray
    _geometry: ArrayGeometry

    def delta(self, j: int) -> float:
        m = self._geometry.half_count
        if not -m <= j <= m - 1:
            return 0.0
        return float(self.deltas[j + m])

    def eta(self, i: int, j: int) -> float:
        g = self._geometry
        m = g.half_count
        di = g.centers[i + m, 0] - g.reference_centers[i + m, 0]
        dj = g.centers[j + m, 0] - g.reference_centers[j + m, 0]
        return float(di - dj)

    def delta_sum(self, i: int, j: int) -> float:
        """sum of delta_r over r = min(i,j) .. max(i,j)-1."""
        lo, hi = min(i, j), max(i, j)
        return float(sum(self.delta(r) for r in range(lo, hi)))


def relative_shifts(g: ArrayGeometry) -> ShiftData:
    """delta_j = (y_{j+1} - y_j)_1 - a for j = -M..M-1, plus the eta accessor."""
    m = g.half_count
    deltas = np.diff(g.centers[:, 0]) - g.spacing
    return ShiftData(delta_indices=np.arange(-m, m), deltas=deltas, _geometry=g)


def aspect_ok(p: WellProfile) -> bool:
    """Support aspect condition R <= rho * sqrt(nu - 1) of the existence theorem."""
    return p.support_radius <= p.support_half_length * np.sqrt(p.nu - 1.0)
