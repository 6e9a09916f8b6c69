"""Flat key-value run configuration with dotted sections.

One file reproduces one experiment.  Syntax: ``key = value`` per line,
``#`` comments, blank lines ignored.  Example::

    well.nu = 2
    well.v0 = 5.0
    well.sigma = 0.5
    well.radius = 1.0
    array.spacing = 5.0
    array.count = 11
    array.shift.0 = 0:1.0:0.0      # well index : dx : dperp

Unknown keys are rejected so typos fail loudly.  Numeric values parse as
int when possible, then float; everything else stays a string.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import GAUSSIAN, ArrayGeometry, WellProfile, build_array, make_profile, shift_well


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_DEFAULTS = {
    "well.nu": 2,
    "well.kind": GAUSSIAN,
    "well.v0": 5.0,
    "well.sigma": 0.5,
    "well.radius": 1.0,
    "well.rho": None,          # defaults to radius
    "well.coupling": 1.0,
    "array.spacing": 5.0,
    "array.count": 11,
    "bs.nodes": 12,
    "bs.kappa_lo": 0.3,
    "bs.kappa_hi": 3.0,
    "bs.mu_tol": 1e-8,
    "bs.threshold_extra_wells": 10,
    "floquet.l": 6.0,
    "floquet.h": 0.05,
    "floquet.theta_samples": 16,
    "floquet.n_bands": 4,
    "direct.h": 0.05,
    "direct.l": 6.0,
    "direct.k": 3,
    "direct.x1_min": None,     # None = midplane walls
    "direct.x1_max": None,
    "direct.spread_tol": None,
    "map.dx_min": -2.0,
    "map.dx_max": 2.0,
    "map.dx_count": 20,
    "map.dperp_min": 0.0,
    "map.dperp_max": 0.9,
    "map.dperp_count": 10,
    "map.h": 0.1,
    "map.l": 5.0,
    "map.index": 0,
    "kernel.nu": 3,
    "kernel.kappa": 1.0,
    "kernel.r_min": 0.05,
    "kernel.r_max": 50.0,
    "kernel.count": 200,
    "run.seed": 0,
    "run.jobs": 1,
}


def _parse_scalar(text: str):
    text = text.strip()
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            continue
    return text


@dataclass
class RunConfig:
    """Parsed configuration: scalar settings plus the list of well shifts."""

    values: dict = field(default_factory=dict)
    shifts: list = field(default_factory=list)   # (well index, dx, dperp)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        values = dict(_DEFAULTS)
        shifts = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key.startswith("array.shift."):
                suffix = key.rsplit(".", 1)[1]
                try:
                    slot = int(suffix)
                except ValueError as exc:
                    raise ConfigError(f"line {lineno}: bad shift slot {suffix!r}") from exc
                parts = val.split(":")
                if len(parts) < 2:
                    raise ConfigError(
                        f"line {lineno}: shift needs index:dx[:dperp...], got {val!r}")
                index = int(parts[0])
                dx = float(parts[1])
                dperp = [float(p) for p in parts[2:]] or [0.0]
                shifts[slot] = (index, dx, dperp)
            elif key in values:
                values[key] = _parse_scalar(val)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        cfg = cls(values=values,
                  shifts=[shifts[k] for k in sorted(shifts)])
        cfg.validate()
        return cfg

    def __getitem__(self, key: str):
        return self.values[key]

    def validate(self) -> None:
        v = self.values
        if v["well.kind"] != GAUSSIAN:
            raise ConfigError(
                f"config files support the gaussian profile only, got {v['well.kind']!r}")
        if v["array.count"] < 1 or v["array.count"] % 2 == 0:
            raise ConfigError("array.count must be an odd positive integer")
        for key in ("well.v0", "well.sigma", "well.radius", "array.spacing",
                    "bs.kappa_lo", "bs.kappa_hi", "floquet.l", "floquet.h",
                    "direct.h", "direct.l", "map.h", "map.l", "kernel.kappa"):
            if not isinstance(v[key], (int, float)) or not v[key] > 0:
                raise ConfigError(f"{key} must be a positive number, got {v[key]!r}")
        if v["bs.kappa_lo"] >= v["bs.kappa_hi"]:
            raise ConfigError("bs.kappa_lo must be below bs.kappa_hi")
        if v["kernel.nu"] < 2:
            raise ConfigError("kernel.nu must be >= 2")

    # -- construction helpers -------------------------------------------------

    def profile(self) -> WellProfile:
        v = self.values
        rho = v["well.rho"] if v["well.rho"] is not None else v["well.radius"]
        return make_profile(
            v["well.kind"], nu=v["well.nu"], depth=v["well.v0"], sigma=v["well.sigma"],
            support_radius=v["well.radius"], support_half_length=rho,
            coupling=v["well.coupling"])

    def geometry(self, profile: WellProfile | None = None) -> ArrayGeometry:
        prof = profile if profile is not None else self.profile()
        geo = build_array(prof, self["array.spacing"], self["array.count"])
        for (index, dx, dperp) in self.shifts:
            vec = dperp if len(dperp) > 1 else dperp[0]
            geo = shift_well(geo, index, dx, vec)
        return geo

    def direct_numerics(self, step=None, transverse=None):
        from .direct_solver import DirectNumerics

        v = self.values
        box = None
        if v["direct.x1_min"] is not None and v["direct.x1_max"] is not None:
            box = (float(v["direct.x1_min"]), float(v["direct.x1_max"]))
        return DirectNumerics(
            step=step if step is not None else v["direct.h"],
            transverse_halfwidth=transverse if transverse is not None else v["direct.l"],
            box=box,
            n_eigenvalues=v["direct.k"],
            spread_tolerance=v["direct.spread_tol"])

    def theta_grid(self) -> np.ndarray:
        return np.linspace(-np.pi, np.pi, self["floquet.theta_samples"], endpoint=False)
