"""Shared fixtures: the paper-parameter well, chains, and cached heavy solves.

Expensive eigensolves (fiber threshold, 11-well chain energies) are session
scoped and timed; acceptance tests sum the build times of the fixtures they
consume when asserting their runtime caps, so shared work is double-counted,
never hidden.
"""

import time

import numpy as np
import pytest

from wellspec import (DirectNumerics, build_array, build_grid, essential_threshold,
                      ground_energy, make_profile, shift_well)

FIXTURE_SECONDS = {}


def _timed(name, fn):
    t0 = time.perf_counter()
    out = fn()
    FIXTURE_SECONDS[name] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def paper_profile():
    return make_profile("gaussian_truncated", nu=2, depth=5.0, sigma=0.5,
                        support_radius=1.0)


@pytest.fixture(scope="session")
def chain11(paper_profile):
    return build_array(paper_profile, 5.0, 11)


@pytest.fixture(scope="session")
def grid12(paper_profile):
    return build_grid(paper_profile, 12)


@pytest.fixture(scope="session")
def direct_num():
    return DirectNumerics(step=0.05, transverse_halfwidth=6.0)


@pytest.fixture(scope="session")
def floquet_threshold(paper_profile, grid12):
    """(kappa0, psi0) of the periodic array at the default fiber numerics."""
    return _timed("floquet_threshold",
                  lambda: essential_threshold(paper_profile, 5.0, grid12, 6.0, 0.05))


@pytest.fixture(scope="session")
def unpert_energies(chain11, direct_num):
    """Unperturbed 11-chain ground energy under both end conditions."""
    return _timed("unpert_energies", lambda: {
        bc: ground_energy(chain11, direct_num, bc) for bc in ("neumann", "dirichlet")})


@pytest.fixture(scope="session")
def dx1_energies(chain11, direct_num):
    """Chain with the center well moved dx = 1, both end conditions."""
    geo = shift_well(chain11, 0, 1.0, 0.0)
    return _timed("dx1_energies", lambda: {
        bc: ground_energy(geo, direct_num, bc) for bc in ("neumann", "dirichlet")})


@pytest.fixture(scope="session")
def small_shift_energies(chain11, direct_num):
    """Neumann ground energies for dx = 0.05 and 0.2 center-well shifts."""
    def solve():
        out = {}
        for dx in (0.05, 0.2):
            geo = shift_well(chain11, 0, dx, 0.0)
            out[dx] = ground_energy(geo, direct_num, "neumann")
        return out
    return _timed("small_shift_energies", solve)


@pytest.fixture(scope="session")
def single_well_direct():
    """Fine-grid single-well energies at h and h/2 on a wide box."""
    prof = make_profile("gaussian_truncated", nu=2, depth=5.0, sigma=0.5,
                        support_radius=1.0)
    single = build_array(prof, 5.0, 1)

    def solve():
        out = {}
        for h in (0.05, 0.025):
            num = DirectNumerics(step=h, transverse_halfwidth=7.0, box=(-7.0, 7.0))
            out[h] = ground_energy(single, num, "dirichlet")
        return out
    return _timed("single_well_direct", solve)


def fixture_cost(*names) -> float:
    return sum(FIXTURE_SECONDS.get(n, 0.0) for n in names)
