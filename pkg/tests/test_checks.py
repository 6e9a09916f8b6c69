"""Convexity probe, mollifier defect, and shift-identity suites."""

import numpy as np
import pytest

from wellspec import (build_array, make_profile, mollifier_defect,
                      mollifier_defect_from_matrix, mollifier_weights, shift_identities,
                      shift_well, verify_convexity)


class TestVerifyConvexity:
    def test_paper_application_case(self):
        # theorem applies the lemma with b = 2 rho, c = 2 R; at nu=2, rho=R this
        # sits exactly on the aspect boundary c = b sqrt(nu-1)
        rep = verify_convexity(2, 1.0, 2.0, 2.0)
        assert rep.passed
        assert rep.min_ratio_margin > 0.0

    def test_inside_condition(self):
        rep = verify_convexity(3, 1.0, 1.0, 1.4)
        assert rep.passed

    def test_outside_condition_runs_and_reports(self):
        # no guarantee outside the hypothesis: record, do not assert the flag
        rep = verify_convexity(2, 0.2, 0.5, 5.0)
        assert rep.second_differences.shape == rep.xs.shape
        assert isinstance(rep.passed, bool)

    @pytest.mark.parametrize("nu", [2, 3, 4, 5])
    @pytest.mark.parametrize("kappa", [0.3, 1.0, 3.0])
    def test_randomized_inside_cases(self, nu, kappa):
        rng = np.random.default_rng(nu * 17 + int(kappa * 10))
        for _ in range(5):
            b = rng.uniform(0.5, 3.0)
            c = rng.uniform(0.0, 1.0) * b * np.sqrt(nu - 1.0)
            rep = verify_convexity(nu, kappa, b, c)
            assert rep.passed, (nu, kappa, b, c)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            verify_convexity(2, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            verify_convexity(2, 1.0, -1.0, 1.0)


class TestMollifierDefect:
    def test_defect_negative(self):
        assert mollifier_defect(20, 1000, 1.0, 0.5, 5.0) < 0.0

    def test_matches_naive_double_sum(self):
        n, M, c, kappa, a = 6, 120, 1.0, 0.5, 5.0
        idx = np.arange(-M, M + 1)
        h = mollifier_weights(n, idx)
        naive = sum(h[i] * (h[j] - h[i]) * c * np.exp(-kappa * a * abs(idx[i] - idx[j]))
                    for i in range(len(idx)) for j in range(len(idx)))
        assert mollifier_defect(n, M, c, kappa, a) == pytest.approx(naive, rel=1e-13)

    def test_antisymmetrized_identity(self):
        d1 = mollifier_defect(20, 1000, 1.0, 0.5, 5.0)
        d2 = mollifier_defect(20, 1000, 1.0, 0.5, 5.0, antisymmetrized=True)
        assert d2 == pytest.approx(d1, rel=1e-14)

    def test_halving_ratio_frozen(self):
        # the exact model sum decays like 1/n, so the computed halving ratio is
        # 1/2 (not the 1/4 an n^-2 law would give; decisions ledger has the
        # derivation and the paper cross-reference)
        d20 = mollifier_defect(20, kappa=0.5, a=5.0)
        d40 = mollifier_defect(40, kappa=0.5, a=5.0)
        assert abs(d40 / d20) == pytest.approx(0.5005, abs=2e-3)

    def test_one_over_n_scaling(self):
        scaled = [n * abs(mollifier_defect(n, kappa=0.5, a=5.0)) for n in (20, 40, 80)]
        assert (max(scaled) - min(scaled)) / max(scaled) <= 0.01

    def test_normalized_defect_scales_like_n_minus_two(self):
        # relative to ||h_n||^2 ~ pi n / 2 the paper's n^-2 rate does hold
        vals = []
        for n in (20, 40, 80):
            d = mollifier_defect(n, kappa=0.5, a=5.0)
            norm = np.sum(mollifier_weights(n, np.arange(-50 * n, 50 * n + 1)) ** 2)
            vals.append(n ** 2 * abs(d) / norm)
        assert (max(vals) - min(vals)) / max(vals) <= 0.15

    def test_matrix_variant_consistent(self):
        n, M = 8, 25
        idx = np.arange(-M, M + 1)
        mat = np.exp(-0.5 * 5.0 * np.abs(idx[:, None] - idx[None, :]))
        d_matrix = mollifier_defect_from_matrix(n, mat, idx)
        d_model = mollifier_defect(n, M, 1.0, 0.5, 5.0)
        assert d_matrix == pytest.approx(d_model, rel=1e-12)


class TestShiftIdentities:
    @pytest.fixture(scope="class")
    def profile(self):
        return make_profile("gaussian_truncated", nu=2, depth=5.0, sigma=0.5,
                            support_radius=1.0)

    def test_single_shift_passes(self, profile):
        geo = shift_well(build_array(profile, 5.0, 7), 0, 0.9, 0.0)
        assert shift_identities(geo).passed

    def test_two_shifts_pass(self, profile):
        geo = build_array(profile, 5.0, 9)
        geo = shift_well(geo, -1, 0.7, 0.0)
        geo = shift_well(geo, 1, -0.3, 0.0)
        rep = shift_identities(geo)
        assert rep.passed
        assert rep.delta_sum == pytest.approx(0.0, abs=1e-12)

    def test_randomized_interior_shifts(self, profile):
        rng = np.random.default_rng(7)
        from wellspec import GeometryError

        for _ in range(100):
            count = int(rng.choice([5, 7, 9, 11]))
            half = (count - 1) // 2
            geo = build_array(profile, 5.0, count)
            for _ in range(int(rng.integers(1, 4))):
                idx = int(rng.integers(-half + 1, half))
                try:
                    geo = shift_well(geo, idx, float(rng.uniform(-0.6, 0.6)),
                                     float(rng.uniform(-1.0, 1.0)))
                except GeometryError:
                    continue
            assert shift_identities(geo).passed
