import math

import numpy as np
import pytest

from nigt_lab.errors import InvalidInput
from nigt_lab.tuning import (
    manual_params,
    nigt_bound,
    nigt_params,
    nsgdm_bound,
    nsgdm_params,
)


class TestNsgdmParams:
    def test_hand_evaluation(self):
        p = nsgdm_params(R=1.0, L=1.0, sigma=1.0, T=100)
        assert p.alpha == pytest.approx(0.1, abs=1e-15)
        assert p.eta == pytest.approx(math.sqrt(0.1) / 10.0, rel=1e-15)
        assert p.beta == pytest.approx(0.9, abs=1e-15)

    def test_zero_noise_clamps_alpha(self):
        p = nsgdm_params(R=2.0, L=3.0, sigma=0.0, T=50)
        assert p.alpha == 1.0
        assert p.eta == pytest.approx(math.sqrt(2.0 / (50 * 3.0)), rel=1e-15)

    def test_clamp_at_low_horizon(self):
        p = nsgdm_params(R=4.0, L=1.0, sigma=1.0, T=4)
        assert p.alpha == 1.0
        assert p.eta == pytest.approx(1.0, rel=1e-15)

    def test_alpha_always_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            p = nsgdm_params(
                R=float(10 ** rng.uniform(-3, 3)),
                L=float(10 ** rng.uniform(-3, 3)),
                sigma=float(10 ** rng.uniform(-6, 3)) if rng.random() > 0.1 else 0.0,
                T=int(rng.integers(1, 10**6)),
            )
            assert 0.0 < p.alpha <= 1.0
            assert p.eta > 0.0

    def test_validation(self):
        with pytest.raises(InvalidInput):
            nsgdm_params(0.0, 1.0, 1.0, 10)
        with pytest.raises(InvalidInput):
            nsgdm_params(1.0, -1.0, 1.0, 10)
        with pytest.raises(InvalidInput):
            nsgdm_params(1.0, 1.0, 1.0, 0)


class TestNsgdmBound:
    def test_noise_free(self):
        assert nsgdm_bound(1.0, 1.0, 0.0, 100) == pytest.approx(2.9, rel=1e-15)

    def test_unit_constants_large_horizon(self):
        # 29/100 + 21/10 + 8/100
        assert nsgdm_bound(1.0, 1.0, 1.0, 10_000) == pytest.approx(2.47, rel=1e-15)

    def test_monotone_decreasing_in_horizon(self):
        grid = np.unique(np.logspace(0, 9, 60).astype(int))
        vals = [nsgdm_bound(2.0, 0.5, 0.7, int(T)) for T in grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert all(v > 0 for v in vals)


class TestNigtParams:
    def test_zero_noise_branches(self):
        p = nigt_params(R=1.0, L=1.0, rho=0.0, sigma=0.0, T=25)
        assert p.alpha == 1.0
        assert p.eta == pytest.approx(0.2, rel=1e-15)

    def test_powers_of_two(self):
        p = nigt_params(R=1.0, L=1.0, rho=1.0, sigma=1.0, T=2**7)
        assert p.eta == pytest.approx(2.0**-5, rel=1e-13)
        assert p.alpha == pytest.approx(2.0**-4, rel=1e-13)

    def test_defining_identity_when_unclamped(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            R = float(10 ** rng.uniform(-2, 2))
            rho = float(10 ** rng.uniform(-2, 2))
            sigma = float(10 ** rng.uniform(-1, 2))
            T = int(rng.integers(2, 10**6))
            p = nigt_params(R, 1.0, rho, sigma, T)
            assert 0.0 < p.alpha <= 1.0
            if p.alpha < 1.0:
                ident = p.alpha * T ** (4 / 7) * sigma ** (6 / 7) / (R ** (4 / 7) * rho ** (2 / 7))
                assert ident == pytest.approx(1.0, rel=1e-12)

    def test_curvature_sweep_clamps(self):
        R, L, sigma, T = 1.0, 1.0, 0.5, 1000
        etas, alphas = [], []
        for rho in 10.0 ** np.arange(-10, 14):
            p = nigt_params(R, L, rho, sigma, T)
            etas.append(p.eta)
            alphas.append(p.alpha)
        # growing curvature shrinks eta monotonically and saturates alpha at 1
        assert all(a <= b + 1e-18 for a, b in zip(etas[1:], etas[:-1]))
        assert all(a >= b for a, b in zip(alphas[1:], alphas[:-1]))
        assert alphas[-1] == 1.0
        # vanishing curvature blows up the noise branch, leaving sqrt(R/(TL))
        assert etas[0] == pytest.approx(math.sqrt(R / (T * L)), rel=1e-15)

    def test_rho_zero_with_noise_rejected(self):
        with pytest.raises(InvalidInput):
            nigt_params(1.0, 1.0, 0.0, 1.0, 100)


class TestNigtBound:
    def test_zero_noise(self):
        assert nigt_bound(1.0, 1.0, 0.0, 0.0, 25) == pytest.approx(1.0, rel=1e-15)

    def test_powers_of_two(self):
        # 5 * 2^{-7/2} + 8 * 2^{-3} + 27 * 2^{-2}
        expected = 5 * 2.0**-3.5 + 1.0 + 6.75
        assert nigt_bound(1.0, 1.0, 1.0, 1.0, 2**7) == pytest.approx(expected, rel=1e-13)
        assert expected == pytest.approx(8.191941738241594, rel=1e-15)

    def test_dominant_scaling_is_two_sevenths(self):
        # bound(T) / bound(128 T) -> 128^{2/7} = 4 as T grows
        for T in (2**14, 2**21, 2**28):
            ratio = nigt_bound(1.0, 1.0, 1.0, 1.0, T) / nigt_bound(1.0, 1.0, 1.0, 1.0, 128 * T)
            assert ratio == pytest.approx(4.0, rel=0.15)
        big = 2**40
        ratio = nigt_bound(1.0, 1.0, 1.0, 1.0, big) / nigt_bound(1.0, 1.0, 1.0, 1.0, 128 * big)
        assert ratio == pytest.approx(4.0, rel=0.01)

    def test_monotone_decreasing_in_horizon(self):
        grid = np.unique(np.logspace(0, 9, 60).astype(int))
        vals = [nigt_bound(1.5, 2.0, 0.8, 0.6, int(T)) for T in grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert all(v > 0 for v in vals)

    def test_rho_zero_with_noise_rejected(self):
        with pytest.raises(InvalidInput):
            nigt_bound(1.0, 1.0, 0.0, 1.0, 100)


class TestManualParams:
    def test_roundtrip(self):
        p = manual_params(0.05, 0.9)
        assert p.eta == 0.05 and p.beta == pytest.approx(0.9) and p.provenance == "manual"

    def test_validation(self):
        with pytest.raises(InvalidInput):
            manual_params(0.0, 0.9)
        with pytest.raises(InvalidInput):
            manual_params(0.1, 1.0)
