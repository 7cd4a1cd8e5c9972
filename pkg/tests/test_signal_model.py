import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringfit.errors import DegenerateInputError, InvalidInputError, InvalidParameterError
from ringfit.signal_model import (
    DEFAULT_GRID,
    ComponentParams,
    SamplingGrid,
    add_noise,
    params_to_vector,
    standardize,
    synthesize,
    vector_to_params,
)

finite = dict(allow_nan=False, allow_infinity=False)
component = st.builds(
    ComponentParams,
    f=st.floats(0.1, 3.0, **finite),
    phi=st.floats(-math.pi, math.pi, **finite),
    tau=st.floats(0.05, 5.0, **finite),
    A=st.floats(-5.0, 5.0, **finite),
)


def direct_eval(components, k, sample_rate=200.0):
    """Scalar evaluation of one sample using only the math module."""
    t = k / sample_rate
    return sum(c.A * math.exp(-t / c.tau) * math.cos(2 * math.pi * c.f * t + c.phi) for c in components)


class TestGrid:
    def test_default_grid(self):
        assert DEFAULT_GRID.n_samples == 1000
        assert DEFAULT_GRID.duration == 5.0 and DEFAULT_GRID.sample_rate == 200.0
        t = DEFAULT_GRID.times
        assert t[0] == 0.0
        assert t[-1] == pytest.approx(4.995)

    def test_invalid_grid(self):
        with pytest.raises(InvalidParameterError):
            SamplingGrid(duration=-1.0)


class TestComponentParams:
    def test_rejects_nonpositive_tau(self):
        with pytest.raises(InvalidParameterError):
            ComponentParams(1.0, 0.0, 0.0, 1.0)
        with pytest.raises(InvalidParameterError):
            ComponentParams(1.0, 0.0, -1.0, 1.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidParameterError):
            ComponentParams(float("nan"), 0.0, 1.0, 1.0)

    def test_vector_round_trip(self):
        comps = [ComponentParams(0.9, -0.1, 1.0, 1.0), ComponentParams(1.1, 0.1, 2.0, 4.0)]
        v = params_to_vector(comps)
        assert v.tolist() == [0.9, -0.1, 1.0, 1.0, 1.1, 0.1, 2.0, 4.0]
        assert vector_to_params(v) == comps


class TestSynthesize:
    def test_unit_component_at_origin(self):
        x = synthesize([ComponentParams(1.0, 0.0, 1.0, 1.0)])
        assert x[0] == 1.0
        assert x.shape == (1000,)

    def test_zero_amplitudes(self):
        x = synthesize([ComponentParams(1.0, 0.3, 1.0, 0.0), ComponentParams(2.0, 0.1, 0.5, 0.0)])
        assert np.all(x == 0.0)

    def test_case1_mean_parameters_first_sample(self):
        comps = [ComponentParams(0.90, -0.10, 1.0, 1.0), ComponentParams(1.1, 0.10, 2.0, 4.0)]
        # cos(-0.1) + 4 cos(0.1), evaluated independently
        assert synthesize(comps)[0] == pytest.approx(4.975020826390129, rel=1e-14)

    def test_errors(self):
        with pytest.raises(InvalidInputError):
            synthesize([])

    def test_matches_direct_evaluation_at_random_indices(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            comps = [
                ComponentParams(rng.uniform(0.2, 2), rng.uniform(-1, 1), rng.uniform(0.1, 3), rng.uniform(-4, 4))
                for _ in range(rng.integers(1, 6))
            ]
            x = synthesize(comps)
            for k in rng.choice(1000, size=20, replace=False):
                ref = direct_eval(comps, int(k))
                assert x[k] == pytest.approx(ref, rel=1e-12, abs=1e-12 * max(1.0, abs(ref)))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(component, min_size=1, max_size=4), st.floats(-10, 10, **finite))
    def test_linear_in_amplitude(self, comps, c):
        scaled = [ComponentParams(p.f, p.phi, p.tau, c * p.A) for p in comps]
        np.testing.assert_allclose(synthesize(scaled), c * synthesize(comps), rtol=1e-12, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(component, min_size=1, max_size=3), st.lists(component, min_size=1, max_size=3))
    def test_superposition(self, a, b):
        np.testing.assert_allclose(synthesize(a + b), synthesize(a) + synthesize(b), rtol=1e-12, atol=1e-12)


class TestAddNoise:
    def test_zero_noise_is_identity(self):
        x = synthesize([ComponentParams(1.0, 0.0, 1.0, 1.0)])
        assert np.array_equal(add_noise(x, 0.0, np.random.default_rng(0)), x)

    def test_noise_std(self):
        rng = np.random.default_rng(11)
        x = synthesize([ComponentParams(1.0, 0.0, 1.0, 1.0)])
        diffs = np.concatenate([add_noise(x, 0.5, rng) - x for _ in range(100)])
        assert diffs.size == 100_000
        assert abs(diffs.std() - 0.5) < 0.005

    def test_deterministic_and_input_untouched(self):
        x = synthesize([ComponentParams(1.0, 0.0, 1.0, 1.0)])
        before = x.copy()
        a = add_noise(x, 0.3, np.random.default_rng(5))
        b = add_noise(x, 0.3, np.random.default_rng(5))
        assert np.array_equal(a, b)
        assert np.array_equal(x, before)

    def test_negative_sigma(self):
        with pytest.raises(InvalidParameterError):
            add_noise(np.zeros(10), -0.1, np.random.default_rng(0))


class TestStandardize:
    def test_moments(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            w = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 10), size=1000)
            s = standardize(w)
            assert abs(s.mean()) < 1e-12
            assert abs(s.std() - 1.0) < 1e-12

    def test_idempotent(self):
        s = standardize(np.random.default_rng(1).normal(size=1000))
        np.testing.assert_allclose(standardize(s), s, atol=1e-12)

    def test_affine_invariance(self):
        w = synthesize([ComponentParams(1.0, 0.2, 1.5, 2.0)])
        np.testing.assert_allclose(standardize(3.7 * w - 12.0), standardize(w), atol=1e-10)

    def test_population_convention(self):
        # [0, 2]: mean 1, population std 1
        assert standardize(np.array([0.0, 2.0])).tolist() == [-1.0, 1.0]

    def test_constant_rejected(self):
        with pytest.raises(DegenerateInputError):
            standardize(np.full(1000, 3.0))

    def test_rowwise(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(5, 1000))
        out = standardize(m)
        for i in range(5):
            assert np.array_equal(out[i], standardize(m[i]))
