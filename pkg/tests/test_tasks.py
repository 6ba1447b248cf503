"""Synthetic translation tasks, energy distance, and evaluation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgelab.model import ModelConfig, init
from bridgelab.numerics import RngStream, gaussian
from bridgelab.schedules import uniform
from bridgelab.tasks import (
    TaskSpec,
    energy_distance,
    evaluate,
    generate_pairs,
    model_batch_field,
    oracle_batch_field,
    pair_provider,
    pairs_from_csv,
    pairs_to_csv,
)
from bridgelab.trainer import TrainConfig, train


class TestGaussianShift:
    def test_pairing_is_exact_shift(self):
        spec = TaskSpec(name="gaussian_shift", dimension=2, shift=(2.0, 0.0))
        pairs = generate_pairs(spec, 100, RngStream(seed=1))
        for p in pairs:
            np.testing.assert_allclose(p.x1 - p.x0, [2.0, 0.0], atol=1e-12)

    def test_displacement_mean_over_many_pairs(self):
        """Sample mean of x1 - x0 over 1e4 pairs lands on the shift vector."""
        spec = TaskSpec(name="gaussian_shift", dimension=2, shift=(2.0, 0.0))
        pairs = generate_pairs(spec, 10_000, RngStream(seed=2))
        diffs = np.stack([p.x1 - p.x0 for p in pairs])
        np.testing.assert_allclose(diffs.mean(axis=0), [2.0, 0.0], atol=0.05)
        x0 = np.stack([p.x0 for p in pairs])
        np.testing.assert_allclose(x0.mean(axis=0), [0.0, 0.0], atol=0.05)

    def test_same_stream_same_pairs(self):
        spec = TaskSpec(name="gaussian_shift", dimension=3, shift=(1.0, 2.0, 3.0))
        a = generate_pairs(spec, 8, RngStream(seed=5))
        b = generate_pairs(spec, 8, RngStream(seed=5))
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.x0, pb.x0) and np.array_equal(pa.x1, pb.x1)


class TestMoonsRotate:
    def test_rotation_pairing_and_context(self):
        spec = TaskSpec(name="moons_rotate", dimension=2, angle=math.pi / 3)
        pairs = generate_pairs(spec, 200, RngStream(seed=3))
        signs = set()
        for p in pairs:
            angle = float(p.context[0])
            signs.add(np.sign(angle))
            assert abs(abs(angle) - math.pi / 3) < 1e-12
            rot = np.array(
                [[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]
            )
            np.testing.assert_allclose(p.x1, rot @ p.x0, atol=1e-12)
        assert signs == {-1.0, 1.0}

    def test_zero_context_provider_keeps_pairing(self):
        spec = TaskSpec(name="moons_rotate", dimension=2, angle=0.5)
        plain = pair_provider(spec)(16, RngStream(seed=9))
        zeroed = pair_provider(spec, zero_context=True)(16, RngStream(seed=9))
        for a, b in zip(plain, zeroed):
            assert np.array_equal(a.x0, b.x0) and np.array_equal(a.x1, b.x1)
            assert np.all(b.context == 0.0)


class TestGridColorize:
    def test_source_is_replicated_luminance(self):
        spec = TaskSpec(name="grid_colorize", dimension=48, grid_size=4)
        pairs = generate_pairs(spec, 10, RngStream(seed=4))
        luma = np.array([0.299, 0.587, 0.114])
        for p in pairs:
            color = p.x1.reshape(3, 16)
            gray = p.x0.reshape(3, 16)
            expected = luma @ color
            for channel in range(3):
                np.testing.assert_allclose(gray[channel], expected, atol=1e-12)

    def test_grid_capped_at_eight(self):
        with pytest.raises(ValueError):
            TaskSpec(name="grid_colorize", dimension=3 * 81, grid_size=9)


class TestSignalRefine:
    def test_source_repeats_kept_values(self):
        """Every kept sample appears k times, matching coarse construction."""
        spec = TaskSpec(name="signal_refine", dimension=16, repeat=4)
        pairs = generate_pairs(spec, 10, RngStream(seed=5))
        for p in pairs:
            for block in range(4):
                kept = p.x1[4 * block]
                np.testing.assert_allclose(p.x0[4 * block : 4 * block + 4], kept, atol=1e-12)

    def test_length_divisibility_enforced(self):
        with pytest.raises(ValueError):
            TaskSpec(name="signal_refine", dimension=10, repeat=4)


class TestEnergyDistance:
    def test_identical_sets_exactly_zero(self):
        a = gaussian(RngStream(seed=6), (100, 3))
        assert energy_distance(a, a) == 0.0

    def test_symmetry(self):
        a = gaussian(RngStream(seed=7), (64, 2))
        b = gaussian(RngStream(seed=8), (80, 2)) + 1.0
        assert energy_distance(a, b) == pytest.approx(energy_distance(b, a), rel=1e-12)

    def test_translation_invariance(self):
        """ED(A+c, B+c) = ED(A, B) up to rounding of the translated floats."""
        a = gaussian(RngStream(seed=9), (64, 2))
        b = gaussian(RngStream(seed=10), (64, 2)) * 1.3
        c = np.array([2.5, -1.0])
        assert energy_distance(a + c, b + c) == pytest.approx(
            energy_distance(a, b), rel=1e-12, abs=1e-12
        )

    def test_separated_gaussians_reference_value(self):
        """Unit Gaussians two apart in 1D: ED ~ 1.9444 (brute-force/analytic
        folded-normal reference), reproducible within 5% across seeds."""
        values = []
        for seed in (11, 12):
            a = gaussian(RngStream(seed=seed, stream=1), (10_000, 1))
            b = gaussian(RngStream(seed=seed, stream=2), (10_000, 1)) + 2.0
            values.append(energy_distance(a, b))
        for v in values:
            assert v > 0.0
            assert v == pytest.approx(1.9444, rel=0.05)
        assert values[0] == pytest.approx(values[1], rel=0.05)

    def test_chunking_invariant(self):
        a = gaussian(RngStream(seed=13), (300, 2))
        b = gaussian(RngStream(seed=14), (200, 2))
        assert energy_distance(a, b, chunk=64) == pytest.approx(
            energy_distance(a, b, chunk=512), rel=1e-12
        )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            energy_distance(np.zeros((4, 2)), np.zeros((4, 3)))

    @given(shift=st.floats(-5.0, 5.0))
    @settings(max_examples=30, deadline=None)
    def test_nonnegative_up_to_estimator_noise(self, shift):
        a = gaussian(RngStream(seed=15), (128, 1))
        b = gaussian(RngStream(seed=16), (128, 1)) + shift
        assert energy_distance(a, b) >= -1e-9


class TestEvaluate:
    def test_oracle_field_is_numerically_exact(self):
        spec = TaskSpec(name="gaussian_shift", dimension=2, shift=(2.0, 0.0))
        report = evaluate(
            oracle_batch_field, spec, uniform(4), "corrected", 1.0, 256, RngStream(seed=17)
        )
        assert report.paired_mse <= 1e-10
        assert report.sample_count == 256

    def test_untrained_model_stays_near_source_marginal(self):
        """Zero velocity field: generated set resembles the source, so its
        distance to the target matches ED(source, target) within 20%."""
        spec = TaskSpec(name="gaussian_shift", dimension=2, shift=(2.0, 0.0))
        mconfig = ModelConfig(input_dim=2, hidden=(16,))
        params = init(mconfig, RngStream(seed=18, stream=900))
        report = evaluate(
            model_batch_field(params, mconfig),
            spec,
            uniform(16),
            "corrected",
            1.0,
            2048,
            RngStream(seed=18),
        )
        pairs = generate_pairs(spec, 2048, RngStream(seed=18).split(1))
        sources = np.stack([p.x0 for p in pairs])
        targets = np.stack([p.x1 for p in pairs])
        baseline = energy_distance(sources, targets)
        assert report.energy_distance == pytest.approx(baseline, rel=0.2)

    def test_report_fields_finite_and_nonnegative(self):
        spec = TaskSpec(name="signal_refine", dimension=8, repeat=2)
        report = evaluate(
            oracle_batch_field, spec, uniform(8), "standard", 0.5, 64, RngStream(seed=19)
        )
        data = report.to_dict()
        for key in ("paired_mse", "energy_distance", "mean_displacement_error"):
            assert np.isfinite(data[key])
        assert data["paired_mse"] >= 0.0
        assert data["mean_displacement_error"] >= 0.0


class TestConditioningPathway:
    def test_context_strictly_beats_zeroed_context(self):
        """Per-pair rotation direction is only available through the context;
        at s=0 the zero-context model collapses to the mixture mean while the
        conditioned one resolves both modes (strictly lower energy distance,
        same seeds)."""
        spec = TaskSpec(name="moons_rotate", dimension=2, angle=math.pi / 2)
        results = {}
        for zero_context in (False, True):
            mconfig = ModelConfig(input_dim=2, hidden=(32, 32), context_dim=1)
            config = TrainConfig(
                objective="stabilized_velocity", noise_scale=0.0, steps=1500, seed=0
            )
            params = init(mconfig, RngStream(seed=0, stream=900))
            params, _ = train(
                params, mconfig, pair_provider(spec, zero_context=zero_context), config
            )
            report = evaluate(
                model_batch_field(params, mconfig, use_context=not zero_context),
                spec,
                uniform(16),
                "corrected",
                0.0,
                2048,
                RngStream(seed=0, stream=800),
            )
            results[zero_context] = report.energy_distance
        assert results[False] < results[True]


class TestStepCountTrend:
    def test_finer_schedules_beat_the_coarsest(self, shift_task, trained_shift_models):
        """Every finer corrected-mode schedule matches the target marginal at
        least as well as N=4 (10% slack). Beyond N~8 the energy distances sit
        in the estimator noise floor, so only the coarse-schedule penalty is
        asserted, not pointwise monotonicity."""
        from bridgelab.objectives import ObjectiveKind

        models, _elapsed = trained_shift_models
        params, mconfig, _stats = models[ObjectiveKind.STABILIZED_VELOCITY]
        eds = {}
        for n in (4, 8, 16, 64):
            report = evaluate(
                model_batch_field(params, mconfig),
                shift_task,
                uniform(n),
                "corrected",
                1.0,
                4096,
                RngStream(seed=11, stream=800),
            )
            eds[n] = report.energy_distance
        for n in (8, 16, 64):
            assert eds[n] <= 1.10 * eds[4]


class TestPairSerialization:
    def test_round_trip(self, tmp_path):
        spec = TaskSpec(name="moons_rotate", dimension=2, angle=0.4)
        pairs = generate_pairs(spec, 12, RngStream(seed=20))
        path = str(tmp_path / "pairs.csv")
        pairs_to_csv(path, pairs)
        loaded = pairs_from_csv(path)
        assert len(loaded) == len(pairs)
        for a, b in zip(pairs, loaded):
            np.testing.assert_array_equal(a.x0, b.x0)
            np.testing.assert_array_equal(a.x1, b.x1)
            np.testing.assert_array_equal(a.context, b.context)

    def test_header_schema(self, tmp_path):
        spec = TaskSpec(name="gaussian_shift", dimension=2, shift=(1.0, 1.0))
        pairs = generate_pairs(spec, 3, RngStream(seed=21))
        path = str(tmp_path / "pairs.csv")
        pairs_to_csv(path, pairs)
        with open(path) as fh:
            assert fh.readline().strip() == "x0_0,x0_1,x1_0,x1_1"
