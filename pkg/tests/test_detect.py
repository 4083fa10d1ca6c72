import numpy as np
import pytest

from nnc.augment import AUG_DIM, ZeroAppearanceProvider
from nnc.config import RunConfig
from nnc.detect import (AnomalyMap, NormalityModel, PipelineError,
                        build_series, load_model, normalize_scores, read_maps,
                        read_scores_csv, save_model, score_cube,
                        score_sequence, temporal_smooth, train, upsample_map,
                        write_maps, write_scores_csv)
from nnc.ingest import FormatError, FrameSequence, GrayFrame
from nnc.ocsvm import OneClassSvmModel
from nnc.synth import ActorSpec, SynthSpec, generate

TINY_CFG = RunConfig(min_cluster_size=200, seed=3)


def tiny_spec(n_frames=24, seed=5):
    return SynthSpec(
        width=160, height=120, n_frames=n_frames, seed=seed,
        normal_actors=(ActorSpec(size=9.0, speed=1.2, direction=30.0),
                       ActorSpec(size=8.0, speed=1.0, direction=120.0)),
    )


@pytest.fixture(scope="module")
def tiny_model():
    seq, _ = generate(tiny_spec())
    return train(seq, ZeroAppearanceProvider(), TINY_CFG), seq


def handmade_model(weights, rhos):
    models = [OneClassSvmModel(nu=0.1, rho=np.float32(r),
                               w=np.asarray(w, dtype=np.float32), n_train=10)
              for w, r in zip(weights, rhos)]
    return NormalityModel(models=models, tau_static=0.1, normalize_blocks=True,
                          k_total=len(models), min_cluster_size=1)


class TestTrain:
    def test_synth_training_yields_valid_model(self, tiny_model):
        model, _ = tiny_model
        assert model.r >= 1
        assert model.dim == AUG_DIM
        assert all(m.n_train >= TINY_CFG.min_cluster_size for m in model.models)

    def test_nu_property_on_every_cluster_model(self, tiny_model):
        model, seq = tiny_model
        for svm in model.models:
            assert svm.alphas is not None
            n = svm.n_train
            assert float(np.mean(svm.alphas > 0)) >= svm.nu - 1.0 / n

    def test_single_cluster_degenerate(self):
        seq, _ = generate(tiny_spec(n_frames=10))
        cfg = RunConfig(min_cluster_size=500, cubes_per_cluster=5000, seed=1)
        model = train(seq, ZeroAppearanceProvider(), cfg)
        assert model.k_total == 1 and model.r == 1

    def test_all_static_video_rejected(self):
        stack = np.full((8, 120, 160), 0.5, np.float32)
        seq = FrameSequence(frames=[GrayFrame(pixels=stack[i], index=i)
                                    for i in range(8)])
        with pytest.raises(PipelineError, match="static"):
            train(seq, ZeroAppearanceProvider(), TINY_CFG)

    def test_too_short_video_rejected(self):
        seq, _ = generate(tiny_spec(n_frames=6))
        short = FrameSequence(frames=seq.frames[:4])
        with pytest.raises(PipelineError):
            train(short, ZeroAppearanceProvider(), TINY_CFG)


class TestScoreCube:
    def test_negation_of_best_decision(self):
        w1 = np.zeros(AUG_DIM); w1[0] = 1.0
        w2 = np.zeros(AUG_DIM); w2[1] = 1.0
        model = handmade_model([w1, w2], [0.25, 0.5])
        x = np.zeros(AUG_DIM); x[0], x[1] = 0.3, 0.9
        expected = -max(0.3 - 0.25, 0.9 - 0.5)
        assert score_cube(model, x) == pytest.approx(expected, abs=1e-7)

    def test_matches_independent_loop(self, tiny_model, rng):
        model, _ = tiny_model
        x = rng.random(AUG_DIM)
        by_loop = -max(float(x @ m.w.astype(np.float64)) - float(m.rho)
                       for m in model.models)
        assert score_cube(model, x) == pytest.approx(by_loop, abs=1e-9)

    def test_model_order_invariance(self, tiny_model, rng):
        model, _ = tiny_model
        x = rng.random(AUG_DIM)
        shuffled = NormalityModel(models=model.models[::-1],
                                  tau_static=model.tau_static,
                                  normalize_blocks=model.normalize_blocks,
                                  k_total=model.k_total,
                                  min_cluster_size=model.min_cluster_size)
        assert score_cube(model, x) == score_cube(shuffled, x)

    def test_duplicate_model_changes_nothing(self, tiny_model, rng):
        model, _ = tiny_model
        x = rng.random(AUG_DIM)
        padded = NormalityModel(models=model.models + [model.models[0]],
                                tau_static=model.tau_static,
                                normalize_blocks=model.normalize_blocks,
                                k_total=model.k_total,
                                min_cluster_size=model.min_cluster_size)
        assert score_cube(padded, x) == score_cube(model, x)

    def test_dim_mismatch_rejected(self, tiny_model):
        model, _ = tiny_model
        with pytest.raises(ValueError):
            score_cube(model, np.zeros(3))


class TestScoreSequence:
    def test_all_static_video_scores_flat_floor(self, tiny_model):
        model, _ = tiny_model
        stack = np.full((12, 120, 160), 0.5, np.float32)
        seq = FrameSequence(frames=[GrayFrame(pixels=stack[i], index=i)
                                    for i in range(12)])
        maps, series = score_sequence(model, seq, ZeroAppearanceProvider())
        np.testing.assert_array_equal(series.raw, 0.0)
        np.testing.assert_array_equal(series.normalized, 0.0)
        assert len(series.raw) == 12

    def test_skipped_frames_hold_previous_map(self, tiny_model):
        model, seq = tiny_model
        maps, series = score_sequence(model, seq, ZeroAppearanceProvider(),
                                      test_frame_stride=2)
        # positions are 4, 6, ...; frame 5 holds frame 4's map
        np.testing.assert_array_equal(maps[5].grid, maps[4].grid)
        assert not np.array_equal(maps[6].grid, maps[4].grid)
        # frames before the first position carry the first computed map
        np.testing.assert_array_equal(maps[0].grid, maps[4].grid)
        assert len(maps) == len(seq)

    def test_series_lengths_and_frame_max(self, tiny_model):
        model, seq = tiny_model
        maps, series = score_sequence(model, seq, ZeroAppearanceProvider())
        assert len(series.raw) == len(series.smoothed) == len(series.normalized)
        for f in (0, 7, 11):
            assert series.raw[f] == pytest.approx(maps[f].grid.max())
        assert series.normalized.min() >= 0.0
        assert series.normalized.max() <= 1.0


class TestTemporalSmooth:
    def test_sigma_zero_is_identity(self, rng):
        s = rng.random(40)
        np.testing.assert_array_equal(temporal_smooth(s, 0.0), s)

    def test_impulse_keeps_unit_mass(self):
        s = np.zeros(101)
        s[50] = 1.0
        out = temporal_smooth(s, 3.0)
        assert out.sum() == pytest.approx(1.0, abs=1e-6)
        assert out[50] == out.max()

    def test_constant_series_unchanged(self):
        s = np.full(30, 0.7)
        np.testing.assert_allclose(temporal_smooth(s, 5.0), 0.7, atol=1e-12)


class TestNormalizeScores:
    def test_simple_span(self):
        np.testing.assert_allclose(normalize_scores(np.array([2.0, 4.0, 6.0])),
                                   [0.0, 0.5, 1.0])

    def test_constant_maps_to_zeros(self):
        np.testing.assert_array_equal(normalize_scores(np.full(5, 3.3)),
                                      np.zeros(5))

    def test_order_preserved(self, rng):
        s = rng.random(50)
        out = normalize_scores(s)
        np.testing.assert_array_equal(np.argsort(s), np.argsort(out))


class TestUpsampleMap:
    def test_constant_grid(self):
        out = upsample_map(np.full((12, 16), 2.0), 64, 48)
        assert out.shape == (48, 64)
        np.testing.assert_allclose(out, 2.0, atol=1e-12)

    def test_same_size_identity(self, rng):
        grid = rng.random((12, 16))
        np.testing.assert_array_equal(upsample_map(grid, 16, 12), grid)

    def test_hot_cell_peak_in_footprint(self):
        grid = np.zeros((12, 16))
        grid[3, 11] = 5.0
        out = upsample_map(grid, 160, 120)
        y, x = np.unravel_index(np.argmax(out), out.shape)
        assert 30 <= y < 40 and 110 <= x < 120

    def test_accepts_anomaly_map(self, rng):
        m = AnomalyMap(frame_index=0, grid=rng.random((12, 16)))
        assert upsample_map(m, 32, 24).shape == (24, 32)


class TestModelRoundTrip:
    def test_scores_identical_after_round_trip(self, tiny_model, tmp_path, rng):
        model, seq = tiny_model
        path = str(tmp_path / "model.nncm")
        save_model(model, path)
        back = load_model(path)
        assert back.r == model.r
        x = rng.random(AUG_DIM)
        assert score_cube(back, x) == score_cube(model, x)
        _, series_a = score_sequence(model, seq, ZeroAppearanceProvider())
        _, series_b = score_sequence(back, seq, ZeroAppearanceProvider())
        np.testing.assert_array_equal(series_a.raw, series_b.raw)

    def test_save_is_deterministic(self, tiny_model, tmp_path):
        model, _ = tiny_model
        p1, p2 = str(tmp_path / "a.nncm"), str(tmp_path / "b.nncm")
        save_model(model, p1)
        save_model(model, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_corrupt_magic_rejected(self, tiny_model, tmp_path):
        model, _ = tiny_model
        path = tmp_path / "model.nncm"
        save_model(model, str(path))
        data = path.read_bytes()
        path.write_bytes(b"XXXX" + data[4:])
        with pytest.raises(FormatError, match="magic"):
            load_model(str(path))

    def test_future_version_rejected(self, tiny_model, tmp_path):
        model, _ = tiny_model
        path = tmp_path / "model.nncm"
        save_model(model, str(path))
        data = bytearray(path.read_bytes())
        data[4:8] = (2).to_bytes(4, "little")
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="version 2"):
            load_model(str(path))

    def test_truncation_rejected(self, tiny_model, tmp_path):
        model, _ = tiny_model
        path = tmp_path / "model.nncm"
        save_model(model, str(path))
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(FormatError, match="truncated"):
            load_model(str(path))


class TestScoreCsvAndMaps:
    def test_scores_csv_round_trip(self, tmp_path, rng):
        series = build_series(rng.random(20), sigma_t=2.0)
        path = str(tmp_path / "scores.csv")
        write_scores_csv(path, series)
        back = read_scores_csv(path)
        np.testing.assert_array_equal(back.raw, series.raw)
        np.testing.assert_array_equal(back.smoothed, series.smoothed)
        np.testing.assert_array_equal(back.normalized, series.normalized)

    def test_maps_round_trip(self, tmp_path, rng):
        maps = [AnomalyMap(frame_index=i,
                           grid=rng.random((12, 16)).astype(np.float32)
                           .astype(np.float64))
                for i in range(4)]
        path = str(tmp_path / "maps.nnca")
        write_maps(path, maps)
        back = read_maps(path)
        assert len(back) == 4
        for a, b in zip(maps, back):
            np.testing.assert_array_equal(a.grid, b.grid)
