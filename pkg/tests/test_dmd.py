"""
Unit tests for exact and compressed DMD and the model helpers.
"""
import pytest
import numpy as np

from dmd import (
    DmdModel,
    continuous_eigs,
    dmd_compressed,
    dmd_exact,
    mode_dynamics,
    model_report,
    reconstruct,
    reconstruct_split,
    save_modes,
    split_low_rank_sparse,
    vandermonde,
)
from frames_io import FrameSequence, read_raw_matrix, split_snapshots
from sensing import SensingKind, SensingOperator, make_sensing
from synth import make_planted_dmd

from conftest import PLANTED_EIGENVALUES


def _max_eig_error(found, planted):
    """Largest distance from each planted eigenvalue to its nearest recovered one."""
    found = np.asarray(found)
    return max(np.min(np.abs(found - lam)) for lam in planted)


class TestExactDmd:
    """Test exact DMD."""

    def test_static_video(self, static_frames):
        """Identical frames give a single mode with lambda = 1."""
        model = dmd_exact(split_snapshots(static_frames))
        assert model.k == 1
        assert model.lambdas[0] == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(reconstruct(model), static_frames.pixels, atol=1e-8)

    def test_planted_recovery(self, planted):
        """Planted eigenvalues are recovered to 1e-8 with automatic rank."""
        model = dmd_exact(split_snapshots(planted.frames))
        assert model.k == 3
        assert _max_eig_error(model.lambdas, PLANTED_EIGENVALUES) <= 1e-8

    def test_reconstruction_planted(self, planted):
        """Reconstruction matches the planted data."""
        model = dmd_exact(split_snapshots(planted.frames))
        X = planted.frames.pixels
        assert np.linalg.norm(reconstruct(model) - X) <= 1e-8 * np.linalg.norm(X)

    def test_conjugate_pairs_adjacent(self, planted):
        """Real data yields conjugate eigenvalue pairs next to each other."""
        model = dmd_exact(split_snapshots(planted.frames))
        complex_idx = [j for j in range(model.k) if abs(model.lambdas[j].imag) > 1e-6]
        assert len(complex_idx) == 2
        a, b = complex_idx
        assert b == a + 1
        assert model.lambdas[a] == pytest.approx(np.conj(model.lambdas[b]), abs=1e-8)

    def test_amplitudes_descending(self, planted):
        """Modes are ordered by descending |b| up to pair adjacency."""
        model = dmd_exact(split_snapshots(planted.frames))
        magnitudes = np.abs(model.amplitudes)
        assert magnitudes[0] == pytest.approx(magnitudes.max())

    def test_amplitudes_fit_first_frame(self, planted):
        """Phi b reproduces x_1."""
        model = dmd_exact(split_snapshots(planted.frames))
        assert np.allclose(np.real(model.modes @ model.amplitudes), planted.frames.frame(0), atol=1e-8)

    def test_fixed_rank_above_available(self):
        """Requesting more modes than snapshots is rejected."""
        frames = FrameSequence(np.random.default_rng(0).standard_normal((10, 4)), 10, 1)
        with pytest.raises(ValueError, match="out of range"):
            dmd_exact(split_snapshots(frames), k=5)

    def test_all_zero_input(self):
        """An all-zero video is degenerate."""
        with pytest.raises(ValueError, match="Degenerate"):
            dmd_exact(split_snapshots(FrameSequence(np.zeros((6, 5)), 3, 2)))

    def test_two_frames(self):
        """m=2 gives at most one mode."""
        frames = FrameSequence(np.array([[1.0, 2.0], [2.0, 4.0]]), 2, 1)
        model = dmd_exact(split_snapshots(frames))
        assert model.k == 1
        assert model.lambdas[0] == pytest.approx(2.0)

    def test_timings_recorded(self, planted):
        """Stage timings cover svd, eig, modes and amplitudes."""
        model = dmd_exact(split_snapshots(planted.frames))
        assert {"svd", "eig", "modes", "amplitudes"} <= set(model.timings)


class TestCompressedDmd:
    """Test compressed DMD."""

    @pytest.mark.parametrize("kind", ["gaussian", "sparse", "single_pixel", "srft"])
    def test_matches_exact_eigenvalues(self, planted, kind):
        """Every sensing family recovers the planted eigenvalues."""
        C = make_sensing(kind, 100, planted.frames.n_pixels, seed=11)
        model = dmd_compressed(split_snapshots(planted.frames), C)
        assert model.k == 3
        assert _max_eig_error(model.lambdas, PLANTED_EIGENVALUES) <= 1e-6

    def test_identity_sensing_equals_exact(self, planted):
        """p = n single-pixel sensing reproduces exact DMD."""
        n = planted.frames.n_pixels
        snapshots = split_snapshots(planted.frames)
        exact = dmd_exact(snapshots)
        compressed = dmd_compressed(snapshots, make_sensing("single_pixel", n, n, seed=0))
        assert np.allclose(np.sort_complex(exact.lambdas), np.sort_complex(compressed.lambdas), atol=1e-10)

    def test_eigenvalues_invariant_to_sensing_scale(self, planted):
        """Scaling C by a constant leaves the compressed eigenvalues unchanged."""
        C = make_sensing("gaussian", 60, planted.frames.n_pixels, seed=4)
        scaled = SensingOperator(SensingKind.GAUSSIAN, C.p, C.n, C.seed, matrix=3.7 * C.matrix)
        snapshots = split_snapshots(planted.frames)
        base = np.sort_complex(dmd_compressed(snapshots, C).lambdas)
        rescaled = np.sort_complex(dmd_compressed(snapshots, scaled).lambdas)
        assert np.allclose(base, rescaled, atol=1e-10)

    def test_compressed_modes_are_sensed_modes(self, planted):
        """Phi_Y equals C Phi for noiseless low-rank data."""
        C = make_sensing("gaussian", 60, planted.frames.n_pixels, seed=2)
        model = dmd_compressed(split_snapshots(planted.frames), C)
        sensed = C.matrix @ model.modes
        assert np.allclose(model.modes_compressed, sensed, atol=1e-8 * np.abs(sensed).max())

    def test_compressed_amplitudes(self, planted):
        """Both amplitude paths agree on noiseless data."""
        snapshots = split_snapshots(planted.frames)
        C = make_sensing("sparse", 200, planted.frames.n_pixels, seed=3)
        full = dmd_compressed(snapshots, C, amplitude_mode="full")
        small = dmd_compressed(snapshots, C, amplitude_mode="compressed")
        assert np.allclose(np.sort(np.abs(full.amplitudes)), np.sort(np.abs(small.amplitudes)), rtol=1e-6)

    def test_sensing_record(self, planted):
        """The model records the sensing parameters."""
        C = make_sensing("spixel", 50, planted.frames.n_pixels, seed=7)
        model = dmd_compressed(split_snapshots(planted.frames), C)
        assert model.sensing == {"kind": "single_pixel", "p": 50, "n": 500, "seed": 7, "s": None}
        assert "compress" in model.timings

    def test_deterministic(self, planted):
        """Same seed gives identical models."""
        snapshots = split_snapshots(planted.frames)
        a = dmd_compressed(snapshots, make_sensing("sparse", 80, 500, seed=4))
        b = dmd_compressed(snapshots, make_sensing("sparse", 80, 500, seed=4))
        assert np.array_equal(a.lambdas, b.lambdas)
        assert np.array_equal(a.modes, b.modes)

    def test_rank_above_p(self, planted):
        """Fixed k larger than p is rejected."""
        C = make_sensing("gaussian", 5, 500, seed=0)
        with pytest.raises(ValueError, match="smaller than target rank"):
            dmd_compressed(split_snapshots(planted.frames), C, k=6)

    def test_dimension_mismatch(self, planted):
        """C.n must equal the pixel count."""
        with pytest.raises(ValueError, match="dimension mismatch"):
            dmd_compressed(split_snapshots(planted.frames), make_sensing("gaussian", 5, 400))

    def test_bad_amplitude_mode(self, planted):
        """Unknown amplitude modes are rejected."""
        with pytest.raises(ValueError, match="amplitude_mode"):
            dmd_compressed(split_snapshots(planted.frames), make_sensing("gaussian", 5, 500), amplitude_mode="x")


class TestModelHelpers:
    """Test Vandermonde, continuous eigenvalues and the L+S split."""

    def test_vandermonde_structure(self, planted):
        """Column 0 is ones and column t+1 = column t * lambda."""
        model = dmd_exact(split_snapshots(planted.frames))
        V = vandermonde(model, 10)
        assert np.allclose(V[:, 0], 1.0)
        assert np.allclose(V[:, 1:], V[:, :-1] * model.lambdas[:, None])

    def test_continuous_eigs(self, planted):
        """omega = log(lambda) / dt; the unit eigenvalue maps to zero."""
        model = dmd_exact(split_snapshots(planted.frames))
        omegas = continuous_eigs(model)
        assert np.min(np.abs(omegas)) <= 1e-8
        assert np.allclose(np.exp(omegas), model.lambdas)

    def test_split_partition(self, planted):
        """The split partitions the modes; |omega| <= tol are background."""
        model = dmd_exact(split_snapshots(planted.frames))
        split = split_low_rank_sparse(model, 0.01)
        assert sorted(split.background + split.foreground) == list(range(model.k))
        assert len(split.background) == 1
        assert abs(model.lambdas[split.background[0]] - 1.0) < 1e-8

    def test_split_fallback(self, planted):
        """With tol = 0 the smallest |omega| mode is kept."""
        model = dmd_exact(split_snapshots(planted.frames))
        split = split_low_rank_sparse(model, 0.0)
        assert len(split.background) == 1

    def test_low_rank_plus_sparse_exact(self):
        """L + S equals the full reconstruction bit for bit."""
        for seed in range(20):
            planted = make_planted_dmd(500, 50, PLANTED_EIGENVALUES, seed=seed)
            model = dmd_exact(split_snapshots(planted.frames))
            L, S, total = reconstruct_split(model, split_low_rank_sparse(model))
            assert np.array_equal(total, L + S)
            assert np.array_equal(total, reconstruct(model))

    def test_low_rank_plus_sparse_exact_with_tolerance(self, planted):
        """The identity holds at any omega_tol when reconstruct uses the same one."""
        model = dmd_exact(split_snapshots(planted.frames))
        split = split_low_rank_sparse(model, 0.5)
        assert len(split.background) == 3
        _, S, total = reconstruct_split(model, split, range(10))
        assert not np.any(S)
        assert np.array_equal(total, reconstruct(model, range(10), omega_tol=0.5))

    def test_split_fallback_keeps_conjugate_pair(self):
        """When the smallest |omega| belongs to a conjugate pair, both modes fall back together."""
        eigenvalues = [0.9, 0.99 * np.exp(0.05j), 0.99 * np.exp(-0.05j)]
        model = dmd_exact(split_snapshots(make_planted_dmd(200, 40, eigenvalues, seed=1).frames))
        split = split_low_rank_sparse(model, 0.01)
        assert len(split.background) == 2
        pair = model.lambdas[list(split.background)]
        assert pair[0] == pytest.approx(np.conj(pair[1]), abs=1e-8)
        assert np.allclose(np.abs(pair), 0.99, atol=1e-8)

    def test_realness_violation_recorded(self):
        """An imaginary residue above tolerance is recorded in the model diagnostics."""
        model = DmdModel(
            modes=np.ones((4, 1), dtype=np.complex128),
            lambdas=np.array([1.0 + 0j]),
            amplitudes=np.array([1.0 + 1.0j]),
            frame_interval=1.0,
            n_frames=3,
        )
        X = reconstruct(model)
        assert np.array_equal(X, np.ones((4, 3)))
        assert model.diagnostics["realness_violation"] == pytest.approx(1.0)
        assert model_report(model)["diagnostics"]["realness_violation"] == pytest.approx(1.0)

    def test_real_reconstruction_leaves_no_violation(self, planted):
        """Conjugate pairs cancel, so planted data records no violation."""
        model = dmd_exact(split_snapshots(planted.frames))
        reconstruct(model)
        assert "realness_violation" not in model.diagnostics

    def test_reconstruct_range(self, planted):
        """t_range selects frames (0-based)."""
        model = dmd_exact(split_snapshots(planted.frames))
        part = reconstruct(model, range(5, 8))
        assert np.allclose(part, planted.frames.pixels[:, 5:8], atol=1e-8)

    def test_mode_dynamics_shape(self, planted):
        """|B V| is k x m and starts at |b|."""
        model = dmd_exact(split_snapshots(planted.frames))
        dynamics = mode_dynamics(model)
        assert dynamics.shape == (3, 50)
        assert np.allclose(dynamics[:, 0], np.abs(model.amplitudes))

    def test_model_report_json_ready(self, planted):
        """Reports use plain lists and floats."""
        model = dmd_exact(split_snapshots(planted.frames))
        report = model_report(model, include_dynamics=True)
        assert report["k"] == 3
        assert len(report["lambdas"]) == 3
        assert all(len(pair) == 2 for pair in report["omegas"])
        assert len(report["mode_dynamics"]) == 3

    def test_save_modes(self, planted, tmp_path):
        """Modes are written as real and imaginary raw_matrix files."""
        model = dmd_exact(split_snapshots(planted.frames))
        real_path, imag_path = save_modes(model, tmp_path, 500, 1)
        real, width, height, _ = read_raw_matrix(real_path)
        imag, _, _, _ = read_raw_matrix(imag_path)
        assert (width, height) == (500, 1)
        assert np.array_equal(real + 1j * imag, model.modes)
