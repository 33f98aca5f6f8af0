"""
Tests for losses, early stopping, teacher training and distillation.
"""

import numpy as np
import pytest

from timekd.autodiff import Tensor, precision
from timekd.config import Settings
from timekd.core import TimeKDPipeline
from timekd.core.embeddings import EmbeddingStore, series_store
from timekd.data import make_windows
from timekd.errors import ContractError, ShapeError
from timekd.managers import cache_read, cache_write
from timekd.models import CrossModalityTeacher, StudentConfig, TeacherConfig, TimeSeriesStudent
from timekd.nn import Linear
from timekd.training import (
    EarlyStopping,
    HyperParams,
    JointTrainer,
    StudentTrainer,
    TeacherTrainer,
    forecast_validation_loss,
    pkd_loss,
    total_loss,
)


def series_teacher(**overrides) -> CrossModalityTeacher:
    base = {
        "history": 8,
        "horizon": 4,
        "llm_dim": 8,
        "model_dim": 8,
        "num_layers": 1,
        "num_heads": 2,
        "ffn_ratio": 2,
        "dropout": 0.0,
        "use_clm": False,
    }
    return CrossModalityTeacher(TeacherConfig(**{**base, **overrides}))


def small_student(num_variables: int = 2, seed: int = 0) -> TimeSeriesStudent:
    return TimeSeriesStudent(
        StudentConfig(
            history=8,
            horizon=4,
            num_variables=num_variables,
            model_dim=8,
            num_layers=1,
            num_heads=2,
            ffn_ratio=2,
            dropout=0.0,
            seed=seed,
        )
    )


@pytest.fixture
def train_windows(synthetic):
    return make_windows(synthetic.split("train"), 8, 4, stride=4)


@pytest.fixture
def val_windows(synthetic):
    return make_windows(synthetic.split("val"), 8, 4, stride=2)


@pytest.fixture
def store(float64, train_windows):
    return series_store(train_windows, privileged=True, dtype=np.float64)


@pytest.fixture
def cached_artifacts(store, tmp_path):
    """Teacher artifacts for every training window, written to a cache."""
    teacher = series_teacher()
    artifacts = TeacherTrainer(teacher, HyperParams(batch_size=8)).collect_artifacts(store)
    path = cache_write(
        artifacts, tmp_path / "artifacts.tkdc", config_hash=42, horizon=4, precision="float64"
    )
    return path, artifacts


class TestLosses:
    """Tests for the weighted objectives."""

    def test_zero_weights_are_skipped(self, float64):
        """Test that only weighted terms enter the total."""
        l_fcst = Tensor(2.0)
        assert total_loss(None, None, l_fcst, 1.0, 1.0, 1.0) is l_fcst
        assert pkd_loss(None, None, 1.0, 1.0) == 0.0
        assert pkd_loss(Tensor(1.0), Tensor(3.0), 0.0, 0.0) == 0.0

    def test_weighted_sum(self, float64):
        """Test the weighted combination of all three objectives."""
        total = total_loss(Tensor(1.0), Tensor(2.0), Tensor(4.0), 0.5, 0.25, 1.0)
        assert total.item() == pytest.approx(0.5 + 0.5 + 4.0)


class TestEarlyStopping:
    """Tests for validation-based model selection."""

    def test_patience_and_restore(self, float64, rng):
        """Test stopping after stale epochs and restoring the best weights."""
        layer = Linear(2, 2, rng)
        stopper = EarlyStopping(2, [layer])

        assert stopper.update(0, 1.0) is False
        layer.bias.data += 1.0
        assert stopper.update(1, 0.5) is False
        best = layer.bias.data.copy()
        layer.bias.data += 1.0
        assert stopper.update(2, 0.6) is False
        assert stopper.update(3, 0.7) is True

        stopper.restore()
        np.testing.assert_array_equal(layer.bias.data, best)
        assert stopper.best_epoch == 1


class TestHyperParams:
    """Tests for trainer settings."""

    def test_from_settings(self, tiny_settings):
        """Test stage-specific epochs and the run seed."""
        hyper = HyperParams.from_settings(tiny_settings, "teacher", seed=9)
        assert hyper.epochs == tiny_settings.teacher_epochs
        assert hyper.seed == 9
        assert HyperParams.from_settings(tiny_settings, "student").seed == 0

    def test_ablation_weights(self, make_settings):
        """Test that ablation switches zero the matching loss weights."""
        hyper = HyperParams.from_settings(make_settings(without_cd=True), "student")
        assert hyper.lambda_c == 0.0
        assert hyper.distills is True
        assert HyperParams(lambda_p=0.0).distills is False
        assert HyperParams(lambda_c=0.0, lambda_e=0.0).distills is False


class TestTeacherTrainer:
    """Tests for teacher fitting and artifact collection."""

    def test_overfits_small_store(self, float64, train_windows):
        """Test that reconstruction loss falls on a handful of windows."""
        small = series_store(train_windows[:4], privileged=True, dtype=np.float64)
        hyper = HyperParams(learning_rate=1e-2, epochs=80, patience=100, batch_size=4)
        history = TeacherTrainer(series_teacher(), hyper).fit(small)

        assert history.epochs == 80
        assert history.steps == 80
        assert history.train_losses[-1] < 0.5 * history.train_losses[0]

    def test_full_teacher_fits_one_window(self, run_dir):
        """Test that the CLM teacher at desk scale drives reconstruction loss below 1e-2."""
        settings = Settings.from_yaml().with_overrides(
            {"dropout": 0.0, "precision": "float64", "output_dir": run_dir, "log_level": "ERROR"}
        )
        pipeline = TimeKDPipeline(settings)
        with precision(settings.numpy_dtype):
            dataset = pipeline.load_dataset()
            windows = pipeline.split_windows(dataset, "train")[:1]
            store, _, _ = pipeline.build_stores(windows, [])
            teacher = CrossModalityTeacher(pipeline.teacher_config())
            hyper = HyperParams(
                learning_rate=1e-3, epochs=2000, patience=2000, batch_size=1, max_steps=2000
            )
            history = TeacherTrainer(teacher, hyper).fit(store)

        assert settings.history_length == settings.horizon == 24
        assert dataset.num_rows == 2000
        assert history.steps <= 2000
        assert min(history.train_losses) < 1e-2

    def test_max_steps(self, store):
        """Test that training stops at the step budget."""
        hyper = HyperParams(epochs=10, batch_size=8, max_steps=5)
        history = TeacherTrainer(series_teacher(), hyper).fit(store)
        assert history.steps == 5

    def test_collect_artifacts(self, store):
        """Test one artifact per window in index order."""
        artifacts = TeacherTrainer(series_teacher(), HyperParams(batch_size=8)).collect_artifacts(store)
        assert [a.index for a in artifacts] == list(range(len(store)))
        assert artifacts[0].a_pe.shape == (2, 2)
        assert artifacts[0].e_gt.shape == (2, 8)

    def test_store_alignment(self):
        """Test that store arrays must have one row per window."""
        with pytest.raises(ContractError):
            EmbeddingStore(np.zeros((2, 1, 1)), np.zeros((3, 1, 1)), np.zeros((2, 1, 1)))


class TestStudentTrainer:
    """Tests for staged distillation."""

    def test_zero_pkd_weight_equals_supervised(self, float64, train_windows, val_windows):
        """Test that lambda_p = 0 gives exactly the supervised student."""
        without_pkd = small_student()
        StudentTrainer(without_pkd, HyperParams(lambda_p=0.0, epochs=2, batch_size=8)).fit(
            train_windows, val_windows
        )
        supervised = small_student()
        StudentTrainer(
            supervised, HyperParams(lambda_c=0.0, lambda_e=0.0, epochs=2, batch_size=8)
        ).fit(train_windows, val_windows)

        assert without_pkd.checksum() == supervised.checksum()

    def test_distillation_needs_cache(self, float64):
        """Test that nonzero distillation weights require the cache."""
        with pytest.raises(ContractError):
            StudentTrainer(small_student(), HyperParams())

    def test_distills_from_cache(self, float64, train_windows, cached_artifacts):
        """Test a staged run reading teacher signals from the cache."""
        path, _ = cached_artifacts
        reader = cache_read(path, 42)
        student = small_student()
        hyper = HyperParams(epochs=1, batch_size=8, prefetch_windows=4)
        history = StudentTrainer(student, hyper, reader).fit(train_windows)

        supervised = small_student()
        StudentTrainer(supervised, HyperParams(lambda_p=0.0, epochs=1, batch_size=8)).fit(
            train_windows
        )
        assert history.steps == 4
        assert student.checksum() != supervised.checksum()

    def test_teacher_signals_match_cache(self, float64, cached_artifacts):
        """Test that batch signals are the cached records in batch order."""
        path, artifacts = cached_artifacts
        trainer = StudentTrainer(small_student(), HyperParams(prefetch_windows=2), cache_read(path, 42))
        positions = np.array([5, 1, 3])
        a_pe, e_gt = trainer.teacher_signals(positions, positions)
        np.testing.assert_allclose(a_pe[0], artifacts[5].a_pe)
        np.testing.assert_allclose(e_gt[2], artifacts[3].e_gt)

    def test_cache_shape_mismatch(self, float64, cached_artifacts):
        """Test that a cache for another variable count is refused."""
        path, _ = cached_artifacts
        with pytest.raises(ShapeError):
            StudentTrainer(small_student(num_variables=3), HyperParams(), cache_read(path, 42))

    def test_validation_loss(self, float64, val_windows):
        """Test the forecasting loss used for model selection."""
        loss = forecast_validation_loss(small_student(), val_windows, batch_size=2)
        assert loss > 0.0
        assert np.isfinite(loss)


class TestJointTrainer:
    """Tests for single-loop teacher and student training."""

    def test_updates_both_models(self, store, train_windows, val_windows):
        """Test that one joint epoch moves teacher and student."""
        teacher, student = series_teacher(), small_student()
        teacher_before, student_before = teacher.checksum(), student.checksum()
        history = JointTrainer(teacher, student, HyperParams(epochs=1, batch_size=8)).fit(
            store, train_windows, val_windows
        )

        assert history.steps == 4
        assert teacher.checksum() != teacher_before
        assert student.checksum() != student_before

    def test_alignment_checked(self, store, train_windows):
        """Test that the store and windows must line up."""
        trainer = JointTrainer(series_teacher(), small_student(), HyperParams(epochs=1))
        with pytest.raises(ContractError):
            trainer.fit(store, train_windows[:3])
