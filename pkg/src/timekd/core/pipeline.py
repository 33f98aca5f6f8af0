"""
Main TimeKD pipeline orchestration.

Each public method backs one CLI subcommand. Training runs under the
configured precision; inference only ever touches the student checkpoint.
"""

import hashlib
import logging
import time
from pathlib import Path

import numpy as np
import pandas as pd

from ..autodiff.tensor import precision
from ..config import Settings
from ..data import (
    Dataset,
    TimeSeriesWindow,
    history_window,
    load_csv,
    make_windows,
    synth_dataset,
    training_fraction,
    window_count,
)
from ..errors import ContractError, InsufficientDataError, ShapeError, TimeKDError
from ..managers import (
    STUDENT_MAGIC,
    TEACHER_MAGIC,
    ArtifactCache,
    CheckpointManager,
    PromptManager,
    config_hash,
)
from ..models import (
    CalibratedLanguageModel,
    ClmConfig,
    CrossModalityTeacher,
    StudentConfig,
    TeacherConfig,
    TimeSeriesStudent,
)
from ..prompts import Tokenizer, Vocabulary
from ..training import (
    HyperParams,
    JointTrainer,
    StudentTrainer,
    TeacherTrainer,
    TrainingHistory,
)
from .embeddings import EmbeddingStore, PromptEmbedder, series_store
from .metrics import mae, mse
from .models import DatasetSummary, MetricsReport, TrainingSummary

logger = logging.getLogger(__name__)


class RunPaths:
    """Files a run reads and writes inside its output directory."""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.teacher_checkpoint = self.output_dir / "teacher.tkdt"
        self.cache = self.output_dir / "artifacts.tkdc"
        self.student_checkpoint = self.output_dir / "student.tkds"
        self.resolved_config = self.output_dir / "resolved_config.conf"
        self.metrics_csv = self.output_dir / "metrics.csv"
        self.metrics_txt = self.output_dir / "metrics.txt"
        self.forecast_csv = self.output_dir / "forecast.csv"
        self.report_dir = self.output_dir / "report"

    def teacher_artifacts(self) -> list[Path]:
        return [self.teacher_checkpoint, self.cache]


class TimeKDPipeline:
    """Data preparation, teacher training, distillation, evaluation and reports."""

    def __init__(self, settings: Settings):
        self.settings = settings
        self.paths = RunPaths(settings.output_dir)
        self.prompt_manager = PromptManager(decimals=settings.value_decimals)
        self.seed = settings.seeds[0]

    # Data

    def load_dataset(self, path: Path | str | None = None) -> Dataset:
        s = self.settings
        path = path if path is not None else s.dataset_path
        if path is None:
            dataset = synth_dataset(
                s.synthetic_seed,
                s.synthetic_length,
                s.synthetic_variables,
                s.synthetic_noise,
                freq=s.freq,
            )
            update = {"split_ratios": s.split_tuple, "name": s.dataset_name}
            update = {k: v for k, v in update.items() if v}
            return dataset.model_copy(update=update) if update else dataset
        return load_csv(path, freq=s.freq, name=s.dataset_name, split_ratios=s.split_tuple)

    def split_windows(
        self, dataset: Dataset, split: str, required: bool = True
    ) -> list[TimeSeriesWindow]:
        s = self.settings
        data_split = dataset.split(split)
        stride = s.eval_stride
        if split == "train":
            data_split = training_fraction(data_split, s.train_fraction)
            stride = s.train_stride
        try:
            return make_windows(data_split, s.history_length, s.horizon, stride)
        except InsufficientDataError:
            if required:
                raise
            logger.warning(f"The {split} split is too short for one window; skipping it")
            return []

    def ingest(self) -> DatasetSummary:
        dataset = self.load_dataset()
        s = self.settings
        rows, windows = {}, {}
        for split in ("train", "val", "test"):
            data_split = dataset.split(split)
            if split == "train":
                data_split = training_fraction(data_split, s.train_fraction)
            rows[split] = data_split.num_rows
            stride = s.train_stride if split == "train" else s.eval_stride
            windows[split] = window_count(data_split.num_rows, s.history_length, s.horizon, stride)
        if windows["train"] == 0 or windows["test"] == 0:
            raise InsufficientDataError(
                f"{dataset.name} yields {windows['train']} training and "
                f"{windows['test']} test windows for H={s.history_length}, G={s.horizon}"
            )
        self.write_resolved_config()
        return DatasetSummary(
            name=dataset.name,
            rows=dataset.num_rows,
            variables=dataset.num_variables,
            columns=dataset.columns,
            first_timestamp=dataset.timestamps[0],
            last_timestamp=dataset.timestamps[-1],
            split_rows=rows,
            split_windows=windows,
        )

    # Configuration

    def vocabulary(self) -> Vocabulary:
        s = self.settings
        if s.vocab_path is not None and Path(s.vocab_path).is_file():
            return Vocabulary.load(s.vocab_path)
        words = self.prompt_manager.template_words() | set(self.prompt_manager.frequency_words())
        for label in (s.freq, s.freq_plural or ""):
            words.update(label.split())
        vocabulary = Vocabulary.build(words)
        if s.vocab_path is not None:
            vocabulary.save(s.vocab_path)
        return vocabulary

    def clm_config(self, vocabulary: Vocabulary) -> ClmConfig:
        s = self.settings
        return ClmConfig(
            vocab_size=len(vocabulary),
            hidden_dim=s.clm_hidden_dim,
            num_layers=s.clm_layers,
            num_heads=s.clm_heads,
            ffn_ratio=s.clm_ffn_ratio,
            delta=s.effective_delta,
            max_seq_len=s.clm_max_seq_len,
            seed=s.clm_seed,
        )

    def teacher_config(self) -> TeacherConfig:
        s = self.settings
        return TeacherConfig(
            history=s.history_length,
            horizon=s.horizon,
            llm_dim=s.clm_hidden_dim,
            model_dim=s.model_dim,
            num_layers=s.teacher_layers,
            num_heads=s.teacher_heads,
            ffn_ratio=s.ffn_ratio,
            dropout=s.dropout,
            use_clm=not s.without_clm,
            use_sca=not s.without_sca,
            privileged=not s.without_pi,
            seed=self.seed,
        )

    def student_config(self, num_variables: int) -> StudentConfig:
        s = self.settings
        return StudentConfig(
            history=s.history_length,
            horizon=s.horizon,
            num_variables=num_variables,
            model_dim=s.model_dim,
            num_layers=s.student_layers,
            num_heads=s.student_heads,
            ffn_ratio=s.ffn_ratio,
            dropout=s.dropout,
            revin_affine=s.revin_affine,
            seed=self.seed,
        )

    def teacher_fingerprint(self, dataset: Dataset) -> dict:
        """Everything the cached teacher artifacts depend on."""
        s = self.settings
        fingerprint = {
            "teacher": self.teacher_config().model_dump(),
            "dataset": dataset.name,
            "data_sha256": hashlib.sha256(np.ascontiguousarray(dataset.values).tobytes()).hexdigest(),
            "split_ratios": list(dataset.split_ratios),
            "train_fraction": s.train_fraction,
            "train_stride": s.train_stride,
            "training": HyperParams.from_settings(s, "teacher", self.seed).model_dump(
                exclude={"lambda_c", "lambda_e", "lambda_p", "lambda_f", "prefetch_windows"}
            ),
            "precision": s.precision,
        }
        if not s.without_clm:
            vocabulary = self.vocabulary()
            fingerprint["clm"] = self.clm_config(vocabulary).model_dump()
            fingerprint["clm_weights"] = str(s.clm_weights_path) if s.clm_weights_path else None
            fingerprint["vocabulary"] = vocabulary.version
            fingerprint["prompts"] = {
                "freq": s.freq,
                "freq_plural": s.freq_plural,
                "decimals": s.value_decimals,
            }
        return fingerprint

    def config_hash(self, dataset: Dataset) -> int:
        return config_hash(self.teacher_fingerprint(dataset))

    def write_resolved_config(self) -> Path:
        self.paths.output_dir.mkdir(parents=True, exist_ok=True)
        self.paths.resolved_config.write_text(self.settings.to_conf(), encoding="utf-8")
        return self.paths.resolved_config

    # Teacher inputs

    def build_clm(self, vocabulary: Vocabulary) -> CalibratedLanguageModel:
        config = self.clm_config(vocabulary)
        if self.settings.clm_weights_path is not None:
            return CalibratedLanguageModel.from_weights(self.settings.clm_weights_path, config)
        return CalibratedLanguageModel(config)

    def build_stores(
        self, train_windows: list[TimeSeriesWindow], val_windows: list[TimeSeriesWindow]
    ) -> tuple[EmbeddingStore, EmbeddingStore | None, str | None]:
        """Teacher inputs for train/val windows and the CLM checksum (if used)."""
        s = self.settings
        dtype = s.numpy_dtype
        if s.without_clm:
            train = series_store(train_windows, not s.without_pi, dtype)
            val = series_store(val_windows, not s.without_pi, dtype) if val_windows else None
            return train, val, None
        vocabulary = self.vocabulary()
        clm = self.build_clm(vocabulary)
        embedder = PromptEmbedder(
            clm,
            Tokenizer(vocabulary),
            self.prompt_manager,
            s.freq,
            s.freq_plural,
            privileged=not s.without_pi,
        )
        train = embedder.build_store(train_windows, dtype)
        val = embedder.build_store(val_windows, dtype) if val_windows else None
        return train, val, clm.checksum()

    def _teacher_echo(self, dataset: Dataset) -> dict:
        return {
            "teacher": self.teacher_config().model_dump(),
            "config_hash": f"{self.config_hash(dataset):016x}",
        }

    def _save_teacher(self, teacher: CrossModalityTeacher, dataset: Dataset) -> None:
        CheckpointManager(TEACHER_MAGIC).save(
            self.paths.teacher_checkpoint,
            teacher,
            self._teacher_echo(dataset),
            precision=self.settings.precision,
        )

    def _save_student(self, student: TimeSeriesStudent, dataset: Dataset) -> None:
        CheckpointManager(STUDENT_MAGIC).save(
            self.paths.student_checkpoint,
            student,
            {"student": student.config.model_dump(), "dataset": dataset.name, "seed": self.seed},
            precision=self.settings.precision,
        )

    @staticmethod
    def _summary(
        stage: str, windows: int, history: TrainingHistory, **extra
    ) -> TrainingSummary:
        return TrainingSummary(
            stage=stage,
            windows=windows,
            epochs=history.epochs,
            steps=history.steps,
            best_epoch=history.best_epoch + 1,
            best_val_loss=history.best_val_loss,
            **extra,
        )

    # Training

    def train_teacher(self) -> TrainingSummary:
        """Fit the teacher by reconstruction and cache its artifacts."""
        s = self.settings
        self.write_resolved_config()
        with precision(s.numpy_dtype):
            dataset = self.load_dataset()
            train_windows = self.split_windows(dataset, "train")
            val_windows = self.split_windows(dataset, "val", required=False)
            train_store, val_store, clm_before = self.build_stores(train_windows, val_windows)

            teacher = CrossModalityTeacher(self.teacher_config())
            trainer = TeacherTrainer(teacher, HyperParams.from_settings(s, "teacher", self.seed))
            history = trainer.fit(train_store, val_store)
            artifacts = trainer.collect_artifacts(train_store)

            digest = self.config_hash(dataset)
            self._save_teacher(teacher, dataset)
            ArtifactCache(self.paths.cache, s.cache_precision).write(artifacts, digest, s.horizon)

        checksums = {"teacher": teacher.checksum()}
        if clm_before is not None:
            checksums["clm"] = clm_before
        return self._summary(
            "teacher",
            len(train_windows),
            history,
            config_hash=f"{digest:016x}",
            outputs=[str(p) for p in self.paths.teacher_artifacts()],
            checksums=checksums,
        )

    def distill(self) -> TrainingSummary:
        """Train the student; staged mode reads the teacher cache."""
        s = self.settings
        if s.training_mode == "joint":
            return self.train_joint()
        self.write_resolved_config()
        with precision(s.numpy_dtype):
            dataset = self.load_dataset()
            train_windows = self.split_windows(dataset, "train")
            val_windows = self.split_windows(dataset, "val", required=False)
            hyper = HyperParams.from_settings(s, "student", self.seed)
            cache = None
            if hyper.distills:
                cache = ArtifactCache(self.paths.cache, s.cache_precision).open(
                    self.config_hash(dataset)
                )
            student = TimeSeriesStudent(self.student_config(dataset.num_variables))
            history = StudentTrainer(student, hyper, cache).fit(train_windows, val_windows)
            self._save_student(student, dataset)
        return self._summary(
            "student",
            len(train_windows),
            history,
            outputs=[str(self.paths.student_checkpoint)],
            checksums={"student": student.checksum()},
        )

    def train_joint(self) -> TrainingSummary:
        """Teacher and student in one loop; writes every training artifact."""
        s = self.settings
        self.write_resolved_config()
        with precision(s.numpy_dtype):
            dataset = self.load_dataset()
            train_windows = self.split_windows(dataset, "train")
            val_windows = self.split_windows(dataset, "val", required=False)
            train_store, _, clm_before = self.build_stores(train_windows, [])
            teacher = CrossModalityTeacher(self.teacher_config())
            student = TimeSeriesStudent(self.student_config(dataset.num_variables))
            hyper = HyperParams.from_settings(s, "student", self.seed)
            history = JointTrainer(teacher, student, hyper).fit(
                train_store, train_windows, val_windows
            )
            artifacts = TeacherTrainer(teacher, hyper).collect_artifacts(train_store)
            digest = self.config_hash(dataset)
            self._save_teacher(teacher, dataset)
            ArtifactCache(self.paths.cache, s.cache_precision).write(artifacts, digest, s.horizon)
            self._save_student(student, dataset)
        checksums = {"teacher": teacher.checksum(), "student": student.checksum()}
        if clm_before is not None:
            checksums["clm"] = clm_before
        return self._summary(
            "joint",
            len(train_windows),
            history,
            config_hash=f"{digest:016x}",
            outputs=[str(p) for p in (*self.paths.teacher_artifacts(), self.paths.student_checkpoint)],
            checksums=checksums,
        )

    # Inference

    def load_student(self, checkpoint: Path | str | None = None) -> tuple[TimeSeriesStudent, dict]:
        path = Path(checkpoint) if checkpoint is not None else self.paths.student_checkpoint
        manager = CheckpointManager(STUDENT_MAGIC)
        stored = manager.read(path)
        try:
            config = StudentConfig(**stored.config["student"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractError(f"checkpoint {path} has no usable student config") from exc
        student = TimeSeriesStudent(config)
        stored.load_into(student)
        student.eval()
        return student, stored.config

    def _check_student_fits(self, student: TimeSeriesStudent, dataset: Dataset) -> None:
        config = student.config
        if dataset.num_variables != config.num_variables:
            raise ShapeError(
                f"student was trained on {config.num_variables} variables, "
                f"{dataset.name} has {dataset.num_variables}"
            )
        if (self.settings.history_length, self.settings.horizon) != (config.history, config.horizon):
            raise ShapeError(
                f"student uses H={config.history}, M={config.horizon}; config asks for "
                f"H={self.settings.history_length}, M={self.settings.horizon}"
            )

    def predict_windows(
        self, student: TimeSeriesStudent, windows: list[TimeSeriesWindow]
    ) -> np.ndarray:
        """Denormalized (W, M, N) forecasts, one window at a time."""
        return np.stack([student.forecast(w.x_h[None])[0] for w in windows])

    def evaluate(
        self, checkpoint: Path | str | None = None, dataset_path: Path | str | None = None
    ) -> MetricsReport:
        """Test-split MSE/MAE of a student checkpoint."""
        s = self.settings
        started = time.perf_counter()
        self.write_resolved_config()
        with precision(s.numpy_dtype):
            student, echo = self.load_student(checkpoint)
            dataset = self.load_dataset(dataset_path)
            self._check_student_fits(student, dataset)
            windows = self.split_windows(dataset, "test")
            predictions = self.predict_windows(student, windows)
        truth = np.stack([w.x_g for w in windows])
        expected = window_count(dataset.split("test").num_rows, s.history_length, s.horizon, s.eval_stride)
        if len(predictions) != expected:
            raise ContractError(f"evaluated {len(predictions)} of {expected} test windows")
        if s.metric_space == "normalized":
            mean, std = dataset.scaler()
            predictions = (predictions - mean) / std
            truth = (truth - mean) / std

        report = MetricsReport(
            dataset=dataset.name,
            horizon=s.horizon,
            metric_space=s.metric_space,
            windows=len(windows),
            seeds=[int(echo.get("seed", self.seed))],
            mse=[mse(predictions, truth)],
            mae=[mae(predictions, truth)],
            runtime_seconds=time.perf_counter() - started,
            student_trainable_parameters=student.num_parameters(trainable_only=True),
            teacher_trainable_parameters=self.teacher_config().parameter_count(),
            clm_frozen_parameters=(
                0 if s.without_clm else self.clm_config(self.vocabulary()).parameter_count()
            ),
        )
        report.to_frame().to_csv(self.paths.metrics_csv, index=False)
        self.paths.metrics_txt.write_text(report.to_table(), encoding="utf-8")
        logger.info(
            f"Evaluated {len(windows)} test windows: MSE={report.mse[0]:.6f} MAE={report.mae[0]:.6f}"
        )
        return report

    def forecast(
        self,
        input_path: Path | str,
        checkpoint: Path | str | None = None,
        output_path: Path | str | None = None,
    ) -> Path:
        """Forecast the next M steps after the last H rows of ``input_path``."""
        s = self.settings
        self.write_resolved_config()
        with precision(s.numpy_dtype):
            student, _ = self.load_student(checkpoint)
            dataset = load_csv(input_path, freq=s.freq, name=s.dataset_name)
            if dataset.num_variables != student.config.num_variables:
                raise ShapeError(
                    f"student expects {student.config.num_variables} variables, "
                    f"input has {dataset.num_variables}"
                )
            window = history_window(dataset.values, student.config.history)
            prediction = student.forecast(window.x_h[None])[0]
        frame = pd.DataFrame(prediction, columns=dataset.columns)
        frame.insert(0, "step", np.arange(1, len(prediction) + 1))
        output = Path(output_path) if output_path is not None else self.paths.forecast_csv
        output.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(output, index=False)
        logger.info(f"Wrote {len(prediction)}-step forecast to {output}")
        return output

    # Reports

    @staticmethod
    def _write_matrix(matrix: np.ndarray, labels: list[str], path: Path) -> Path:
        frame = pd.DataFrame(matrix, index=labels, columns=labels)
        frame.index.name = "variable"
        frame.to_csv(path)
        return path

    def report(self, checkpoint: Path | str | None = None) -> list[Path]:
        """Heatmap and truth-vs-prediction CSVs for one test window.

        The cache only holds training windows, so the teacher maps come from
        training window ``report_window`` and carry a ``_train`` suffix.
        """
        s = self.settings
        self.write_resolved_config()
        out = self.paths.report_dir
        out.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        with precision(s.numpy_dtype):
            student, _ = self.load_student(checkpoint)
            dataset = self.load_dataset()
            self._check_student_fits(student, dataset)
            labels = dataset.columns
            test_windows = self.split_windows(dataset, "test")
            if s.report_window >= len(test_windows):
                raise ContractError(
                    f"report_window {s.report_window} outside {len(test_windows)} test windows"
                )
            window = test_windows[s.report_window]
            output = student(window.x_h[None])
            t_bar = output.t_bar.data[0].astype(np.float64)
            written.append(self._write_matrix(output.a_tse.data[0], labels, out / "a_tse.csv"))
            written.append(self._write_matrix(t_bar @ t_bar.T, labels, out / "t_bar_relation.csv"))

            train_windows = self.split_windows(dataset, "train")
            histories = np.stack([w.x_h for w in train_windows])
            mean_a_tse = student(histories).a_tse.data.mean(axis=0)
            written.append(self._write_matrix(mean_a_tse, labels, out / "a_tse_mean.csv"))

            prediction = student.revin.denormalize(output.prediction, output.stats)[0]
        for n, column in enumerate(labels):
            frame = pd.DataFrame(
                {
                    "step": np.arange(1, window.horizon + 1),
                    "truth": window.x_g[:, n],
                    "prediction": prediction[:, n],
                }
            )
            path = out / f"prediction_{n}_{_safe_name(column)}.csv"
            frame.to_csv(path, index=False)
            written.append(path)

        written.extend(self._teacher_maps(labels, out))
        logger.info(f"Wrote {len(written)} report files to {out}")
        return written

    def _teacher_maps(self, labels: list[str], out: Path) -> list[Path]:
        if not self.paths.cache.is_file():
            logger.warning("No teacher cache found; skipping A_PE and E_GT maps")
            return []
        try:
            reader = ArtifactCache(self.paths.cache).open(None)
        except TimeKDError as exc:
            logger.warning(f"Teacher cache unreadable, skipping teacher maps: {exc}")
            return []
        if len(reader) == 0:
            return []
        artifact = reader[min(self.settings.report_window, len(reader) - 1)]
        e_gt = artifact.e_gt.astype(np.float64)
        mean_a_pe = np.mean([a.a_pe for a in reader.artifacts()], axis=0)
        return [
            self._write_matrix(artifact.a_pe, labels, out / "a_pe_train.csv"),
            self._write_matrix(e_gt @ e_gt.T, labels, out / "e_gt_relation_train.csv"),
            self._write_matrix(mean_a_pe, labels, out / "a_pe_mean.csv"),
        ]


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)
