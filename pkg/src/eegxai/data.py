"""Dataset model, CSV ingestion, and a synthetic generator with planted relevance.

Feature vectors follow a channel-major layout: feature index ``f`` belongs to
channel ``f // n_bands`` and band ``f % n_bands``, with bands ordered
delta, theta, alpha, beta, gamma. The canonical layout is 62 channels x 5
bands = 310 features.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .exceptions import DatasetFormatError
from . import network

BAND_NAMES = ("delta", "theta", "alpha", "beta", "gamma")
CSV_META_COLUMNS = ("subject", "session", "trial", "label")


@dataclass(frozen=True)
class FeatureLayout:
    """Channel-major arrangement of per-channel, per-band features."""

    n_channels: int = 62
    n_bands: int = 5

    @property
    def n_features(self) -> int:
        return self.n_channels * self.n_bands

    def channel_of(self, feature: int) -> int:
        return feature // self.n_bands

    def band_of(self, feature: int) -> int:
        return feature % self.n_bands

    def feature_columns(self) -> list[str]:
        width = max(3, len(str(self.n_features - 1)))
        return [f"f{i:0{width}d}" for i in range(self.n_features)]


@dataclass(eq=False)
class Dataset:
    """Labelled feature vectors tagged with subject, session, and trial ids."""

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int
    subjects: np.ndarray  # (n,) int
    sessions: np.ndarray  # (n,) int
    trials: np.ndarray  # (n,) int
    layout: FeatureLayout | None = None
    n_classes: int = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.intp)
        self.subjects = np.asarray(self.subjects, dtype=np.intp)
        self.sessions = np.asarray(self.sessions, dtype=np.intp)
        self.trials = np.asarray(self.trials, dtype=np.intp)
        n = self.features.shape[0]
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D (samples x features) array")
        for name in ("labels", "subjects", "sessions", "trials"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have one entry per sample")
        if not np.isfinite(self.features).all():
            raise ValueError("features must be finite")
        if self.n_classes is None:
            self.n_classes = int(self.labels.max()) + 1 if n else 0
        if n and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError(f"labels must lie in [0, {self.n_classes})")
        if self.layout is not None and self.layout.n_features != self.features.shape[1]:
            raise ValueError("layout width does not match feature width")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(
            features=self.features[indices],
            labels=self.labels[indices],
            subjects=self.subjects[indices],
            sessions=self.sessions[indices],
            trials=self.trials[indices],
            layout=self.layout,
            n_classes=self.n_classes,
        )

    def session_subset(self, session: int) -> "Dataset":
        return self.subset(np.flatnonzero(self.sessions == session))

    def session_ids(self) -> list[int]:
        return sorted(int(s) for s in np.unique(self.sessions))


@dataclass
class SynthConfig:
    """Settings for the planted-relevance synthetic generator."""

    n_channels: int = 62
    n_bands: int = 5
    classes: int = 3
    samples_per_class_per_session: int = 600
    n_sessions: int = 3
    n_informative: int = 20
    class_separation: float = 1.0
    session_shift: float = 0.0
    noise_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if min(self.n_channels, self.n_bands, self.classes, self.n_sessions) < 1:
            raise ValueError("channel, band, class, and session counts must be positive")
        if self.samples_per_class_per_session < 1:
            raise ValueError("need at least one sample per class per session")
        if not 1 <= self.n_informative <= self.n_channels * self.n_bands:
            raise ValueError("n_informative must lie in [1, n_channels * n_bands]")
        if not 0.0 <= self.session_shift <= 1.0:
            raise ValueError("session_shift must lie in [0, 1]")
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be positive")

    @property
    def layout(self) -> FeatureLayout:
        return FeatureLayout(self.n_channels, self.n_bands)


@dataclass
class GroundTruth:
    """Which features carry class signal, per session, and the planted means."""

    informative: np.ndarray  # sorted feature indices carrying signal
    shifted: np.ndarray  # subset of `informative` whose pattern is re-drawn per session
    class_means: dict  # session id -> (classes, d) array

    def informative_for(self, session: int) -> np.ndarray:
        return self.informative

    def save_json(self, path) -> None:
        doc = {
            "sessions": {
                str(s): {
                    "informative_indices": self.informative.tolist(),
                    "shifted_indices": self.shifted.tolist(),
                    "class_means": means.tolist(),
                }
                for s, means in sorted(self.class_means.items())
            }
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "GroundTruth":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        sessions = doc["sessions"]
        first = next(iter(sessions.values()))
        return cls(
            informative=np.array(first["informative_indices"], dtype=np.intp),
            shifted=np.array(first["shifted_indices"], dtype=np.intp),
            class_means={
                int(s): np.array(entry["class_means"], dtype=np.float64)
                for s, entry in sessions.items()
            },
        )


def _distinct_sign_patterns(rng, classes: int, width: int) -> np.ndarray:
    """Per-class sign patterns, re-drawn a few times if two classes collide."""
    for _ in range(100):
        signs = rng.choice([-1.0, 1.0], size=(classes, width))
        collision = any(
            np.array_equal(signs[a], signs[b])
            for a in range(classes)
            for b in range(a + 1, classes)
        )
        if not collision or 2**width < classes:
            return signs
    return signs


def generate_synthetic(cfg: SynthConfig):
    """Draw a multi-session dataset whose class signal lives on a planted feature set.

    Each sample is its class mean plus isotropic Gaussian noise. The class
    mean is zero except on the informative set, where it is
    ``class_separation`` times a class-specific sign pattern. Sessions after
    the first re-draw the sign pattern on a fixed ``session_shift`` fraction
    of the informative set, so relevance is only partially shared across
    sessions. Deterministic in ``cfg.seed``.
    """
    rng = np.random.default_rng(cfg.seed)
    d = cfg.layout.n_features
    informative = np.sort(rng.choice(d, size=cfg.n_informative, replace=False))
    base_signs = _distinct_sign_patterns(rng, cfg.classes, cfg.n_informative)
    n_shifted = int(round(cfg.session_shift * cfg.n_informative))
    shifted = np.sort(rng.choice(cfg.n_informative, size=n_shifted, replace=False))

    per_class = cfg.samples_per_class_per_session
    blocks, labels, sessions, trials = [], [], [], []
    class_means = {}
    for session in range(1, cfg.n_sessions + 1):
        signs = base_signs.copy()
        if session > 1 and n_shifted:
            signs[:, shifted] = rng.choice([-1.0, 1.0], size=(cfg.classes, n_shifted))
        means = np.zeros((cfg.classes, d))
        means[:, informative] = cfg.class_separation * signs
        class_means[session] = means
        for c in range(cfg.classes):
            noise = rng.normal(0.0, cfg.noise_sigma, size=(per_class, d))
            blocks.append(means[c] + noise)
            labels.append(np.full(per_class, c))
            sessions.append(np.full(per_class, session))
        trials.append(np.arange(per_class * cfg.classes))

    dataset = Dataset(
        features=np.vstack(blocks),
        labels=np.concatenate(labels),
        subjects=np.ones(per_class * cfg.classes * cfg.n_sessions, dtype=np.intp),
        sessions=np.concatenate(sessions),
        trials=np.concatenate(trials),
        layout=cfg.layout,
        n_classes=cfg.classes,
    )
    truth = GroundTruth(
        informative=informative,
        shifted=informative[shifted] if n_shifted else np.array([], dtype=np.intp),
        class_means=class_means,
    )
    return dataset, truth


def save_dataset(dataset: Dataset, path) -> None:
    """Write the dataset as CSV; float cells use repr for exact round-trips."""
    layout = dataset.layout or FeatureLayout(
        n_channels=dataset.n_features // len(BAND_NAMES), n_bands=len(BAND_NAMES)
    )
    header = list(CSV_META_COLUMNS) + layout.feature_columns()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(dataset)):
            row = [
                int(dataset.subjects[i]),
                int(dataset.sessions[i]),
                int(dataset.trials[i]),
                int(dataset.labels[i]),
            ]
            row.extend(repr(v) for v in dataset.features[i])
            writer.writerow(row)


def load_dataset(path) -> Dataset:
    """Parse and validate a dataset CSV; errors name the offending line."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: file is empty") from None
        if header[: len(CSV_META_COLUMNS)] != list(CSV_META_COLUMNS):
            raise DatasetFormatError(
                f"{path}: line 1: header must start with {','.join(CSV_META_COLUMNS)}"
            )
        n_feat = len(header) - len(CSV_META_COLUMNS)
        if n_feat < 1 or n_feat % len(BAND_NAMES) != 0:
            raise DatasetFormatError(
                f"{path}: line 1: feature column count {n_feat} is not a multiple of "
                f"{len(BAND_NAMES)} bands"
            )
        layout = FeatureLayout(n_channels=n_feat // len(BAND_NAMES), n_bands=len(BAND_NAMES))
        if header[len(CSV_META_COLUMNS) :] != layout.feature_columns():
            raise DatasetFormatError(
                f"{path}: line 1: feature columns must be named f000..f{n_feat - 1:03d} in order"
            )

        meta, rows = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetFormatError(
                    f"{path}: line {line_no}: expected {len(header)} columns, got {len(row)}"
                )
            try:
                ids = [int(v) for v in row[: len(CSV_META_COLUMNS)]]
            except ValueError:
                raise DatasetFormatError(
                    f"{path}: line {line_no}: subject/session/trial/label must be integers"
                ) from None
            if not 0 <= ids[3] <= 2:
                raise DatasetFormatError(
                    f"{path}: line {line_no}: unknown label {ids[3]} (expected 0, 1, or 2)"
                )
            try:
                values = np.array(row[len(CSV_META_COLUMNS) :], dtype=np.float64)
            except ValueError:
                raise DatasetFormatError(
                    f"{path}: line {line_no}: feature values must be decimal numbers"
                ) from None
            if not np.isfinite(values).all():
                raise DatasetFormatError(f"{path}: line {line_no}: non-finite feature value")
            meta.append(ids)
            rows.append(values)

    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    meta = np.array(meta, dtype=np.intp)
    return Dataset(
        features=np.vstack(rows),
        labels=meta[:, 3],
        subjects=meta[:, 0],
        sessions=meta[:, 1],
        trials=meta[:, 2],
        layout=layout,
        n_classes=3,
    )


def filter_correct(net, dataset: Dataset) -> Dataset:
    """Subset of samples the network classifies correctly, order preserved."""
    if dataset.n_features != net.n_inputs:
        raise ValueError(
            f"dataset width {dataset.n_features} does not match network inputs {net.n_inputs}"
        )
    if len(dataset) == 0:
        return dataset
    predicted, _ = network.predict_batch(net, dataset.features)
    return dataset.subset(np.flatnonzero(predicted == dataset.labels))
