"""Cohort loading, preprocessing, and the synthetic diabetes cohort generator.

Preprocessing follows the leakage-safe recipe: imputation and standardization
statistics come from training rows only, the train/test split is stratified,
and rows with implausible (negative) measurements or unusable labels are
rejected with per-row diagnostics.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FEATURE_NAMES = ("age", "bmi", "fpg", "hba1c", "sbp", "dbp", "pregnancies")
CLASS_NAMES = ("type1", "type2", "gestational")
MISSING_TOKENS = ("", "NA")

# Calibration targets for the synthetic cohort: per-feature
# (mean, std, min, max) of the clinical reference population.
REFERENCE_STATS: dict[str, tuple[float, float, float, float]] = {
    "age": (52.3, 13.7, 18.0, 87.0),
    "bmi": (29.4, 6.2, 17.1, 47.8),
    "fpg": (158.6, 48.3, 70.0, 312.0),
    "hba1c": (7.8, 1.6, 5.1, 13.4),
    "sbp": (132.5, 16.9, 95.0, 188.0),
    "dbp": (81.7, 10.4, 55.0, 112.0),
    "pregnancies": (2.4, 2.1, 0.0, 10.0),
}


class CohortError(ValueError):
    """Unrecoverable problem with ingested cohort data."""


@dataclass(frozen=True)
class RowRejection:
    """Why an input row was excluded, with its 1-based line number."""

    line: int
    reason: str


@dataclass
class Cohort:
    """Patient feature matrix with integer class labels.

    Features may contain NaN (missing) until imputation; labels are always
    complete. Column order matches ``feature_names``.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    class_names: tuple[str, ...] = CLASS_NAMES

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise CohortError("features must be a 2-D matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise CohortError("labels must align with feature rows")
        if self.features.shape[1] != len(self.feature_names):
            raise CohortError("feature columns must match feature_names")
        n_classes = len(self.class_names)
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= n_classes
        ):
            raise CohortError("labels out of class range")
        with np.errstate(invalid="ignore"):
            if np.isinf(self.features).any():
                raise CohortError("features must be finite or NaN")

    @property
    def n_patients(self) -> int:
        return self.features.shape[0]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(self.class_names))

    def check_trainable(self) -> None:
        """Raise unless the cohort can feed a stratified training pipeline."""
        if self.n_patients < 3:
            raise CohortError("cohort needs at least 3 patients")
        counts = self.class_counts()
        missing = [self.class_names[i] for i in range(len(counts)) if counts[i] == 0]
        if missing:
            raise CohortError(f"classes absent from cohort: {missing}")


def _parse_rows(
    reader: "csv.reader", feature_names=FEATURE_NAMES, class_names=CLASS_NAMES
) -> tuple[Cohort, list[RowRejection]]:
    rows = list(reader)
    if not rows:
        raise CohortError("empty file: header row required")
    header = [c.strip().lower() for c in rows[0]]
    expected = list(feature_names) + ["label"]
    if header != expected:
        raise CohortError(f"header mismatch: expected {expected}, got {header}")
    label_index = {name: i for i, name in enumerate(class_names)}
    features: list[list[float]] = []
    labels: list[int] = []
    rejections: list[RowRejection] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(expected):
            rejections.append(RowRejection(line_no, f"expected {len(expected)} cells, got {len(row)}"))
            continue
        label_text = row[-1].strip()
        if label_text in MISSING_TOKENS:
            rejections.append(RowRejection(line_no, "missing label"))
            continue
        label = label_index.get(label_text.lower())
        if label is None:
            rejections.append(RowRejection(line_no, f"unknown label {label_text!r}"))
            continue
        values: list[float] = []
        problem = None
        for name, cell in zip(feature_names, row[:-1]):
            cell = cell.strip()
            if cell in MISSING_TOKENS:
                values.append(np.nan)
                continue
            try:
                value = float(cell)
            except ValueError:
                problem = f"non-numeric value {cell!r} for {name}"
                break
            if not np.isfinite(value):
                problem = f"non-finite value for {name}"
                break
            if value < 0:
                # Plausibility screen: clinical measurements are non-negative.
                problem = f"implausible negative value for {name}"
                break
            values.append(value)
        if problem is not None:
            rejections.append(RowRejection(line_no, problem))
            continue
        features.append(values)
        labels.append(label)
    matrix = (
        np.array(features, dtype=np.float64)
        if features
        else np.empty((0, len(feature_names)))
    )
    cohort = Cohort(matrix, np.array(labels, dtype=np.int64),
                    tuple(feature_names), tuple(class_names))
    return cohort, rejections


def load_cohort_csv(path: str | Path) -> tuple[Cohort, list[RowRejection]]:
    """Parse a cohort CSV file; invalid rows are rejected with diagnostics."""
    with open(path, newline="", encoding="utf-8") as fh:
        return _parse_rows(csv.reader(fh))


def load_cohort_csv_text(text: str) -> tuple[Cohort, list[RowRejection]]:
    """Parse cohort CSV content from a string (upload path)."""
    return _parse_rows(csv.reader(io.StringIO(text)))


def cohort_to_csv_text(cohort: Cohort) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(cohort.feature_names) + ["label"])
    for row, label in zip(cohort.features, cohort.labels):
        cells = ["" if np.isnan(v) else format(v, ".10g") for v in row]
        writer.writerow(cells + [cohort.class_names[label]])
    return buf.getvalue()


def save_cohort_csv(cohort: Cohort, path: str | Path) -> None:
    Path(path).write_text(cohort_to_csv_text(cohort), encoding="utf-8")


# ---------------------------------------------------------------------------
# Imputation and standardization (training-rows statistics only)


def training_medians(features: np.ndarray, train_indices: np.ndarray) -> np.ndarray:
    """Per-feature median over observed training cells."""
    train = features[np.asarray(train_indices, dtype=np.int64)]
    if train.shape[0] == 0:
        raise CohortError("no training rows to compute medians from")
    medians = np.empty(train.shape[1])
    for j in range(train.shape[1]):
        observed = train[:, j][~np.isnan(train[:, j])]
        if observed.size == 0:
            raise CohortError(f"feature column {j} entirely missing on training rows")
        medians[j] = float(np.median(observed))
    return medians


def _training_mode(column: np.ndarray) -> float:
    observed = column[~np.isnan(column)]
    if observed.size == 0:
        raise CohortError("categorical column entirely missing on training rows")
    values, counts = np.unique(observed, return_counts=True)
    return float(values[np.argmax(counts)])  # ties resolve to the smallest value


def impute(
    features: np.ndarray,
    train_indices: np.ndarray,
    categorical_mask: np.ndarray | None = None,
) -> np.ndarray:
    """Fill missing cells with training medians (or modes where categorical)."""
    features = np.asarray(features, dtype=np.float64)
    train_idx = np.asarray(train_indices, dtype=np.int64)
    if train_idx.size == 0:
        raise CohortError("impute requires non-empty training indices")
    filled = features.copy()
    train = features[train_idx]
    for j in range(features.shape[1]):
        hole = np.isnan(filled[:, j])
        if not hole.any():
            # Still validate the training column so the fitted statistics
            # contract holds even when this particular table is complete.
            if np.isnan(train[:, j]).all():
                raise CohortError(f"feature column {j} entirely missing on training rows")
            continue
        if categorical_mask is not None and categorical_mask[j]:
            fill = _training_mode(train[:, j])
        else:
            observed = train[:, j][~np.isnan(train[:, j])]
            if observed.size == 0:
                raise CohortError(f"feature column {j} entirely missing on training rows")
            fill = float(np.median(observed))
        filled[hole, j] = fill
    return filled


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine transform fitted on training rows."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std


def fit_standardizer(features: np.ndarray, train_indices: np.ndarray) -> Standardizer:
    """Fit mean/std on training rows; stds below 1e-12 clamp to 1."""
    train = np.asarray(features, dtype=np.float64)[np.asarray(train_indices, dtype=np.int64)]
    if train.shape[0] == 0:
        raise CohortError("standardizer requires non-empty training indices")
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return Standardizer(mean=mean, std=std)


# ---------------------------------------------------------------------------
# Stratified splitting


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint train/test row indices forming a partition."""

    train: np.ndarray
    test: np.ndarray
    seed: int


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(
    labels: np.ndarray, test_fraction: float = 0.2, seed: int = 0
) -> SplitIndices:
    """Seeded per-class shuffle; test count = round(class_count * fraction)."""
    labels = np.asarray(labels, dtype=np.int64)
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    train_parts: list[np.ndarray] = []
    test_parts: list[np.ndarray] = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            raise CohortError(f"class {cls} has fewer than 2 members; cannot split")
        order = rng.permutation(members.size)
        shuffled = members[order]
        n_test = _round_half_up(members.size * test_fraction)
        n_test = min(n_test, members.size - 1)  # keep at least 1 training row
        test_parts.append(shuffled[:n_test])
        train_parts.append(shuffled[n_test:])
    train = np.sort(np.concatenate(train_parts))
    test = np.sort(np.concatenate(test_parts)) if test_parts else np.empty(0, np.int64)
    return SplitIndices(train=train, test=test, seed=seed)


# ---------------------------------------------------------------------------
# Synthetic cohort generator


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the synthetic cohort.

    Class-conditional shifts give the graph learnable structure, mimicking
    clinical presentation: type 1 and gestational patients are younger and
    leaner, gestational glycemia and blood pressure run milder, gestational
    pregnancies are forced >= 1 and type 1 pregnancies are near zero. Shifts
    are re-centered by their prior-weighted mean so pooled feature statistics
    stay on the reference targets.
    """

    class_priors: tuple[float, float, float] = (0.18, 0.67, 0.15)
    age_shift: tuple[float, float, float] = (-22.0, 0.0, -18.0)
    bmi_shift: tuple[float, float, float] = (-5.0, 0.0, -4.0)
    fpg_shift: tuple[float, float, float] = (10.0, 0.0, -35.0)
    hba1c_shift: tuple[float, float, float] = (0.0, 0.0, -1.3)
    sbp_shift: tuple[float, float, float] = (0.0, 2.0, -10.0)
    dbp_shift: tuple[float, float, float] = (0.0, 1.0, -5.0)
    # Pregnancy sampling (mean, std) per class; gestational draws from [1, max].
    # Pregnancies are the decisive type1-vs-gestational signal (one feature
    # among seven, so cosine neighborhoods still mix those classes while the
    # self-feature path separates them).
    pregnancy_params: tuple[tuple[float, float], ...] = ((0.15, 0.4), (3.5, 2.0), (3.0, 1.8))
    male_fraction: float = 0.45
    # Reference stds are pooled; shrink within-class stds so between-class
    # spread plus within-class spread reproduces them.
    match_pooled_std: bool = True
    max_rejections: int = 1000

    def validate(self) -> None:
        if abs(sum(self.class_priors) - 1.0) > 1e-9:
            raise ValueError("class priors must sum to 1")
        if any(p <= 0 for p in self.class_priors):
            raise ValueError("class priors must be positive")
        if not 0.0 <= self.male_fraction < 1.0:
            raise ValueError("male_fraction must be in [0, 1)")


def _truncated_normal(
    rng: np.random.Generator, mean: float, std: float, lo: float, hi: float,
    max_rejections: int,
) -> float:
    for _ in range(max_rejections):
        value = rng.normal(mean, std)
        if lo <= value <= hi:
            return value
    return float(np.clip(rng.normal(mean, std), lo, hi))


def _allocate_counts(n: int, priors: tuple[float, ...]) -> list[int]:
    # Largest-remainder allocation so class proportions are exact up to
    # rounding and stratified splitting is always feasible.
    raw = [p * n for p in priors]
    base = [int(np.floor(r)) for r in raw]
    leftover = n - sum(base)
    remainders = sorted(
        range(len(priors)), key=lambda i: (-(raw[i] - base[i]), i)
    )
    for i in remainders[:leftover]:
        base[i] += 1
    return base


def generate_synthetic_cohort(
    n: int, seed: int, config: SyntheticConfig | None = None
) -> Cohort:
    """Deterministic synthetic diabetes cohort calibrated to the reference stats."""
    if n < 30:
        raise ValueError("synthetic cohort needs n >= 30")
    cfg = config or SyntheticConfig()
    cfg.validate()
    rng = np.random.default_rng(seed)

    counts = _allocate_counts(n, cfg.class_priors)
    labels = np.repeat(np.arange(len(counts), dtype=np.int64), counts)
    labels = labels[rng.permutation(n)]

    priors = np.asarray(cfg.class_priors)

    def recenter(shift: tuple[float, float, float]) -> np.ndarray:
        arr = np.asarray(shift, dtype=np.float64)
        return arr - float(priors @ arr)

    shifts = {
        "age": recenter(cfg.age_shift),
        "bmi": recenter(cfg.bmi_shift),
        "fpg": recenter(cfg.fpg_shift),
        "hba1c": recenter(cfg.hba1c_shift),
        "sbp": recenter(cfg.sbp_shift),
        "dbp": recenter(cfg.dbp_shift),
    }

    def class_std(name: str) -> float:
        pooled = REFERENCE_STATS[name][1]
        if not cfg.match_pooled_std or name not in shifts:
            return pooled
        between = float(priors @ (shifts[name] ** 2))
        return float(np.sqrt(max(pooled**2 - between, (0.3 * pooled) ** 2)))

    features = np.empty((n, len(FEATURE_NAMES)))
    gestational = CLASS_NAMES.index("gestational")
    preg_col = FEATURE_NAMES.index("pregnancies")
    preg_lo, preg_hi = REFERENCE_STATS["pregnancies"][2], REFERENCE_STATS["pregnancies"][3]
    stds = {name: class_std(name) for name in FEATURE_NAMES}
    for i in range(n):
        cls = int(labels[i])
        for j, name in enumerate(FEATURE_NAMES):
            if j == preg_col:
                continue
            mean, _, lo, hi = REFERENCE_STATS[name]
            mean = mean + shifts.get(name, np.zeros(3))[cls]
            features[i, j] = _truncated_normal(rng, mean, stds[name], lo, hi, cfg.max_rejections)
        if cls != gestational and rng.random() < cfg.male_fraction:
            features[i, preg_col] = 0.0
        else:
            mean, std = cfg.pregnancy_params[cls]
            lo = 1.0 if cls == gestational else preg_lo
            value = _truncated_normal(rng, mean, std, lo, preg_hi, cfg.max_rejections)
            features[i, preg_col] = float(_round_half_up(value))
    return Cohort(features, labels)
