"""Ingestion of hourly ICU records: PSV parsing, rule-based labeling,
time-slot windowing, patient-disjoint splits, and preprocessing.

Records are pipe-separated tables with a header row, one row per hour and
"NaN" for missing cells, matching the PhysioNet/CinC 2019 patient files.
Labels are derived from the full record via a point-based rule set; windows
take only the first ``slot_hours`` rows so no future data leaks into an
early-prediction task.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_is_fitted, check_windows

__all__ = [
    "PatientRecord",
    "parse_psv",
    "serialize_psv",
    "LabelRule",
    "LabelRuleSet",
    "parse_rule_file",
    "default_rules",
    "apply_label_rules",
    "Window",
    "make_window",
    "WindowDataset",
    "IngestReport",
    "build_window_dataset",
    "stratified_split",
    "windows_to_arrays",
    "WindowPreprocessor",
    "SLOT_RANGE",
]

SLOT_RANGE = range(2, 24)  # hourly observation windows 2..23


@dataclass
class PatientRecord:
    """One patient's hourly measurement table; NaN marks missing cells."""

    patient_id: str
    columns: list
    values: np.ndarray  # (hours, features)

    @property
    def hours(self) -> int:
        return self.values.shape[0]


def parse_psv(text: str, patient_id: str = "patient") -> PatientRecord:
    """Parse a pipe-separated hourly table with a header row."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ValueError("empty file")
    columns = [c.strip() for c in lines[0].split("|")]
    if len(lines) == 1:
        raise ValueError("no data rows")
    width = len(columns)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("|")
        if len(cells) != width:
            raise ValueError(f"line {lineno}: expected {width} fields, found {len(cells)}")
        row = []
        for cell in cells:
            cell = cell.strip()
            try:
                row.append(float(cell))
            except ValueError:
                raise ValueError(f"line {lineno}: invalid numeric value {cell!r}") from None
        rows.append(row)
    return PatientRecord(patient_id, columns, np.array(rows, dtype=np.float64))


def serialize_psv(record: PatientRecord) -> str:
    """Inverse of :func:`parse_psv`; floats use shortest round-trip form."""
    lines = ["|".join(record.columns)]
    for row in record.values:
        lines.append("|".join("NaN" if np.isnan(v) else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# -- labeling -------------------------------------------------------------

_COMPARATORS = ("<=", ">=", "<", ">")


@dataclass(frozen=True)
class LabelRule:
    feature: str
    comparator: str
    threshold: float
    points: int


@dataclass
class LabelRuleSet:
    """Point-based labeling: each rule fires on the record's worst value."""

    scheme: str
    rules: list
    class_map: dict

    def __post_init__(self):
        attainable = {0}
        for rule in self.rules:
            if rule.comparator not in _COMPARATORS:
                raise ValueError(f"unknown comparator {rule.comparator!r}")
            attainable |= {total + rule.points for total in attainable}
        missing = sorted(t for t in attainable if t not in self.class_map)
        if missing:
            raise ValueError(f"class map does not cover attainable point totals {missing}")

    @property
    def n_classes(self) -> int:
        return max(self.class_map.values()) + 1


def default_rules(scheme: str) -> LabelRuleSet:
    """Built-in rule sets over PhysioNet-2019 column names.

    These are explicit, overridable stand-ins: the four-class scheme scores
    low systolic pressure, high respiratory rate, and the challenge sepsis
    flag; the three-class scheme buckets a four-component organ-dysfunction
    proxy into 0 / 1 / >=2 points.
    """
    if scheme == "qsofa":
        return LabelRuleSet(
            scheme="qsofa",
            rules=[
                LabelRule("SBP", "<=", 100.0, 1),
                LabelRule("Resp", ">=", 22.0, 1),
                LabelRule("SepsisLabel", ">=", 1.0, 1),
            ],
            class_map={0: 0, 1: 1, 2: 2, 3: 3},
        )
    if scheme == "sofa":
        return LabelRuleSet(
            scheme="sofa",
            rules=[
                LabelRule("MAP", "<", 70.0, 1),
                LabelRule("Creatinine", ">=", 2.0, 1),
                LabelRule("Bilirubin_total", ">=", 2.0, 1),
                LabelRule("Platelets", "<=", 100.0, 1),
            ],
            class_map={0: 0, 1: 1, 2: 2, 3: 2, 4: 2},
        )
    raise ValueError(f"unknown rule scheme {scheme!r}; expected 'qsofa' or 'sofa'")


def parse_rule_file(text: str) -> LabelRuleSet:
    """Parse `feature,comparator,threshold,points` lines plus a classmap line."""
    rules = []
    class_map = None
    scheme = "custom"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if parts[0] == "scheme":
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: scheme line must be 'scheme,<name>'")
            scheme = parts[1]
            continue
        if parts[0] == "classmap":
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: classmap line must be 'classmap,<pts>:<cls>;...'")
            class_map = {}
            for pair in parts[1].split(";"):
                pts, cls = pair.split(":")
                class_map[int(pts)] = int(cls)
            continue
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'feature,comparator,threshold,points'")
        rules.append(LabelRule(parts[0], parts[1], float(parts[2]), int(parts[3])))
    if class_map is None:
        raise ValueError("rule file is missing a classmap line")
    return LabelRuleSet(scheme=scheme, rules=rules, class_map=class_map)


def apply_label_rules(record: PatientRecord, rules: LabelRuleSet) -> int:
    """Score the record's worst observed value per rule and map to a class."""
    points = 0
    for rule in rules.rules:
        if rule.feature not in record.columns:
            raise ValueError(f"unknown feature {rule.feature!r} in rule set {rules.scheme!r}")
        col = record.values[:, record.columns.index(rule.feature)]
        observed = col[~np.isnan(col)]
        if observed.size == 0:
            continue
        worst = observed.min() if rule.comparator in ("<=", "<") else observed.max()
        fired = {
            "<=": worst <= rule.threshold,
            "<": worst < rule.threshold,
            ">=": worst >= rule.threshold,
            ">": worst > rule.threshold,
        }[rule.comparator]
        if fired:
            points += rule.points
    return rules.class_map[points]


# -- windowing ------------------------------------------------------------


@dataclass
class Window:
    """One training instance: the first ``slot_hours`` hours, transposed."""

    patient_id: str
    slot_hours: int
    label: int
    matrix: np.ndarray  # (features, slot_hours), may contain NaN


def make_window(record: PatientRecord, slot_hours: int, label: int):
    """First ``slot_hours`` rows as a (features, time) window, or None."""
    if not 2 <= slot_hours <= 23:
        raise ValueError(f"slot_hours must lie in [2, 23], got {slot_hours}")
    if record.hours < slot_hours:
        return None
    return Window(record.patient_id, slot_hours, label,
                  record.values[:slot_hours].T.copy())


@dataclass
class WindowDataset:
    columns: list
    n_classes: int
    by_slot: dict = field(default_factory=dict)

    def slots(self) -> list:
        return sorted(self.by_slot)

    def windows(self, slot: int) -> list:
        if slot not in self.by_slot or not self.by_slot[slot]:
            raise ValueError(f"no windows available for slot {slot}")
        return self.by_slot[slot]


@dataclass
class IngestReport:
    n_patients: int
    n_features: int
    n_classes: int
    class_counts: dict
    per_slot_windows: dict
    per_slot_skips: dict

    def to_text(self) -> str:
        lines = [
            f"patients: {self.n_patients}",
            f"features: {self.n_features}",
            f"classes: {self.n_classes}",
            "class counts: " + " ".join(f"{c}:{n}" for c, n in sorted(self.class_counts.items())),
            "slot  windows  skipped",
        ]
        for slot in sorted(self.per_slot_windows):
            lines.append(f"{slot:4d}  {self.per_slot_windows[slot]:7d}  {self.per_slot_skips[slot]:7d}")
        return "\n".join(lines) + "\n"


def build_window_dataset(records, labels, slots=SLOT_RANGE, n_classes=None):
    """Window every record at every slot; short records are counted as skips.

    ``labels`` maps patient id to class index.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to window")
    columns = records[0].columns
    for rec in records:
        if rec.columns != columns:
            raise ValueError(f"record {rec.patient_id!r} has a different column set")
    slots = list(slots)
    by_slot = {slot: [] for slot in slots}
    skips = {slot: 0 for slot in slots}
    class_counts: dict[int, int] = {}
    for rec in records:
        label = labels[rec.patient_id]
        class_counts[label] = class_counts.get(label, 0) + 1
        for slot in slots:
            window = make_window(rec, slot, label)
            if window is None:
                skips[slot] += 1
            else:
                by_slot[slot].append(window)
    if n_classes is None:
        n_classes = max(class_counts) + 1
    dataset = WindowDataset(columns=columns, n_classes=n_classes, by_slot=by_slot)
    report = IngestReport(
        n_patients=len(records),
        n_features=len(columns),
        n_classes=n_classes,
        class_counts=class_counts,
        per_slot_windows={slot: len(ws) for slot, ws in by_slot.items()},
        per_slot_skips=skips,
    )
    return dataset, report


def stratified_split(windows, ratio: float, seed: int):
    """Seeded per-class split keeping all of a patient's windows on one side."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must lie in (0, 1), got {ratio}")
    by_class: dict[int, dict[str, list]] = {}
    for w in windows:
        by_class.setdefault(w.label, {}).setdefault(w.patient_id, []).append(w)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in sorted(by_class):
        patients = sorted(by_class[label])
        if len(patients) < 2:
            raise ValueError(f"class {label} has fewer than 2 patients; cannot split")
        n_windows = sum(len(by_class[label][p]) for p in patients)
        target = int(round(ratio * n_windows))
        target = min(max(target, 1), n_windows - 1)
        order = rng.permutation(len(patients))
        taken = 0
        train_ids = []
        for pos in order:
            pid = patients[pos]
            if taken < target and taken + len(by_class[label][pid]) <= n_windows - 1:
                train_ids.append(pid)
                taken += len(by_class[label][pid])
            else:
                test.extend(by_class[label][pid])
        if not train_ids:  # degenerate: first patient alone exceeds the cap
            pid = patients[order[0]]
            train_ids.append(pid)
            test = [w for w in test if w.patient_id != pid]
        for pid in train_ids:
            train.extend(by_class[label][pid])
    return train, test


def windows_to_arrays(windows):
    """Stack windows into (x, y, patient_ids) arrays."""
    x = np.stack([w.matrix for w in windows]).astype(np.float64)
    y = np.array([w.label for w in windows], dtype=np.int64)
    ids = [w.patient_id for w in windows]
    return x, y, ids


class WindowPreprocessor(TransformerMixin, BaseEstimator):
    """Forward-fill, median imputation, and per-feature standardization.

    Fit on the training windows only; ``transform`` reuses the frozen
    training statistics, so nothing about the test split ever reaches the
    preprocessing stage. Features that are entirely unobserved in the
    training population fall back to zero.
    """

    def fit(self, X, y=None) -> "WindowPreprocessor":
        X = check_windows(X, allow_nan=True)
        flat = X.transpose(1, 0, 2).reshape(X.shape[1], -1)  # (features, samples*time)
        medians = np.full(X.shape[1], np.nan)
        for j in range(X.shape[1]):
            observed = flat[j][~np.isnan(flat[j])]
            if observed.size:
                medians[j] = np.median(observed)
        self.medians_ = medians
        filled = self._impute(X)
        plane = filled.transpose(1, 0, 2).reshape(X.shape[1], -1)
        self.means_ = plane.mean(axis=1)
        stds = plane.std(axis=1)
        stds[stds == 0.0] = 1.0
        self.stds_ = stds
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "means_")
        X = check_windows(X, allow_nan=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}")
        filled = self._impute(X)
        return (filled - self.means_[None, :, None]) / self.stds_[None, :, None]

    def _impute(self, X: np.ndarray) -> np.ndarray:
        filled = X.copy()
        for t in range(1, filled.shape[2]):
            gap = np.isnan(filled[:, :, t])
            filled[:, :, t] = np.where(gap, filled[:, :, t - 1], filled[:, :, t])
        leading = np.isnan(filled)
        medians = np.broadcast_to(self.medians_[None, :, None], filled.shape)
        filled = np.where(leading, medians, filled)
        return np.where(np.isnan(filled), 0.0, filled)

    def state_arrays(self) -> dict:
        check_is_fitted(self, "means_")
        return {
            "preproc.medians": self.medians_.copy(),
            "preproc.means": self.means_.copy(),
            "preproc.stds": self.stds_.copy(),
        }

    @classmethod
    def from_state_arrays(cls, arrays: dict) -> "WindowPreprocessor":
        pre = cls()
        pre.medians_ = arrays["preproc.medians"].copy()
        pre.means_ = arrays["preproc.means"].copy()
        pre.stds_ = arrays["preproc.stds"].copy()
        pre.n_features_in_ = len(pre.means_)
        return pre
