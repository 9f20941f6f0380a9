"""Temporal-bias metrics and breakdown aggregation.

The core quantities are the mean signed onset error (temporal bias index),
the mean absolute error, an early/late decomposition, and a window-length
normalized absolute deviation, computed per breakdown cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import EmptySampleSet

BREAKDOWN_DIMENSIONS = (
    "window_len", "duration_variant", "position_bucket", "query_class",
    "category", "predictor",
)


@dataclass(frozen=True)
class SampleResult:
    stimulus_id: str
    gt_onset_s: float
    pred_onset_s: float
    window_len_s: float
    query_class: int
    duration_variant: str = "natural"
    position_bucket: Optional[int] = None
    category: str = "correct"          # correct | incorrect
    predictor_name: str = ""

    def __post_init__(self):
        if self.window_len_s <= 0:
            raise ValueError("window_len_s must be positive")

    @property
    def bias_s(self) -> float:
        return self.pred_onset_s - self.gt_onset_s

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["bias_s"] = self.bias_s
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "SampleResult":
        d = json.loads(line)
        d.pop("bias_s", None)
        return cls(**d)


@dataclass
class MetricSummary:
    n: int
    tbi_s: float
    tbi_std_s: float
    mae_s: float
    mae_std_s: float
    n_early: int
    early_mean_s: Optional[float]
    n_late: int
    late_mean_s: Optional[float]
    normalized_mad: float
    n_invalid: int = 0


def _biases(samples: Sequence[SampleResult]) -> list[float]:
    if not samples:
        raise EmptySampleSet("no samples")
    return [s.bias_s for s in samples]


def tbi(samples: Sequence[SampleResult]) -> float:
    """Mean signed onset error; negative means systematically early."""
    b = _biases(samples)
    return math.fsum(b) / len(b)


def mae(samples: Sequence[SampleResult]) -> float:
    """Mean absolute onset error."""
    b = _biases(samples)
    return math.fsum(abs(x) for x in b) / len(b)


def early_late_split(samples: Sequence[SampleResult]) -> tuple[int, Optional[float], int, Optional[float]]:
    """Counts and means of the bias <= 0 and bias >= 0 subsets.

    Exact zeros count on both sides, matching the reporting convention;
    an empty side yields count 0 with mean None.
    """
    b = _biases(samples)
    early = [x for x in b if x <= 0]
    late = [x for x in b if x >= 0]
    early_mean = math.fsum(early) / len(early) if early else None
    late_mean = math.fsum(late) / len(late) if late else None
    return len(early), early_mean, len(late), late_mean


def normalized_mad(samples: Sequence[SampleResult]) -> float:
    """Mean of |bias| / window length, a scale-free deviation."""
    b = _biases(samples)
    return math.fsum(abs(s.bias_s) / s.window_len_s for s in samples) / len(b)


def categorize(query_class: int, detected_classes: Optional[Iterable[int]]) -> str:
    """correct iff the queried class appears in the independently detected set."""
    if detected_classes is not None and query_class in set(detected_classes):
        return "correct"
    return "incorrect"


def _sample_std(values: Sequence[float]) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    mean = math.fsum(values) / n
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def summarize(samples: Sequence[SampleResult], n_invalid: int = 0) -> MetricSummary:
    """All summary metrics for one breakdown cell."""
    b = _biases(samples)
    n_early, early_mean, n_late, late_mean = early_late_split(samples)
    return MetricSummary(
        n=len(b),
        tbi_s=tbi(samples),
        tbi_std_s=_sample_std(b),
        mae_s=mae(samples),
        mae_std_s=_sample_std([abs(x) for x in b]),
        n_early=n_early,
        early_mean_s=early_mean,
        n_late=n_late,
        late_mean_s=late_mean,
        normalized_mad=normalized_mad(samples),
        n_invalid=n_invalid,
    )


def _key_value(sample: SampleResult, dim: str):
    if dim == "window_len":
        return sample.window_len_s
    if dim == "duration_variant":
        return sample.duration_variant
    if dim == "position_bucket":
        return sample.position_bucket
    if dim == "query_class":
        return sample.query_class
    if dim == "category":
        return sample.category
    if dim == "predictor":
        return sample.predictor_name
    raise ValueError(f"unknown breakdown dimension {dim!r}")


def aggregate(samples: Sequence[SampleResult], dimensions: Sequence[str],
              invalid_counts: Optional[dict[tuple, int]] = None) -> dict[tuple, MetricSummary]:
    """Group samples by the given dimensions and summarize each group.

    Returns an insertion-ordered dict sorted by key values so downstream
    report bytes are deterministic regardless of input order.
    """
    if not dimensions:
        raise ValueError("dimensions must be non-empty")
    for dim in dimensions:
        if dim not in BREAKDOWN_DIMENSIONS:
            raise ValueError(f"unknown breakdown dimension {dim!r}")
    groups: dict[tuple, list[SampleResult]] = {}
    for s in samples:
        key = tuple(_key_value(s, d) for d in dimensions)
        groups.setdefault(key, []).append(s)
    def orderable(v):
        if v is None:
            return (2, 0.0, "")
        if isinstance(v, (int, float)):
            return (0, float(v), "")
        return (1, 0.0, str(v))

    out: dict[tuple, MetricSummary] = {}
    for key in sorted(groups, key=lambda k: tuple(orderable(v) for v in k)):
        n_invalid = invalid_counts.get(key, 0) if invalid_counts else 0
        group = sorted(groups[key], key=lambda s: s.stimulus_id)
        out[key] = summarize(group, n_invalid=n_invalid)
    return out


def delta_long_short(summary_short: MetricSummary, summary_long: MetricSummary) -> float:
    """MAE increase from the short to the long event variant."""
    if summary_short.n == 0 or summary_long.n == 0:
        raise EmptySampleSet("both summaries must cover at least one sample")
    return summary_long.mae_s - summary_short.mae_s
