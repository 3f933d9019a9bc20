"""Composite policy-intelligence report over a selection log."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from seqsel.agent.selection_log import SelectionLog
from seqsel.data.models import CategoryMap, Dataset
from seqsel.errors import ContractError
from seqsel.intel.discrimination import SPEC_THRESHOLD, discrimination_profile, specialization_score
from seqsel.intel.preference import (
    SIG_THRESHOLD,
    CategoryUsage,
    category_usage_distribution,
    group_has_usage,
    learning_score,
    preference_ratios,
    sample_type_adaptation,
)
from seqsel.intel.temporal import TEMPORAL_STEPS, TemporalUsageMatrix, temporal_intelligence, temporal_usage
from seqsel.serialization import write_json


logger = logging.getLogger(__name__)

FIRST_STEP_TOP = 20
TOP_FEATURES = 20
UNCATEGORIZED = "uncategorized"


@dataclass
class IntelligenceReport:
    preference_ratios: List[CategoryUsage]              # empty when the log has no selections
    learning_score: Optional[float]
    per_feature_d: Dict[int, float]                     # analyzed features only
    per_class_d: Dict[str, Dict[int, float]]            # one-vs-rest, multi-class only
    specialization_score: Optional[float]
    temporal: Dict[str, TemporalUsageMatrix]
    temporal_intelligence: Dict[str, Optional[float]]
    adaptation: Optional[float]
    adaptation_by_class: Dict[str, Optional[float]]
    feature_importance: pd.DataFrame
    top_feature_categories: pd.DataFrame
    first_step: pd.DataFrame
    thresholds: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "preference_ratios": [u.__dict__ for u in self.preference_ratios],
            "learning_score": self.learning_score,
            "specialization": {
                "per_feature_D": {str(f): _d_value(d) for f, d in self.per_feature_d.items()},
                "per_class_D": {
                    name: {str(f): _d_value(d) for f, d in values.items()}
                    for name, values in self.per_class_d.items()
                },
                "score": self.specialization_score,
            },
            "temporal": {
                name: {
                    "matrix": m.usage.to_numpy().tolist(),
                    "categories": list(m.usage.index),
                    "step_counts": m.step_counts.tolist(),
                    "intelligence": self.temporal_intelligence.get(name),
                }
                for name, m in self.temporal.items()
            },
            "adaptation": self.adaptation,
            "adaptation_by_class": self.adaptation_by_class,
            "feature_importance": _records(self.feature_importance),
            "top_feature_categories": _records(self.top_feature_categories),
            "first_step": _records(self.first_step),
            "thresholds": self.thresholds,
        }


def _d_value(d: float):
    return "degenerate" if np.isinf(d) else float(d)


def _records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    return [
        {key: _d_value(value) if isinstance(value, float) and np.isinf(value) else value for key, value in row.items()}
        for row in frame.to_dict(orient="records")
    ]


def _class_name(dataset: Dataset, c: int) -> str:
    return dataset.class_names[c] if dataset.class_names else str(c)


def _feature_name(dataset: Dataset, f: int) -> str:
    return dataset.feature_names[f] if dataset.feature_names else str(f)


def _first_step_frequencies(log: SelectionLog, dataset: Dataset, top: int) -> pd.DataFrame:
    firsts = pd.Series([e.features[0] for e in log if e.length], dtype=np.int64)
    if firsts.empty:
        return pd.DataFrame(columns=["feature", "name", "count", "frequency"])
    counts = firsts.value_counts()
    frame = pd.DataFrame({"feature": counts.index.astype(int), "count": counts.to_numpy()})
    frame = frame.sort_values(["count", "feature"], ascending=[False, True]).head(top)
    frame["frequency"] = frame["count"] / len(log)
    frame["name"] = [_feature_name(dataset, f) for f in frame["feature"]]
    return frame[["feature", "name", "count", "frequency"]].reset_index(drop=True)


def _feature_importance(
    log: SelectionLog,
    dataset: Dataset,
    analyzed: np.ndarray,
    signed_d: np.ndarray,
    contrast: List[str],
    counterpart: List[str],
) -> pd.DataFrame:
    """
    Selection frequency times |D| for every analyzed feature. ``contrast[f]``
    names the group the signed D compares against ``counterpart[f]``; the
    favoured class is whichever of the two has the higher mean.
    """
    events = log.to_frame()
    freq = events["feature"].value_counts() / max(len(events), 1)
    signed = signed_d[analyzed]
    frame = pd.DataFrame(
        {
            "feature": analyzed,
            "name": [_feature_name(dataset, f) for f in analyzed],
            "selection_frequency": freq.reindex(analyzed).to_numpy(dtype=float),
            "discrimination": np.abs(signed),
            "signed_discrimination": signed,
            "contrast": [contrast[f] for f in analyzed],
            "favoured_class": [
                contrast[f] if s > 0 else counterpart[f] if s < 0 else None for f, s in zip(analyzed, signed)
            ],
        }
    )
    frame["importance"] = frame["selection_frequency"] * frame["discrimination"]
    return frame.sort_values(["importance", "feature"], ascending=[False, True]).reset_index(drop=True)


def top_feature_categories(
    importance: pd.DataFrame,
    cats: CategoryMap,
    n: int,
    top: int = TOP_FEATURES,
) -> pd.DataFrame:
    """Category make-up of the ``top`` highest-importance features."""
    lookup = cats.feature_lookup(n)
    head = importance.head(top)
    names = cats.names
    labels = [names[c] if c >= 0 else UNCATEGORIZED for c in lookup[head["feature"].to_numpy(dtype=np.int64)]]
    order = names + ([UNCATEGORIZED] if UNCATEGORIZED in labels else [])
    counts = pd.Series(labels, dtype=object).value_counts().reindex(order, fill_value=0)
    frame = pd.DataFrame({"category": order, "count": counts.to_numpy(dtype=np.int64)})
    frame["share"] = frame["count"] / len(head) if len(head) else 0.0
    return frame


def analyze(
    log: SelectionLog,
    dataset: Dataset,
    cats: CategoryMap,
    sig_threshold: float = SIG_THRESHOLD,
    spec_threshold: float = SPEC_THRESHOLD,
    steps: int = TEMPORAL_STEPS,
) -> IntelligenceReport:
    """
    Preference ratios and learning score, discrimination-based
    specialization over the features the policy actually examined,
    per-class temporal usage, and usage adaptation between sample types.
    Binary data compares class 1 against class 0; with more classes each
    class is compared against the rest and the headline D of a feature is
    its strongest one-vs-rest value.

    Metrics that are undefined on the given log are reported as None: the
    learning score when no feature was ever selected, adaptation when one
    side of a comparison made no categorized selections.
    """
    n, k = dataset.n_features, dataset.n_classes
    if len(log) == 0:
        raise ContractError("analysis needs a non-empty selection log")
    labels = log.true_labels()
    if labels.min() < 0 or labels.max() >= k:
        raise ContractError(f"selection log labels must lie in [0, {k})")
    cats.validate(n)

    if log.n_selections():
        ratios = preference_ratios(log, cats, n, threshold=sig_threshold)
        score: Optional[float] = learning_score(ratios, threshold=sig_threshold)
    else:
        ratios, score = [], None

    def adaptation_between(a: List[int], b: List[int]) -> Optional[float]:
        if not (group_has_usage(log, cats, n, a) and group_has_usage(log, cats, n, b)):
            return None
        return sample_type_adaptation(
            category_usage_distribution(log, cats, n, labels=a),
            category_usage_distribution(log, cats, n, labels=b),
        )

    per_class_d: Dict[str, Dict[int, float]] = {}
    adaptation_by_class: Dict[str, Optional[float]] = {}
    analyzed = np.unique(log.to_frame()["feature"].to_numpy(dtype=np.int64))

    if k == 2:
        signed_d = discrimination_profile(dataset, [1], [0], signed=True)
        contrast = [_class_name(dataset, 1)] * n
        counterpart = [_class_name(dataset, 0)] * n
        adaptation = adaptation_between([1], [0])
    elif k > 2:
        profiles = []
        for c in range(k):
            rest = [r for r in range(k) if r != c]
            profile = discrimination_profile(dataset, [c], rest, signed=True)
            profiles.append(profile)
            name = _class_name(dataset, c)
            per_class_d[name] = {int(f): float(abs(profile[f])) for f in analyzed}
            adaptation_by_class[name] = adaptation_between([c], rest)
        stacked = np.vstack(profiles)
        strongest = np.argmax(np.abs(stacked), axis=0)
        signed_d = stacked[strongest, np.arange(n)]
        contrast = [_class_name(dataset, int(c)) for c in strongest]
        counterpart = [f"not {name}" for name in contrast]
        defined = [v for v in adaptation_by_class.values() if v is not None]
        adaptation = float(np.mean(defined)) if defined else None
    else:
        signed_d = np.zeros(n)
        contrast = counterpart = [_class_name(dataset, 0)] * n
        adaptation = None

    d = np.abs(signed_d)
    per_feature_d = {int(f): float(d[f]) for f in analyzed}
    specialization = specialization_score(d[analyzed], spec_threshold) if analyzed.size else None

    temporal: Dict[str, TemporalUsageMatrix] = {}
    intelligence: Dict[str, Optional[float]] = {}
    for c in range(k):
        name = _class_name(dataset, c)
        matrix = temporal_usage(log, cats, n, labels=[c], group=name, steps=steps)
        temporal[name] = matrix
        intelligence[name] = temporal_intelligence(matrix) if matrix.populated_steps >= 2 else None

    importance = _feature_importance(log, dataset, analyzed, signed_d, contrast, counterpart)
    report = IntelligenceReport(
        preference_ratios=ratios,
        learning_score=score,
        per_feature_d=per_feature_d,
        per_class_d=per_class_d,
        specialization_score=specialization,
        temporal=temporal,
        temporal_intelligence=intelligence,
        adaptation=adaptation,
        adaptation_by_class=adaptation_by_class,
        feature_importance=importance,
        top_feature_categories=top_feature_categories(importance, cats, n),
        first_step=_first_step_frequencies(log, dataset, FIRST_STEP_TOP),
        thresholds={"sig_threshold": sig_threshold, "spec_threshold": spec_threshold, "steps": steps},
    )
    logger.info(
        "Learning score %s, specialization %s, adaptation %s over %d episodes",
        "n/a" if score is None else f"{score:.3f}",
        "n/a" if specialization is None else f"{specialization:.3f}",
        "n/a" if adaptation is None else f"{adaptation:.3f}",
        len(log),
    )
    return report


def write_report(report: IntelligenceReport, out_dir: Path | str) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [write_json(out_dir / "intelligence.json", report.to_dict())]
    for name, matrix in report.temporal.items():
        slug = re.sub(r"[^A-Za-z0-9_.-]+", "_", name)
        path = out_dir / f"temporal_{slug}.csv"
        matrix.write_csv(path)
        written.append(path)
    return written
