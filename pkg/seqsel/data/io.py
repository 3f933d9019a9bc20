from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from seqsel.config.config_loader import CONFIG_DIR, load_yaml
from seqsel.data.models import CategoryMap, Dataset
from seqsel.errors import DatasetError


logger = logging.getLogger(__name__)


def load_csv(
    path: Path | str,
    label_column: str,
    class_names: Optional[Sequence[str]] = None,
) -> Dataset:
    """Read a header-first CSV into a Dataset.

    Data rows are numbered from 1 (the header is not counted) in every error.
    Label cells forming a dense integer set 0..k-1 are used as class indices
    directly; anything else is mapped to [0, k) in order of first appearance. Passing
    ``class_names`` pins the mapping instead, e.g. to match a checkpoint.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Missing data file: {path}")

    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path} is empty") from None

    if label_column not in raw.columns:
        raise DatasetError(f"label column not found in {path}", column=label_column)
    if raw.empty:
        raise DatasetError(f"{path} has a header but no data rows")

    feature_names = [c for c in raw.columns if c != label_column]
    if not feature_names:
        raise DatasetError(f"{path} has no feature columns")

    features = np.empty((len(raw), len(feature_names)), dtype=float)
    for j, name in enumerate(feature_names):
        column = _parse_column(raw[name].str.strip())
        bad = np.flatnonzero(~np.isfinite(column))
        if bad.size:
            row = int(bad[0])
            raise DatasetError(
                f"non-numeric or non-finite cell {raw[name].iloc[row]!r}",
                row=row + 1,
                column=name,
            )
        features[:, j] = column

    labels, names = _encode_labels(raw[label_column].str.strip(), label_column, class_names)

    logger.info("Loaded %s: %d rows, %d features, %d classes", path, len(raw), len(feature_names), len(names))
    return Dataset(
        features=features,
        labels=labels,
        n_classes=len(names),
        feature_names=feature_names,
        class_names=names,
    )


def _parse_column(cells: pd.Series) -> np.ndarray:
    """Exact decimal-to-double parse; unparseable cells come back as NaN."""
    try:
        return cells.astype(float).to_numpy(dtype=float)
    except ValueError:
        # only used to locate the offending cell
        return pd.to_numeric(cells, errors="coerce").to_numpy(dtype=float)


def _encode_labels(
    cells: pd.Series,
    label_column: str,
    class_names: Optional[Sequence[str]],
) -> tuple[np.ndarray, List[str]]:
    if class_names is not None:
        index = {str(name): i for i, name in enumerate(class_names)}
        labels = np.empty(len(cells), dtype=np.int64)
        for row, cell in enumerate(cells):
            if cell not in index:
                raise DatasetError(f"unknown class label {cell!r}", row=row + 1, column=label_column)
            labels[row] = index[cell]
        return labels, [str(name) for name in class_names]

    for row, cell in enumerate(cells):
        if cell == "":
            raise DatasetError("empty label cell", row=row + 1, column=label_column)

    as_int = pd.to_numeric(cells, errors="coerce")
    if as_int.notna().all() and (as_int == as_int.round()).all() and (as_int >= 0).all():
        labels = as_int.to_numpy(dtype=np.int64)
        k = int(labels.max()) + 1
        # only a dense 0..k-1 label set is taken verbatim
        if np.unique(labels).size == k:
            return labels, [str(i) for i in range(k)]

    codes, uniques = pd.factorize(cells, sort=False)
    return codes.astype(np.int64), [str(u) for u in uniques]


def write_csv(dataset: Dataset, path: Path | str, label_column: str = "label") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    names = dataset.feature_names or [f"f{i}" for i in range(dataset.n_features)]
    df = pd.DataFrame(dataset.features, columns=names)
    if dataset.class_names is not None:
        df[label_column] = [dataset.class_names[i] for i in dataset.labels]
    else:
        df[label_column] = dataset.labels
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def load_category_map(source: Path | str, n_features: int) -> CategoryMap:
    """Load a category map from a JSON file, or from a bundled preset by name."""
    path = Path(source)
    if path.exists():
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise ValueError(f"{path} must hold a JSON object of category -> feature indices")
        cats = CategoryMap.from_dict(data)
    else:
        cats = category_map_from_preset(str(source))
    cats.validate(n_features)
    return cats


def category_map_from_preset(name: str) -> CategoryMap:
    preset_path = CONFIG_DIR / "categories" / f"{name}.yaml"
    if not preset_path.exists():
        raise FileNotFoundError(f"No category map file or preset named '{name}'")
    preset = load_yaml(preset_path)
    return category_map_from_blocks(preset["blocks"], int(preset["n_features"]))


def category_map_from_blocks(blocks: List[dict], n_features: int) -> CategoryMap:
    start = 0
    categories = []
    for block in blocks:
        size = int(block["size"])
        categories.append((block["name"], frozenset(range(start, start + size))))
        start += size
    if start != n_features:
        raise ValueError(f"category blocks cover {start} features, expected {n_features}")
    return CategoryMap(categories=tuple(categories))


def write_category_map(cats: CategoryMap, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cats.to_dict(), f, indent=2)
        f.write("\n")
    return path
