"""Random forest regression, from scratch.

Trees are grown greedily on the variance-reduction (sum of squared error)
criterion with thresholds at midpoints between consecutive sorted unique
feature values. The split search is vectorized over all candidate features of
a node at once, which keeps grid-search cross-validation at desk scale.

Everything is deterministic given the seed: each tree draws its bootstrap
resample and per-split feature subsets from its own substream, and trees are
stored by index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date as Date, timedelta
from itertools import product
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION
from .errors import (
    DimensionMismatch,
    EmptyDataset,
    InsufficientData,
    UntrainedAnalyte,
)
from .pipeline import WindowedDataset, latest_window_features


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None           # None = unlimited
    min_samples_leaf: int = 1
    max_features: int | float | None = None  # None = all, int = count, float = fraction
    seed: int = 0
    bootstrap: bool = True                  # test hook; normal forests resample

    def to_dict(self) -> dict:
        return {"n_trees": self.n_trees, "max_depth": self.max_depth,
                "min_samples_leaf": self.min_samples_leaf,
                "max_features": self.max_features, "seed": self.seed,
                "bootstrap": self.bootstrap}

    @classmethod
    def from_dict(cls, d: dict) -> "ForestParams":
        return cls(**{k: d[k] for k in ("n_trees", "max_depth", "min_samples_leaf",
                                        "max_features", "seed", "bootstrap") if k in d})


# Pairwise grid defaults. The fast grid trades a little model selection for a
# large cut in CV runtime and is what the CLI --fast flag and the synthetic
# evaluation harness use.
DEFAULT_GRID: dict = {
    "n_trees": [100, 300],
    "max_depth": [None, 8],
    "min_samples_leaf": [1, 3],
    "max_features": [None, 1 / 3],
}
FAST_GRID: dict = {
    "n_trees": [60],
    "max_depth": [None],
    "min_samples_leaf": [1, 3],
    "max_features": [None],
}


@dataclass
class Leaf:
    prediction: float
    count: int


@dataclass
class Split:
    feature_index: int
    threshold: float
    left: "Split | Leaf"
    right: "Split | Leaf"


class FlatTree:
    """A fitted tree as parallel arrays; supports vectorized batch prediction."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "count")

    def __init__(self, feature, threshold, left, right, value, count):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.count = np.asarray(count, dtype=np.int64)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[idx]
            at_split = feat >= 0
            if not at_split.any():
                return self.value[idx]
            go_left = np.zeros(len(X), dtype=bool)
            go_left[at_split] = (
                X[rows[at_split], feat[at_split]] <= self.threshold[idx[at_split]]
            )
            nxt = np.where(go_left, self.left[idx], self.right[idx])
            idx = np.where(at_split, nxt, idx)

    def predict_one(self, x: np.ndarray) -> float:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        return float(self.value[i])

    def root(self) -> Split | Leaf:
        """Nested node view for inspection and tests."""
        def build(i: int) -> Split | Leaf:
            if self.feature[i] < 0:
                return Leaf(prediction=float(self.value[i]), count=int(self.count[i]))
            return Split(feature_index=int(self.feature[i]),
                         threshold=float(self.threshold[i]),
                         left=build(int(self.left[i])), right=build(int(self.right[i])))
        return build(0)

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist(), "count": self.count.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FlatTree":
        return cls(d["feature"], d["threshold"], d["left"], d["right"],
                   d["value"], d["count"])


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    feature_indices: np.ndarray | None = None,
    min_samples_leaf: int = 1,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, achieved SSE) over the candidate features.

    Evaluates every midpoint between consecutive sorted values of every
    candidate feature in one vectorized pass. Returns None when no split
    leaves both children with at least ``min_samples_leaf`` samples.
    """
    m = len(y)
    k = min_samples_leaf
    if m < 2 * k:
        return None
    feats = np.arange(X.shape[1]) if feature_indices is None \
        else np.asarray(feature_indices, dtype=np.int64)
    cols = X[:, feats]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    yc = y - y.mean()  # centering avoids cancellation in the SSE identity
    ys = yc[order]
    csum = np.cumsum(ys, axis=0)
    csq = np.cumsum(ys * ys, axis=0)
    nl = np.arange(1, m, dtype=np.float64)[:, None]
    sl, sql = csum[:-1, :], csq[:-1, :]
    nr = m - nl
    sr = csum[-1, :] - sl
    sqr = csq[-1, :] - sql
    sse = (sql - sl * sl / nl) + (sqr - sr * sr / nr)

    valid = xs[:-1, :] < xs[1:, :]
    if k > 1:
        valid[: k - 1, :] = False
        valid[m - k:, :] = False
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)
    flat = int(np.argmin(sse))
    i, j = divmod(flat, sse.shape[1])
    return (int(feats[j]),
            float((xs[i, j] + xs[i + 1, j]) / 2.0),
            max(float(sse[i, j]), 0.0))


def _resolve_max_features(max_features: int | float | None, p: int) -> int:
    if max_features is None:
        return p
    if isinstance(max_features, float) and not max_features.is_integer():
        return max(1, min(p, math.ceil(max_features * p)))
    return max(1, min(p, int(max_features)))


def fit_tree(X: np.ndarray, y: np.ndarray, params: ForestParams,
             rng: np.random.Generator | None = None) -> FlatTree:
    """Grow one regression tree; stops at max_depth, min_samples_leaf, or zero variance."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise EmptyDataset("cannot fit a tree on zero samples")
    if X.ndim != 2 or len(X) != len(y):
        raise DimensionMismatch(f"X {X.shape} does not match y ({len(y)},)")
    rng = rng or np.random.default_rng(params.seed)
    p = X.shape[1]
    q = _resolve_max_features(params.max_features, p)

    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        count.append(0)
        return len(feature) - 1

    stack = [(np.arange(len(y)), 0, new_node())]
    while stack:
        idx, depth, slot = stack.pop()
        yn = y[idx]
        count[slot] = len(idx)
        value[slot] = float(yn.mean())
        if (params.max_depth is not None and depth >= params.max_depth) \
                or len(idx) < 2 * params.min_samples_leaf \
                or bool((yn == yn[0]).all()):
            continue
        feats = np.sort(rng.choice(p, size=q, replace=False)) if q < p else None
        found = best_split(X[idx], yn, feats, params.min_samples_leaf)
        if found is None:
            continue
        f, thr, _ = found
        mask = X[idx, f] <= thr
        feature[slot] = f
        threshold[slot] = thr
        lslot, rslot = new_node(), new_node()
        left[slot], right[slot] = lslot, rslot
        stack.append((idx[~mask], depth + 1, rslot))
        stack.append((idx[mask], depth + 1, lslot))
    return FlatTree(feature, threshold, left, right, value, count)


@dataclass
class ForestModel:
    params: ForestParams
    trees: list[FlatTree]
    feature_names: list[str]
    target_analyte: str
    window: int
    training_target_range: tuple[float, float]

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != len(self.feature_names):
            raise DimensionMismatch(
                f"{X.shape[1]} features given, model expects {len(self.feature_names)}")
        acc = np.zeros(len(X))
        for tree in self.trees:
            acc += tree.predict_batch(X)
        return acc / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "params": self.params.to_dict(),
            "feature_names": self.feature_names,
            "target_analyte": self.target_analyte,
            "window": self.window,
            "training_target_range": list(self.training_target_range),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(
            params=ForestParams.from_dict(d["params"]),
            trees=[FlatTree.from_dict(t) for t in d["trees"]],
            feature_names=list(d["feature_names"]),
            target_analyte=d["target_analyte"],
            window=int(d["window"]),
            training_target_range=tuple(d["training_target_range"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "ForestModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_forest(dataset: WindowedDataset, params: ForestParams) -> ForestModel:
    """Bag ``n_trees`` trees, each on its own bootstrap resample and rng substream."""
    n = len(dataset)
    if n == 0:
        raise EmptyDataset("cannot fit a forest on an empty dataset")
    X, y = dataset.X, dataset.y
    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng([params.seed, t])
        if params.bootstrap:
            take = rng.integers(0, n, size=n)
            trees.append(fit_tree(X[take], y[take], params, rng))
        else:
            trees.append(fit_tree(X, y, params, rng))
    return ForestModel(
        params=params,
        trees=trees,
        feature_names=list(dataset.feature_names),
        target_analyte=dataset.target_analyte,
        window=dataset.window,
        training_target_range=(float(y.min()), float(y.max())),
    )


def predict(model: ForestModel, window_features: np.ndarray) -> float:
    """Arithmetic mean of the per-tree predictions for one feature vector."""
    x = np.asarray(window_features, dtype=np.float64).ravel()
    if len(x) != len(model.feature_names):
        raise DimensionMismatch(
            f"{len(x)} features given, model expects {len(model.feature_names)}")
    return float(np.mean([t.predict_one(x) for t in model.trees]))


def _expand_grid(grid, seed: int) -> list[ForestParams]:
    if isinstance(grid, dict):
        keys = list(grid)
        points = [dict(zip(keys, combo)) for combo in product(*(grid[k] for k in keys))]
    else:
        points = [p.to_dict() if isinstance(p, ForestParams) else dict(p) for p in grid]
    out = []
    for p in points:
        p.setdefault("seed", seed)
        out.append(ForestParams.from_dict(p))
    return out


@dataclass
class GridSearchResult:
    best_params: ForestParams
    cv_table: list[dict]
    model: ForestModel
    n_development: int          # samples in the chronological development slice

    def cv_table_csv(self, path: str | Path) -> None:
        import csv as _csv
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = _csv.writer(fh)
            w.writerow(["n_trees", "max_depth", "min_samples_leaf", "max_features",
                        "fold_rmse", "mean_rmse"])
            for row in self.cv_table:
                w.writerow([row["n_trees"], row["max_depth"], row["min_samples_leaf"],
                            row["max_features"],
                            ";".join(f"{v:.6f}" for v in row["fold_rmse"]),
                            f"{row['mean_rmse']:.6f}"])


def fold_bounds(n_dev: int, k: int) -> list[int]:
    """Boundaries of k contiguous folds over [0, n_dev): fold f is [b[f], b[f+1])."""
    return [round(f * n_dev / k) for f in range(k + 1)]


def grid_search_cv(
    dataset: WindowedDataset,
    grid: dict | list | None = None,
    k: int = 5,
    train_fraction: float = 0.6,
    seed: int = 0,
) -> GridSearchResult:
    """Chronological model selection.

    The first ``train_fraction`` of samples (time order) form the development
    set; it is cut into ``k`` contiguous folds, each held out once. The best
    grid point minimizes mean fold RMSE, ties broken by fewer trees then
    shallower depth, and is refit on the whole development set. The remaining
    samples are untouched here and serve as the final holdout.
    """
    n = len(dataset)
    n_dev = int(train_fraction * n)
    if k < 1 or n_dev < k:
        raise InsufficientData(
            f"{n} samples give a development set of {n_dev}, too small for {k} folds")
    params_list = _expand_grid(grid if grid is not None else DEFAULT_GRID, seed)
    X, y = dataset.X[:n_dev], dataset.y[:n_dev]
    bounds = fold_bounds(n_dev, k)
    dev = replace_dataset(dataset, X, y)

    cv_table = []
    for params in params_list:
        fold_rmse = []
        for f in range(k):
            lo, hi = bounds[f], bounds[f + 1]
            tr = np.concatenate([np.arange(0, lo), np.arange(hi, n_dev)])
            if len(tr) == 0:
                raise InsufficientData("a fold has an empty training side")
            model = fit_forest(replace_dataset(dataset, X[tr], y[tr]), params)
            pred = model.predict_batch(X[lo:hi])
            fold_rmse.append(float(np.sqrt(np.mean((pred - y[lo:hi]) ** 2))))
        cv_table.append({**params.to_dict(), "fold_rmse": fold_rmse,
                         "mean_rmse": float(np.mean(fold_rmse))})

    def sort_key(row):
        depth = row["max_depth"]
        return (row["mean_rmse"], row["n_trees"],
                math.inf if depth is None else depth)

    best_row = min(cv_table, key=sort_key)
    best_params = ForestParams.from_dict(best_row)
    final = fit_forest(dev, best_params)
    return GridSearchResult(best_params=best_params, cv_table=cv_table,
                            model=final, n_development=n_dev)


def replace_dataset(dataset: WindowedDataset, X: np.ndarray, y: np.ndarray) -> WindowedDataset:
    return WindowedDataset(target_analyte=dataset.target_analyte, window=dataset.window,
                           feature_names=dataset.feature_names, X=X, y=y)


@dataclass
class PredictionSet:
    """Next-day forecasts per analyte, stamped with the day they were made."""

    as_of: Date
    target_date: Date
    values: dict[str, float]

    def to_dict(self) -> dict:
        return {"as_of": self.as_of.isoformat(), "target_date": self.target_date.isoformat(),
                "values": self.values}

    @classmethod
    def from_dict(cls, d: dict) -> "PredictionSet":
        return cls(as_of=Date.fromisoformat(d["as_of"]),
                   target_date=Date.fromisoformat(d["target_date"]),
                   values={k: float(v) for k, v in d["values"].items()})


def predict_all(record, catalog, models: dict[str, ForestModel],
                analytes: list[str], as_of: Date) -> PredictionSet:
    """One next-day forecast per requested analyte from its trained model."""
    values = {}
    for analyte in analytes:
        model = models.get(analyte)
        if model is None:
            raise UntrainedAnalyte(f"no trained model for {analyte!r}")
        x = latest_window_features(record, catalog, analyte, as_of, w=model.window)
        values[analyte] = predict(model, x)
    return PredictionSet(as_of=as_of, target_date=as_of + timedelta(days=1), values=values)
