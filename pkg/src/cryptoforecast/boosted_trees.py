"""CART regression trees and least-squares gradient boosting, from scratch.

Trees are grown greedily: at each node the (feature, threshold) pair that
maximizes the SSE reduction is chosen, with thresholds at midpoints
between consecutive distinct sorted feature values. Ties break toward the
lowest feature index, then the smallest threshold, so fitting is fully
deterministic without a random source. Boosting is plain least-squares
forward staging: each tree fits the current residuals and is added with a
shrinkage factor; the full tree count is always built (no early stopping).

Split search sorts candidates by (feature value, target) and node means
sum targets in sorted order, which makes the fitted model exactly
invariant to permutations of the training rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FORMAT_HEADER = "gbt v1"


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature_index/threshold/left/right) or leaf (value).

    Routing rule: feature value <= threshold goes left.
    """

    n_samples: int
    value: float | None = None
    feature_index: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def predict_row(self, row: np.ndarray) -> float:
        node = self
        while not node.is_leaf:
            node = node.left if row[node.feature_index] <= node.threshold else node.right
        return node.value


@dataclass(frozen=True)
class GbtHyperparams:
    n_trees: int = 500
    max_depth: int | None = 5
    min_leaf: int = 10
    shrinkage: float = 0.1
    seed: int = 0


@dataclass(frozen=True, eq=False)
class GbtModel:
    """prediction = init_value + shrinkage * sum of tree outputs."""

    init_value: float
    trees: tuple[TreeNode, ...]
    shrinkage: float
    hyperparams: GbtHyperparams
    feature_names: tuple[str, ...]
    stage_rmse: tuple[float, ...] = ()

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected a (n, {self.n_features}) feature matrix, got {X.shape}")
        out = np.full(X.shape[0], self.init_value)
        for tree in self.trees:
            out += self.shrinkage * _predict_tree(tree, X)
        return out

    def predict_row(self, feature_row) -> float:
        row = np.asarray(feature_row, dtype=float).ravel()
        if len(row) != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {len(row)}")
        return float(self.predict(row[None, :])[0])

    def to_text(self) -> str:
        hp = self.hyperparams
        lines = [
            FORMAT_HEADER,
            f"n_trees {hp.n_trees}",
            f"max_depth {'none' if hp.max_depth is None else hp.max_depth}",
            f"min_leaf {hp.min_leaf}",
            f"shrinkage {hp.shrinkage!r}",
            f"seed {hp.seed}",
            f"init_value {self.init_value!r}",
            "feature_names " + ",".join(self.feature_names),
        ]
        for i, tree in enumerate(self.trees):
            lines.append(f"tree {i}")
            lines.append(_render_tree(tree, self.feature_names))
        lines.append("end")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GbtModel":
        lines = text.splitlines()
        if not lines or lines[0] != FORMAT_HEADER:
            raise ValueError(f"not a {FORMAT_HEADER!r} model file")
        header: dict[str, str] = {}
        i = 1
        while i < len(lines) and not lines[i].startswith("tree ") and lines[i] != "end":
            key, _, value = lines[i].partition(" ")
            header[key] = value
            i += 1
        names = tuple(n for n in header["feature_names"].split(",") if n)
        max_depth = None if header["max_depth"] == "none" else int(header["max_depth"])
        trees = []
        while i < len(lines) and lines[i] != "end":
            if not lines[i].startswith("tree "):
                raise ValueError(f"unexpected line in model file: {lines[i]!r}")
            i += 1
            block = []
            while i < len(lines) and not lines[i].startswith("tree ") and lines[i] != "end":
                block.append(lines[i])
                i += 1
            trees.append(parse_dump("\n".join(block), names))
        return cls(
            init_value=float(header["init_value"]),
            trees=tuple(trees),
            shrinkage=float(header["shrinkage"]),
            hyperparams=GbtHyperparams(
                n_trees=int(header["n_trees"]),
                max_depth=max_depth,
                min_leaf=int(header["min_leaf"]),
                shrinkage=float(header["shrinkage"]),
                seed=int(header["seed"]),
            ),
            feature_names=names,
        )


def _predict_tree(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if not idx.size:
            continue
        if node.is_leaf:
            out[idx] = node.value
        else:
            mask = X[idx, node.feature_index] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
    return out


def _sorted_mean(values: np.ndarray) -> float:
    # Summation over the sorted array keeps node means independent of row order.
    return float(np.mean(np.sort(values)))


def _best_split(X: np.ndarray, y: np.ndarray, min_leaf: int) -> tuple[int, float] | None:
    n = len(y)
    centered = y - _sorted_mean(y)
    parent_sse = float(np.sum(np.sort(centered * centered)))
    best_gain = 0.0
    best: tuple[int, float] | None = None
    counts_left = np.arange(1, n)
    counts_right = n - counts_left
    for j in range(X.shape[1]):
        column = X[:, j]
        order = np.lexsort((centered, column))
        v = column[order]
        if v[0] == v[-1]:
            continue
        t = centered[order]
        csum = np.cumsum(t)
        csq = np.cumsum(t * t)
        total_sum, total_sq = csum[-1], csq[-1]
        left_sum, left_sq = csum[:-1], csq[:-1]
        sse_left = left_sq - left_sum * left_sum / counts_left
        sse_right = (total_sq - left_sq) - (total_sum - left_sum) ** 2 / counts_right
        gains = parent_sse - (sse_left + sse_right)
        mid = (v[:-1] + v[1:]) / 2.0
        valid = (
            (v[1:] > v[:-1])
            & (counts_left >= min_leaf)
            & (counts_right >= min_leaf)
            & (mid >= v[:-1])
            & (mid < v[1:])
        )
        if not valid.any():
            continue
        gains = np.where(valid, gains, -np.inf)
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            best_gain = float(gains[i])
            best = (j, float(mid[i]))
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    depth: int,
    max_depth: int | None,
    min_leaf: int,
    out_pred: np.ndarray,
) -> TreeNode:
    y_sub = y[idx]
    value = _sorted_mean(y_sub)
    at_depth_limit = max_depth is not None and depth >= max_depth
    if at_depth_limit or len(idx) < 2 * min_leaf:
        out_pred[idx] = value
        return TreeNode(n_samples=len(idx), value=value)
    split = _best_split(X[idx], y_sub, min_leaf)
    if split is None:
        out_pred[idx] = value
        return TreeNode(n_samples=len(idx), value=value)
    feature, threshold = split
    mask = X[idx, feature] <= threshold
    left = _grow(X, y, idx[mask], depth + 1, max_depth, min_leaf, out_pred)
    right = _grow(X, y, idx[~mask], depth + 1, max_depth, min_leaf, out_pred)
    return TreeNode(
        n_samples=len(idx), feature_index=feature, threshold=threshold, left=left, right=right
    )


def _validate_matrix(features, targets) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if X.shape[0] != len(y):
        raise ValueError(f"feature rows ({X.shape[0]}) and targets ({len(y)}) differ")
    if len(y) == 0:
        raise ValueError("empty training input")
    bad_rows = np.flatnonzero(~(np.isfinite(X).all(axis=1) & np.isfinite(y)))
    if bad_rows.size:
        raise ValueError(f"non-finite feature or target in row {bad_rows[0]}")
    return X, y


def fit_tree(features, targets, max_depth: int | None, min_leaf: int = 1) -> TreeNode:
    """Grow a single CART regression tree; max_depth=None means unbounded."""
    X, y = _validate_matrix(features, targets)
    if max_depth is not None and max_depth < 0:
        raise ValueError(f"max_depth must be >= 0 or None, got {max_depth}")
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")
    scratch = np.empty(len(y))
    return _grow(X, y, np.arange(len(y)), 0, max_depth, min_leaf, scratch)


def fit_gbt(
    features,
    targets,
    n_trees: int = 500,
    shrinkage: float = 0.1,
    max_depth: int | None = 5,
    min_leaf: int = 10,
    seed: int = 0,
    feature_names: tuple[str, ...] | None = None,
) -> GbtModel:
    """Stagewise least-squares boosting starting from the target mean.

    The seed is recorded but unused: without row/column subsampling the
    fit is deterministic by construction.
    """
    X, y = _validate_matrix(features, targets)
    n = len(y)
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")
    if n < 2 * min_leaf:
        raise ValueError(f"need at least {2 * min_leaf} rows for min_leaf {min_leaf}, have {n}")
    if n_trees < 0:
        raise ValueError(f"n_trees must be >= 0, got {n_trees}")
    if not 0.0 < shrinkage <= 1.0:
        raise ValueError(f"shrinkage must be in (0, 1], got {shrinkage}")
    if max_depth is not None and max_depth < 0:
        raise ValueError(f"max_depth must be >= 0 or None, got {max_depth}")
    if feature_names is None:
        names = tuple(f"f{j}" for j in range(X.shape[1]))
    else:
        names = tuple(feature_names)
        if len(names) != X.shape[1]:
            raise ValueError("feature_names must match the feature column count")

    init_value = _sorted_mean(y)
    current = np.full(n, init_value)
    stage_rmse = [float(np.sqrt(np.mean((y - current) ** 2)))]
    trees = []
    stage_pred = np.empty(n)
    for _ in range(n_trees):
        residuals = y - current
        root = _grow(X, residuals, np.arange(n), 0, max_depth, min_leaf, stage_pred)
        trees.append(root)
        current = current + shrinkage * stage_pred
        stage_rmse.append(float(np.sqrt(np.mean((y - current) ** 2))))
    return GbtModel(
        init_value=init_value,
        trees=tuple(trees),
        shrinkage=shrinkage,
        hyperparams=GbtHyperparams(
            n_trees=n_trees, max_depth=max_depth, min_leaf=min_leaf,
            shrinkage=shrinkage, seed=seed,
        ),
        feature_names=names,
        stage_rmse=tuple(stage_rmse),
    )


def _render_tree(node: TreeNode, names: tuple[str, ...], depth: int = 0) -> str:
    indent = "  " * depth
    if node.is_leaf:
        return f"{indent}leaf {node.value!r} (n={node.n_samples})"
    name = names[node.feature_index]
    return "\n".join(
        [
            f"{indent}feature {name} <= {node.threshold!r}",
            _render_tree(node.left, names, depth + 1),
            _render_tree(node.right, names, depth + 1),
        ]
    )


def dump_model(model: GbtModel, tree_index: int) -> str:
    """Human-readable rendering of one tree.

    Grammar (two-space indent per depth, left child first):
        internal := "feature " NAME " <= " FLOAT
        leaf     := "leaf " FLOAT " (n=" INT ")"
    Floats are shortest round-trip representations, so a dump re-parsed
    with parse_dump reproduces the tree exactly.
    """
    if not 0 <= tree_index < len(model.trees):
        raise ValueError(f"tree index {tree_index} out of range (model has {len(model.trees)})")
    return _render_tree(model.trees[tree_index], model.feature_names)


def parse_dump(text: str, feature_names: tuple[str, ...]) -> TreeNode:
    """Inverse of dump_model for a single tree."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    pos = 0

    def parse(depth: int) -> TreeNode:
        nonlocal pos
        line = lines[pos]
        indent = (len(line) - len(line.lstrip(" "))) // 2
        if indent != depth:
            raise ValueError(f"bad indentation at line {pos + 1} of tree dump")
        body = line.strip()
        pos += 1
        if body.startswith("leaf "):
            value_part, _, count_part = body[len("leaf "):].partition(" (n=")
            return TreeNode(n_samples=int(count_part.rstrip(")")), value=float(value_part))
        if not body.startswith("feature "):
            raise ValueError(f"unrecognized tree dump line: {body!r}")
        name, _, threshold_part = body[len("feature "):].partition(" <= ")
        if name not in feature_names:
            raise ValueError(f"unknown feature {name!r} in tree dump")
        left = parse(depth + 1)
        right = parse(depth + 1)
        return TreeNode(
            n_samples=left.n_samples + right.n_samples,
            feature_index=feature_names.index(name),
            threshold=float(threshold_part),
            left=left,
            right=right,
        )

    root = parse(0)
    if pos != len(lines):
        raise ValueError("trailing content after tree dump")
    return root
