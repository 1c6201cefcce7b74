"""Boosted-tree classifier trained on the weighted classification objective.

Boosting is second-order (Newton) on the weighted logistic loss.  The
weighted training set is expanded into labeled instances first: every
sample with a nonzero negative weight yields a label-0 instance with
that weight, and every sample with a positive weight yields a label-1
instance weighted by it.  Each round fits one regression tree to the
gradient/hessian statistics of the expanded instances; trees use exact
greedy splits over sorted feature values, a minimum child hessian sum,
and L2 leaf regularization.  Trees consume raw points directly, so
categorical dimensions enter as their integer codes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import SearchSpace
from ..errors import DegenerateTrainingError, InvalidArgumentError
from .mlp import (
    PROB_CLIP,
    WeightedTrainingSet,
    _sigmoid,
    _space_from_jsonable,
    _space_to_jsonable,
    classification_loss,
)

__all__ = ["GbtConfig", "GbtClassifier", "train_gbt"]


@dataclass(frozen=True)
class GbtConfig:
    """Training configuration for :func:`train_gbt`.

    ``seed`` is accepted for interface parity with the network backend
    but unused: tree construction involves no randomness, so training
    is deterministic outright.
    """

    rounds: int = 100
    learning_rate: float = 0.3
    max_depth: int = 6
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise InvalidArgumentError("rounds must be >= 1")
        if not (0 < self.learning_rate <= 1 and math.isfinite(self.learning_rate)):
            raise InvalidArgumentError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise InvalidArgumentError("max_depth must be >= 1")
        if self.min_child_weight < 0 or self.reg_lambda < 0:
            raise InvalidArgumentError("min_child_weight and reg_lambda must be >= 0")


@dataclass
class _Node:
    value: float = 0.0
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_jsonable(self) -> dict:
        if self.is_leaf:
            return {"v": self.value}
        return {
            "f": self.feature,
            "t": self.threshold,
            "l": self.left.to_jsonable(),
            "r": self.right.to_jsonable(),
        }

    @staticmethod
    def from_jsonable(data: dict) -> "_Node":
        if "v" in data:
            return _Node(value=float(data["v"]))
        return _Node(
            feature=int(data["f"]),
            threshold=float(data["t"]),
            left=_Node.from_jsonable(data["l"]),
            right=_Node.from_jsonable(data["r"]),
        )


def _tree_margins(root: _Node, points: np.ndarray) -> np.ndarray:
    out = np.empty(points.shape[0])
    stack = [(root, np.arange(points.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.value
            continue
        goes_left = points[idx, node.feature] < node.threshold
        stack.append((node.left, idx[goes_left]))
        stack.append((node.right, idx[~goes_left]))
    return out


class GbtClassifier:
    """A fitted boosted-tree model.

    ``round_losses[r]`` is the full-data classification loss after
    ``r`` boosting rounds (index 0 is the untrained model), recorded
    during training.  Prediction is ``sigmoid(base_score + sum of tree
    outputs)`` clipped into ``[1e-6, 1 - 1e-6]``; leaf values already
    include the learning rate.
    """

    def __init__(
        self,
        space: SearchSpace,
        trees: list[_Node],
        base_score: float = 0.0,
        round_losses: list[float] | None = None,
    ) -> None:
        self.space = space
        self.trees = trees
        self.base_score = base_score
        self.round_losses = round_losses if round_losses is not None else []

    def margins(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        f = np.full(points.shape[0], self.base_score)
        for tree in self.trees:
            f += _tree_margins(tree, points)
        return f

    def predict(self, points: np.ndarray) -> np.ndarray:
        """Predicted probabilities, clipped into [1e-6, 1 - 1e-6]."""
        return np.clip(_sigmoid(self.margins(points)), PROB_CLIP, 1.0 - PROB_CLIP)

    def to_jsonable(self) -> dict:
        return {
            "format": "lfbo-classifier",
            "kind": "gbt",
            "version": 1,
            "space": _space_to_jsonable(self.space),
            "base_score": self.base_score,
            "trees": [t.to_jsonable() for t in self.trees],
            "round_losses": list(self.round_losses),
        }

    @staticmethod
    def from_jsonable(data: dict) -> "GbtClassifier":
        if data.get("format") != "lfbo-classifier" or data.get("kind") != "gbt":
            raise InvalidArgumentError("not a serialized gbt classifier")
        if data.get("version") != 1:
            raise InvalidArgumentError(f"unsupported version {data.get('version')}")
        return GbtClassifier(
            _space_from_jsonable(data["space"]),
            [_Node.from_jsonable(t) for t in data["trees"]],
            float(data["base_score"]),
            [float(x) for x in data["round_losses"]],
        )


def _build_tree(
    x: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    idx: np.ndarray,
    depth: int,
    config: GbtConfig,
) -> _Node:
    lam = config.reg_lambda
    g_sum = g[idx].sum()
    h_sum = h[idx].sum()
    leaf = _Node(value=-config.learning_rate * g_sum / (h_sum + lam))
    if depth >= config.max_depth or idx.size < 2:
        return leaf

    best_gain = 0.0
    best: tuple[int, float, np.ndarray] | None = None
    parent_score = g_sum * g_sum / (h_sum + lam)
    for feature in range(x.shape[1]):
        xs = x[idx, feature]
        order = np.argsort(xs, kind="stable")
        xs_sorted = xs[order]
        if xs_sorted[0] == xs_sorted[-1]:
            continue
        g_cum = np.cumsum(g[idx][order])
        h_cum = np.cumsum(h[idx][order])
        cuts = np.nonzero(xs_sorted[:-1] < xs_sorted[1:])[0]
        h_left = h_cum[cuts]
        h_right = h_sum - h_left
        feasible = (h_left >= config.min_child_weight) & (
            h_right >= config.min_child_weight
        )
        if not feasible.any():
            continue
        g_left = g_cum[cuts]
        g_right = g_sum - g_left
        gains = 0.5 * (
            g_left**2 / (h_left + lam) + g_right**2 / (h_right + lam) - parent_score
        )
        gains[~feasible] = -np.inf
        k = int(np.argmax(gains))
        # strict comparisons keep the first feature / lowest threshold on ties
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            cut = cuts[k]
            threshold = 0.5 * (xs_sorted[cut] + xs_sorted[cut + 1])
            best = (feature, threshold, None)
    if best is None:
        return leaf
    feature, threshold, _ = best
    goes_left = x[idx, feature] < threshold
    node = _Node(feature=feature, threshold=threshold)
    node.left = _build_tree(x, g, h, idx[goes_left], depth + 1, config)
    node.right = _build_tree(x, g, h, idx[~goes_left], depth + 1, config)
    return node


def train_gbt(ts: WeightedTrainingSet, config: GbtConfig) -> GbtClassifier:
    """Fit the boosted-tree model on a weighted training set.

    Training loss over the original samples is recorded after every
    round; a round whose tree would increase it is discarded, so the
    recorded sequence is non-increasing and the final model is never
    worse than the untrained one.

    Raises
    ------
    DegenerateTrainingError
        If no sample has a positive ``pos_weight``.
    """
    pos_w = ts.pos_weights
    neg_w = ts.neg_weights_or_ones()
    if not np.any(pos_w > 0):
        raise DegenerateTrainingError("training requires at least one positive weight")

    neg_rows = np.nonzero(neg_w > 0)[0]
    pos_rows = np.nonzero(pos_w > 0)[0]
    x_inst = np.concatenate([ts.points[neg_rows], ts.points[pos_rows]])
    y_inst = np.concatenate([np.zeros(neg_rows.size), np.ones(pos_rows.size)])
    w_inst = np.concatenate([neg_w[neg_rows], pos_w[pos_rows]])

    model = GbtClassifier(ts.space, [])
    f_inst = np.full(x_inst.shape[0], model.base_score)
    f_orig = np.full(ts.n, model.base_score)
    loss = classification_loss(
        np.clip(_sigmoid(f_orig), PROB_CLIP, 1 - PROB_CLIP), pos_w, neg_w
    )
    model.round_losses.append(loss)
    all_idx = np.arange(x_inst.shape[0])
    for _ in range(config.rounds):
        p = _sigmoid(f_inst)
        grad = w_inst * (p - y_inst)
        hess = w_inst * p * (1.0 - p)
        tree = _build_tree(x_inst, grad, hess, all_idx, 0, config)
        new_f_orig = f_orig + _tree_margins(tree, ts.points)
        new_loss = classification_loss(
            np.clip(_sigmoid(new_f_orig), PROB_CLIP, 1 - PROB_CLIP), pos_w, neg_w
        )
        if new_loss > loss:
            model.round_losses.append(loss)
            continue
        model.trees.append(tree)
        f_inst += _tree_margins(tree, x_inst)
        f_orig = new_f_orig
        loss = new_loss
        model.round_losses.append(loss)
    return model
