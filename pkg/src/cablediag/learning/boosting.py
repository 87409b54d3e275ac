"""Boosted ensembles on axis-aligned decision trees: AdaBoost over
depth-1 stumps for binary labels, and least-squares gradient boosting
(L2Boost) over shallow regression trees.

Both trainers are deterministic: split candidates are midpoints between
consecutive distinct sorted feature values, scanned in (feature,
threshold) order, and ties keep the first candidate.  Stage-wise
training statistics are recorded on the model so the classical
monotonicity identities can be asserted after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ERR_CLAMP = 1e-12   # stand-in for a zero weighted error in the stage weight


@dataclass(frozen=True)
class Stump:
    """polarity if x[feature] > threshold else -polarity."""
    feature: int
    threshold: float
    polarity: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        return np.where(x[:, self.feature] > self.threshold,
                        self.polarity, -self.polarity)


@dataclass(frozen=True)
class AdaBoostModel:
    kind = "adaboost"
    stumps: tuple[Stump, ...]
    stage_weights: tuple[float, ...]
    stage_errors: tuple[float, ...]

    def score(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        out = np.zeros(len(x))
        for stump, alpha in zip(self.stumps, self.stage_weights):
            out += alpha * stump.predict(x)
        return out

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.where(self.score(x) >= 0, 1.0, -1.0)


def _best_stump(x, y, w):
    """Minimum weighted-error stump; scan order fixes all ties."""
    best = (np.inf, 0, 0.0, 1.0)     # error, feature, threshold, polarity
    for f in range(x.shape[1]):
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        wy = np.where(y[order] > 0, w[order], 0.0)
        wn = np.where(y[order] > 0, 0.0, w[order])
        cum_pos = np.cumsum(wy)
        cum_neg = np.cumsum(wn)
        total_neg = cum_neg[-1]
        # cut after position i: predict +1 strictly above the midpoint
        cuts = np.flatnonzero(xs[1:] > xs[:-1])
        thresholds = np.concatenate(([xs[0] - 1.0],
                                     0.5 * (xs[cuts] + xs[cuts + 1])))
        err_plus = np.concatenate(([total_neg],
                                   cum_pos[cuts] + (total_neg - cum_neg[cuts])))
        for errs, pol in ((err_plus, 1.0), (1.0 - err_plus, -1.0)):
            i = int(np.argmin(errs))
            if errs[i] < best[0] - 1e-15:
                best = (float(errs[i]), f, float(thresholds[i]), pol)
    return best


def train_adaboost(x: np.ndarray, y: np.ndarray, rounds: int = 100) -> AdaBoostModel:
    """AdaBoost with stage weight 0.5*ln((1-err)/err); stops early when the
    best stump's weighted error reaches 0.5 (no edge left) or 0."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.ndim != 2:
        raise ValueError("x must be 2-D")
    if set(np.unique(y)) - {1.0, -1.0}:
        raise ValueError("labels must be +-1")
    if len(set(y)) < 2:
        raise ValueError("training set needs both classes")
    n = len(y)
    w = np.full(n, 1.0 / n)
    stumps: list[Stump] = []
    alphas: list[float] = []
    errors: list[float] = []
    for _ in range(rounds):
        err, f, thr, pol = _best_stump(x, y, w)
        if err >= 0.5 - 1e-12:
            break
        stump = Stump(feature=f, threshold=thr, polarity=pol)
        e = max(err, _ERR_CLAMP)
        alpha = 0.5 * np.log((1.0 - e) / e)
        stumps.append(stump)
        alphas.append(float(alpha))
        errors.append(float(err))
        if err <= _ERR_CLAMP:
            break
        w *= np.exp(-alpha * y * stump.predict(x))
        w /= w.sum()
    return AdaBoostModel(stumps=tuple(stumps), stage_weights=tuple(alphas),
                         stage_errors=tuple(errors))


@dataclass(frozen=True)
class Tree:
    """Flat-array binary regression tree; feature -1 marks a leaf."""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        node = np.zeros(len(x), dtype=int)
        # depth is tiny; descend all rows one level at a time
        for _ in range(len(self.feature)):
            at_leaf = self.feature[node] < 0
            if at_leaf.all():
                break
            live = ~at_leaf
            idx = node[live]
            go_left = x[live, self.feature[idx]] <= self.threshold[idx]
            node[live] = np.where(go_left, self.left[idx], self.right[idx])
        return self.value[node]


def _fit_tree(x, y, depth: int) -> Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def build(rows: np.ndarray, level: int) -> int:
        node = new_node()
        r = y[rows]
        value[node] = float(r.mean())
        if level >= depth or len(rows) < 2:
            return node
        parent_sse = float(np.sum((r - r.mean()) ** 2))
        if parent_sse <= 1e-24 * len(rows):
            return node
        best = (parent_sse - 1e-12 * max(1.0, parent_sse), -1, 0.0)
        for f in range(x.shape[1]):
            order = np.argsort(x[rows, f], kind="stable")
            xs = x[rows[order], f]
            rs = r[order]
            cuts = np.flatnonzero(xs[1:] > xs[:-1])
            if len(cuts) == 0:
                continue
            csum = np.cumsum(rs)
            csq = np.cumsum(rs**2)
            nl = cuts + 1.0
            nr = len(rs) - nl
            sse_l = csq[cuts] - csum[cuts] ** 2 / nl
            sse_r = (csq[-1] - csq[cuts]) - (csum[-1] - csum[cuts]) ** 2 / nr
            sse = sse_l + sse_r
            i = int(np.argmin(sse))
            if sse[i] < best[0] - 1e-15:
                best = (float(sse[i]), f, float(0.5 * (xs[cuts[i]] + xs[cuts[i] + 1])))
        if best[1] < 0:
            return node
        f, thr = best[1], best[2]
        go_left = x[rows, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = build(rows[go_left], level + 1)
        right[node] = build(rows[~go_left], level + 1)
        return node

    build(np.arange(len(y)), 0)
    return Tree(feature=np.array(feature, dtype=int),
                threshold=np.array(threshold, float),
                left=np.array(left, dtype=int),
                right=np.array(right, dtype=int),
                value=np.array(value, float))


@dataclass(frozen=True)
class L2BoostModel:
    kind = "l2boost"
    stage0: float
    shrinkage: float
    trees: tuple[Tree, ...]
    train_mse: tuple[float, ...] = field(default=())

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        out = np.full(len(x), self.stage0)
        for tree in self.trees:
            out += self.shrinkage * tree.predict(x)
        return out


def train_l2boost(x: np.ndarray, y: np.ndarray, stages: int = 200,
                  shrinkage: float = 0.1, depth: int = 3) -> L2BoostModel:
    """Stage 0 is mean(y); each stage fits a depth-limited tree to the
    current residuals and is added with the shrinkage factor."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("x must be 2-D and aligned with y")
    if len(y) < 1:
        raise ValueError("need at least one sample")
    if not 0 < shrinkage <= 1:
        raise ValueError("shrinkage must be in (0, 1]")
    stage0 = float(y.mean())
    current = np.full(len(y), stage0)
    trees: list[Tree] = []
    mse: list[float] = [float(np.mean((y - current) ** 2))]
    floor = 1e-20 * max(1.0, float(np.mean(y**2)))
    for _ in range(stages):
        if mse[-1] <= floor:
            break
        tree = _fit_tree(x, y - current, depth)
        trees.append(tree)
        current += shrinkage * tree.predict(x)
        mse.append(float(np.mean((y - current) ** 2)))
    return L2BoostModel(stage0=stage0, shrinkage=shrinkage, trees=tuple(trees),
                        train_mse=tuple(mse))
