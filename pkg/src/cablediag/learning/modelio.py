"""Versioned on-disk model container.

A trained model is one JSON document: task id, ordered feature names,
standardizer statistics, algorithm parameters, and training metadata.
Every numeric array is little-endian float64, base64-encoded, and the
JSON is written with sorted keys and fixed separators so that save ->
load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boosting import AdaBoostModel, L2BoostModel, Stump, Tree
from .features import Standardizer
from .svm import SvcModel, SvrModel

FORMAT_NAME = "cablediag-model"
FORMAT_VERSION = 1

InnerModel = SvcModel | SvrModel | AdaBoostModel | L2BoostModel


@dataclass(frozen=True)
class TrainedModel:
    """A fitted predictor bound to its task, feature order, and the
    training-set standardization it expects."""
    task_id: str
    feature_names: tuple[str, ...]
    standardizer: Standardizer
    model: InnerModel
    metadata: dict

    @property
    def kind(self) -> str:
        return self.model.kind

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.model.predict(self.standardizer.transform(np.asarray(x, float)))

    def decision(self, x: np.ndarray) -> np.ndarray:
        """Real-valued score (classifiers only)."""
        z = self.standardizer.transform(np.asarray(x, float))
        if isinstance(self.model, SvcModel):
            return self.model.decision(z)
        if isinstance(self.model, AdaBoostModel):
            return self.model.score(z)
        raise TypeError(f"{self.kind} model has no decision score")


def _encode(a: np.ndarray) -> dict:
    arr = np.ascontiguousarray(np.asarray(a, float), dtype="<f8")
    return {"shape": list(arr.shape),
            "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def _decode(d: dict) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(d["data"]), dtype="<f8")
    return arr.reshape(d["shape"]).copy()


def _tree_doc(tree: Tree) -> dict:
    return {"feature": _encode(tree.feature), "threshold": _encode(tree.threshold),
            "left": _encode(tree.left), "right": _encode(tree.right),
            "value": _encode(tree.value)}


def _tree_from_doc(doc: dict) -> Tree:
    return Tree(feature=_decode(doc["feature"]).astype(int),
                threshold=_decode(doc["threshold"]),
                left=_decode(doc["left"]).astype(int),
                right=_decode(doc["right"]).astype(int),
                value=_decode(doc["value"]))


def _params_doc(model: InnerModel) -> dict:
    if isinstance(model, SvcModel):
        return {"kernel": model.kernel, "gamma": model.gamma, "c": model.c,
                "bias": model.bias, "kkt_violation": model.kkt_violation,
                "support_x": _encode(model.support_x),
                "dual_coef": _encode(model.dual_coef)}
    if isinstance(model, SvrModel):
        return {"kernel": model.kernel, "gamma": model.gamma, "c": model.c,
                "epsilon": model.epsilon, "bias": model.bias,
                "y_mean": model.y_mean, "y_scale": model.y_scale,
                "kkt_violation": model.kkt_violation,
                "support_x": _encode(model.support_x),
                "dual_coef": _encode(model.dual_coef)}
    if isinstance(model, AdaBoostModel):
        return {"feature": _encode([s.feature for s in model.stumps]),
                "threshold": _encode([s.threshold for s in model.stumps]),
                "polarity": _encode([s.polarity for s in model.stumps]),
                "stage_weights": _encode(model.stage_weights),
                "stage_errors": _encode(model.stage_errors)}
    if isinstance(model, L2BoostModel):
        return {"stage0": model.stage0, "shrinkage": model.shrinkage,
                "train_mse": _encode(model.train_mse),
                "trees": [_tree_doc(t) for t in model.trees]}
    raise TypeError(f"unknown model type {type(model).__name__}")


def _params_load(kind: str, doc: dict) -> InnerModel:
    if kind == "svc":
        return SvcModel(kernel=doc["kernel"], gamma=doc["gamma"], c=doc["c"],
                        support_x=_decode(doc["support_x"]),
                        dual_coef=_decode(doc["dual_coef"]), bias=doc["bias"],
                        kkt_violation=doc["kkt_violation"])
    if kind == "svr":
        return SvrModel(kernel=doc["kernel"], gamma=doc["gamma"], c=doc["c"],
                        epsilon=doc["epsilon"],
                        support_x=_decode(doc["support_x"]),
                        dual_coef=_decode(doc["dual_coef"]), bias=doc["bias"],
                        y_mean=doc["y_mean"], y_scale=doc["y_scale"],
                        kkt_violation=doc["kkt_violation"])
    if kind == "adaboost":
        stumps = tuple(Stump(feature=int(f), threshold=float(t), polarity=float(p))
                       for f, t, p in zip(_decode(doc["feature"]),
                                          _decode(doc["threshold"]),
                                          _decode(doc["polarity"])))
        return AdaBoostModel(stumps=stumps,
                             stage_weights=tuple(_decode(doc["stage_weights"])),
                             stage_errors=tuple(_decode(doc["stage_errors"])))
    if kind == "l2boost":
        return L2BoostModel(stage0=doc["stage0"], shrinkage=doc["shrinkage"],
                            trees=tuple(_tree_from_doc(t) for t in doc["trees"]),
                            train_mse=tuple(_decode(doc["train_mse"])))
    raise ValueError(f"unknown model kind {kind!r}")


def model_to_json(tm: TrainedModel) -> str:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": tm.kind,
        "task_id": tm.task_id,
        "feature_names": list(tm.feature_names),
        "standardizer": {"mean": _encode(tm.standardizer.mean),
                         "std": _encode(tm.standardizer.std),
                         "zero_variance": _encode(tm.standardizer.zero_variance)},
        "params": _params_doc(tm.model),
        "metadata": tm.metadata,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_NAME:
        raise ValueError("not a model file")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    std = Standardizer(mean=_decode(doc["standardizer"]["mean"]),
                       std=_decode(doc["standardizer"]["std"]),
                       zero_variance=_decode(doc["standardizer"]["zero_variance"]).astype(bool))
    return TrainedModel(task_id=doc["task_id"],
                        feature_names=tuple(doc["feature_names"]),
                        standardizer=std,
                        model=_params_load(doc["kind"], doc["params"]),
                        metadata=doc["metadata"])


def save_model(tm: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(tm) + "\n", encoding="ascii")


def load_model(path: str | Path) -> TrainedModel:
    return model_from_json(Path(path).read_text(encoding="ascii"))
