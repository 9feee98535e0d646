"""Grid-based wildfire risk modelling: Python bindings over the C++ core."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _wildfire
from ._wildfire import WildfireError, label_dynamic, label_static

__all__ = [
    "WildfireError",
    "Model",
    "cross_validate",
    "fit",
    "label_dynamic",
    "label_static",
    "metrics",
    "run_cli",
    "smote",
    "synthetic_dataset",
]

RISK_NAMES = ("low", "medium", "high")


def run_cli(*args: str) -> tuple[int, str, str]:
    """Run the command-line tool in-process; returns (exit code, stdout, stderr)."""
    return _wildfire.run_cli([str(a) for a in args])


def metrics(predictions: Sequence[int], truths: Sequence[int], classes: Sequence[int] = (0, 1)) -> dict:
    return json.loads(_wildfire.metrics_json(list(predictions), list(truths), list(classes)))


def smote(x, y, k_neighbors: int = 5, seed: int = 0):
    xs, ys, parents = _wildfire.smote(np.asarray(x, dtype=float), list(y), k_neighbors, seed)
    return np.asarray(xs), np.asarray(ys), parents


def synthetic_dataset(**config):
    """Planted-effect cell-year features and labels (see the `synth` command)."""
    x, y = _wildfire.synthetic_dataset(json.dumps(config))
    return np.asarray(x), np.asarray(y)


@dataclass(frozen=True)
class Model:
    document: str

    @classmethod
    def load(cls, path: str) -> "Model":
        with open(path, encoding="utf-8") as fh:
            doc = fh.read()
        model = cls(doc)
        model.hash  # validates the stored content hash
        return model

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.document)

    @property
    def hash(self) -> str:
        return _wildfire.model_hash(self.document)

    @property
    def info(self) -> dict:
        return json.loads(self.document)

    def predict(self, x) -> np.ndarray:
        return np.asarray(_wildfire.predict_raw(self.document, np.atleast_2d(np.asarray(x, dtype=float))))

    def predict_proba(self, x) -> np.ndarray:
        return np.asarray(_wildfire.predict_proba_raw(self.document, np.atleast_2d(np.asarray(x, dtype=float))))

    def risk_cells(self, x, kind: str = "pdsi_delta", parameter: float = 0.0) -> tuple[int, int]:
        """(baseline, treated) risk-cell counts for one scenario over raw rows."""
        return _wildfire.count_risk_cells(self.document, np.asarray(x, dtype=float), kind, parameter)


def fit(variant: str, x, y, seed: int, smote: bool = True) -> Model:
    return Model(_wildfire.fit_model_json(variant, np.asarray(x, dtype=float), list(y), seed, smote))


def cross_validate(variant: str, x, y, k: int = 5, seed: int = 0, smote: bool = True) -> dict:
    return json.loads(_wildfire.cross_validate_json(variant, np.asarray(x, dtype=float), list(y), k, seed, smote))
