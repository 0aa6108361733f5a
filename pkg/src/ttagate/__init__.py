"""Test-time augmentation gateway and evaluation harness for black-box text classifiers."""

from .aggregate import VerbalizerTable, mean_aggregate, verbalize, vote_aggregate
from .core import ClassDistribution, LabelSpace, Prediction, TestInput, argmax_class, normalize
from .esa import EntropyGate, calibrate_threshold, entropy, fbeta_score, gate
from .exemplars import ExemplarSet, sample_exemplars

__version__ = "0.1.0"

__all__ = [
    "ClassDistribution",
    "EntropyGate",
    "ExemplarSet",
    "LabelSpace",
    "Prediction",
    "TestInput",
    "VerbalizerTable",
    "argmax_class",
    "calibrate_threshold",
    "entropy",
    "fbeta_score",
    "gate",
    "mean_aggregate",
    "normalize",
    "sample_exemplars",
    "verbalize",
    "vote_aggregate",
]
