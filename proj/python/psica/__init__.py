from ._core import (
    DataError,
    Dataset,
    FormatError,
    Tree,
    estimate_probabilities,
    evaluate,
    fit,
    grow,
    relevant_features,
    simulate,
)

__all__ = [
    "DataError",
    "Dataset",
    "FormatError",
    "Tree",
    "estimate_probabilities",
    "evaluate",
    "fit",
    "grow",
    "relevant_features",
    "simulate",
]
