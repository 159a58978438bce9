"""Input validation helpers shared by the estimators."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

STREAM_NAMES = ("init", "collaborate", "archive", "breed_scenario", "breed_mlco")


def check_vectors(X, space) -> np.ndarray:
    """Validate a 2-D array of flattened complete solutions against ``space``."""
    X = check_array(X, dtype=float, ensure_min_samples=0)
    if X.shape[1] != space.dimensionality:
        raise ValueError(f"X has {X.shape[1]} genes, space expects {space.dimensionality}")
    layout = space.layout
    for row in X:
        if not layout.contains(row):
            raise ValueError(f"vector {row.tolist()} lies outside the search space")
    return X


def check_verdicts(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"expected {n} verdicts, got shape {y.shape}")
    if not np.isin(y, (0, 1, True, False)).all():
        raise ValueError("verdicts must be boolean")
    return y.astype(bool)


def check_int(name, value, minimum=None, allow_none=False):
    if value is None and allow_none:
        return
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")


def check_real(name, value, low=None, high=None, low_open=False, high_open=False):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    if low is not None and (value < low or (low_open and value == low)):
        raise ValueError(f"{name} must be {'>' if low_open else '>='} {low}, got {value}")
    if high is not None and (value > high or (high_open and value == high)):
        raise ValueError(f"{name} must be {'<' if high_open else '<='} {high}, got {value}")


def check_choice(name, value, choices):
    if value not in choices:
        raise ValueError(f"{name} must be one of {choices}, got {value!r}")


def spawn_streams(random_state, names=STREAM_NAMES) -> dict[str, np.random.Generator]:
    """Independent per-purpose generators derived from one master seed."""
    if isinstance(random_state, np.random.Generator):
        seed = random_state.integers(2**63)
    else:
        seed = random_state
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}
