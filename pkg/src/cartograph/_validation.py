"""Lightweight argument checks shared by the public API."""

from __future__ import annotations

import math
import operator
from typing import Iterable


def check_int(value, name: str, minimum: int | None = None, maximum: int | None = None) -> int:
    """Coerce to a plain int (accepts numpy integers) and range-check."""
    if isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got bool")
    try:
        value = operator.index(value)
    except TypeError:
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}") from None
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_real(
    value,
    name: str,
    minimum: float | None = None,
    maximum: float | None = None,
    *,
    exclusive_min: bool = False,
) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}") from None
    if math.isnan(value):
        raise ValueError(f"{name} must not be NaN")
    if minimum is not None:
        if exclusive_min and value <= minimum:
            raise ValueError(f"{name} must be > {minimum}, got {value}")
        if not exclusive_min and value < minimum:
            raise ValueError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_probability(value, name: str) -> float:
    return check_real(value, name, 0.0, 1.0)


def check_fraction(value, name: str, *, allow_zero: bool = False) -> float:
    """A fraction in (0, 1], or [0, 1] when allow_zero is set."""
    return check_real(value, name, 0.0, 1.0, exclusive_min=not allow_zero)


def check_class_index(value, num_classes: int, name: str) -> int:
    value = check_int(value, name, minimum=0)
    if value >= num_classes:
        raise ValueError(f"{name} must be < num_classes={num_classes}, got {value}")
    return value


def check_choice(value, options: Iterable[str], name: str) -> str:
    options = tuple(options)
    if value not in options:
        raise ValueError(f"{name} must be one of {options}, got {value!r}")
    return value
