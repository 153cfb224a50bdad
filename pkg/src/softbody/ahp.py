"""Cost-value requirements prioritization via pairwise comparison (AHP).

Priorities are extracted with the approximate method: divide each column
by its sum, then average across each row.  Matrices use the odd 1..9
preference scale with reciprocal lower halves; CSV inputs accept entries
like ``1/7``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import IO, Union

import numpy as np

from .errors import LabelMismatch, NonPositiveEntry, NotReciprocal, NotSquare, ParseError

RECIPROCITY_RTOL = 1e-9


@dataclass(frozen=True)
class ComparisonMatrix:
    """Reciprocal pairwise comparison matrix over labelled items."""

    labels: tuple
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=np.float64))

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class PriorityVector:
    labels: tuple
    weights: np.ndarray

    def as_dict(self) -> dict:
        return {label: float(w) for label, w in zip(self.labels, self.weights)}


@dataclass(frozen=True)
class CostValuePoint:
    label: str
    value: float
    cost: float


def validate(matrix: ComparisonMatrix) -> None:
    """Reject non-square, non-positive or non-reciprocal matrices."""
    entries = matrix.entries
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise NotSquare(f"matrix must be square, got shape {entries.shape}")
    if entries.shape[0] != len(matrix.labels):
        raise NotSquare(
            f"{len(matrix.labels)} labels for a {entries.shape[0]}x{entries.shape[1]} matrix"
        )
    if not (entries > 0).all():
        raise NonPositiveEntry("all comparison entries must be positive")
    n = entries.shape[0]
    for i in range(n):
        if entries[i, i] != 1.0:
            raise NotReciprocal(f"diagonal entry [{i}][{i}] must be 1, got {entries[i, i]!r}")
        for j in range(i + 1, n):
            expected = 1.0 / entries[i, j]
            if abs(entries[j, i] - expected) > RECIPROCITY_RTOL * abs(expected):
                raise NotReciprocal(
                    f"entry [{j}][{i}]={entries[j, i]!r} is not the reciprocal of "
                    f"[{i}][{j}]={entries[i, j]!r}"
                )


def normalize(matrix: ComparisonMatrix) -> np.ndarray:
    """Each entry divided by its column sum; columns of the result sum to 1."""
    validate(matrix)
    return matrix.entries / matrix.entries.sum(axis=0, keepdims=True)


def priority_vector(matrix: ComparisonMatrix) -> PriorityVector:
    """Row means of the normalized matrix; weights sum to 1."""
    weights = normalize(matrix).mean(axis=1)
    return PriorityVector(labels=matrix.labels, weights=weights)


def cost_value_points(value: PriorityVector, cost: PriorityVector) -> list:
    """Pair each item's value weight (y) with its cost weight (x)."""
    if tuple(value.labels) != tuple(cost.labels):
        raise LabelMismatch(
            f"value labels {value.labels} do not match cost labels {cost.labels}"
        )
    return [
        CostValuePoint(label=label, value=float(v), cost=float(c))
        for label, v, c in zip(value.labels, value.weights, cost.weights)
    ]


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------


def _parse_entry(text: str) -> float:
    try:
        return float(Fraction(text.replace(" ", "")))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"matrix entry {text!r} is not a number or fraction") from None


def load_matrix_csv(source: Union[str, Path, IO]) -> ComparisonMatrix:
    """Matrix CSV: first row and first column carry the labels."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    else:
        rows = list(csv.reader(source))
    rows = [row for row in rows if any(cell.strip() for cell in row)]
    if len(rows) < 2:
        raise ParseError("matrix CSV needs a header row and at least one data row")
    labels = [cell.strip() for cell in rows[0][1:]]
    entries = []
    for row in rows[1:]:
        if len(row) != len(labels) + 1:
            raise ParseError(
                f"row {row[:1]} has {len(row) - 1} entries, expected {len(labels)}"
            )
        entries.append([_parse_entry(cell) for cell in row[1:]])
    row_labels = [row[0].strip() for row in rows[1:]]
    if row_labels != labels:
        raise ParseError(f"row labels {row_labels} do not match column labels {labels}")
    return ComparisonMatrix(labels=tuple(labels), entries=np.array(entries))


def write_points_csv(points, sink: Union[str, Path, IO]) -> None:
    """Scatter data for the cost-value chart, 2 decimals per coordinate."""
    buffer = io.StringIO()
    buffer.write("label,cost,value\n")
    for point in points:
        buffer.write(f"{point.label},{point.cost:.2f},{point.value:.2f}\n")
    text = buffer.getvalue()
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        sink.write(text)
