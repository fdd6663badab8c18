"""
CSV ingestion and export of measures, allocations and scheme tables.

Every CSV has a mandatory header; numeric columns are coordinates and the
column named ``weight`` is reserved for probability weights.
"""
import hashlib
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from dualchoice.core.errors import DatasetNotFound, DimensionMismatch, DomainError, ParseError
from dualchoice.models.measure import DiscreteMeasure, from_samples, uniform_grid
from dualchoice.services.evaluate import WeightScheme, tabulated_scheme
from dualchoice.services.inequality import Allocation

logger = logging.getLogger(__name__)

WEIGHT_COLUMN = "weight"
PHI_PREFIX = "phi_"
GRID_PREFIX = "uniform-grid"

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Raw numeric content of a CSV file, rows in file order"""
    path: str
    columns: List[str]
    rows: NDArray[np.float64]
    weights: Optional[NDArray[np.float64]]
    digest: str

    def to_measure(self) -> DiscreteMeasure:
        return from_samples(self.rows, self.weights)

    def to_allocation(self) -> Allocation:
        if self.weights is not None:
            raise DomainError("allocations weight individuals equally; drop the weight column")
        return Allocation(matrix=self.rows, labels=list(self.columns))


def _to_float(cell: str, line: int, column: str) -> float:
    try:
        value = float(cell)
    except (TypeError, ValueError):
        raise ParseError(f"cannot read {cell!r} as a number", line=line, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {cell!r}", line=line, column=column)
    return value


def read_dataset(path: PathLike) -> Dataset:
    """Read a CSV into rows and optional weights, reporting bad cells by line and column"""
    file = Path(path)
    if not file.is_file():
        raise DatasetNotFound(f"dataset {str(file)!r} not found")
    content = file.read_bytes()
    try:
        frame = pd.read_csv(file, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise ParseError(f"{str(file)!r} is empty", line=1) from None
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseError(f"{str(file)!r} is not a valid CSV: {exc}") from None

    columns = [str(c).strip() for c in frame.columns]
    coordinates = [c for c in columns if c != WEIGHT_COLUMN]
    if not coordinates:
        raise ParseError(f"{str(file)!r} has no coordinate column", line=1)
    if frame.shape[0] == 0:
        raise ParseError(f"{str(file)!r} has a header but no rows", line=2)

    values = np.empty((frame.shape[0], len(columns)))
    for row_index, row in enumerate(frame.itertuples(index=False, name=None)):
        for col_index, cell in enumerate(row):
            # line 1 is the header
            values[row_index, col_index] = _to_float(str(cell).strip(), row_index + 2, columns[col_index])

    weights = None
    if WEIGHT_COLUMN in columns:
        weights = values[:, columns.index(WEIGHT_COLUMN)]
    rows = values[:, [columns.index(c) for c in coordinates]]
    logger.info("Read %d rows x %d columns from %s", rows.shape[0], rows.shape[1], file)
    return Dataset(
        path=str(file),
        columns=coordinates,
        rows=rows,
        weights=weights,
        digest=hashlib.sha256(content).hexdigest(),
    )


def parse_dataset(path: PathLike, kind: str = "measure") -> Union[DiscreteMeasure, Allocation]:
    """Validated measure (or allocation for kind="allocation") from a CSV file"""
    dataset = read_dataset(path)
    if kind == "allocation":
        return dataset.to_allocation()
    if kind == "measure":
        return dataset.to_measure()
    raise DomainError(f"unknown dataset kind {kind!r}")


def write_dataset(measure: DiscreteMeasure, path: PathLike, columns: Optional[Sequence[str]] = None) -> None:
    """Write atoms and weights as CSV with 17 significant digits"""
    names = list(columns) if columns is not None else [f"x{i + 1}" for i in range(measure.dim)]
    if len(names) != measure.dim:
        raise DimensionMismatch(f"{len(names)} column names for d = {measure.dim}")
    frame = pd.DataFrame(measure.atoms, columns=names)
    frame[WEIGHT_COLUMN] = measure.weights
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def build_reference(spec: str) -> Tuple[DiscreteMeasure, str]:
    """
    Reference measure from ``uniform-grid:D:K`` or a CSV path. Returns the
    measure and a digest identifying it.
    """
    if spec.startswith(GRID_PREFIX):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ParseError(f"expected {GRID_PREFIX}:D:K, got {spec!r}")
        try:
            d, k = int(parts[1]), int(parts[2])
        except ValueError:
            raise ParseError(f"grid sizes must be integers in {spec!r}") from None
        return uniform_grid(d, k), hashlib.sha256(spec.encode()).hexdigest()
    dataset = read_dataset(spec)
    return dataset.to_measure(), dataset.digest


def read_phi_table(path: PathLike) -> Tuple[WeightScheme, str]:
    """
    General weight scheme from one CSV: coordinate columns, optional
    ``weight``, and one ``phi_<name>`` column per coordinate.
    """
    dataset = read_dataset(path)
    phi_columns = [c for c in dataset.columns if c.startswith(PHI_PREFIX)]
    coordinates = [c for c in dataset.columns if not c.startswith(PHI_PREFIX)]
    if len(phi_columns) != len(coordinates):
        raise DimensionMismatch(f"{len(phi_columns)} phi columns for {len(coordinates)} coordinates")
    atoms = dataset.rows[:, [dataset.columns.index(c) for c in coordinates]]
    phi = dataset.rows[:, [dataset.columns.index(c) for c in phi_columns]]
    return tabulated_scheme(atoms, phi, dataset.weights), dataset.digest


def read_column(path: PathLike) -> Tuple[NDArray[np.float64], str]:
    """Single-column table (e.g. tabulated f')"""
    dataset = read_dataset(path)
    if dataset.rows.shape[1] != 1:
        raise DimensionMismatch(f"expected one column, got {dataset.rows.shape[1]}")
    return dataset.rows[:, 0], dataset.digest
