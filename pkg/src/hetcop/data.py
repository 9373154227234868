"""Mixed-type multi-group dataset container and file ingestion."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

DISCRETE_KINDS = ("count", "ordinal", "binary")
MISSING_MARKERS = {"", "na", "nan"}


class DataError(ValueError):
    """Raised on malformed input data or schema violations."""


@dataclass(frozen=True)
class VariableKind:
    """Marginal family tag for one variable.

    tag is one of 'continuous', 'count', 'ordinal', 'binary'; levels is the
    category count for ordinal/binary variables and None otherwise.
    """

    tag: str
    levels: int | None = None

    def __post_init__(self):
        if self.tag not in ("continuous", "count", "ordinal", "binary"):
            raise DataError(f"unknown variable kind {self.tag!r}")
        if self.tag == "binary":
            if self.levels not in (None, 2):
                raise DataError("binary variables have exactly 2 levels")
            object.__setattr__(self, "levels", 2)
        elif self.tag == "ordinal":
            if self.levels is None or self.levels < 2:
                raise DataError("ordinal variables need levels >= 2")
        elif self.levels is not None:
            raise DataError(f"{self.tag} variables carry no levels")

    @property
    def is_discrete(self) -> bool:
        return self.tag in DISCRETE_KINDS


@dataclass(frozen=True)
class MixedDataset:
    """K groups of observations over p shared variables.

    groups[k] is an (n_k, p) float array with NaN marking missing cells.
    Immutable after construction; safe to share across readers.
    """

    groups: tuple[np.ndarray, ...]
    kinds: tuple[VariableKind, ...]
    group_labels: tuple[str, ...]
    variables: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.groups) < 1:
            raise DataError("need at least one group")
        p = len(self.kinds)
        if not self.variables:
            object.__setattr__(
                self, "variables", tuple(f"V{j}" for j in range(p))
            )
        if len(self.variables) != p:
            raise DataError("variable names do not match kind count")
        if len(self.group_labels) != len(self.groups):
            raise DataError("group labels do not match group count")
        blocks = []
        for k, block in enumerate(self.groups):
            block = np.asarray(block, dtype=float)
            if block.ndim != 2 or block.shape[1] != p:
                raise DataError(f"group {k} does not have {p} columns")
            if block.shape[0] < 1:
                raise DataError(f"group {self.group_labels[k]!r} has zero rows")
            block = block.copy()
            block.flags.writeable = False
            blocks.append(block)
        object.__setattr__(self, "groups", tuple(blocks))
        self._validate_cells()

    def _validate_cells(self):
        for j, kind in enumerate(self.kinds):
            distinct_somewhere = False
            for k, block in enumerate(self.groups):
                col = block[:, j]
                obs = col[~np.isnan(col)]
                if kind.is_discrete and obs.size:
                    if not np.all(obs == np.floor(obs)):
                        raise DataError(
                            f"column {self.variables[j]!r} declared {kind.tag} "
                            "but contains non-integer values"
                        )
                    if kind.tag in ("ordinal", "binary"):
                        if obs.min() < 0 or obs.max() > kind.levels - 1:
                            raise DataError(
                                f"column {self.variables[j]!r}: value out of "
                                f"declared range 0..{kind.levels - 1}"
                            )
                    elif obs.min() < 0:
                        raise DataError(
                            f"column {self.variables[j]!r}: negative count"
                        )
                if np.unique(obs).size >= 2:
                    distinct_somewhere = True
            if not distinct_somewhere:
                raise DataError(
                    f"column {self.variables[j]!r} is constant in every group"
                )

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def n_variables(self) -> int:
        return len(self.kinds)

    @property
    def group_sizes(self) -> tuple[int, ...]:
        return tuple(block.shape[0] for block in self.groups)


def _parse_cell(raw: str) -> float:
    if raw.strip().lower() in MISSING_MARKERS:
        return math.nan
    try:
        return float(raw)
    except ValueError as exc:
        raise DataError(f"cannot parse cell {raw!r}") from exc


def _detect_delimiter(header_line: str) -> str:
    return "\t" if header_line.count("\t") > header_line.count(",") else ","


def load_schema(path) -> dict[str, VariableKind]:
    """Read a JSON schema mapping column name -> {kind, levels?}."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    schema = {}
    for name, entry in raw.items():
        schema[name] = VariableKind(entry["kind"], entry.get("levels"))
    return schema


def save_schema(schema: dict[str, VariableKind], path) -> None:
    out = {}
    for name, kind in schema.items():
        entry = {"kind": kind.tag}
        if kind.levels is not None:
            entry["levels"] = kind.levels
        out[name] = entry
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path, schema: dict[str, VariableKind], group_column: str) -> MixedDataset:
    """Load a delimited text file into a MixedDataset.

    Rows are partitioned into groups by the value of ``group_column`` in
    first-appearance order.  Missing markers ('', 'NA', 'NaN', any case)
    become missing cells.
    """
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            raise DataError(f"{path}: empty file")
        delim = _detect_delimiter(first)
        fh.seek(0)
        reader = csv.reader(fh, delimiter=delim)
        header = next(reader)
        rows = [row for row in reader if row and any(c.strip() for c in row)]

    if group_column not in header:
        raise DataError(f"group column {group_column!r} not in header")
    for name in schema:
        if name not in header:
            raise DataError(f"declared column {name!r} not in file")

    gc_idx = header.index(group_column)
    variables = [name for name in header if name != group_column and name in schema]
    col_idx = [header.index(name) for name in variables]
    kinds = tuple(schema[name] for name in variables)

    labels: list[str] = []
    grouped: dict[str, list[list[float]]] = {}
    for row in rows:
        if len(row) != len(header):
            raise DataError("row width does not match header")
        label = row[gc_idx]
        if label not in grouped:
            grouped[label] = []
            labels.append(label)
        grouped[label].append([_parse_cell(row[i]) for i in col_idx])

    if not labels:
        raise DataError(f"{path}: no data rows")
    groups = tuple(np.array(grouped[lab], dtype=float) for lab in labels)
    return MixedDataset(
        groups=groups,
        kinds=kinds,
        group_labels=tuple(labels),
        variables=tuple(variables),
    )


def save_dataset(dataset: MixedDataset, path, group_column: str = "group") -> None:
    """Write a MixedDataset back to CSV (missing cells as NA)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([group_column, *dataset.variables])
        for label, block in zip(dataset.group_labels, dataset.groups):
            for row in block:
                cells = []
                for kind, value in zip(dataset.kinds, row):
                    if math.isnan(value):
                        cells.append("NA")
                    elif kind.is_discrete:
                        cells.append(str(int(value)))
                    else:
                        cells.append(repr(float(value)))
                writer.writerow([label, *cells])


def infer_variable_kinds(raw_columns) -> list[VariableKind]:
    """Heuristic kind inference for columns of observed values.

    Integer columns forming a contiguous range starting at 0 or 1 with at
    most 10 distinct values are ordinal; {0,1} columns are binary; other
    integer columns are count; anything else is continuous.  Advisory only,
    an explicit schema always overrides.
    """
    kinds = []
    for col in raw_columns:
        values = np.asarray(col, dtype=float)
        values = values[~np.isnan(values)]
        if values.size == 0:
            raise DataError("cannot infer kind of an empty column")
        if np.all(values == np.floor(values)):
            distinct = np.unique(values)
            lo, hi = distinct[0], distinct[-1]
            if lo >= 0 and hi <= 1:
                kinds.append(VariableKind("binary"))
            elif (
                distinct.size <= 10
                and 0 <= lo <= 1
                and hi - lo + 1 == distinct.size
            ):
                kinds.append(VariableKind("ordinal", levels=int(hi) + 1))
            elif lo >= 0:
                kinds.append(VariableKind("count"))
            else:
                kinds.append(VariableKind("continuous"))
        else:
            kinds.append(VariableKind("continuous"))
    return kinds
