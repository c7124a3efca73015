"""Class-frequency tables over label-map collections, and version diffs."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import SchemaError

# Fixed id -> name order used by the dataset's published frequency tables;
# label id = position + 1, id 0 is unlabeled.
CLASS_NAMES = ("Road", "Road Marks", "Vegetation", "Painted Metal", "Sky",
               "Concrete", "Pedestrian", "Water", "Unpainted Metal", "Glass")
N_CLASSES = len(CLASS_NAMES)


def _round2(numerator: int, denominator: int) -> float:
    """100 * numerator / denominator to 2 decimals, half-up, exact in Decimal."""
    if denominator == 0:
        return 0.0
    q = (Decimal(int(numerator)) * 100 / Decimal(int(denominator)))
    return float(q.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ClassFrequencyTable:
    """Labeled-pixel totals per class with shares of the labeled total."""

    counts: np.ndarray
    names: tuple[str, ...] = CLASS_NAMES

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or c.size != len(self.names):
            raise SchemaError(f"expected {len(self.names)} class counts, "
                              f"got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_counts(cls, counts, names: tuple[str, ...] = CLASS_NAMES):
        return cls(counts=np.asarray(counts, dtype=np.int64), names=tuple(names))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def percentages(self) -> np.ndarray:
        """Per-class share of the labeled total, percent, 2 decimals half-up."""
        t = self.total
        return np.array([_round2(int(c), t) for c in self.counts])

    def to_csv(self) -> str:
        header = ",".join(["", "Total"] + list(self.names))
        pixels = ",".join(["Pixels", str(self.total)]
                          + [str(int(c)) for c in self.counts])
        pct = ",".join(["%", "100"]
                       + [f"{p:.2f}" for p in self.percentages()])
        return "\n".join([header, pixels, pct]) + "\n"

    def to_text(self) -> str:
        cols = ["Total"] + list(self.names)
        vals = [str(self.total)] + [str(int(c)) for c in self.counts]
        pcts = ["100"] + [f"{p:.2f}" for p in self.percentages()]
        widths = [max(len(a), len(b), len(c)) for a, b, c in zip(cols, vals, pcts)]
        row = lambda label, cells: (f"{label:<8s}"
                                    + "  ".join(f"{c:>{w}s}"
                                                for c, w in zip(cells, widths)))
        return "\n".join([row("", cols), row("Pixels", vals),
                          row("%", pcts)]) + "\n"


def class_frequencies(maps, names: tuple[str, ...] = CLASS_NAMES
                      ) -> ClassFrequencyTable:
    """Count labeled pixels per class over a collection of label maps."""
    n = len(names)
    counts = np.zeros(n, dtype=np.int64)
    for m in maps:
        a = np.asarray(m)
        hist = np.bincount(a.ravel().astype(np.int64), minlength=n + 1)
        counts += hist[1:n + 1]
    return ClassFrequencyTable(counts=counts, names=tuple(names))


@dataclass(frozen=True)
class TableDelta:
    """Per-class and total change between two dataset versions."""

    names: tuple[str, ...]
    absolute: np.ndarray       # new - old counts per class
    relative_pct: np.ndarray   # 100 * (new - old) / old per class
    total_absolute: int
    total_relative_pct: float

    def to_csv(self) -> str:
        header = ",".join(["", "Total"] + list(self.names))
        absrow = ",".join(["Delta", str(self.total_absolute)]
                          + [str(int(d)) for d in self.absolute])
        relrow = ",".join(["Delta%", f"{self.total_relative_pct:+.2f}"]
                          + [f"{d:+.2f}" for d in self.relative_pct])
        return "\n".join([header, absrow, relrow]) + "\n"

    def to_text(self) -> str:
        lines = [f"total: {self.total_absolute:+d} pixels "
                 f"({self.total_relative_pct:+.2f}%)"]
        for name, d, r in zip(self.names, self.absolute, self.relative_pct):
            lines.append(f"  {name:<16s} {int(d):+12d}  ({r:+.2f}%)")
        return "\n".join(lines) + "\n"


def diff_tables(old: ClassFrequencyTable, new: ClassFrequencyTable) -> TableDelta:
    """Absolute and relative per-class deltas; class sets must match."""
    if old.names != new.names:
        raise SchemaError("frequency tables cover different class sets")
    absolute = new.counts - old.counts
    relative = np.array([
        _round2(int(d) , int(o)) if o else 0.0
        for d, o in zip(absolute, old.counts)])
    return TableDelta(names=old.names,
                      absolute=absolute,
                      relative_pct=relative,
                      total_absolute=int(new.total - old.total),
                      total_relative_pct=_round2(new.total - old.total,
                                                 old.total))


def load_class_names(path) -> tuple[str, ...]:
    """Class-name file: one 'id,name' row per class, ids 1..n in order."""
    names = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            ident, name = ln.split(",", 1)
            if int(ident) != len(names) + 1:
                raise SchemaError(f"{path}: class ids must run 1..n in order")
            names.append(name.strip())
    if not names:
        raise SchemaError(f"{path}: no class rows found")
    return tuple(names)


def load_table_csv(path) -> ClassFrequencyTable:
    """Read a table written by ClassFrequencyTable.to_csv."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise SchemaError(f"{path}: expected header and Pixels rows")
    names = lines[0].split(",")[2:]
    cells = lines[1].split(",")
    if cells[0] != "Pixels":
        raise SchemaError(f"{path}: second row must start with 'Pixels'")
    counts = [int(x) for x in cells[2:]]
    return ClassFrequencyTable.from_counts(counts, names=tuple(names))
