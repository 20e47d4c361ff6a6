"""Vector measures discretized on uniform box grids.

Cell values are integrals ``mu(cell)``, not densities, so a measure
concentrated on a hypersurface keeps a grid-independent total mass.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SpecFormatError

GMES_MAGIC = b"GMES1"
GMES_SCHEMA_VERSION = "GMES1"


@dataclass(frozen=True)
class GridMeasure:
    d: int
    m: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    cells: int
    values: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        lower = tuple(float(x) for x in self.lower)
        upper = tuple(float(x) for x in self.upper)
        if len(lower) != self.d or len(upper) != self.d:
            raise DimensionError("box corners must have length d")
        if any(u <= lo for lo, u in zip(lower, upper)):
            raise DimensionError("box must have positive volume")
        values = np.asarray(self.values, dtype=float)
        expected = (self.cells,) * self.d + (self.m,)
        if values.shape != expected:
            raise DimensionError(f"values have shape {values.shape}, expected {expected}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, d, m, lower, upper, cells, periodic=False) -> "GridMeasure":
        return cls(d, m, lower, upper, cells, np.zeros((cells,) * d + (m,)), periodic)

    def with_values(self, values: np.ndarray, m: int | None = None) -> "GridMeasure":
        m = self.m if m is None else m
        return GridMeasure(self.d, m, self.lower, self.upper, self.cells, values, self.periodic)

    @property
    def h(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / self.cells

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def box_volume(self) -> float:
        return float(np.prod(np.array(self.upper) - np.array(self.lower)))

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.lower[axis] + (np.arange(self.cells) + 0.5) * self.h[axis]

    def centers(self) -> np.ndarray:
        """Cell centers, shape (cells,)*d + (d,)."""
        axes = [self.axis_centers(i) for i in range(self.d)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def masses(self) -> np.ndarray:
        """``|mu|(cell)`` for every cell."""
        return np.linalg.norm(self.values, axis=-1)

    @property
    def total_variation(self) -> float:
        return float(self.masses().sum())

    def densities(self) -> np.ndarray:
        return self.values / self.cell_volume


def write_gmes(mu: GridMeasure, path) -> None:
    """Binary layout: magic, u32 d, m, cells, flags, f64 lower[d], upper[d],
    then f64 cell values in row-major order, all little-endian."""
    flags = 1 if mu.periodic else 0
    with open(path, "wb") as fh:
        fh.write(GMES_MAGIC)
        fh.write(struct.pack("<4I", mu.d, mu.m, mu.cells, flags))
        fh.write(struct.pack(f"<{mu.d}d", *mu.lower))
        fh.write(struct.pack(f"<{mu.d}d", *mu.upper))
        fh.write(np.ascontiguousarray(mu.values, dtype="<f8").tobytes())


def read_gmes(path) -> GridMeasure:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:5] != GMES_MAGIC:
        raise SpecFormatError(f"{path}: bad magic {blob[:5]!r}")
    off = 5
    if len(blob) < off + 16:
        raise SpecFormatError(f"{path}: truncated header")
    d, m, cells, flags = struct.unpack_from("<4I", blob, off)
    off += 16
    lower = struct.unpack_from(f"<{d}d", blob, off)
    off += 8 * d
    upper = struct.unpack_from(f"<{d}d", blob, off)
    off += 8 * d
    count = cells**d * m
    if len(blob) - off != 8 * count:
        raise SpecFormatError(
            f"{path}: expected {count} cell values, found {(len(blob) - off) // 8}"
        )
    values = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
    values = values.reshape((cells,) * d + (m,))
    return GridMeasure(d, m, lower, upper, cells, values, bool(flags & 1))


def write_csv(mu: GridMeasure, path) -> None:
    """One row per cell: integer indices, center coordinates, values."""
    idx = np.indices((mu.cells,) * mu.d).reshape(mu.d, -1).T
    centers = mu.centers().reshape(-1, mu.d)
    vals = mu.values.reshape(-1, mu.m)
    header = (
        [f"i{a}" for a in range(mu.d)]
        + [f"x{a}" for a in range(mu.d)]
        + [f"v{c}" for c in range(mu.m)]
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i, x, v in zip(idx, centers, vals):
            fh.write(
                ",".join([str(int(t)) for t in i] + [repr(float(t)) for t in x] + [repr(float(t)) for t in v])
                + "\n"
            )
