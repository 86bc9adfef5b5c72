"""Utility module for result files: CSV tables, map CSV and PGM images"""

import csv
import numpy as np
from util.tensor import minmax_normalize


def format_value(value) -> str:
    """Full-precision text for floats, plain text for everything else."""

    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path: str, header: list, rows: list, mode: str = "w"):
    """
    This function writes rows (sequences ordered as `header`) to a CSV
    file. In append mode, the header is only written to empty files.
    """

    with open(path, mode, newline="") as f:
        writer = csv.writer(f)
        if mode == "w" or f.tell() == 0:
            writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"Row {row} doesn't match header {header}.")
            writer.writerow([format_value(value) for value in row])


def read_csv(path: str) -> tuple[list, list]:
    """This function reads a CSV file back into (header, rows)."""

    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [row for row in reader]

    return header, rows


def save_map_csv(map_2d: np.ndarray, path: str):
    """One CSV row per map row."""

    map_2d = np.asarray(map_2d, dtype=float)
    if map_2d.ndim != 2:
        raise ValueError(f"Expected a 2D map, got shape {map_2d.shape}.")

    np.savetxt(path, map_2d, delimiter=",", fmt="%.10g")


def save_map_pgm(map_2d: np.ndarray, path: str, maxval: int = 255):
    """
    This function writes a map as a plain-text (P2) PGM image. Values
    are min-max scaled to [0, maxval]; constant maps are written black.
    """

    map_2d = np.asarray(map_2d, dtype=float)
    if map_2d.ndim != 2:
        raise ValueError(f"Expected a 2D map, got shape {map_2d.shape}.")

    pixels = np.rint(minmax_normalize(map_2d) * maxval).astype(int)

    height, width = pixels.shape
    with open(path, "w") as f:
        f.write(f"P2\n{width} {height}\n{maxval}\n")
        for row in pixels:
            f.write(" ".join(str(value) for value in row) + "\n")


def save_curve_csv(curve, path: str):
    """Metric curve as (fraction, value) rows."""

    write_csv(path, ["fraction", "value"],
              [[float(x), float(y)] for x, y in zip(curve.xs, curve.ys)])
