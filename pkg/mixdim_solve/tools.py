# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

import csv
import pathlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .log import logger


def _read_content(file_path):
    f = open(file_path, "r")
    text = f.read()
    f.close()
    return text


def _write_content(file_path, content):
    f = open(file_path, "w")
    f.write(content)
    f.close()


def _ensure_directory(path):
    path = pathlib.Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parallel_map(func, items, threads=1):
    """Map ``func`` over ``items``, keeping the order of the results."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))


def _write_table(file_path, columns, rows, header_lines=None):
    """Write a CSV file; header lines are emitted as ``#`` comments."""
    with open(file_path, "w", newline="") as f:
        for line in header_lines or []:
            f.write("# %s\n" % line)
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])
    logger.info("Table written: %s" % file_path)


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def _write_key_values(file_path, items, header_lines=None):
    lines = ["# %s" % x for x in header_lines or []]
    for key, value in items:
        lines.append("%s = %s" % (key, _format_cell(value)))
    _write_content(file_path, "\n".join(lines) + "\n")
    logger.info("Report written: %s" % file_path)


def evaluate_point_function(func, points):
    """Evaluate a scalar or a vectorized ``func(x, y)`` at ``points``."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if func is None:
        return np.zeros(len(points))
    if callable(func):
        values = np.asarray(func(points[:, 0], points[:, 1]), dtype=float)
    else:
        values = np.asarray(func, dtype=float)
    return np.broadcast_to(values, (len(points),)).astype(float)


def cross2(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def orient(a, b, c):
    """Twice the signed area of (a, b, c); positive when counter-clockwise."""
    a = np.asarray(a, dtype=float)
    return cross2(np.asarray(b, dtype=float) - a, np.asarray(c, dtype=float) - a)


def polygon_signed_area(points):
    points = np.asarray(points, dtype=float)
    if len(points) < 3:
        return 0.0
    shifted = np.roll(points, -1, axis=0)
    return 0.5 * float(np.sum(cross2(points, shifted)))


def points_in_polygon(points, polygon):
    """Even-odd ray casting; boundary points have no guaranteed answer."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    polygon = np.asarray(polygon, dtype=float)
    inside = np.zeros(len(points), dtype=bool)
    x, y = points[:, 0], points[:, 1]
    for a, b in zip(polygon, np.roll(polygon, -1, axis=0)):
        straddles = (a[1] > y) != (b[1] > y)
        if not np.any(straddles):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
        inside ^= straddles & (x < x_cross)
    return inside


def point_segment_distance(points, a, b):
    """Distance of every point to every segment, shape (points, segments)."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    d = b - a
    dd = np.maximum(np.einsum("ij,ij->i", d, d), np.finfo(float).tiny)
    rel = points[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", rel, d) / dd, 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * d[None, :, :]
    return np.linalg.norm(points[:, None, :] - closest, axis=2)


def min_distance_to_segments(points, a, b, chunk=512):
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    result = np.full(len(points), np.inf)
    if len(a) == 0:
        return result
    for start in range(0, len(points), chunk):
        block = point_segment_distance(points[start:start + chunk], a, b)
        result[start:start + chunk] = block.min(axis=1)
    return result


def parse_float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(x) for x in str(text).split(",") if x.strip()]

