import logging
from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.collections import PolyCollection
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle
from scipy.spatial import ConvexHull, QhullError

from src.errors import ConfigurationError, GridMismatchError
from src.grid.cellset import CellSet

logger = logging.getLogger(__name__)

COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple")


def _corners(cells: CellSet) -> np.ndarray:
    """Distinct vertices of every cell box (2^d per cell)."""
    lo, hi = cells.bounds()
    d = cells.grid.dim
    pattern = np.array(np.meshgrid(*([[0, 1]] * d), indexing="ij")).reshape(d, -1).T.astype(bool)
    points = np.where(pattern[None, :, :], hi[:, None, :], lo[:, None, :]).reshape(-1, d)
    return np.unique(points, axis=0)


def _hull(points: np.ndarray):
    try:
        return ConvexHull(points)
    except QhullError as e:
        logger.warning(f"Convex hull of {len(points)} points is degenerate: {str(e)}")
        return None


def _draw_2d(ax, label: str, cells: CellSet, color: str) -> None:
    lo, hi = cells.bounds()
    boxes = np.stack([lo, np.c_[hi[:, 0], lo[:, 1]], hi, np.c_[lo[:, 0], hi[:, 1]]], axis=1)
    ax.add_collection(PolyCollection(boxes, facecolors=color, edgecolors="none", alpha=0.35))
    hull = _hull(_corners(cells))
    if hull is not None:
        ring = np.append(hull.vertices, hull.vertices[0])
        ax.plot(hull.points[ring, 0], hull.points[ring, 1], color=color, linewidth=1.2, label=label)


def _draw_3d(ax, label: str, cells: CellSet, color: str) -> None:
    hull = _hull(_corners(cells))
    if hull is None:
        return
    edges = set()
    for simplex in hull.simplices:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            edges.add(tuple(sorted((int(simplex[a]), int(simplex[b])))))
    for k, (a, b) in enumerate(sorted(edges)):
        segment = hull.points[[a, b]]
        ax.plot(segment[:, 0], segment[:, 1], segment[:, 2], color=color, linewidth=0.6, label=label if k == 0 else None)


def plot_sets(sets: Sequence[tuple[str, CellSet]], dims: Sequence[int], path: Union[str, Path]) -> Path:
    """
    Render cell sets projected onto two or three state dimensions as an SVG file.

    Args:
        sets: (label, cells) pairs over one grid; overlays get a legend
        dims: 0-based state dimensions to project on
        path: output file

    Returns:
        The written path. Output bytes depend only on the inputs.
    """
    if not sets:
        raise ConfigurationError("Nothing to plot")
    grid = sets[0][1].grid
    for label, cells in sets:
        if cells.grid != grid:
            raise GridMismatchError(f"Set '{label}' is on a different grid than '{sets[0][0]}'")
    dims = list(dims)
    if len(dims) not in (2, 3) or len(set(dims)) != len(dims):
        raise ConfigurationError(f"Projection needs 2 or 3 distinct dimensions, got {dims}")
    if any(d < 0 or d >= grid.dim for d in dims):
        raise ConfigurationError(f"Projection dimensions {dims} out of range for a {grid.dim}-dimensional grid")

    path = Path(path)
    projected = [(label, cells.project(dims)) for label, cells in sets]
    frame = grid.project(dims).domain

    with matplotlib.rc_context({"svg.hashsalt": "cis", "svg.fonttype": "path"}):
        fig = Figure(figsize=(6, 6))
        if len(dims) == 2:
            ax = fig.add_subplot()
            ax.add_patch(
                Rectangle(
                    frame.lo,
                    frame.hi[0] - frame.lo[0],
                    frame.hi[1] - frame.lo[1],
                    fill=False,
                    edgecolor="black",
                    linewidth=0.8,
                )
            )
            for k, (label, cells) in enumerate(projected):
                if not cells.is_empty():
                    _draw_2d(ax, label, cells, COLORS[k % len(COLORS)])
            ax.set_xlim(frame.lo[0], frame.hi[0])
            ax.set_ylim(frame.lo[1], frame.hi[1])
            ax.set_aspect("equal")
        else:
            ax = fig.add_subplot(projection="3d", proj_type="ortho")
            for k, (label, cells) in enumerate(projected):
                if not cells.is_empty():
                    _draw_3d(ax, label, cells, COLORS[k % len(COLORS)])
            ax.set_xlim(frame.lo[0], frame.hi[0])
            ax.set_ylim(frame.lo[1], frame.hi[1])
            ax.set_zlim(frame.lo[2], frame.hi[2])
            ax.set_zlabel(f"x{dims[2] + 1}")
        ax.set_xlabel(f"x{dims[0] + 1}")
        ax.set_ylabel(f"x{dims[1] + 1}")
        if len(sets) > 1:
            ax.legend(loc="upper right")
        fig.savefig(path, format="svg", metadata={"Date": None})

    logger.info(f"Plotted {len(sets)} set(s) on dims {[d + 1 for d in dims]} to {path}")
    return path
