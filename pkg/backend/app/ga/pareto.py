"""
Two-objective Pareto utilities (both objectives maximized)
"""

from typing import List, Sequence, Tuple

import numpy as np

from app.errors import ParetoError

Point = Tuple[float, float]


def dominates(a: Point, b: Point) -> bool:
    return a[0] >= b[0] and a[1] >= b[1] and (a[0] > b[0] or a[1] > b[1])


def pareto_indices(points: Sequence[Point]) -> List[int]:
    """Indices of non-dominated points in input order (sweep on objective 1)"""
    order = sorted(range(len(points)), key=lambda i: (-points[i][0], -points[i][1]))
    keep = []
    best_y_greater_x = -np.inf
    position = 0
    while position < len(order):
        x = points[order[position]][0]
        group = []
        while position < len(order) and points[order[position]][0] == x:
            group.append(order[position])
            position += 1
        group_max = points[group[0]][1]
        for i in group:
            y = points[i][1]
            if y == group_max and y > best_y_greater_x:
                keep.append(i)
        best_y_greater_x = max(best_y_greater_x, group_max)
    return sorted(keep)


def pareto_front(points: Sequence[Point]) -> List[Point]:
    return [tuple(points[i]) for i in pareto_indices(points)]


def hypervolume_2d(front: Sequence[Point], nadir: Point) -> float:
    """Area dominated by the front and bounded below by the nadir point"""
    for point in front:
        if point[0] < nadir[0] or point[1] < nadir[1]:
            raise ParetoError(f"point {tuple(point)} does not dominate nadir {tuple(nadir)}")
    strips = sorted(pareto_front(front), key=lambda p: (-p[0], p[1]))
    area = 0.0
    covered_y = nadir[1]
    for x, y in strips:
        if y > covered_y:
            area += (x - nadir[0]) * (y - covered_y)
            covered_y = y
    return float(area)


def nadir_point(points: Sequence[Point]) -> Point:
    """Componentwise minimum, the worst corner of a point set"""
    if not points:
        raise ParetoError("nadir of an empty point set")
    array = np.asarray(points, dtype=float)
    return float(array[:, 0].min()), float(array[:, 1].min())
