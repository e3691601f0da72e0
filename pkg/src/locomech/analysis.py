"""Shape-space fields and loop diagnostics.

Connection matrices are sampled over rectangular shape-space grids, a
curvature diagnostic combines the coordinate curl of the connection with the
column bracket, and closed loops are scored by comparing their integrated
displacement exponent against the curvature surface integral over the
enclosed region.  The two numbers agree only to leading order; the report
never asserts equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import SingularConstraint
from .integrator import integrate_gait, net_displacement
from .liegroup import Twist, bracket
from .shapespace import WaypointGait


class SingularStencil(RuntimeError):
    """Raised when a curvature value is requested at an invalid node."""


class LoopOutsideGrid(ValueError):
    """Raised when a loop leaves the sampled grid region."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular sampling window over two shape coordinates.

    For providers with more than two coordinates, `axes` names the swept pair
    and `base` supplies the fixed values of the rest.
    """

    lo: tuple[float, float]
    hi: tuple[float, float]
    counts: tuple[int, int]
    axes: tuple[int, int] = (0, 1)
    base: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.lo) != 2 or len(self.hi) != 2 or len(self.counts) != 2:
            raise ValueError("grid spec needs two entries each for lo, hi, counts")
        if not (self.lo[0] < self.hi[0] and self.lo[1] < self.hi[1]):
            raise ValueError("grid bounds must satisfy lo < hi on both axes")
        if min(self.counts) < 2:
            raise ValueError("need at least 2 nodes per axis")
        if self.axes[0] == self.axes[1]:
            raise ValueError("swept axes must differ")


@dataclass
class FieldGrid:
    """Connection samples on a grid; conn has shape (n1, n2, 3, d)."""

    axis1: np.ndarray
    axis2: np.ndarray
    axes: tuple[int, int]
    base: np.ndarray
    conn: np.ndarray
    contacts: np.ndarray | None
    singular: np.ndarray

    def shape_at(self, i: int, j: int) -> np.ndarray:
        r = self.base.copy()
        r[self.axes[0]] = self.axis1[i]
        r[self.axes[1]] = self.axis2[j]
        return r


def sample_field(provider, spec: GridSpec) -> FieldGrid:
    """Evaluate the provider's connection at every grid node.

    Nodes where the constraint balance is singular are flagged rather than
    raised; contact-switching providers also record the stance at each node.
    """
    d = provider.dim
    if spec.axes[0] >= d or spec.axes[1] >= d or min(spec.axes) < 0:
        raise ValueError(f"swept axes {spec.axes} outside provider coordinates 0..{d - 1}")
    base = np.zeros(d) if spec.base is None else np.asarray(spec.base, dtype=float)
    if base.shape != (d,):
        raise ValueError(f"base shape must have {d} coordinates, got {base.shape}")
    axis1 = np.linspace(spec.lo[0], spec.hi[0], spec.counts[0])
    axis2 = np.linspace(spec.lo[1], spec.hi[1], spec.counts[1])
    n1, n2 = spec.counts
    conn = np.zeros((n1, n2, 3, d))
    singular = np.zeros((n1, n2), dtype=bool)
    piecewise = provider.contacts_at(base) is not None
    contacts = np.empty((n1, n2), dtype=object) if piecewise else None
    r = base.copy()
    for i in range(n1):
        r[spec.axes[0]] = axis1[i]
        for j in range(n2):
            r[spec.axes[1]] = axis2[j]
            if piecewise:
                contacts[i, j] = provider.contacts_at(r)
            try:
                conn[i, j] = provider.connection_at(r)
            except SingularConstraint:
                singular[i, j] = True
    return FieldGrid(
        axis1=axis1,
        axis2=axis2,
        axes=spec.axes,
        base=base,
        conn=conn,
        contacts=contacts,
        singular=singular,
    )


@dataclass
class CurvatureField:
    """Curvature diagnostic D over a sampled grid, with validity flags.

    values[i, j] holds (D_vx, D_vy, D_omega); boundary marks one-sided
    stencils, valid is False where the stencil crossed a stance change or a
    singular node.
    """

    values: np.ndarray
    valid: np.ndarray
    boundary: np.ndarray


def _column_bracket(a: np.ndarray, i1: int, i2: int) -> np.ndarray:
    c1, c2 = a[:, i1], a[:, i2]
    return bracket(Twist.from_array(c1), Twist.from_array(c2)).to_array()


def curvature(field: FieldGrid) -> CurvatureField:
    """Curl of the swept connection columns plus their bracket, node by node.

    Interior nodes use centered differences, boundary nodes one-sided ones
    (flagged).  A stencil touching a singular node or mixing stance pieces is
    marked invalid instead of differencing across the discontinuity.
    """
    n1, n2 = field.conn.shape[:2]
    if n1 < 3 or n2 < 3:
        raise ValueError(f"curvature needs at least a 3x3 grid, got {n1}x{n2}")
    a1, a2 = field.axes
    h1 = field.axis1[1] - field.axis1[0]
    h2 = field.axis2[1] - field.axis2[0]
    values = np.zeros((n1, n2, 3))
    valid = np.ones((n1, n2), dtype=bool)
    boundary = np.zeros((n1, n2), dtype=bool)

    def stencil_ok(i, j, pts) -> bool:
        if field.singular[i, j]:
            return False
        for (pi, pj) in pts:
            if field.singular[pi, pj]:
                return False
            if field.contacts is not None and field.contacts[pi, pj] != field.contacts[i, j]:
                return False
        return True

    for i in range(n1):
        for j in range(n2):
            if i == 0:
                i_pts = [(0, j), (1, j), (2, j)]
            elif i == n1 - 1:
                i_pts = [(n1 - 3, j), (n1 - 2, j), (n1 - 1, j)]
            else:
                i_pts = [(i - 1, j), (i + 1, j)]
            if j == 0:
                j_pts = [(i, 0), (i, 1), (i, 2)]
            elif j == n2 - 1:
                j_pts = [(i, n2 - 3), (i, n2 - 2), (i, n2 - 1)]
            else:
                j_pts = [(i, j - 1), (i, j + 1)]
            on_edge = i in (0, n1 - 1) or j in (0, n2 - 1)
            boundary[i, j] = on_edge
            if not stencil_ok(i, j, i_pts + j_pts):
                valid[i, j] = False
                values[i, j] = np.nan
                continue
            if i == 0:
                d1_col2 = (-3 * field.conn[0, j, :, a2] + 4 * field.conn[1, j, :, a2] - field.conn[2, j, :, a2]) / (2 * h1)
            elif i == n1 - 1:
                d1_col2 = (3 * field.conn[i, j, :, a2] - 4 * field.conn[i - 1, j, :, a2] + field.conn[i - 2, j, :, a2]) / (2 * h1)
            else:
                d1_col2 = (field.conn[i + 1, j, :, a2] - field.conn[i - 1, j, :, a2]) / (2 * h1)
            if j == 0:
                d2_col1 = (-3 * field.conn[i, 0, :, a1] + 4 * field.conn[i, 1, :, a1] - field.conn[i, 2, :, a1]) / (2 * h2)
            elif j == n2 - 1:
                d2_col1 = (3 * field.conn[i, j, :, a1] - 4 * field.conn[i, j - 1, :, a1] + field.conn[i, j - 2, :, a1]) / (2 * h2)
            else:
                d2_col1 = (field.conn[i, j + 1, :, a1] - field.conn[i, j - 1, :, a1]) / (2 * h2)
            values[i, j] = d1_col2 - d2_col1 + _column_bracket(field.conn[i, j], a1, a2)
    return CurvatureField(values=values, valid=valid, boundary=boundary)


def curvature_at(cfield: CurvatureField, i: int, j: int) -> np.ndarray:
    """Curvature at one node; raises SingularStencil where it was flagged."""
    if not cfield.valid[i, j]:
        raise SingularStencil(f"curvature stencil at node ({i}, {j}) is invalid")
    return cfield.values[i, j]


@dataclass
class HolonomyAreaReport:
    """Loop displacement exponent next to the curvature surface integral.

    The two agree to leading order in loop size; `gap` reports their
    componentwise difference without asserting anything about it.
    """

    holonomy: Twist
    area_integral: np.ndarray
    curl_part: np.ndarray
    bracket_part: np.ndarray
    gap: np.ndarray

    @property
    def gap_norm(self) -> float:
        return float(np.linalg.norm(self.gap))


def _loop_polygon(gait, samples: int) -> np.ndarray:
    if isinstance(gait, WaypointGait):
        return gait.points.copy()
    ts = np.linspace(0.0, gait.period, samples, endpoint=False)
    return np.stack([gait.evaluate(t)[0] for t in ts])


def _line_integral(provider, gait, samples: int) -> np.ndarray:
    """Loop integral of A dr, which is the time integral of the body twist."""
    if isinstance(gait, WaypointGait):
        nodes, weights = np.polynomial.legendre.leggauss(12)
        total = np.zeros(3)
        for seg in range(gait.points.shape[0]):
            t0, t1 = gait.times[seg], gait.times[seg + 1]
            half = 0.5 * (t1 - t0)
            for x, wt in zip(nodes, weights):
                t = 0.5 * (t0 + t1) + half * x
                r, rdot = gait.evaluate(t)
                total += half * wt * (provider.connection_at(r) @ rdot)
        return total
    dt = gait.period / samples
    total = np.zeros(3)
    for k in range(samples):
        r, rdot = gait.evaluate(k * dt)
        total += dt * (provider.connection_at(r) @ rdot)
    return total


def _bracket_surface_integral(provider, polygon: np.ndarray, axes, base, order: int = 6) -> np.ndarray:
    """Signed integral of the column bracket over the region a loop encloses.

    The polygon is fanned into triangles about its centroid (it must be
    star-shaped there) and each triangle integrated with a tensor rule.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    u = 0.5 * (nodes + 1.0)
    wu = 0.5 * weights
    centroid = polygon.mean(axis=0)
    total = np.zeros(3)
    r = np.array(base, dtype=float)
    m = polygon.shape[0]
    for k in range(m):
        v1 = polygon[k] - centroid
        v2 = polygon[(k + 1) % m] - centroid
        signed_area = 0.5 * (v1[0] * v2[1] - v1[1] * v2[0])
        if signed_area == 0.0:
            continue
        acc = np.zeros(3)
        for iu, (su, wsu) in enumerate(zip(u, wu)):
            for sv, wsv in zip(u, wu):
                # Duffy map of the unit square onto the triangle
                x = centroid + su * (v1 + sv * (v2 - v1))
                r[axes[0]] = x[0]
                r[axes[1]] = x[1]
                a = provider.connection_at(r)
                acc += wsu * wsv * su * _column_bracket(a, axes[0], axes[1])
        total += 2.0 * signed_area * acc
    return total


def holonomy_vs_area(
    provider,
    gait,
    field: FieldGrid,
    step: float = 1e-3,
    samples: int = 4096,
) -> HolonomyAreaReport:
    """Compare a loop's displacement exponent with the curvature area integral.

    The loop must stay inside the sampled grid window.  The curl part of the
    surface integral is evaluated exactly as the loop integral of A dr; the
    bracket part is integrated over the enclosed region directly.
    """
    polygon = _loop_polygon(gait, samples=min(samples, 512))
    swept = polygon[:, [field.axes[0], field.axes[1]]]
    lo1, hi1 = field.axis1[0], field.axis1[-1]
    lo2, hi2 = field.axis2[0], field.axis2[-1]
    if (
        swept[:, 0].min() < lo1
        or swept[:, 0].max() > hi1
        or swept[:, 1].min() < lo2
        or swept[:, 1].max() > hi2
    ):
        raise LoopOutsideGrid("gait loop leaves the sampled grid window")
    traj = integrate_gait(provider, gait, cycles=1, step=step)
    hol = net_displacement(traj)
    curl_part = _line_integral(provider, gait, samples)
    bracket_part = _bracket_surface_integral(provider, swept, field.axes, field.base)
    area = curl_part + bracket_part
    gap = hol.to_array() - area
    return HolonomyAreaReport(
        holonomy=hol,
        area_integral=area,
        curl_part=curl_part,
        bracket_part=bracket_part,
        gap=gap,
    )
