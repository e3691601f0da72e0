"""Concrete planar locomotor models.

Articulated chains with anisotropic viscous drag, planted-foot crawlers whose
stance pieces are holonomic pose maps, walkers whose feet slip against
anisotropic viscous ground, and a dense point-contact surrogate that
approaches the drag integral as the contact count grows.  Each model knows
how to turn itself into the pose maps or linear balances consumed by the
connection providers.

Kinematic conventions: chain link frames sit at link midpoints with x along
the link, and the body frame is the middle link's frame.  A foot at leg angle
zero points along its rest direction from the hip; positive leg angle rotates
leg and foot together, and the foot frame orientation equals the leg angle.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .connection import (
    ConstraintConnection,
    ConstraintSystem,
    PiecewiseConnection,
    PoseMap,
)
from .liegroup import Pose, compose, inverse


class DegenerateStance(RuntimeError):
    """Raised when a stance's pinning equations are rank-deficient."""


def _readonly(a, shape=None) -> np.ndarray:
    out = np.array(a, dtype=float)
    if shape is not None and out.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ChainModel:
    """Open kinematic chain of hinged links; joint i bends link i into link i+1.

    The link count must be odd so the body frame (middle link midpoint,
    x along the link) is unambiguous.
    """

    lengths: np.ndarray

    def __post_init__(self) -> None:
        lengths = _readonly(np.atleast_1d(self.lengths))
        if lengths.ndim != 1 or lengths.shape[0] % 2 == 0:
            raise ValueError(f"link count must be odd, got {lengths.shape}")
        if not np.all(lengths > 0.0):
            raise ValueError("link lengths must be positive")
        object.__setattr__(self, "lengths", lengths)

    @property
    def n_links(self) -> int:
        return self.lengths.shape[0]

    @property
    def shape_dim(self) -> int:
        return self.n_links - 1

    @property
    def mid(self) -> int:
        return self.n_links // 2


def chain_frames(chain: ChainModel, r) -> list[Pose]:
    """Body-frame pose of every link midpoint; the middle link is the identity."""
    r = np.asarray(r, dtype=float)
    if r.shape != (chain.shape_dim,):
        raise ValueError(f"chain expects {chain.shape_dim} joint angles, got {r.shape}")
    n, mid, lengths = chain.n_links, chain.mid, chain.lengths
    frames: list[Pose] = [Pose()] * n
    for k in range(mid, n - 1):
        hop = compose(Pose(0.5 * lengths[k], 0.0, r[k]), Pose(0.5 * lengths[k + 1], 0.0, 0.0))
        frames[k + 1] = compose(frames[k], hop)
    for k in range(mid - 1, -1, -1):
        hop = compose(Pose(-0.5 * lengths[k + 1], 0.0, -r[k]), Pose(-0.5 * lengths[k], 0.0, 0.0))
        frames[k] = compose(frames[k + 1], hop)
    return frames


def _chain_joint_positions(chain: ChainModel, frames: list[Pose]) -> np.ndarray:
    """Hinge positions in the body frame; joint k is the +x tip of link k."""
    tips = np.empty((chain.shape_dim, 2))
    for k in range(chain.shape_dim):
        f = frames[k]
        tips[k] = f.apply_point((0.5 * chain.lengths[k], 0.0))
    return tips


def _viscous_balance(chain: ChainModel, r, c_t: float, c_n: float, nodes_fn) -> ConstraintSystem:
    """Force and moment balance for anisotropic viscous resistance along the chain.

    nodes_fn(lengths) yields per-link stations and weights, both (n_links, q0),
    stations measured from each link midpoint.  The station velocity is affine
    in (body twist, shape rate); resistance is -c_t tangential - c_n normal per
    unit weight, and the assembled balance is m @ xi + n @ rdot = 0.
    """
    r = np.asarray(r, dtype=float)
    n_links, mid, d = chain.n_links, chain.mid, chain.shape_dim
    frames = chain_frames(chain, r)
    joints = _chain_joint_positions(chain, frames)

    s, w_link = nodes_fn(chain.lengths)
    q0 = s.shape[1]
    th = np.array([f.theta for f in frames])
    org = np.array([[f.x, f.y] for f in frames])
    tang_link = np.stack([np.cos(th), np.sin(th)], axis=1)
    p = (org[:, None, :] + s[:, :, None] * tang_link[:, None, :]).reshape(-1, 2)
    w = w_link.reshape(-1)
    tang = np.repeat(tang_link, q0, axis=0)
    own = np.repeat(np.arange(n_links), q0)
    nrm = np.stack([-tang[:, 1], tang[:, 0]], axis=1)
    q = p.shape[0]

    drag = c_t * tang[:, :, None] * tang[:, None, :] + c_n * nrm[:, :, None] * nrm[:, None, :]

    bxi = np.zeros((q, 2, 3))
    bxi[:, 0, 0] = 1.0
    bxi[:, 1, 1] = 1.0
    bxi[:, 0, 2] = -p[:, 1]
    bxi[:, 1, 2] = p[:, 0]

    # joint k swings link j iff j is outboard of k relative to the middle link;
    # the sign follows which side of the chain the joint drives
    ks = np.arange(d)[:, None]
    coef = ((ks >= mid) & (own[None, :] >= ks + 1)).astype(float)
    coef -= ((ks < mid) & (own[None, :] <= ks)).astype(float)
    u = p[None, :, :] - joints[:, None, :]
    swung = np.empty_like(u)
    swung[..., 0] = -u[..., 1]
    swung[..., 1] = u[..., 0]
    br = np.transpose(coef[:, :, None] * swung, (1, 2, 0))

    # single GEMM for both blocks: columns [m | n] = -sum_q bxi^T (w drag) [bxi | br]
    b_all = np.concatenate([bxi, br], axis=2)
    weighted = (w[:, None, None] * drag) @ b_all
    blocks = bxi.reshape(2 * q, 3).T @ weighted.reshape(2 * q, 3 + d)
    return ConstraintSystem(-blocks[:, :3], -blocks[:, 3:])


@dataclass(frozen=True)
class DragModel:
    """Chain swimming against per-unit-length anisotropic viscous drag."""

    chain: ChainModel
    drag_tangential: float
    drag_normal: float
    quadrature: int = 8

    def __post_init__(self) -> None:
        if not (self.drag_tangential > 0.0 and self.drag_normal > 0.0):
            raise ValueError("drag coefficients must be positive")
        if self.quadrature < 2:
            raise ValueError(f"need at least 2 quadrature points per link, got {self.quadrature}")

    @property
    def shape_dim(self) -> int:
        return self.chain.shape_dim

    def provider(self) -> ConstraintConnection:
        return ConstraintConnection(lambda r: build_drag_constraints(self, r), self.shape_dim)


@functools.lru_cache(maxsize=32)
def _gauss_nodes(q: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(q)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def build_drag_constraints(model: DragModel, r) -> ConstraintSystem:
    """Gauss-Legendre quadrature of the drag balance over every link."""
    nodes, weights = _gauss_nodes(model.quadrature)

    def gauss(lengths):
        half = 0.5 * lengths[:, None]
        return half * nodes[None, :], half * weights[None, :]

    return _viscous_balance(model.chain, r, model.drag_tangential, model.drag_normal, gauss)


def many_legged_drag_surrogate(model: DragModel, m: int, r) -> ConstraintSystem:
    """Balance for m evenly spaced slipping point contacts per link.

    Each contact resists with the drag coefficients scaled by 1/m (tangential
    and normal only, no yaw resistance), which is the composite midpoint rule
    for the drag integral; the result converges to build_drag_constraints as
    m grows.
    """
    if m < 2:
        raise ValueError(f"need at least 2 contacts per link, got {m}")

    def midpoint(lengths):
        step = (lengths / m)[:, None]
        stations = -0.5 * lengths[:, None] + (np.arange(m) + 0.5) * step
        return stations, np.broadcast_to(step, stations.shape)

    return _viscous_balance(model.chain, r, model.drag_tangential, model.drag_normal, midpoint)


@dataclass(frozen=True)
class LeggedModel:
    """Rigid body with hip-mounted swinging legs; shape = leg angles.

    Planted feet are flat and bear yaw moment.  The selector names which feet
    are planted as a function of shape: "argmax" plants the single foot with
    the largest leg angle (ties to the lower index), "fixed" always plants
    fixed_contacts.
    """

    hips: np.ndarray
    leg_lengths: np.ndarray
    rest_angles: np.ndarray
    selector: str = "argmax"
    fixed_contacts: frozenset | None = None

    def __post_init__(self) -> None:
        hips = _readonly(np.atleast_2d(self.hips))
        f = hips.shape[0]
        if hips.shape != (f, 2):
            raise ValueError(f"hip offsets must be (f, 2), got {hips.shape}")
        lengths = _readonly(np.atleast_1d(self.leg_lengths), (f,))
        rest = _readonly(np.atleast_1d(self.rest_angles), (f,))
        if not np.all(lengths > 0.0):
            raise ValueError("leg lengths must be positive")
        if self.selector not in ("argmax", "fixed"):
            raise ValueError(f"unknown selector {self.selector!r}")
        fixed = self.fixed_contacts
        if self.selector == "fixed":
            if not fixed:
                raise ValueError("fixed selector needs a nonempty fixed_contacts set")
            fixed = frozenset(int(i) for i in fixed)
            if not fixed <= set(range(f)):
                raise ValueError(f"fixed_contacts {sorted(fixed)} outside feet 0..{f - 1}")
        object.__setattr__(self, "hips", hips)
        object.__setattr__(self, "leg_lengths", lengths)
        object.__setattr__(self, "rest_angles", rest)
        object.__setattr__(self, "fixed_contacts", fixed)

    @property
    def n_feet(self) -> int:
        return self.hips.shape[0]

    @property
    def shape_dim(self) -> int:
        return self.n_feet

    def contact_catalog(self) -> tuple[frozenset, ...]:
        if self.selector == "fixed":
            return (self.fixed_contacts,)
        return tuple(frozenset({i}) for i in range(self.n_feet))

    def select_contacts(self, r) -> frozenset:
        return select_contacts(self, r)

    def contact_map(self, c) -> PoseMap:
        return build_contact_map(self, c)

    def provider(self, h: float = 1e-5) -> PiecewiseConnection:
        return PiecewiseConnection(self, h)


def foot_position(model: LeggedModel, i: int, r) -> np.ndarray:
    """Body-frame foot position of foot i at shape r."""
    ang = model.rest_angles[i] + r[i]
    return model.hips[i] + model.leg_lengths[i] * np.array([math.cos(ang), math.sin(ang)])


def foot_pose(model: LeggedModel, i: int, r) -> Pose:
    """Body-frame foot pose; the flat foot's orientation is the leg angle."""
    p = foot_position(model, i, r)
    return Pose(p[0], p[1], r[i])


def select_contacts(model: LeggedModel, r) -> frozenset:
    """Stance set at shape r under the model's selector rule."""
    r = np.asarray(r, dtype=float)
    if r.shape != (model.shape_dim,):
        raise ValueError(f"model expects {model.shape_dim} leg angles, got {r.shape}")
    if model.selector == "fixed":
        return model.fixed_contacts
    return frozenset({int(np.argmax(r))})


def build_contact_map(model: LeggedModel, c) -> PoseMap:
    """Pose map of the holonomic piece for stance set c.

    One planted flat foot fully determines the body pose: the map is the
    inverse of the foot pose in body coordinates.  Two planted feet act as
    pins; the body pose solves the two-point pinning in the frame anchored at
    the lower-indexed foot with x toward the other, raising DegenerateStance
    when the pins coincide.  Larger stances over-determine a planar pose.
    """
    c = frozenset(int(i) for i in c)
    if not c:
        raise ValueError("contact set must be nonempty")
    if not c <= set(range(model.n_feet)):
        raise ValueError(f"contact set {sorted(c)} outside feet 0..{model.n_feet - 1}")
    if len(c) == 1:
        (i,) = c

        def single(r: np.ndarray) -> Pose:
            return inverse(foot_pose(model, i, r))

        return PoseMap(single, model.shape_dim)
    if len(c) == 2:
        i, j = sorted(c)
        tol = 1e-9 * (1.0 + float(model.leg_lengths.max()))

        def pinned(r: np.ndarray) -> Pose:
            pi = foot_position(model, i, r)
            pj = foot_position(model, j, r)
            dx, dy = pj - pi
            if math.hypot(dx, dy) < tol:
                raise DegenerateStance(
                    f"pinned feet {i} and {j} coincide at shape {np.asarray(r).tolist()}"
                )
            beta = -math.atan2(dy, dx)
            cb, sb = math.cos(beta), math.sin(beta)
            return Pose(-(cb * pi[0] - sb * pi[1]), -(sb * pi[0] + cb * pi[1]), beta)

        return PoseMap(pinned, model.shape_dim)
    raise ValueError(f"planar stances support at most 2 feet, got {sorted(c)}")


@dataclass(frozen=True)
class SlipModel:
    """Legged geometry whose contacting feet slip against anisotropic viscous
    ground, with per-foot tangential, normal, and yaw resistance."""

    geometry: LeggedModel
    slip_tangential: np.ndarray
    slip_normal: np.ndarray
    slip_yaw: np.ndarray

    def __post_init__(self) -> None:
        f = self.geometry.n_feet
        for name in ("slip_tangential", "slip_normal", "slip_yaw"):
            val = np.asarray(getattr(self, name), dtype=float)
            if val.ndim == 0:
                val = np.full(f, float(val))
            if val.shape != (f,):
                raise ValueError(f"{name} must be scalar or (f,), got {val.shape}")
            if not np.all(val > 0.0):
                raise ValueError(f"{name} must be positive")
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def shape_dim(self) -> int:
        return self.geometry.shape_dim

    def provider(self, contacts=None) -> ConstraintConnection:
        c = frozenset(range(self.geometry.n_feet)) if contacts is None else frozenset(contacts)
        return ConstraintConnection(lambda r: build_slip_constraints(self, c, r), self.shape_dim)


def build_slip_constraints(model: SlipModel, c, r) -> ConstraintSystem:
    """Balance of slipping-foot reactions for the contact set c.

    Each contacting foot resists its planar velocity anisotropically along the
    foot frame and its spin (body rate plus leg rate) with the yaw
    coefficient; swing feet contribute nothing.
    """
    geo = model.geometry
    c = sorted(int(i) for i in c)
    if not c:
        raise ValueError("contact set must be nonempty")
    if not set(c) <= set(range(geo.n_feet)):
        raise ValueError(f"contact set {c} outside feet 0..{geo.n_feet - 1}")
    r = np.asarray(r, dtype=float)
    if r.shape != (geo.shape_dim,):
        raise ValueError(f"model expects {geo.shape_dim} leg angles, got {r.shape}")
    d = geo.shape_dim
    m = np.zeros((3, 3))
    n = np.zeros((3, d))
    for i in c:
        ang = float(geo.rest_angles[i] + r[i])
        p = geo.hips[i] + geo.leg_lengths[i] * np.array([math.cos(ang), math.sin(ang)])
        tx, ty = math.cos(r[i]), math.sin(r[i])
        tang = np.array([tx, ty])
        nrm = np.array([-ty, tx])
        drag = (
            model.slip_tangential[i] * np.outer(tang, tang)
            + model.slip_normal[i] * np.outer(nrm, nrm)
        )
        bxi = np.array([[1.0, 0.0, -p[1]], [0.0, 1.0, p[0]]])
        dpdr = geo.leg_lengths[i] * np.array([-math.sin(ang), math.cos(ang)])
        m += bxi.T @ drag @ bxi
        n[:, i] += bxi.T @ drag @ dpdr
        m[2, 2] += model.slip_yaw[i]
        n[2, i] += model.slip_yaw[i]
    return ConstraintSystem(-m, -n)


def three_link_swimmer(
    link_length: float = 1.0,
    drag_tangential: float = 1.0,
    drag_normal: float = 2.0,
    quadrature: int = 8,
) -> DragModel:
    """Canonical three-link swimmer with normal-heavy drag."""
    chain = ChainModel(np.full(3, link_length))
    return DragModel(chain, drag_tangential, drag_normal, quadrature)


def two_leg_crawler(hip_spacing: float = 1.0, leg_length: float = 1.0) -> LeggedModel:
    """Two downward legs on a rigid body; the foot with the larger leg angle
    is planted."""
    half = 0.5 * hip_spacing
    return LeggedModel(
        hips=np.array([[-half, 0.0], [half, 0.0]]),
        leg_lengths=np.full(2, leg_length),
        rest_angles=np.full(2, -0.5 * math.pi),
        selector="argmax",
    )


def crawler_slip_model(
    hip_spacing: float = 1.0,
    leg_length: float = 1.0,
    slip_tangential=1.0,
    slip_normal=1.0,
    slip_yaw=1.0,
) -> SlipModel:
    """Crawler geometry with both feet slipping on viscous ground."""
    return SlipModel(
        geometry=two_leg_crawler(hip_spacing, leg_length),
        slip_tangential=slip_tangential,
        slip_normal=slip_normal,
        slip_yaw=slip_yaw,
    )


def mirrored_slip_walker(
    hip_offset: float = 0.3,
    half_width: float = 0.4,
    leg_length: float = 1.0,
    slip_tangential=1.0,
    slip_normal=3.0,
    slip_yaw=0.5,
) -> SlipModel:
    """Two legs mirrored across the body axis, both slipping; legs point
    outward at rest."""
    geometry = LeggedModel(
        hips=np.array([[hip_offset, half_width], [hip_offset, -half_width]]),
        leg_lengths=np.full(2, leg_length),
        rest_angles=np.array([0.5 * math.pi, -0.5 * math.pi]),
        selector="fixed",
        fixed_contacts=frozenset({0, 1}),
    )
    return SlipModel(geometry, slip_tangential, slip_normal, slip_yaw)


def arm_com_pose_map(lengths, masses=None) -> PoseMap:
    """Base-anchored arm tracking its mass-center position and mean heading.

    Joint i adds r[i] to the heading of link i (cumulative), link i spans its
    hinge to the next; the pose is the mass-weighted midpoint position with
    the mass-weighted mean link heading.
    """
    lengths = np.asarray(lengths, dtype=float)
    if lengths.ndim != 1 or not np.all(lengths > 0.0):
        raise ValueError("lengths must be a vector of positive link lengths")
    d = lengths.shape[0]
    masses = np.ones(d) if masses is None else np.asarray(masses, dtype=float)
    if masses.shape != (d,) or not np.all(masses > 0.0):
        raise ValueError("masses must be positive, one per link")
    total = masses.sum()

    def fn(r: np.ndarray) -> Pose:
        head = np.cumsum(r)
        dirs = np.stack([np.cos(head), np.sin(head)], axis=1)
        tips = np.cumsum(lengths[:, None] * dirs, axis=0)
        mids = tips - 0.5 * lengths[:, None] * dirs
        com = masses @ mids / total
        return Pose(com[0], com[1], float(masses @ head / total))

    return PoseMap(fn, d)


def rotate_translate_map() -> PoseMap:
    """Two-coordinate map: spin by the first coordinate, then slide the second
    along the rotated x axis."""

    def fn(r: np.ndarray) -> Pose:
        return compose(Pose(0.0, 0.0, r[0]), Pose(r[1], 0.0, 0.0))

    return PoseMap(fn, 2)


def wavy_pose_map() -> PoseMap:
    """Smooth strongly-coupled synthetic two-coordinate pose map."""

    def fn(r: np.ndarray) -> Pose:
        return Pose(
            0.9 * math.sin(r[0]) + 0.4 * r[1] * r[1],
            0.7 * (math.cos(r[0] * r[1]) - 1.0),
            0.8 * math.sin(r[1]) + 0.3 * r[0],
        )

    return PoseMap(fn, 2)
