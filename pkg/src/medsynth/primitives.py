"""Triangle-mesh primitives: elliptical tubes, boxes, spheres, cylinders, grids."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .body_model import TemplateMesh


@dataclass
class TubeGeometry:
    vertices: np.ndarray
    triangles: np.ndarray
    uvs: np.ndarray
    s: np.ndarray  # parameter along the axis in [0, 1], per vertex
    theta: np.ndarray  # angle around the axis, per vertex
    radial: np.ndarray  # unit outward direction, per vertex


def _frame(axis: np.ndarray, hint: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = hint - np.dot(hint, axis) * axis
    if np.linalg.norm(a) < 1e-9:
        a = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        a = a - np.dot(a, axis) * axis
    a /= np.linalg.norm(a)
    b = np.cross(axis, a)
    return a, b


def tube(
    p0,
    p1,
    rings: int,
    sides: int,
    radius: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    hint=(1.0, 0.0, 0.0),
    s_range: tuple[float, float] = (0.0, 1.0),
    theta_range: tuple[float, float] | None = None,
    cap_start: bool = False,
    cap_end: bool = False,
    uv_rect: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0),
) -> TubeGeometry:
    """Elliptical tube from ``p0`` to ``p1``.

    ``radius(s)`` returns the semi-axes along the frame vectors ``a`` (from
    ``hint``) and ``b = axis × a``. Surface points are
    ``c(s) + ra cos θ a + rb sin θ b``. A ``theta_range`` gives an open
    partial shell; caps are only added for full tubes.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    axis = p1 - p0
    axis /= np.linalg.norm(axis)
    a, b = _frame(axis, np.asarray(hint, dtype=np.float64))
    full = theta_range is None
    t0, t1 = (0.0, 2 * np.pi) if full else theta_range

    s = np.linspace(s_range[0], s_range[1], rings)
    theta = np.linspace(t0, t1, sides + 1)
    ra, rb = radius(s)
    ra = np.broadcast_to(ra, s.shape)
    rb = np.broadcast_to(rb, s.shape)
    centres = p0 + np.outer(s, p1 - p0)
    ct, st = np.cos(theta), np.sin(theta)
    verts = (
        centres[:, None, :]
        + (ra[:, None] * ct[None, :])[..., None] * a
        + (rb[:, None] * st[None, :])[..., None] * b
    ).reshape(-1, 3)
    # outward direction of the ellipse (gradient of the implicit form)
    gx = ct[None, :] / np.maximum(ra[:, None], 1e-9)
    gy = st[None, :] / np.maximum(rb[:, None], 1e-9)
    radial = (gx[..., None] * a + gy[..., None] * b).reshape(-1, 3)
    radial /= np.linalg.norm(radial, axis=1, keepdims=True)

    cols = sides + 1
    u0, v0, u1, v1 = uv_rect
    uu = u0 + (u1 - u0) * (theta - t0) / (t1 - t0)
    span = max(s_range[1] - s_range[0], 1e-9)
    vv = v0 + (v1 - v0) * (s - s_range[0]) / span
    uvs = np.stack(np.meshgrid(uu, vv), axis=-1).reshape(-1, 2)
    s_v = np.repeat(s, cols)
    th_v = np.tile(theta, rings)

    r = np.arange(rings - 1)[:, None]
    c = np.arange(sides)[None, :]
    i00 = (r * cols + c).ravel()
    i01 = i00 + 1
    i10 = i00 + cols
    i11 = i10 + 1
    tris = np.concatenate([np.stack([i00, i11, i10], 1), np.stack([i00, i01, i11], 1)])

    verts_l, tris_l, uv_l = [verts], [tris], [uvs]
    s_l, th_l, rad_l = [s_v], [th_v], [radial]
    n = len(verts)
    if full:
        for cap, ring, sign in ((cap_start, 0, -1.0), (cap_end, rings - 1, 1.0)):
            if not cap:
                continue
            centre_idx = n
            verts_l.append(centres[ring][None])
            uv_l.append(np.array([[(u0 + u1) / 2, vv[ring]]]))
            s_l.append(np.array([s[ring]]))
            th_l.append(np.array([0.0]))
            rad_l.append((sign * axis)[None])
            base = ring * cols
            ring_idx = base + np.arange(sides)
            fan = np.stack([np.full(sides, centre_idx), ring_idx + 1, ring_idx], 1)
            if sign > 0:
                fan = fan[:, [0, 2, 1]]
            tris_l.append(fan)
            n += 1
    return TubeGeometry(
        np.concatenate(verts_l),
        np.concatenate(tris_l).astype(np.int64),
        np.concatenate(uv_l),
        np.concatenate(s_l),
        np.concatenate(th_l),
        np.concatenate(rad_l),
    )


def merge(parts: list[tuple[np.ndarray, np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concatenate (vertices, triangles, uvs) triples into one mesh."""
    verts, tris, uvs = [], [], []
    offset = 0
    for v, t, uv in parts:
        verts.append(v)
        tris.append(t + offset)
        uvs.append(uv)
        offset += len(v)
    return np.concatenate(verts), np.concatenate(tris), np.concatenate(uvs)


@lru_cache(maxsize=None)
def unit_box() -> TemplateMesh:
    """Axis-aligned cube with half-extent 1, one uv square per face."""
    parts = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            u_ax, v_ax = [k for k in range(3) if k != axis]
            corners = []
            for du, dv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
                p = np.zeros(3)
                p[axis] = sign
                p[u_ax] = du
                p[v_ax] = dv
                corners.append(p)
            v = np.array(corners)
            # wind counter-clockwise seen from outside
            outward = np.cross(np.eye(3)[u_ax], np.eye(3)[v_ax])[axis] * sign > 0
            t = np.array([[0, 1, 2], [0, 2, 3]]) if outward else np.array([[0, 2, 1], [0, 3, 2]])
            uv = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=np.float64)
            parts.append((v, t, uv))
    return TemplateMesh.from_arrays(*merge(parts))


@lru_cache(maxsize=None)
def unit_sphere(rings: int = 12, sides: int = 20) -> TemplateMesh:
    geo = tube((0, -1, 0), (0, 1, 0), rings, sides,
               lambda s: (np.sqrt(np.clip(1 - (2 * s - 1) ** 2, 0, 1)),) * 2)
    return TemplateMesh.from_arrays(geo.vertices, geo.triangles, geo.uvs)


@lru_cache(maxsize=None)
def unit_cylinder(sides: int = 20) -> TemplateMesh:
    geo = tube((0, -1, 0), (0, 1, 0), 2, sides, lambda s: (1.0, 1.0), cap_start=True, cap_end=True)
    return TemplateMesh.from_arrays(geo.vertices, geo.triangles, geo.uvs)


def primitive(kind: str) -> TemplateMesh:
    if kind == "box":
        return unit_box()
    if kind == "sphere":
        return unit_sphere()
    if kind == "cylinder":
        return unit_cylinder()
    raise KeyError(f"unknown primitive {kind!r}")


def grid(
    origin, u_vec, v_vec, nu: int, nv: int, uv_repeat: tuple[float, float] = (1.0, 1.0)
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Planar quad grid spanning ``origin + [0,1]·u_vec + [0,1]·v_vec``."""
    origin = np.asarray(origin, dtype=np.float64)
    u_vec = np.asarray(u_vec, dtype=np.float64)
    v_vec = np.asarray(v_vec, dtype=np.float64)
    su = np.linspace(0, 1, nu + 1)
    sv = np.linspace(0, 1, nv + 1)
    uu, vv = np.meshgrid(su, sv)
    verts = origin + uu.reshape(-1, 1) * u_vec + vv.reshape(-1, 1) * v_vec
    uvs = np.stack([uu.ravel() * uv_repeat[0], vv.ravel() * uv_repeat[1]], 1)
    cols = nu + 1
    r = np.arange(nv)[:, None]
    c = np.arange(nu)[None, :]
    i00 = (r * cols + c).ravel()
    tris = np.concatenate([
        np.stack([i00, i00 + 1, i00 + cols + 1], 1),
        np.stack([i00, i00 + cols + 1, i00 + cols], 1),
    ])
    return verts, tris.astype(np.int64), uvs
