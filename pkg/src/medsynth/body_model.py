"""Parametric articulated body: shape blend shapes, skeleton, linear blend skinning.

Conventions: meters, right-handed, +y up. Quaternions are stored (w, x, y, z).
All containers are frozen dataclasses over numpy arrays and are treated as
immutable; every operation returns new objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AssetError, DimensionError, RangeError

MAX_INFLUENCES = 4


# ---------------------------------------------------------------------------
# quaternion / transform helpers


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_from_axis_angle(axis: Sequence[float], angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrices for (..., 4) unit quaternions; returns (..., 3, 3)."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (3, 3))
    out[..., 0, 0] = 1 - 2 * (y * y + z * z)
    out[..., 0, 1] = 2 * (x * y - w * z)
    out[..., 0, 2] = 2 * (x * z + w * y)
    out[..., 1, 0] = 2 * (x * y + w * z)
    out[..., 1, 1] = 1 - 2 * (x * x + z * z)
    out[..., 1, 2] = 2 * (y * z - w * x)
    out[..., 2, 0] = 2 * (x * z - w * y)
    out[..., 2, 1] = 2 * (y * z + w * x)
    out[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = np.moveaxis(np.asarray(a, dtype=np.float64), -1, 0)
    bw, bx, by, bz = np.moveaxis(np.asarray(b, dtype=np.float64), -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_slerp(q0: np.ndarray, q1: np.ndarray, t: float) -> np.ndarray:
    """Shortest-arc spherical interpolation, vectorized over leading axes."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = np.sum(q0 * q1, axis=-1, keepdims=True)
    q1 = np.where(dot < 0.0, -q1, q1)
    dot = np.abs(dot)
    near = dot > 0.9995
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    sin_theta = np.where(near, 1.0, np.sin(theta))
    w0 = np.where(near, 1.0 - t, np.sin((1.0 - t) * theta) / sin_theta)
    w1 = np.where(near, t, np.sin(t * theta) / sin_theta)
    return quat_normalize(w0 * q0 + w1 * q1)


def rigid(rotation: np.ndarray | None = None, translation: Sequence[float] | None = None) -> np.ndarray:
    m = np.eye(4)
    if rotation is not None:
        m[:3, :3] = rotation
    if translation is not None:
        m[:3, 3] = translation
    return m


def rigid_inverse(m: np.ndarray) -> np.ndarray:
    r = m[..., :3, :3]
    t = m[..., :3, 3]
    out = np.zeros_like(m)
    rt = np.swapaxes(r, -1, -2)
    out[..., :3, :3] = rt
    out[..., :3, 3] = -np.einsum("...ij,...j->...i", rt, t)
    out[..., 3, 3] = 1.0
    return out


def vertex_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Area-weighted unit vertex normals; unreferenced vertices get +y."""
    n_vert = len(vertices)
    normals = np.zeros((n_vert, 3))
    if len(triangles):
        v0 = vertices[triangles[:, 0]]
        face_n = np.cross(vertices[triangles[:, 1]] - v0, vertices[triangles[:, 2]] - v0)
        for k in range(3):
            idx = triangles[:, k]
            for c in range(3):
                normals[:, c] += np.bincount(idx, weights=face_n[:, c], minlength=n_vert)
    length = np.linalg.norm(normals, axis=1)
    bad = length < 1e-20
    normals[bad] = (0.0, 1.0, 0.0)
    length[bad] = 1.0
    return normals / length[:, None]


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class TemplateMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    uv_coords: np.ndarray
    vertex_normals: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        tri = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        uv = np.asarray(self.uv_coords, dtype=np.float64).reshape(-1, 2)
        n = np.asarray(self.vertex_normals, dtype=np.float64).reshape(-1, 3)
        if tri.size and (tri.min() < 0 or tri.max() >= len(v)):
            raise AssetError("triangle index out of range")
        if len(uv) != len(v):
            raise AssetError(f"uv count {len(uv)} != vertex count {len(v)}")
        if len(n) != len(v):
            raise AssetError(f"normal count {len(n)} != vertex count {len(v)}")
        if len(n) and np.abs(np.linalg.norm(n, axis=1) - 1.0).max() > 1e-5:
            raise AssetError("vertex normals must be unit length")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", tri)
        object.__setattr__(self, "uv_coords", uv)
        object.__setattr__(self, "vertex_normals", n)

    @classmethod
    def from_arrays(cls, vertices, triangles, uv_coords=None) -> "TemplateMesh":
        v = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        tri = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        uv = np.zeros((len(v), 2)) if uv_coords is None else uv_coords
        return cls(v, tri, uv, vertex_normals(v, tri))

    def with_vertices(self, vertices: np.ndarray) -> "TemplateMesh":
        """Same topology and uvs, new positions, normals recomputed."""
        vertices = np.asarray(vertices, dtype=np.float64)
        return TemplateMesh(vertices, self.triangles, self.uv_coords, vertex_normals(vertices, self.triangles))

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True, eq=False)
class ShapeBasis:
    """Per-coefficient displacement fields, shape (num_coeffs, V, 3)."""

    displacements: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.displacements, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != 3:
            raise DimensionError(f"displacements must be (K, V, 3), got {d.shape}")
        object.__setattr__(self, "displacements", d)

    @property
    def num_coeffs(self) -> int:
        return self.displacements.shape[0]

    @property
    def num_vertices(self) -> int:
        return self.displacements.shape[1]

    @classmethod
    def zeros(cls, num_coeffs: int, num_vertices: int) -> "ShapeBasis":
        return cls(np.zeros((num_coeffs, num_vertices, 3)))


@dataclass(frozen=True)
class Joint:
    name: str
    parent: int
    offset: tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class Skeleton:
    joints: tuple[Joint, ...]
    parents: np.ndarray = field(init=False, repr=False)
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        joints = tuple(self.joints)
        if not joints:
            raise AssetError("skeleton has no joints")
        for i, j in enumerate(joints):
            if i == 0:
                if j.parent != -1:
                    raise AssetError("joint 0 must be the root (parent -1)")
            elif not 0 <= j.parent < i:
                raise AssetError(f"joint {i} ({j.name}) parent {j.parent} violates topological order")
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "parents", np.array([j.parent for j in joints], dtype=np.int64))
        object.__setattr__(self, "offsets", np.array([j.offset for j in joints], dtype=np.float64).reshape(-1, 3))

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    @property
    def names(self) -> list[str]:
        return [j.name for j in self.joints]

    def index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)

    def rest_positions(self) -> np.ndarray:
        pos = np.zeros((self.joint_count, 3))
        for i in range(self.joint_count):
            p = self.parents[i]
            pos[i] = self.offsets[i] + (pos[p] if p >= 0 else 0.0)
        return pos


@dataclass(frozen=True, eq=False)
class SkinWeights:
    """Dense (V, 4) joint indices and weights; unused slots carry weight 0."""

    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        if idx.shape != w.shape or idx.ndim != 2 or idx.shape[1] > MAX_INFLUENCES:
            raise DimensionError(f"bad skin weight shapes {idx.shape} / {w.shape}")
        if (w < 0).any():
            raise AssetError("skin weights must be non-negative")
        if len(w) and np.abs(w.sum(axis=1) - 1.0).max() > 1e-6:
            raise AssetError("per-vertex skin weights must sum to 1")
        if idx.size and idx.min() < 0:
            raise AssetError("negative joint index in skin weights")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @property
    def num_vertices(self) -> int:
        return len(self.weights)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SkinWeights":
        """Keep the top-4 influences of a (V, J) weight matrix and renormalize."""
        dense = np.asarray(dense, dtype=np.float64)
        k = min(MAX_INFLUENCES, dense.shape[1])
        # stable sort: equal weights keep the lower joint index first
        order = np.argsort(-dense, axis=1, kind="stable")[:, :k]
        w = np.take_along_axis(dense, order, axis=1)
        total = w.sum(axis=1, keepdims=True)
        if (total <= 0).any():
            raise AssetError("vertex without any positive skin weight")
        w = w / total
        if k < MAX_INFLUENCES:
            pad = MAX_INFLUENCES - k
            order = np.pad(order, ((0, 0), (0, pad)))
            w = np.pad(w, ((0, 0), (0, pad)))
        return cls(order, w)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[Sequence[float]]], joint_count: int) -> "SkinWeights":
        dense = np.zeros((len(pairs), joint_count))
        for v, vertex_pairs in enumerate(pairs):
            for j, w in vertex_pairs:
                j = int(j)
                if not 0 <= j < joint_count:
                    raise AssetError(f"vertex {v}: joint index {j} out of range")
                dense[v, j] += float(w)
        return cls.from_dense(dense)

    def to_dense(self, joint_count: int) -> np.ndarray:
        dense = np.zeros((self.num_vertices, joint_count))
        rows = np.repeat(np.arange(self.num_vertices), self.indices.shape[1])
        np.add.at(dense, (rows, self.indices.ravel()), self.weights.ravel())
        return dense

    def to_pairs(self) -> list[list[list[float]]]:
        out = []
        for idx, w in zip(self.indices, self.weights):
            out.append([[int(j), float(x)] for j, x in zip(idx, w) if x > 0])
        return out


@dataclass(frozen=True, eq=False)
class Pose:
    rotations: np.ndarray
    root_translation: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.rotations, dtype=np.float64).reshape(-1, 4)
        t = np.asarray(self.root_translation, dtype=np.float64).reshape(3)
        if len(q) and np.abs(np.linalg.norm(q, axis=1) - 1.0).max() > 1e-6:
            raise RangeError("pose rotations must be unit quaternions")
        object.__setattr__(self, "rotations", q)
        object.__setattr__(self, "root_translation", t)

    @property
    def joint_count(self) -> int:
        return len(self.rotations)

    @classmethod
    def identity(cls, joint_count: int, translation=(0.0, 0.0, 0.0)) -> "Pose":
        q = np.zeros((joint_count, 4))
        q[:, 0] = 1.0
        return cls(q, np.asarray(translation, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class AnimationClip:
    """Keyframed poses; ``times`` is strictly increasing (any unit)."""

    times: np.ndarray
    rotations: np.ndarray  # (K, J, 4)
    root_translations: np.ndarray  # (K, 3)
    name: str = "clip"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        rot = np.asarray(self.rotations, dtype=np.float64)
        trans = np.asarray(self.root_translations, dtype=np.float64).reshape(-1, 3)
        if len(times) < 1:
            raise AssetError("animation clip needs at least one keyframe")
        if rot.ndim != 3 or rot.shape[0] != len(times) or rot.shape[2] != 4 or len(trans) != len(times):
            raise DimensionError("keyframe arrays disagree in length")
        if np.any(np.diff(times) <= 0):
            raise AssetError("keyframe times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rotations", quat_normalize(rot))
        object.__setattr__(self, "root_translations", trans)

    @property
    def num_keyframes(self) -> int:
        return len(self.times)

    @property
    def joint_count(self) -> int:
        return self.rotations.shape[1]

    def keyframe(self, k: int) -> Pose:
        return Pose(self.rotations[k].copy(), self.root_translations[k].copy())

    @classmethod
    def from_poses(cls, poses: Sequence[Pose], times: Sequence[float] | None = None, name: str = "clip"):
        if times is None:
            times = np.arange(len(poses), dtype=np.float64)
        return cls(
            np.asarray(times, dtype=np.float64),
            np.stack([p.rotations for p in poses]),
            np.stack([p.root_translation for p in poses]),
            name,
        )


@dataclass(frozen=True, eq=False)
class ParametricBody:
    """A complete character model: template, shape space, rig and weights."""

    mesh: TemplateMesh
    basis: ShapeBasis
    skeleton: Skeleton
    weights: SkinWeights
    name: str = "body"
    gender: str = "neutral"

    def __post_init__(self):
        n = self.mesh.num_vertices
        if self.basis.num_vertices != n:
            raise DimensionError(f"shape basis covers {self.basis.num_vertices} vertices, mesh has {n}")
        if self.weights.num_vertices != n:
            raise DimensionError(f"skin weights cover {self.weights.num_vertices} vertices, mesh has {n}")
        if self.weights.indices.size and self.weights.indices.max() >= self.skeleton.joint_count:
            raise AssetError("skin weight references a joint outside the skeleton")

    def posed(self, shape_coeffs, pose: Pose) -> TemplateMesh:
        shaped = apply_shape(self.mesh, self.basis, shape_coeffs)
        return skin_mesh(shaped, self.weights, self.skeleton, pose)


# ---------------------------------------------------------------------------
# operations


def apply_shape(template: TemplateMesh, basis: ShapeBasis, shape_coeffs) -> TemplateMesh:
    coeffs = np.asarray(shape_coeffs, dtype=np.float64).reshape(-1)
    if len(coeffs) != basis.num_coeffs:
        raise DimensionError(f"expected {basis.num_coeffs} shape coefficients, got {len(coeffs)}")
    if basis.num_vertices != template.num_vertices:
        raise DimensionError("shape basis and template disagree on vertex count")
    if not coeffs.any():
        return template
    offset = np.tensordot(coeffs, basis.displacements, axes=1)
    return template.with_vertices(template.vertices + offset)


def _local_transforms(skeleton: Skeleton, pose: Pose) -> np.ndarray:
    local = np.zeros((skeleton.joint_count, 4, 4))
    local[:, :3, :3] = quat_to_matrix(pose.rotations)
    local[:, :3, 3] = skeleton.offsets
    local[:, 3, 3] = 1.0
    return local


def forward_kinematics(skeleton: Skeleton, pose: Pose) -> np.ndarray:
    """World transform (J, 4, 4) of every joint.

    world[j] = world[parent] @ T(offset_j) @ R(q_j); the root is additionally
    preceded by the pose's root translation.
    """
    if pose.joint_count != skeleton.joint_count:
        raise DimensionError(f"pose has {pose.joint_count} joints, skeleton {skeleton.joint_count}")
    local = _local_transforms(skeleton, pose)
    world = np.empty_like(local)
    world[0] = rigid(translation=pose.root_translation) @ local[0]
    parents = skeleton.parents
    for j in range(1, skeleton.joint_count):
        world[j] = world[parents[j]] @ local[j]
    return world


def rest_transforms(skeleton: Skeleton) -> np.ndarray:
    return forward_kinematics(skeleton, Pose.identity(skeleton.joint_count))


def skinning_matrices(skeleton: Skeleton, pose: Pose) -> np.ndarray:
    """Per-joint world[j] @ inverse(rest_world[j])."""
    return forward_kinematics(skeleton, pose) @ rigid_inverse(rest_transforms(skeleton))


def skin_points(points: np.ndarray, weights: SkinWeights, skeleton: Skeleton, pose: Pose) -> np.ndarray:
    if len(points) != weights.num_vertices:
        raise DimensionError(f"{len(points)} points but weights for {weights.num_vertices}")
    mats = skinning_matrices(skeleton, pose)[:, :3, :]  # (J, 3, 4)
    blended = np.einsum("vk,vkij->vij", weights.weights, mats[weights.indices])
    return np.einsum("vij,vj->vi", blended[:, :, :3], points) + blended[:, :, 3]


def skin_mesh(mesh: TemplateMesh, weights: SkinWeights, skeleton: Skeleton, pose: Pose) -> TemplateMesh:
    return mesh.with_vertices(skin_points(mesh.vertices, weights, skeleton, pose))


def sample_animation(clip: AnimationClip, t: float) -> Pose:
    """Pose at normalized clip time ``t`` in [0, 1].

    Rotations are slerped between the bracketing keyframes, the root
    translation is interpolated linearly.
    """
    if not 0.0 <= t <= 1.0:
        raise RangeError(f"animation time {t} outside [0, 1]")
    if clip.num_keyframes == 1 or t == 0.0:
        return clip.keyframe(0)
    if t == 1.0:
        return clip.keyframe(clip.num_keyframes - 1)
    local_t = clip.times[0] + t * (clip.times[-1] - clip.times[0])
    k = int(np.searchsorted(clip.times, local_t, side="right")) - 1
    k = min(max(k, 0), clip.num_keyframes - 2)
    t0, t1 = clip.times[k], clip.times[k + 1]
    a = (local_t - t0) / (t1 - t0)
    if a <= 0.0:
        return clip.keyframe(k)
    rot = quat_slerp(clip.rotations[k], clip.rotations[k + 1], a)
    trans = (1.0 - a) * clip.root_translations[k] + a * clip.root_translations[k + 1]
    return Pose(rot, trans)


def sample_shape_coeffs(rng: np.random.Generator, num_coeffs: int, table: np.ndarray | None = None) -> np.ndarray:
    """Uniform row of ``table`` when given, else a standard normal clamped to ±3."""
    if table is not None and len(table):
        return np.asarray(table[rng.integers(len(table))], dtype=np.float64)
    return np.clip(rng.standard_normal(num_coeffs), -3.0, 3.0)


# ---------------------------------------------------------------------------
# file formats


def body_to_dict(body: ParametricBody) -> dict:
    return {
        "name": body.name,
        "gender": body.gender,
        "vertices": body.mesh.vertices.tolist(),
        "triangles": body.mesh.triangles.tolist(),
        "uvs": body.mesh.uv_coords.tolist(),
        "shape_basis": body.basis.displacements.tolist(),
        "skeleton": [{"name": j.name, "parent": j.parent, "offset": list(j.offset)} for j in body.skeleton.joints],
        "skin_weights": body.weights.to_pairs(),
    }


def skeleton_from_list(items: list[dict]) -> Skeleton:
    return Skeleton(tuple(Joint(str(d["name"]), int(d["parent"]), tuple(float(x) for x in d["offset"])) for d in items))


def body_from_dict(data: dict) -> ParametricBody:
    try:
        mesh = TemplateMesh.from_arrays(data["vertices"], data["triangles"], data["uvs"])
        skeleton = skeleton_from_list(data["skeleton"])
        basis_raw = data.get("shape_basis") or []
        if len(basis_raw):
            basis = ShapeBasis(np.asarray(basis_raw, dtype=np.float64))
        else:
            basis = ShapeBasis.zeros(10, mesh.num_vertices)
        weights = SkinWeights.from_pairs(data["skin_weights"], skeleton.joint_count)
    except KeyError as exc:
        raise AssetError(f"body asset missing field {exc}") from None
    return ParametricBody(mesh, basis, skeleton, weights, data.get("name", "body"), data.get("gender", "neutral"))


def load_body(path: str | Path) -> ParametricBody:
    with open(path) as fh:
        return body_from_dict(json.load(fh))


def save_body(body: ParametricBody, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(body_to_dict(body), fh)


def clip_to_list(clip: AnimationClip) -> list[dict]:
    return [
        {
            "time": float(clip.times[k]),
            "root_translation": clip.root_translations[k].tolist(),
            "rotations": clip.rotations[k].tolist(),
        }
        for k in range(clip.num_keyframes)
    ]


def clip_from_list(items: list[dict], name: str = "clip") -> AnimationClip:
    if not items:
        raise AssetError("animation clip file has no keyframes")
    return AnimationClip(
        np.array([k["time"] for k in items], dtype=np.float64),
        np.array([k["rotations"] for k in items], dtype=np.float64),
        np.array([k["root_translation"] for k in items], dtype=np.float64),
        name,
    )


def load_clip(path: str | Path) -> AnimationClip:
    path = Path(path)
    with open(path) as fh:
        return clip_from_list(json.load(fh), path.stem)


def save_clip(clip: AnimationClip, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(clip_to_list(clip), fh)
