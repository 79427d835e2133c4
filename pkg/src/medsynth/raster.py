"""Numba kernels: near-plane clipping, z-buffered triangle scan conversion and coverage counting.

Pixel (x, y) is sampled at its centre (x + 0.5, y + 0.5). Coverage is inclusive
on edges, depth test is strict (the earlier triangle keeps ties), and no face
is culled. Barycentrics written to the buffer are perspective-correct and refer
to the original (unclipped) triangle vertices.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NEAR = 0.01


@njit(cache=True, nogil=True)
def _clip_near(p, near, out_p, out_b):
    """Clip triangle ``p`` (3×3 camera space) against z >= near.

    Writes up to 4 polygon vertices into ``out_p`` with their barycentric
    coordinates (relative to the input triangle) in ``out_b``; returns count.
    """
    n = 0
    for i in range(3):
        j = (i + 1) % 3
        zi = p[i, 2]
        zj = p[j, 2]
        in_i = zi >= near
        in_j = zj >= near
        if in_i:
            for k in range(3):
                out_p[n, k] = p[i, k]
                out_b[n, k] = 0.0
            out_b[n, i] = 1.0
            n += 1
        if in_i != in_j:
            t = (near - zi) / (zj - zi)
            for k in range(3):
                out_p[n, k] = p[i, k] + t * (p[j, k] - p[i, k])
                out_b[n, k] = 0.0
            out_b[n, i] = 1.0 - t
            out_b[n, j] = t
            n += 1
    return n


@njit(cache=True, nogil=True)
def _scan(tri, sp, sb, fx, fy, cx, cy, width, height, group, mode,
          zbuf, tri_id, bary, stamp, counts):
    """Scan-convert one clipped sub-triangle.

    ``mode`` 0 writes the z-buffer outputs; mode 1 counts pixels per ``group``
    using ``stamp`` so each pixel counts once per group.
    """
    u0 = cx + fx * sp[0, 0] / sp[0, 2]
    v0 = cy + fy * sp[0, 1] / sp[0, 2]
    u1 = cx + fx * sp[1, 0] / sp[1, 2]
    v1 = cy + fy * sp[1, 1] / sp[1, 2]
    u2 = cx + fx * sp[2, 0] / sp[2, 2]
    v2 = cy + fy * sp[2, 1] / sp[2, 2]
    area = (u1 - u0) * (v2 - v0) - (v1 - v0) * (u2 - u0)
    if area == 0.0 or not np.isfinite(area):
        return
    iz0 = 1.0 / sp[0, 2]
    iz1 = 1.0 / sp[1, 2]
    iz2 = 1.0 / sp[2, 2]
    xmin = max(int(np.floor(min(u0, u1, u2) - 0.5)), 0)
    xmax = min(int(np.ceil(max(u0, u1, u2) - 0.5)), width - 1)
    ymin = max(int(np.floor(min(v0, v1, v2) - 0.5)), 0)
    ymax = min(int(np.ceil(max(v0, v1, v2) - 0.5)), height - 1)
    inv_area = 1.0 / area
    for y in range(ymin, ymax + 1):
        py = y + 0.5
        for x in range(xmin, xmax + 1):
            px = x + 0.5
            w0 = ((u1 - px) * (v2 - py) - (v1 - py) * (u2 - px)) * inv_area
            w1 = ((u2 - px) * (v0 - py) - (v2 - py) * (u0 - px)) * inv_area
            w2 = ((u0 - px) * (v1 - py) - (v0 - py) * (u1 - px)) * inv_area
            if w0 < 0.0 or w1 < 0.0 or w2 < 0.0:
                continue
            if mode == 1:
                if stamp[y, x] != group:
                    stamp[y, x] = group
                    counts[group] += 1
                continue
            iz = w0 * iz0 + w1 * iz1 + w2 * iz2
            z = 1.0 / iz
            if z < zbuf[y, x]:
                zbuf[y, x] = z
                tri_id[y, x] = tri
                for k in range(3):
                    bary[y, x, k] = (w0 * iz0 * sb[0, k] + w1 * iz1 * sb[1, k] + w2 * iz2 * sb[2, k]) * z


@njit(cache=True, nogil=True)
def _run(verts, tris, groups, fx, fy, cx, cy, width, height, near, mode,
         zbuf, tri_id, bary, stamp, counts):
    p = np.empty((3, 3))
    poly_p = np.empty((4, 3))
    poly_b = np.empty((4, 3))
    sp = np.empty((3, 3))
    sb = np.empty((3, 3))
    for t in range(tris.shape[0]):
        for i in range(3):
            for k in range(3):
                p[i, k] = verts[tris[t, i], k]
        if p[0, 2] < near and p[1, 2] < near and p[2, 2] < near:
            continue
        n = _clip_near(p, near, poly_p, poly_b)
        for f in range(1, n - 1):
            for k in range(3):
                sp[0, k] = poly_p[0, k]
                sb[0, k] = poly_b[0, k]
                sp[1, k] = poly_p[f, k]
                sb[1, k] = poly_b[f, k]
                sp[2, k] = poly_p[f + 1, k]
                sb[2, k] = poly_b[f + 1, k]
            _scan(t, sp, sb, fx, fy, cx, cy, width, height, groups[t], mode,
                  zbuf, tri_id, bary, stamp, counts)


def zbuffer(verts_cam: np.ndarray, tris: np.ndarray, intrinsics, size, near: float = NEAR):
    """Nearest triangle per pixel.

    Returns ``(tri_id, depth, bary)``: int32 (-1 = empty), float64 camera z
    (inf = empty) and float64 (H, W, 3) perspective-correct barycentrics.
    """
    fx, fy, cx, cy = (float(v) for v in intrinsics)
    width, height = size
    zbuf = np.full((height, width), np.inf)
    tri_id = np.full((height, width), -1, dtype=np.int32)
    bary = np.zeros((height, width, 3))
    dummy_stamp = np.zeros((1, 1), dtype=np.int32)
    dummy_counts = np.zeros(1, dtype=np.int64)
    groups = np.zeros(len(tris), dtype=np.int32)
    _run(np.ascontiguousarray(verts_cam, dtype=np.float64), np.ascontiguousarray(tris, dtype=np.int32), groups,
         fx, fy, cx, cy, int(width), int(height), float(near), 0, zbuf, tri_id, bary, dummy_stamp, dummy_counts)
    return tri_id, zbuf, bary


def coverage(verts_cam: np.ndarray, tris: np.ndarray, groups: np.ndarray, num_groups: int, intrinsics, size,
             near: float = NEAR) -> np.ndarray:
    """Pixels each group of triangles would cover if rendered alone (same sampling rule as ``zbuffer``).

    Triangles of one group must be contiguous in ``tris``.
    """
    fx, fy, cx, cy = (float(v) for v in intrinsics)
    width, height = size
    stamp = np.full((height, width), -1, dtype=np.int32)
    counts = np.zeros(max(num_groups, 1), dtype=np.int64)
    zbuf = np.zeros((1, 1))
    tri_id = np.zeros((1, 1), dtype=np.int32)
    bary = np.zeros((1, 1, 3))
    _run(np.ascontiguousarray(verts_cam, dtype=np.float64), np.ascontiguousarray(tris, dtype=np.int32),
         np.ascontiguousarray(groups, dtype=np.int32), fx, fy, cx, cy, int(width), int(height), float(near), 1,
         zbuf, tri_id, bary, stamp, counts)
    return counts[:num_groups]


@njit(cache=True, nogil=True)
def _texel(tex, off, w, h, xi, yi, c):
    xi = xi % w
    yi = yi % h
    return float(tex[off + (yi * w + xi) * 3 + c])


@njit(cache=True, nogil=True)
def _shade_kernel(tri_id, bary, zbuf, tris, tri_owner, verts, normals, uvs, eye,
                  tex, tex_off, tex_w, tex_h, class_ids, inst_ids,
                  ambient, light_kind, light_vec, light_rgb, depth_max,
                  rgb, depth, class_seg, instance_seg):
    height, width = tri_id.shape
    p = np.empty(3)
    n = np.empty(3)
    lit = np.empty(3)
    for y in range(height):
        for x in range(width):
            t = tri_id[y, x]
            if t < 0:
                continue
            k = tri_owner[t]
            a = tris[t, 0]
            b = tris[t, 1]
            c = tris[t, 2]
            b0 = bary[y, x, 0]
            b1 = bary[y, x, 1]
            b2 = bary[y, x, 2]
            for d in range(3):
                p[d] = b0 * verts[a, d] + b1 * verts[b, d] + b2 * verts[c, d]
                n[d] = b0 * normals[a, d] + b1 * normals[b, d] + b2 * normals[c, d]
            norm = np.sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
            if norm < 1e-12:
                norm = 1e-12
            facing = 0.0
            for d in range(3):
                n[d] /= norm
                facing += n[d] * (eye[d] - p[d])
            if facing < 0.0:
                for d in range(3):
                    n[d] = -n[d]
            u = b0 * uvs[a, 0] + b1 * uvs[b, 0] + b2 * uvs[c, 0]
            v = b0 * uvs[a, 1] + b1 * uvs[b, 1] + b2 * uvs[c, 1]

            for d in range(3):
                lit[d] = ambient
            for li in range(light_kind.shape[0]):
                if light_kind[li] == 0:
                    lx = -light_vec[li, 0]
                    ly = -light_vec[li, 1]
                    lz = -light_vec[li, 2]
                else:
                    lx = light_vec[li, 0] - p[0]
                    ly = light_vec[li, 1] - p[1]
                    lz = light_vec[li, 2] - p[2]
                ln = np.sqrt(lx * lx + ly * ly + lz * lz)
                if ln < 1e-12:
                    continue
                lam = (n[0] * lx + n[1] * ly + n[2] * lz) / ln
                if lam > 0.0:
                    for d in range(3):
                        lit[d] += lam * light_rgb[li, d]

            w = tex_w[k]
            h = tex_h[k]
            off = tex_off[k]
            fxp = u * w - 0.5
            fyp = v * h - 0.5
            x0 = int(np.floor(fxp))
            y0 = int(np.floor(fyp))
            fx = fxp - x0
            fy = fyp - y0
            for d in range(3):
                top = _texel(tex, off, w, h, x0, y0, d) * (1 - fx) + _texel(tex, off, w, h, x0 + 1, y0, d) * fx
                bot = _texel(tex, off, w, h, x0, y0 + 1, d) * (1 - fx) + _texel(tex, off, w, h, x0 + 1, y0 + 1, d) * fx
                val = np.rint((top * (1 - fy) + bot * fy) * lit[d])
                rgb[y, x, d] = min(max(val, 0.0), 255.0)
            mm = np.rint(zbuf[y, x] * 1000.0)
            depth[y, x] = min(max(mm, 1.0), depth_max)
            class_seg[y, x] = class_ids[k]
            instance_seg[y, x] = inst_ids[k]


def shade(tri_id, bary, zbuf, tris, tri_owner, verts, normals, uvs, eye, textures, class_ids, inst_ids,
          ambient, lights, rgb, depth, class_seg, instance_seg, depth_max=65535):
    """Fill all four buffers for covered pixels.

    ``lights`` is a list of ``(kind, vector, rgb_intensity)`` with kind 0 =
    directional (vector = travel direction) and 1 = point (vector = position).
    Colour = texture (bilinear, wrapped) × (ambient + Σ Lambert terms).
    """
    sizes = [t.shape[:2] for t in textures]
    flat = np.concatenate([np.ascontiguousarray(t[..., :3], dtype=np.uint8).ravel() for t in textures])
    tex_off = np.cumsum([0] + [h * w * 3 for h, w in sizes])[:-1].astype(np.int64)
    tex_w = np.array([w for _, w in sizes], dtype=np.int64)
    tex_h = np.array([h for h, _ in sizes], dtype=np.int64)
    kinds = np.array([l[0] for l in lights], dtype=np.int64)
    vecs = np.array([l[1] for l in lights], dtype=np.float64).reshape(-1, 3)
    cols = np.array([l[2] for l in lights], dtype=np.float64).reshape(-1, 3)
    _shade_kernel(tri_id, bary, zbuf, np.ascontiguousarray(tris, dtype=np.int32),
                  np.ascontiguousarray(tri_owner, dtype=np.int32),
                  np.ascontiguousarray(verts, dtype=np.float64), np.ascontiguousarray(normals, dtype=np.float64),
                  np.ascontiguousarray(uvs, dtype=np.float64), np.asarray(eye, dtype=np.float64),
                  flat, tex_off, tex_w, tex_h, np.asarray(class_ids, dtype=np.int64),
                  np.asarray(inst_ids, dtype=np.int64), float(ambient), kinds, vecs, cols, float(depth_max),
                  rgb, depth, class_seg, instance_seg)
