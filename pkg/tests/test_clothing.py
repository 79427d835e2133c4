import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from matplotlib.colors import rgb_to_hsv

from medsynth.body_model import Pose, SkinWeights, TemplateMesh, apply_shape, quat_from_axis_angle, skin_mesh
from medsynth.clothing import (
    PaletteColor,
    PaletteSpec,
    bind_garment,
    load_garment,
    make_palette_variants,
    recolor_texture,
    save_garment_mesh,
    transfer_blendshapes,
    transfer_weights,
)
from medsynth.errors import AssetError
from medsynth.procedural import garment_mesh, garment_texture


def brute_force_transfer(garment_v, body_v, body_dense):
    """Per-vertex loop: 3 nearest body vertices (ties to lower index), inverse-distance blend, top 4."""
    out = []
    for g in garment_v:
        d = [(float(np.linalg.norm(g - b)), i) for i, b in enumerate(body_v)]
        d.sort()
        near = d[:3]
        if near[0][0] <= 1e-12:
            blend = body_dense[near[0][1]].copy()
        else:
            inv = np.array([1.0 / x for x, _ in near])
            inv /= inv.sum()
            blend = sum(w * body_dense[i] for w, (_, i) in zip(inv, near))
        out.append(blend)
    return SkinWeights.from_dense(np.array(out))


def test_weight_transfer_matches_loop(rng):
    body_v = rng.normal(size=(40, 3))
    dense = rng.random((40, 6))
    dense /= dense.sum(1, keepdims=True)
    body = TemplateMesh.from_arrays(body_v, np.zeros((0, 3), dtype=int))
    garment = TemplateMesh.from_arrays(rng.normal(size=(25, 3)), np.zeros((0, 3), dtype=int))
    got = transfer_weights(garment, body, SkinWeights.from_dense(dense))
    want = brute_force_transfer(garment.vertices, body_v, SkinWeights.from_dense(dense).to_dense(6))
    assert np.allclose(got.to_dense(6), want.to_dense(6), atol=1e-12)


def test_weight_transfer_tie_prefers_lower_index():
    body = TemplateMesh.from_arrays([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [5, 5, 5]],
                                    np.zeros((0, 3), dtype=int))
    dense = np.eye(5)
    garment = TemplateMesh.from_arrays([[0, 0, 0]], np.zeros((0, 3), dtype=int))
    w = transfer_weights(garment, body, SkinWeights.from_dense(dense)).to_dense(5)[0]
    assert np.allclose(w, [1 / 3, 1 / 3, 1 / 3, 0, 0])


def test_coincident_vertices_deform_with_body(male_body, rng):
    body = male_body
    picks = rng.choice(body.mesh.num_vertices, 60, replace=False)
    garment = TemplateMesh.from_arrays(body.mesh.vertices[picks], np.zeros((0, 3), dtype=int))
    asset = bind_garment("g", garment, "shirt", "designed", body, np.zeros((4, 4, 3), np.uint8))
    coeffs = rng.normal(size=10)
    q = np.stack([quat_from_axis_angle(a, t) for a, t in
                  zip(rng.normal(size=(21, 3)), rng.uniform(-0.5, 0.5, 21))])
    pose = Pose(q, rng.normal(size=3))
    shaped_body = apply_shape(body.mesh, body.basis, coeffs)
    posed_body = skin_mesh(shaped_body, body.weights, body.skeleton, pose).vertices[picks]
    shaped_garment = apply_shape(garment, asset.shape_basis, coeffs)
    posed_garment = skin_mesh(shaped_garment, asset.weights, body.skeleton, pose).vertices
    assert np.abs(posed_garment - posed_body).max() <= 1e-5


def test_blendshape_transfer_coincident_copies(male_body):
    picks = np.arange(0, 1900, 37)
    garment = TemplateMesh.from_arrays(male_body.mesh.vertices[picks], np.zeros((0, 3), dtype=int))
    basis = transfer_blendshapes(garment, male_body.mesh, male_body.basis)
    assert np.allclose(basis.displacements, male_body.basis.displacements[:, picks])


def test_transfer_empty_garment(male_body):
    empty = TemplateMesh.from_arrays(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
    with pytest.raises(AssetError):
        transfer_weights(empty, male_body.mesh, male_body.weights)


def test_bound_garment_weights_normalized(male_body):
    mesh = garment_mesh("gown", "male", "scanned", seed=1)
    asset = bind_garment("gown", mesh, "gown", "scanned", male_body, garment_texture("gown", "scanned", 1))
    assert np.allclose(asset.weights.weights.sum(1), 1.0, atol=1e-9)
    assert asset.shape_basis.num_vertices == mesh.num_vertices


# ---------------------------------------------------------------------------
# palette recoloring


def _hue_distance(a, b):
    d = np.abs(a - b) % 360.0
    return np.minimum(d, 360.0 - d)


@given(st.integers(0, 2**31 - 1), st.sampled_from(["blue", "green", "light_pink"]))
def test_recolor_hue_and_value(seed, color):
    rng = np.random.default_rng(seed)
    tex = rng.integers(20, 256, size=(8, 8, 3), dtype=np.uint8)
    palette = PaletteSpec()
    c = palette.colors[color]
    out = recolor_texture(tex, c.hue, seed, palette, c)
    hsv = rgb_to_hsv(out.astype(float) / 255)
    # hue is only well defined where the output is not near-gray
    colored = (hsv[..., 1] > 0.1) & (hsv[..., 2] > 0.2)
    assert np.all(_hue_distance(hsv[..., 0][colored] * 360, c.hue) <= palette.hue_jitter + 3.0)
    assert np.abs(out.max(-1).astype(int) - tex.max(-1).astype(int)).max() <= 1


def test_recolor_gray_takes_hue():
    tex = np.full((4, 4, 3), 200, np.uint8)
    palette = PaletteSpec(hue_jitter=0.0)
    out = recolor_texture(tex, 210.0, 0, palette)
    hsv = rgb_to_hsv(out.astype(float) / 255)
    assert np.allclose(hsv[..., 0] * 360, 210.0, atol=2.0)
    assert np.all(hsv[..., 1] >= 0.3)


def test_recolor_deterministic():
    tex = garment_texture("shirt", "designed", 4)
    a = recolor_texture(tex, 140.0, 9, PaletteSpec())
    b = recolor_texture(tex, 140.0, 9, PaletteSpec())
    assert np.array_equal(a, b)


def test_palette_variants_per_color():
    variants = make_palette_variants(PaletteSpec(), 3, seed=5)
    assert len(variants) == 9
    assert sorted({v.color for v in variants}) == ["blue", "green", "light_pink"]


def test_palette_color_validation():
    with pytest.raises(ValueError):
        PaletteColor(400.0)
    with pytest.raises(ValueError):
        PaletteSpec(colors={})


# ---------------------------------------------------------------------------
# files


def test_load_garment_binds_each_body(tmp_path, male_body):
    from medsynth.procedural import capsule_human, write_png

    mesh = garment_mesh("pants", "male", "designed")
    write_png(tmp_path / "pants.png", garment_texture("pants", "designed", 0))
    save_garment_mesh(tmp_path / "pants.json", mesh, "pants", "designed", "pants.png")
    bodies = {"male": male_body, "female": capsule_human("female")}
    assets = load_garment(tmp_path / "pants.json", bodies, PaletteSpec())
    assert [a.name for a in assets] == ["pants@female", "pants@male"]
    variant = assets[0].texture_variant(0, PaletteSpec())
    assert variant.shape == assets[0].base_texture.shape


def test_load_garment_bad_file(tmp_path, male_body):
    (tmp_path / "bad.json").write_text(json.dumps({"vertices": []}))
    with pytest.raises(AssetError):
        load_garment(tmp_path / "bad.json", {"male": male_body}, PaletteSpec())


def test_unknown_garment_class(male_body):
    mesh = garment_mesh("hat")
    with pytest.raises(AssetError):
        bind_garment("x", mesh, "scarf", "designed", male_body, np.zeros((2, 2, 3), np.uint8))
