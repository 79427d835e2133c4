import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from medsynth.annotate import (
    BoundingBox2D,
    FrameAnnotation,
    ObjectAnnotation,
    annotate_frame,
    annotation_from_dict,
    annotation_to_dict,
    bbox_from_mask,
    coco_document,
    export_frame,
    export_manifest,
    read_frame,
)
from medsynth.assets import AssetLibrary
from medsynth.dataset import DatasetManifest
from medsynth.errors import ConsistencyError, ValidationError
from medsynth.render import FrameBuffers, render_frame
from medsynth.scene import CameraModel, FrameSpec, compose

from oracles import scan_bbox


@given(st.integers(0, 2**31 - 1), st.floats(0.0, 0.3))
def test_bbox_matches_pixel_scan(seed, density):
    rng = np.random.default_rng(seed)
    seg = np.where(rng.random((17, 23)) < density, 4, 0).astype(np.uint16)
    box = bbox_from_mask(seg, 4)
    want = scan_bbox(seg == 4)
    assert (None if box is None else tuple(box.as_list())) == want


def test_single_pixel_box():
    seg = np.zeros((10, 10), np.uint16)
    seg[3, 7] = 2
    assert bbox_from_mask(seg, 2).as_list() == [7, 3, 8, 4]


def test_box_validation():
    with pytest.raises(ValidationError):
        BoundingBox2D(3, 3, 3, 5)
    with pytest.raises(ValidationError):
        BoundingBox2D(0, 0, 11, 5).check_inside(10, 10)
    BoundingBox2D(0, 0, 10, 10).check_inside(10, 10)


def test_duplicate_instance_ids_invalid():
    cam = CameraModel(10, 10, 5, 5, 10, 10)
    obj = ObjectAnnotation(0, 1, BoundingBox2D(0, 0, 2, 2), 4, 1.0, (0.0, 0.0, 0.0))
    with pytest.raises(ValidationError):
        FrameAnnotation(0, cam, (obj, obj), 0, "DR")


@pytest.fixture(scope="module")
def rendered(small_dr_config):
    library = AssetLibrary(small_dr_config)
    out = []
    for i in range(4):
        spec = compose(small_dr_config, i * 7, 42)
        buffers, instances = render_frame(spec, library)
        out.append((spec, buffers, instances, annotate_frame(buffers, spec, instances, 0.0)))
    return out


def test_boxes_match_instance_masks(rendered):
    for spec, buffers, instances, ann in rendered:
        w, h = buffers.size
        for obj in ann.objects:
            if obj.class_id == 0:
                ids = [i.instance_id for i in instances if i.character == 0]
                mask = np.isin(buffers.instance_seg, ids)
            else:
                mask = buffers.instance_seg == obj.instance_id
            assert tuple(obj.bbox.as_list()) == scan_bbox(mask)
            assert obj.visible_pixels == int(mask.sum())
            obj.bbox.check_inside(w, h)


def test_human_box_contains_garment_boxes(rendered):
    for _, _, _, ann in rendered:
        human = [o for o in ann.objects if o.class_id == 0]
        assert len(human) <= 1
        for o in ann.objects:
            if human and o.class_id != 0:
                assert human[0].bbox.contains(o.bbox)


def test_only_detection_classes_annotated(rendered):
    for _, _, _, ann in rendered:
        assert all(0 <= o.class_id <= 6 for o in ann.objects)
        assert all(0.0 < o.visibility_fraction <= 1.0 for o in ann.objects)


def test_visibility_threshold_filters(rendered):
    spec, buffers, instances, full = rendered[0]
    strict = annotate_frame(buffers, spec, instances, 0.999)
    assert {o.instance_id for o in strict.objects} <= {o.instance_id for o in full.objects}
    assert all(o.visibility_fraction >= 0.999 for o in strict.objects)


def test_occluded_garment_visibility():
    # two overlapping instances; the rear one is half hidden
    cam = CameraModel(10, 10, 5, 5, 10, 10)
    seg = np.zeros((10, 10), np.uint16)
    seg[2:8, 2:8] = 1 + 8 * 0 + 3  # pants of character 0
    seg[2:8, 2:5] = 1  # body in front
    from medsynth.body_model import TemplateMesh
    from medsynth.render import RenderInstance

    mesh = TemplateMesh.from_arrays(np.zeros((3, 3)), [[0, 1, 2]])
    tex = np.zeros((2, 2, 3), np.uint8)
    instances = [RenderInstance(mesh, tex, 0, 1, character=0), RenderInstance(mesh, tex, 3, 4, character=0)]
    cls = np.where(seg == 1, 0, np.where(seg == 4, 3, 255)).astype(np.uint8)
    buffers = FrameBuffers(np.zeros((10, 10, 3), np.uint8), (seg > 0).astype(np.uint16), cls, seg,
                           {1: 18, 4: 36}, {0: 36})
    spec = FrameSpec(0, 0, "DR", (), cam, (), 1.0)
    ann = annotate_frame(buffers, spec, instances, 0.05)
    by_class = {o.class_id: o for o in ann.objects}
    assert by_class[3].visibility_fraction == pytest.approx(0.5)
    assert by_class[3].bbox.as_list() == [5, 2, 8, 8]
    assert by_class[0].bbox.as_list() == [2, 2, 8, 8]
    assert by_class[0].visibility_fraction == pytest.approx(1.0)
    assert len(annotate_frame(buffers, spec, instances, 0.6).objects) == 1


def test_unknown_instance_in_buffer(rendered):
    spec, buffers, instances, _ = rendered[0]
    with pytest.raises(ConsistencyError):
        annotate_frame(buffers, spec, instances[:1], 0.0)


def test_json_round_trip(rendered, tmp_path):
    ann = rendered[1][3]
    path = export_frame(ann, tmp_path / "a.json")
    again = read_frame(path)
    assert annotation_to_dict(again) == annotation_to_dict(ann)
    doc = json.loads(path.read_text())
    assert set(doc["objects"][0]) >= {"class_id", "instance_id", "bbox", "visibility", "world_position"}
    assert annotation_from_dict(doc).camera == ann.camera


def test_manifest_export(rendered, tmp_path):
    frames = [r[3] for r in rendered]
    path = export_manifest(frames, "native", tmp_path / "manifest.json", "val")
    manifest = DatasetManifest.load(path)
    assert [e.id for e in manifest.entries] == sorted(f"val/{f.frame_index:06d}" for f in frames)
    coco = coco_document(frames)
    assert len(coco["images"]) == 4
    assert len(coco["annotations"]) == sum(len(f.objects) for f in frames)
    with pytest.raises(ValidationError):
        export_manifest(frames + frames[:1], "native", tmp_path / "m2.json")
