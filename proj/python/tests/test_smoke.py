import numpy as np
import pytest

import siedob


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    config = siedob.make_toy(str(root), train_count=3, test_count=2, seed=4)
    for stage in ("BACKGROUND", "OBJECT_INPAINT", "OBJECT_GEN", "FUSION"):
        losses = siedob.train_stage(config, stage, steps=2)
        assert losses and all(np.isfinite(r["total"]) for r in losses)
    assert siedob.build_bank(config) > 0
    return root, config


def load_sample(root):
    import cv2

    d = root / "train" / "0000"
    image = cv2.imread(str(d / "image.png"), cv2.IMREAD_COLOR)[:, :, ::-1].astype(np.float32) / 255.0
    seg = cv2.imread(str(d / "seg.png"), cv2.IMREAD_UNCHANGED).astype(np.int32)
    inst = cv2.imread(str(d / "inst.png"), cv2.IMREAD_UNCHANGED).astype(np.int32)
    return image, seg, inst


def test_empty_mask_is_identity(workspace):
    root, config = workspace
    p = siedob.Pipeline(config)
    image, seg, inst = load_sample(root)
    out = p.edit(image, seg, np.zeros(seg.shape, np.uint8), instances=inst)
    assert np.array_equal(out["image"], image)
    assert out["instances"] == []


def test_edit_preserves_known_pixels_and_is_seeded(workspace):
    root, config = workspace
    p = siedob.Pipeline(config)
    assert "F_net" in p.available and "bank" in p.available
    image, seg, inst = load_sample(root)
    mask = np.zeros(seg.shape, np.uint8)
    mask[10:40, 8:50] = 1
    a = p.edit(image, seg, mask, instances=inst, seed=3)
    b = p.edit(image, seg, mask, instances=inst, seed=3)
    assert np.array_equal(a["image"], b["image"])
    keep = mask == 0
    assert np.array_equal(a["image"][keep], image[keep])
    assert a["image"].min() >= 0.0 and a["image"].max() <= 1.0


def test_bad_inputs_raise(workspace):
    root, config = workspace
    p = siedob.Pipeline(config)
    image, seg, _ = load_sample(root)
    with pytest.raises(ValueError):
        p.edit(image, seg, np.zeros((8, 8), np.uint8))
    with pytest.raises(ValueError):
        p.edit(image, seg, np.ones(seg.shape, np.uint8), styles={"unicorn": 0})
    with pytest.raises(ValueError):
        siedob.train_stage(config, "NOT_A_STAGE")


def test_disassemble_partitions_edit_region():
    image = np.random.default_rng(0).random((32, 32, 3), dtype=np.float32)
    seg = np.zeros((32, 32), np.int32)
    seg[8:20, 8:20] = 3
    mask = np.zeros((32, 32), np.uint8)
    mask[4:24, 4:24] = 1
    d = siedob.disassemble(image, seg, mask, num_classes=5, foreground=[3, 4], crop_size=16)
    assert len(d["objects"]) == 1
    obj = d["objects"][0]
    assert obj["mode"] == "GENERATE"
    union = d["background_mask"].astype(bool) | obj["mask"].astype(bool)
    assert not np.any(d["background_mask"].astype(bool) & obj["mask"].astype(bool))
    assert np.all(union[mask == 1])
    assert obj["crop"].shape == (16, 16, 3)


def test_frechet_and_masks():
    x = np.random.default_rng(1).normal(size=(200, 3))
    assert siedob.frechet_distance(x, x) < 1e-6
    assert siedob.frechet_distance(x, x + 2.0) == pytest.approx(12.0, rel=1e-6)
    m = siedob.training_mask("free_form", 64, 64, 5)
    assert m.shape == (64, 64) and m.dtype == np.uint8
    assert np.array_equal(m, siedob.training_mask("free_form", 64, 64, 5))


def test_evaluate_reports_metrics(workspace):
    _, config = workspace
    metrics = siedob.evaluate(config, seed=1)
    assert {"l1", "paired_distance", "diversity"} <= set(metrics)
