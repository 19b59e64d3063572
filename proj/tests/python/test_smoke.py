import math
import random

import numpy as np
import pytest

import csbc


def test_jaccard_third():
    a = csbc.BoundingBox(0, 0, 10, 10)
    b = csbc.BoundingBox(5, 0, 10, 10)
    assert csbc.jaccard(a, b) == pytest.approx(1 / 3, abs=1e-15)
    assert csbc.jaccard(a, a) == 1.0


def test_degenerate_box_raises_library_error():
    with pytest.raises(csbc.InputError):
        csbc.BoundingBox(0, 0, 0, 5)
    assert issubclass(csbc.InputError, csbc.Error)


def test_pls_full_rank_matches_lstsq():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(20, 6))
    y = X @ np.array([0.5, 0, 0, -1.5, 0, 0.2]) + 0.4 * rng.normal(size=20) + 1
    model = csbc.fit_pls(X, y, 6)
    A = np.column_stack([np.ones(20), X])
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    np.testing.assert_allclose(model.predict(X), A @ beta, atol=1e-8)
    T = model.transform(X)
    gram = T.T @ T
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() <= 1e-8 * np.abs(np.diag(gram)).max()


def test_pls_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 4))
    y = X[:, 0] - X[:, 2]
    model = csbc.fit_pls(X, y, 2)
    model.save(tmp_path / "m.plsmodel")
    again = csbc.PlsModel.load(tmp_path / "m.plsmodel")
    np.testing.assert_array_equal(again.predict(X), model.predict(X))


def two_frame_fixture():
    dets = csbc.read_detections_text(
        "a 0 0 10 20 0.9\na 100 0 10 20 0.8\na 51 0 10 20 0.7\nb 200 0 10 20 0.6\nb 0 1 10 20 0.5\n", "d")
    gts = [csbc.GroundTruthBox("a", csbc.BoundingBox(0, 0, 10, 20)),
           csbc.GroundTruthBox("a", csbc.BoundingBox(50, 0, 10, 20)),
           csbc.GroundTruthBox("b", csbc.BoundingBox(0, 0, 10, 20))]
    return dets, gts


def test_lamr_fixture():
    dets, gts = two_frame_fixture()
    curve = csbc.det_curve(dets, gts, 0.5)
    assert [(p.fppi, p.miss_rate) for p in curve.points] == pytest.approx([(0, 2 / 3), (0.5, 1 / 3), (1, 0)])
    expected = 100 * ((2 / 3) ** 7 * (1 / 3) * 1e-5) ** (1 / 9)
    assert csbc.log_average_miss_rate(curve) == pytest.approx(expected, abs=1e-12)
    empty = csbc.det_curve(csbc.DetectionSet("e"), gts)
    assert f"{csbc.log_average_miss_rate(empty):.2f}" == "100.00"


def reference_sc(root, others, cal, threshold):
    out = []
    for r in root.flatten():
        total, supported = r.score, False
        for s in others:
            for w in s.frame(r.frame_id):
                j = csbc.jaccard(r.bbox, w.bbox)
                if j >= threshold:
                    supported = True
                    total += cal[s.detector_id].apply(w.score) * j
        if supported:
            out.append((r.frame_id, r.bbox.x, r.bbox.y, total))
    return out


def test_sc_matches_double_loop_and_ignores_order():
    rng = random.Random(4)
    root = csbc.DetectionSet("root")
    others = [csbc.DetectionSet(n) for n in ("b", "c", "d")]
    for f in ("f1", "f2"):
        for _ in range(6):
            root.add(csbc.Detection(f, csbc.BoundingBox(rng.uniform(0, 60), rng.uniform(0, 60), 20, 40),
                                    rng.uniform(-1, 1), "root"))
        for s in others:
            for _ in range(8):
                s.add(csbc.Detection(f, csbc.BoundingBox(rng.uniform(0, 60), rng.uniform(0, 60), 20, 40),
                                     rng.uniform(0, 5), s.detector_id))
    cal = {s.detector_id: csbc.CalibrationMap(s.detector_id, rng.uniform(0.1, 2), rng.uniform(-1, 1), 0, 5)
           for s in others}
    cfg = csbc.FusionConfig()
    cfg.overlap_threshold = 0.3
    fused = csbc.fuse_sc(root, others, cal, cfg)
    got = [(d.frame_id, d.bbox.x, d.bbox.y, d.score) for d in fused.fused.flatten()]
    want = reference_sc(root, others, cal, 0.3)
    assert len(got) == len(want)
    for g, w in zip(got, want):
        assert g[:3] == w[:3]
        assert g[3] == pytest.approx(w[3], abs=1e-12)
    assert fused.stats.windows_out + fused.stats.discarded == fused.stats.windows_in
    assert csbc.fuse_sc(root, others[::-1], cal, cfg).fused.to_text() == fused.fused.to_text()


def test_missing_calibration_is_config_error():
    root = csbc.DetectionSet("root")
    root.add(csbc.Detection("f", csbc.BoundingBox(0, 0, 10, 20), 1.0, "root"))
    other = csbc.DetectionSet("b")
    with pytest.raises(csbc.ConfigError):
        csbc.fuse_sc(root, [other], {})


def test_csbc_with_constant_images_and_trained_models():
    image, gts = csbc.generate_scene(7)
    assert image.shape == (256, 384)
    images = csbc.InMemoryImages()
    images.insert("f000000", image)
    extractor = csbc.FeatureExtractor(csbc.Descriptor.GRAY)
    root = csbc.DetectionSet("root")
    support = csbc.DetectionSet("b")
    for g in gts:
        root.add(csbc.Detection("f000000", g.bbox, 1.0, "root"))
        support.add(csbc.Detection("f000000", g.bbox, 2.0, "b"))
        support.add(csbc.Detection("f000000", g.bbox.translated(g.bbox.w, 0), 1.0, "b"))
    model = csbc.train_detector_model(support, gts, images, extractor, components=1)
    assert model.descriptor == csbc.Descriptor.GRAY
    cal = {"b": csbc.CalibrationMap.identity("b")}
    result = csbc.fuse_csbc(root, [support], cal, {"b": model}, images, extractor)
    assert len(result.fused) == len(gts)
    for d in result.fused.flatten():
        assert 1.0 <= d.score <= 1.0 + 2.0 * 2 + 1e-12


def test_descriptor_lengths():
    patch = np.full((128, 64), 0.5)
    assert len(csbc.hog(patch)) == 7 * 15 * 36
    assert len(csbc.glcm(patch)) == 20
    assert len(csbc.gray(patch)) == 16 * 32
    assert not any(math.isnan(v) for v in csbc.glcm(patch))


def test_small_experiment_runs():
    r = csbc.run_experiment(0, csbc.Descriptor.GRAY, train_frames=30, test_frames=20, components=3)
    for v in (r.lamr_root, r.lamr_sc, r.lamr_csbc):
        assert 0 <= v <= 100
