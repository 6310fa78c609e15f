import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from albedobench import dataset, imgio
from albedobench.errors import DegenerateInputError, ParseError, ValidationError


def square(x0, y0, side):
    return [[x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side]]


def write_minimal(tmp_path, *, mutate=None, image_shape=(8, 8, 3)):
    img_path = tmp_path / "img0.pfm"
    imgio.write_image(str(img_path), np.full(image_shape, 0.25))
    doc = {
        "version": 1,
        "scenes": [
            {
                "scene_id": "s0",
                "measurements": [{"measurement_id": "m0", "albedo": [0.4, 0.3, 0.2]}],
                "images": [
                    {
                        "image_id": "s0_v0",
                        "file": "img0.pfm",
                        "transfer": "linear",
                        "regions": [{"measurement_id": "m0", "polygons": [square(0, 0, 8)]}],
                        "judgements": [
                            {"p1": [0.1, 0.1], "p2": [0.9, 0.9], "label": "E", "weight": 1.0}
                        ],
                        "constant_shading_polygons": [],
                        "specular_polygons": [],
                    }
                ],
            }
        ],
    }
    if mutate is not None:
        mutate(doc)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(doc, indent=2))
    return str(path)


class TestLoadManifest:
    def test_minimal(self, tmp_path):
        m = dataset.load_manifest(write_minimal(tmp_path))
        assert m.version == 1
        assert len(m.scenes) == 1
        assert len(m.scenes[0].measurements) == 1
        assert len(m.scenes[0].images) == 1
        assert len(m.scenes[0].images[0].regions) == 1

    def test_unknown_measurement_id(self, tmp_path):
        def mutate(doc):
            doc["scenes"][0]["images"][0]["regions"][0]["measurement_id"] = "ghost"

        with pytest.raises(ValidationError) as exc:
            dataset.load_manifest(write_minimal(tmp_path, mutate=mutate))
        assert "ghost" in str(exc.value)

    def test_problems_are_collected(self, tmp_path):
        def mutate(doc):
            doc["scenes"][0]["measurements"][0]["albedo"] = [0.4, -0.1, 0.2]
            doc["scenes"][0]["images"][0]["transfer"] = "gamma"
            doc["scenes"][0]["images"][0]["judgements"][0]["label"] = "maybe"

        with pytest.raises(ValidationError) as exc:
            dataset.load_manifest(write_minimal(tmp_path, mutate=mutate))
        assert len(exc.value.problems) >= 3

    def test_duplicate_scene_and_measurement_ids(self, tmp_path):
        def mutate(doc):
            doc["scenes"][0]["measurements"].append(
                {"measurement_id": "m0", "albedo": [0.1, 0.1, 0.1]}
            )
            doc["scenes"].append({"scene_id": "s0", "measurements": [], "images": []})

        with pytest.raises(ValidationError) as exc:
            dataset.load_manifest(write_minimal(tmp_path, mutate=mutate))
        text = str(exc.value)
        assert "duplicate" in text

    def test_bad_version(self, tmp_path):
        def mutate(doc):
            doc["version"] = 99

        with pytest.raises(ValidationError):
            dataset.load_manifest(write_minimal(tmp_path, mutate=mutate))

    def test_missing_file(self, tmp_path):
        def mutate(doc):
            doc["scenes"][0]["images"][0]["file"] = "nope.pfm"

        with pytest.raises(ValidationError) as exc:
            dataset.load_manifest(write_minimal(tmp_path, mutate=mutate))
        assert "not found" in str(exc.value)

    def test_judgement_coord_range(self, tmp_path):
        def mutate(doc):
            doc["scenes"][0]["images"][0]["judgements"][0]["p1"] = [1.2, 0.0]

        with pytest.raises(ValidationError):
            dataset.load_manifest(write_minimal(tmp_path, mutate=mutate))

    def test_parse_error(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        with pytest.raises(ParseError):
            dataset.load_manifest(str(p))

    def test_deterministic(self, tmp_path):
        path = write_minimal(tmp_path)
        a = dataset.load_manifest(path)
        b = dataset.load_manifest(path)
        assert a.to_dict() == b.to_dict()

    def test_round_trip(self, tmp_path):
        path = write_minimal(tmp_path)
        m = dataset.load_manifest(path)
        out = tmp_path / "again.json"
        dataset.save_manifest(m, str(out))
        m2 = dataset.load_manifest(str(out))
        assert m.to_dict() == m2.to_dict()

    def test_empty_region_rejected_on_deep_load(self, tmp_path):
        def mutate(doc):
            # polygon entirely outside the 8x8 image
            doc["scenes"][0]["images"][0]["regions"][0]["polygons"] = [square(50, 50, 3)]

        with pytest.raises(ValidationError) as exc:
            dataset.load_manifest(write_minimal(tmp_path, mutate=mutate))
        assert "empty" in str(exc.value)

    def test_shallow_load_skips_decode(self, tmp_path):
        def mutate(doc):
            doc["scenes"][0]["images"][0]["regions"][0]["polygons"] = [square(50, 50, 3)]

        m = dataset.load_manifest(write_minimal(tmp_path, mutate=mutate), deep=False)
        assert len(m.scenes) == 1


class TestResolveRegions:
    def _measurements(self):
        return {
            "a": dataset.Measurement("a", np.array([0.5, 0.5, 0.5])),
            "b": dataset.Measurement("b", np.array([0.2, 0.2, 0.2])),
        }

    def test_full_frame(self):
        rec = dataset.ImageRecord(
            image_id="i",
            file="f",
            transfer="linear",
            regions=[dataset.Region("a", polygons=[np.array(square(0, 0, 4), float)])],
        )
        out = dataset.resolve_region_masks(rec, 4, 4, self._measurements())
        assert out[0].pixel_count == 16

    def test_disjoint_squares(self):
        rec = dataset.ImageRecord(
            image_id="i",
            file="f",
            transfer="linear",
            regions=[
                dataset.Region("a", polygons=[np.array(square(0, 0, 3), float)]),
                dataset.Region("b", polygons=[np.array(square(5, 5, 3), float)]),
            ],
        )
        out = dataset.resolve_region_masks(rec, 10, 10, self._measurements())
        assert [r.pixel_count for r in out] == [9, 9]
        assert not (out[0].mask & out[1].mask).any()

    def test_overlap_goes_to_first(self):
        rec = dataset.ImageRecord(
            image_id="i",
            file="f",
            transfer="linear",
            regions=[
                dataset.Region("a", polygons=[np.array(square(0, 0, 4), float)]),
                dataset.Region("b", polygons=[np.array(square(2, 2, 4), float)]),
            ],
        )
        out = dataset.resolve_region_masks(rec, 8, 8, self._measurements())
        mask_a = np.zeros((8, 8), bool)
        mask_a[0:4, 0:4] = True
        mask_b_raw = np.zeros((8, 8), bool)
        mask_b_raw[2:6, 2:6] = True
        assert np.array_equal(out[0].mask, mask_a)
        assert np.array_equal(out[1].mask, mask_b_raw & ~mask_a)
        assert out[1].pixel_count == 16 - 4

    def test_disjointness_invariant(self, rng):
        regions = []
        for i, mid in enumerate(["a", "b"] * 3):
            x0, y0 = rng.integers(0, 20, 2)
            regions.append(
                dataset.Region(mid, polygons=[np.array(square(int(x0), int(y0), int(rng.integers(3, 12))), float)])
            )
        rec = dataset.ImageRecord(image_id="i", file="f", transfer="linear", regions=regions)
        out = dataset.resolve_region_masks(rec, 32, 32, self._measurements())
        total = np.zeros((32, 32), np.int64)
        for r in out:
            total += r.mask
        assert total.max() <= 1

    def test_mask_file(self, tmp_path, rng):
        m = rng.random((6, 6)) < 0.5
        m[0, 0] = True
        imgio.write_mask(str(tmp_path / "m.png"), m)
        rec = dataset.ImageRecord(
            image_id="i", file="f", transfer="linear",
            regions=[dataset.Region("a", mask_file="m.png")],
        )
        out = dataset.resolve_region_masks(rec, 6, 6, self._measurements(), base_dir=str(tmp_path))
        assert np.array_equal(out[0].mask, m)

    def test_mask_file_size_mismatch(self, tmp_path):
        imgio.write_mask(str(tmp_path / "m.png"), np.ones((3, 3), bool))
        rec = dataset.ImageRecord(
            image_id="i", file="f", transfer="linear",
            regions=[dataset.Region("a", mask_file="m.png")],
        )
        with pytest.raises(ValidationError):
            dataset.resolve_region_masks(rec, 6, 6, self._measurements(), base_dir=str(tmp_path))

    def test_fully_shadowed_region_is_error(self):
        rec = dataset.ImageRecord(
            image_id="i", file="f", transfer="linear",
            regions=[
                dataset.Region("a", polygons=[np.array(square(0, 0, 4), float)]),
                dataset.Region("b", polygons=[np.array(square(1, 1, 2), float)]),
            ],
        )
        with pytest.raises(ValidationError) as exc:
            dataset.resolve_region_masks(rec, 8, 8, self._measurements())
        assert "empty" in str(exc.value)


class TestRegionMean:
    def test_constant(self):
        img = np.full((4, 4, 3), 0.7)
        m = np.zeros((4, 4), bool)
        m[1:3, 1:3] = True
        assert np.allclose(dataset.region_mean(img, m), 0.7)

    def test_two_pixels(self):
        img = np.zeros((1, 2, 3))
        img[0, 1] = 1.0
        m = np.ones((1, 2), bool)
        assert np.allclose(dataset.region_mean(img, m), 0.5)

    def test_matches_loop_oracle(self, rng):
        img = rng.random((16, 16, 3))
        m = rng.random((16, 16)) < 0.4
        m[0, 0] = True
        acc = np.zeros(3)
        n = 0
        for y in range(16):
            for x in range(16):
                if m[y, x]:
                    acc += img[y, x]
                    n += 1
        assert np.allclose(dataset.region_mean(img, m), acc / n, atol=1e-12)

    def test_empty_mask(self):
        with pytest.raises(DegenerateInputError):
            dataset.region_mean(np.ones((3, 3, 3)), np.zeros((3, 3), bool))

    @given(a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_linearity(self, a, b):
        rng = np.random.default_rng(7)
        x = rng.random((5, 5, 3))
        y = rng.random((5, 5, 3))
        m = rng.random((5, 5)) < 0.5
        m[2, 2] = True
        lhs = dataset.region_mean(a * x + b * y, m)
        rhs = a * dataset.region_mean(x, m) + b * dataset.region_mean(y, m)
        assert np.allclose(lhs, rhs, atol=1e-9)


class TestPredictionIndex:
    def test_round_trip(self, tmp_path):
        (tmp_path / "alb.pfm").write_bytes(b"")
        entries = {"img1": dataset.PredictionEntry(albedo_file="alb.pfm", transfer="linear")}
        dataset.save_prediction_index(entries, str(tmp_path))
        back = dataset.load_prediction_index(str(tmp_path))
        assert back["img1"].albedo_file == "alb.pfm"
        assert back["img1"].shading_file is None

    def test_missing_index(self, tmp_path):
        with pytest.raises(ValidationError):
            dataset.load_prediction_index(str(tmp_path))

    def test_missing_referenced_file(self, tmp_path):
        entries = {"img1": dataset.PredictionEntry(albedo_file="gone.pfm", transfer="linear")}
        dataset.save_prediction_index(entries, str(tmp_path))
        with pytest.raises(ValidationError) as exc:
            dataset.load_prediction_index(str(tmp_path))
        assert "gone.pfm" in str(exc.value)

    def test_bad_transfer(self, tmp_path):
        (tmp_path / "a.pfm").write_bytes(b"")
        entries = {"img1": dataset.PredictionEntry(albedo_file="a.pfm", transfer="log")}
        dataset.save_prediction_index(entries, str(tmp_path))
        with pytest.raises(ValidationError):
            dataset.load_prediction_index(str(tmp_path))
