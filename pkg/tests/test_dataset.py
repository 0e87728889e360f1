import numpy as np
import pytest

from histoclahe.clahe import ClaheParams
from histoclahe.dataset import (
    DatasetError,
    DatasetManifest,
    Sample,
    SynthParams,
    generate_synthetic_dataset,
    ingest_directory,
    preprocess_batch,
    resize_nearest,
    split_dataset,
    synthesize_image,
    to_arrays,
    write_dataset,
)
from histoclahe.raster_io import encode_image


def _write(path, raster, fmt="pgm"):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_image(raster, fmt))


@pytest.fixture
def image_dir(tmp_path, rng):
    root = tmp_path / "data"
    for name in ("c.pgm", "a.png", "b.pgm"):
        _write(root / "healthy" / name, rng.integers(0, 256, (20, 24), dtype=np.uint8), name[-3:])
    for name in ("y.pgm", "x.pgm"):
        _write(root / "diseased" / name, rng.integers(0, 256, (20, 24), dtype=np.uint8))
    (root / "healthy" / "notes.txt").write_text("not an image")
    (root / "diseased" / "broken.pgm").write_bytes(b"P5\n4 4\n255\n\x00")
    return root


def test_ingest_layout(image_dir):
    m = ingest_directory(image_dir)
    assert [s.name for s in m.samples] == [
        "diseased/x.pgm", "diseased/y.pgm", "healthy/a.png", "healthy/b.pgm", "healthy/c.pgm",
    ]
    assert sorted(m.labels) == [0, 0, 0, 1, 1]
    assert ingest_directory(image_dir) == m


def test_ingest_requires_both_classes(image_dir):
    for f in (image_dir / "diseased").iterdir():
        f.unlink()
    with pytest.raises(DatasetError):
        ingest_directory(image_dir)


def test_ingest_missing_directory(tmp_path):
    (tmp_path / "healthy").mkdir()
    with pytest.raises(DatasetError):
        ingest_directory(tmp_path)


def test_ingest_color_passes_through_luma(tmp_path, rng):
    rgb = np.zeros((4, 4, 3), np.uint8)
    rgb[..., 0] = 255
    _write(tmp_path / "healthy" / "r.ppm", rgb, "ppm")
    _write(tmp_path / "diseased" / "g.pgm", np.zeros((4, 4), np.uint8))
    m = ingest_directory(tmp_path)
    red = next(s for s in m.samples if s.label == 0)
    assert (red.load() == 76).all()


def test_synthetic_deterministic():
    params = SynthParams(per_class=4, size=24)
    a = generate_synthetic_dataset(params, 3)
    b = generate_synthetic_dataset(params, 3)
    assert [s.raster.tobytes() for s in a.samples] == [s.raster.tobytes() for s in b.samples]
    c = generate_synthetic_dataset(params, 4)
    assert [s.raster.tobytes() for s in a.samples] != [s.raster.tobytes() for s in c.samples]


def test_synthetic_counts():
    m = generate_synthetic_dataset(SynthParams(per_class=50, size=16), 1)
    assert len(m) == 100 and m.labels.count(0) == 50 and m.labels.count(1) == 50


@pytest.mark.parametrize("gap", [10.0, 30.0, 60.0])
def test_foreground_band_within_gap(gap):
    params = SynthParams(size=64, gap=gap, noise=4.0)
    for i in range(20):
        img, mask = synthesize_image(np.random.default_rng([9, 1, i]), 1, params)
        assert mask.any()
        fg = img[mask].astype(int)
        assert fg.max() - fg.min() <= gap
        _, empty = synthesize_image(np.random.default_rng([9, 0, i]), 0, params)
        assert not empty.any()


@pytest.mark.parametrize("kwargs", [{"per_class": 1}, {"size": 8}, {"gap": 0}, {"noise": -1}])
def test_synthetic_rejects_degenerate(kwargs):
    with pytest.raises(DatasetError):
        SynthParams(**kwargs)


def test_split_counts_and_partition():
    m = split_dataset(generate_synthetic_dataset(SynthParams(per_class=50, size=16), 1), 0.8, 5)
    train, ev = m.subset("train"), m.subset("eval")
    assert len(train) == 80 and len(ev) == 20
    assert [s.label for s in train].count(1) == 40 and [s.label for s in ev].count(1) == 10
    assert {s.name for s in train} | {s.name for s in ev} == {s.name for s in m.samples}
    assert not {s.name for s in train} & {s.name for s in ev}
    again = split_dataset(generate_synthetic_dataset(SynthParams(per_class=50, size=16), 1), 0.8, 5)
    assert [s.split for s in again.samples] == [s.split for s in m.samples]


def test_split_errors():
    m = generate_synthetic_dataset(SynthParams(per_class=2, size=16), 1)
    with pytest.raises(DatasetError):
        split_dataset(m, 1.0, 0)
    tiny = DatasetManifest((Sample("a", 0, raster=np.zeros((2, 2), np.uint8)),
                            Sample("b", 0, raster=np.zeros((2, 2), np.uint8)),
                            Sample("c", 1, raster=np.zeros((2, 2), np.uint8))))
    with pytest.raises(DatasetError):
        split_dataset(tiny, 0.5, 0)


def test_manifest_invariants():
    z = np.zeros((2, 2), np.uint8)
    with pytest.raises(DatasetError):
        DatasetManifest((Sample("a", 0, raster=z), Sample("b", 2, raster=z)))
    with pytest.raises(DatasetError):
        DatasetManifest((Sample("a", 0, raster=z), Sample("a", 1, raster=z)))


def test_preprocess_none_copies_bytes(image_dir, tmp_path):
    m = ingest_directory(image_dir)
    out = preprocess_batch(m, None, tmp_path / "copy")
    for src, dst in zip(m.samples, out.samples):
        assert src.path.read_bytes() == dst.path.read_bytes()


def test_preprocess_preserves_labels_and_splits(image_dir, tmp_path):
    m = split_dataset(ingest_directory(image_dir), 0.5, 2)
    out = preprocess_batch(m, ClaheParams(2, 2, 2.0), tmp_path / "enh")
    assert [(s.label, s.split) for s in out.samples] == [(s.label, s.split) for s in m.samples]
    first = [p.path.read_bytes() for p in out.samples]
    again = preprocess_batch(m, ClaheParams(2, 2, 2.0), tmp_path / "enh")
    assert [p.path.read_bytes() for p in again.samples] == first


def test_preprocess_constant_images_unchanged():
    z = np.full((16, 16), 33, np.uint8)
    m = DatasetManifest((Sample("a", 0, raster=z), Sample("b", 1, raster=z + 10)))
    out = preprocess_batch(m, ClaheParams(4, 4, 1.0))
    assert np.array_equal(out.samples[0].raster, z) and np.array_equal(out.samples[1].raster, z + 10)


def test_write_then_ingest_round_trip(tmp_path):
    m = generate_synthetic_dataset(SynthParams(per_class=3, size=16), 2)
    write_dataset(m, tmp_path)
    back = ingest_directory(tmp_path)
    assert [s.name for s in back.samples] == sorted(s.name for s in m.samples)
    by_name = {s.name: s for s in m.samples}
    for s in back.samples:
        assert np.array_equal(s.load(), by_name[s.name].raster)


def test_resize_and_arrays():
    r = np.arange(64, dtype=np.uint8).reshape(8, 8)
    assert np.array_equal(resize_nearest(r, 4), r[::2, ::2])
    x, y = to_arrays([Sample("a", 1, raster=np.full((8, 8), 255, np.uint8))], size=4)
    assert x.shape == (1, 1, 4, 4) and (x == 1.0).all() and y.tolist() == [1]
