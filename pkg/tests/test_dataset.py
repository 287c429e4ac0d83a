from collections import Counter

import numpy as np
import pytest

from leafpipe import dataset, imgcore
from leafpipe.augment import AugmentConfig
from leafpipe.dataset import BatchPipeline, scan_dataset, split
from leafpipe.errors import DataError
from synth import make_dataset


def write_tree(root, layout, size=6):
    """layout: {class_name: image_count}; tiny gray PGMs."""
    rs = np.random.RandomState(0)
    for name, count in layout.items():
        d = root / name
        d.mkdir(parents=True)
        for i in range(count):
            img = imgcore.ImageBuffer.from_array(rs.rand(size, size))
            imgcore.save_image(img, d / f"{i:02d}.pgm")
    return root


# ---------------------------------------------------------------------------
# scan_dataset
# ---------------------------------------------------------------------------

def test_scan_two_classes(tmp_path):
    write_tree(tmp_path, {"healthy": 3, "rust": 2})
    ds = scan_dataset(tmp_path)
    assert ds.classes == ["healthy", "rust"]
    assert ds.num_classes == 2
    assert len(ds.items) == 5
    assert Counter(label for _, label in ds.items) == {0: 3, 1: 2}


def test_scan_missing_root(tmp_path):
    with pytest.raises(DataError, match="not found"):
        scan_dataset(tmp_path / "nope")


def test_scan_too_few_classes(tmp_path):
    write_tree(tmp_path, {"only": 3})
    with pytest.raises(DataError, match="at least 2"):
        scan_dataset(tmp_path)


def test_scan_empty_class_folder(tmp_path):
    write_tree(tmp_path, {"a": 2, "b": 2})
    (tmp_path / "empty").mkdir()
    with pytest.raises(DataError, match="no images"):
        scan_dataset(tmp_path)


def test_scan_fifteen_classes(tmp_path):
    write_tree(tmp_path, {f"c{i:02d}": 2 for i in range(15)})
    ds = scan_dataset(tmp_path)
    assert ds.num_classes == 15


def test_scan_stable_ordering(tmp_path):
    write_tree(tmp_path, {"b_class": 2, "a_class": 2, "c_class": 2})
    ds = scan_dataset(tmp_path)
    assert ds.classes == ["a_class", "b_class", "c_class"]
    assert ds.items == scan_dataset(tmp_path).items


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------

def fake_dataset(sizes):
    classes = [f"c{i}" for i in range(len(sizes))]
    items = [(f"/img/{k}_{i}.ppm", k) for k, n in enumerate(sizes) for i in range(n)]
    return dataset.LabeledDataset(classes=classes, items=items)


def test_split_80_20():
    sp = split(fake_dataset([50, 50]), ratio=0.8, seed=1)
    assert len(sp.train) == 80 and len(sp.test) == 20


def test_split_deterministic():
    ds = fake_dataset([30, 20, 10])
    a = split(ds, 0.8, seed=5)
    b = split(ds, 0.8, seed=5)
    assert a.train == b.train and a.test == b.test
    c = split(ds, 0.8, seed=6)
    assert c.train != a.train


def test_split_stratified_counts():
    sp = split(fake_dataset([20] * 5), ratio=0.8, seed=2, stratified=True)
    train_per_class = Counter(k for _, k in sp.train)
    test_per_class = Counter(k for _, k in sp.test)
    assert all(train_per_class[k] == 16 for k in range(5))
    assert all(test_per_class[k] == 4 for k in range(5))


def test_split_partition_invariants():
    rs = np.random.RandomState(3)
    for _ in range(50):
        sizes = rs.randint(2, 30, size=rs.randint(2, 6)).tolist()
        ratio = rs.uniform(0.1, 0.9)
        seed = int(rs.randint(0, 10000))
        stratified = bool(rs.randint(2))
        ds = fake_dataset(sizes)
        sp = split(ds, ratio, seed, stratified)
        n = len(ds.items)
        assert len(sp.train) == int(np.floor(ratio * n + 0.5))
        assert len(sp.train) + len(sp.test) == n
        assert set(sp.train).isdisjoint(sp.test)
        assert set(sp.train) | set(sp.test) == set(ds.items)
        if stratified:
            per_class = Counter(k for _, k in ds.items)
            got = Counter(k for _, k in sp.train)
            for k, total in per_class.items():
                assert abs(got[k] - ratio * total) <= 1.0


def test_split_stratified_small_class_errors():
    with pytest.raises(DataError, match="at least 2"):
        split(fake_dataset([10, 1]), 0.8, 0, stratified=True)


def test_split_bad_ratio():
    with pytest.raises(ValueError):
        split(fake_dataset([5, 5]), 1.0, 0)
    with pytest.raises(ValueError):
        split(fake_dataset([5, 5]), 0.0, 0)


# ---------------------------------------------------------------------------
# manifest round trip
# ---------------------------------------------------------------------------

def test_manifest_roundtrip(tmp_path):
    root = make_dataset(tmp_path / "data", classes=2, per_class=4, size=8)
    ds = scan_dataset(root)
    sp = split(ds, 0.75, seed=3)
    manifest = tmp_path / "split.csv"
    dataset.export_split_manifest(sp, manifest, root=root)
    back = dataset.load_split_manifest(manifest, ds.classes, root=root)
    assert sorted(back.train) == sorted(sp.train)
    assert sorted(back.test) == sorted(sp.test)


def test_manifest_missing(tmp_path):
    with pytest.raises(DataError, match="manifest not found"):
        dataset.load_split_manifest(tmp_path / "missing.csv", ["a", "b"])


def test_manifest_unknown_class(tmp_path):
    (tmp_path / "m.csv").write_text("path,class,partition\nx.ppm,weird,train\n")
    with pytest.raises(DataError, match="unknown"):
        dataset.load_split_manifest(tmp_path / "m.csv", ["a", "b"])


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------

@pytest.fixture
def small_tree(tmp_path):
    root = make_dataset(tmp_path / "data", classes=2, per_class=5, size=10)
    return scan_dataset(root)


def pipeline(**kw):
    defaults = dict(image_size=10, channels="rgb", normalize_mode="unit_range")
    defaults.update(kw)
    return BatchPipeline(**defaults)


def test_batch_sizes(small_tree):
    batches = list(pipeline().batches(small_tree.items, batch_size=4))
    assert [len(b.labels) for b in batches] == [4, 4, 2]
    assert batches[0].inputs.shape == (4, 3, 10, 10)
    assert batches[0].inputs.dtype == np.float32


def test_epoch_orders_differ_but_reproduce(small_tree):
    pipe = pipeline()
    e0 = [p for b in pipe.batches(small_tree.items, 4, seed=1, epoch=0, train=True)
          for p in b.paths]
    e1 = [p for b in pipe.batches(small_tree.items, 4, seed=1, epoch=1, train=True)
          for p in b.paths]
    assert e0 != e1
    again = [p for b in pipe.batches(small_tree.items, 4, seed=1, epoch=0, train=True)
             for p in b.paths]
    assert e0 == again


def test_epoch_label_multiset(small_tree):
    pipe = pipeline()
    labels = [int(l) for b in pipe.batches(small_tree.items, 3, seed=2, epoch=0, train=True)
              for l in b.labels]
    assert Counter(labels) == Counter(k for _, k in small_tree.items)


def test_no_test_leak(small_tree):
    sp = split(small_tree, 0.8, seed=1)
    pipe = pipeline()
    seen = set()
    for epoch in range(3):
        for b in pipe.batches(sp.train, 4, seed=1, epoch=epoch, train=True):
            seen.update(b.paths)
    assert seen.isdisjoint(p for p, _ in sp.test)


def test_lenient_skips_corrupt_file(tmp_path, capsys):
    root = make_dataset(tmp_path / "data", classes=2, per_class=3, size=8)
    bad = root / "class00" / "zz_bad.ppm"
    bad.write_bytes(b"P6\n4 4\n255\n junk")
    ds = scan_dataset(root)
    pipe = pipeline(image_size=8)
    batches = list(pipe.batches(ds.items, 4))
    assert sum(len(b.labels) for b in batches) == 6  # corrupt one skipped
    assert "skipping unreadable" in capsys.readouterr().err


def test_strict_raises_on_corrupt_file(tmp_path):
    root = make_dataset(tmp_path / "data", classes=2, per_class=3, size=8)
    (root / "class00" / "zz_bad.ppm").write_bytes(b"P6\n4 4\n255\nj")
    ds = scan_dataset(root)
    pipe = pipeline(image_size=8, strict=True)
    with pytest.raises(DataError):
        list(pipe.batches(ds.items, 4))


def test_augmented_batches_deterministic(small_tree):
    cfg = AugmentConfig(seed=9, probability=0.9)
    pipe = pipeline(augment_cfg=cfg, normalize_mode="zero_mean_unit_var")
    a = list(pipe.batches(small_tree.items, 4, seed=3, epoch=2, train=True))
    b = list(pipe.batches(small_tree.items, 4, seed=3, epoch=2, train=True))
    for x, y in zip(a, b):
        assert np.array_equal(x.inputs, y.inputs)
    # same seed, different epoch -> different augmentation
    c = list(pipe.batches(small_tree.items, 4, seed=3, epoch=3, train=True))
    assert any(not np.array_equal(x.inputs, y.inputs)
               for x, y in zip(sorted(a, key=lambda b: b.paths[0]),
                               sorted(c, key=lambda b: b.paths[0])))


def test_gray_pipeline_shapes(small_tree):
    pipe = pipeline(channels="gray", image_size=12)
    batch = next(iter(pipe.batches(small_tree.items, 2)))
    assert batch.inputs.shape == (2, 1, 12, 12)


def test_otsu_stage_produces_binary(small_tree):
    pipe = pipeline(channels="gray", stage="otsu", image_size=8)
    batch = next(iter(pipe.batches(small_tree.items, 2)))
    assert set(np.unique(batch.inputs)) <= {0.0, 1.0}


def test_canny_stage_shapes(small_tree):
    pipe = pipeline(channels="gray", stage="canny", image_size=16)
    batch = next(iter(pipe.batches(small_tree.items, 2)))
    assert batch.inputs.shape == (2, 1, 16, 16)


def test_stage_requires_gray():
    with pytest.raises(ValueError, match="gray"):
        BatchPipeline(channels="rgb", stage="otsu")


def test_batches_bad_batch_size(small_tree):
    with pytest.raises(ValueError):
        list(pipeline().batches(small_tree.items, 0))
