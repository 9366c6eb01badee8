import numpy as np
import pytest

import cseg

TINY = {
    "data.total": 24,
    "data.validation": 6,
    "n_labeled": 3,
    "data.height": 16,
    "data.width": 16,
    "data.axis_min": 2,
    "data.axis_max": 5,
    "segmenter.epochs": 4,
    "regressor.epochs": 2,
    "regressor.milestones": [1],
    "sweep.n": [3],
    "sweep.seeds": 1,
}


def test_sample_is_deterministic_and_binary():
    img, mask = cseg.generate_sample(3, 7)
    img2, mask2 = cseg.generate_sample(3, 7)
    assert img.shape == (32, 32) and mask.dtype == np.uint8
    assert np.array_equal(img, img2) and np.array_equal(mask, mask2)
    assert set(np.unique(mask)) <= {0, 1}
    assert 0.0 <= img.min() and img.max() <= 1.0


def test_noiseless_sample_has_two_levels():
    img, mask = cseg.generate_sample(
        0, 0, {"data.noise": 0, "data.contrast_jitter": 0, "data.background_jitter": 0}
    )
    assert np.allclose(img[mask == 1], 0.7) and np.allclose(img[mask == 0], 0.3)


def test_dice_matches_numpy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = (rng.random((9, 11)) < 0.4).astype(np.uint8)
        b = (rng.random((9, 11)) < 0.6).astype(np.uint8)
        expected = 2 * np.sum(a & b) / (a.sum() + b.sum())
        assert cseg.dice(a, b) == pytest.approx(expected, abs=1e-15)
    empty = np.zeros((4, 4), np.uint8)
    assert cseg.dice(empty, empty) == 1.0


def test_aggregate_and_table():
    mean, std = cseg.aggregate_last_k([0.1, 0.6, 0.8], 2)
    assert mean == pytest.approx(0.7, abs=1e-12) and std == pytest.approx(0.1, abs=1e-12)
    assert "5,fs,24.8,4.9" in cseg.format_table([(5, "fs", 0.248, 0.049)])


def test_penalty_band():
    assert cseg.size_penalty(100, 100, 0.1) == 0.0
    assert cseg.size_penalty(80, 100, 0.1) == pytest.approx(100)
    assert cseg.size_penalty(115, 100, 0.1) == pytest.approx(25)


def test_membership_and_augment():
    m = cseg.make_membership(100, 5, 25, 7)
    assert m["labeled"] == [35, 77, 53, 56, 86]
    img, mask = cseg.generate_sample(1, 1)
    variants = cseg.augment(img, mask, 4)
    assert len(variants) == 10
    for _, vm, size in variants:
        assert size == vm.sum()


def test_config_errors_name_the_field():
    with pytest.raises(ValueError, match="lamda"):
        cseg.config_text({"lamda": 0.1})
    with pytest.raises(cseg.ConfigError, match="gamma"):
        cseg.config_hash({"gamma": 2})


def test_lambda_zero_matches_fs():
    fs = cseg.train({**TINY, "arm": "fs"})
    cur = cseg.train({**TINY, "arm": "curriculum", "lambda": 0})
    assert fs["trace"] == cur["trace"]
    assert len(fs["trace"]) == 4
    assert cur["audit"]["unlabeled_pixel_reads"] == 0
    oracle = cseg.train({**TINY, "arm": "oracle"})
    assert oracle["audit"]["unlabeled_size_reads"] == 24 - 6 - 3


def test_sweep_writes_table(tmp_path):
    table = cseg.sweep(tmp_path / "s", TINY)
    lines = open(table).read().splitlines()
    assert lines[0] == "n,arm,mean_dsc,std_dsc,seed,config_hash"
    assert len(lines) == 5
