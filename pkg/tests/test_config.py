import numpy as np
import pytest

from leafpipe import config as cfgmod
from leafpipe.config import PipelineConfig, load_config, parse_config
from leafpipe.errors import DataError


def test_default_values():
    cfg = parse_config("")
    assert cfg.image_size == 256
    assert cfg.epochs == 30
    assert cfg.split_ratio == 0.8
    assert cfg.normalize == "zero_mean_unit_var"
    assert cfg.channels == "rgb"
    assert cfg.blur_sigma == 1.0
    assert cfg.noise_factor == 1.0
    assert cfg.flip is True


def test_parse_values_comments_blanks():
    cfg = parse_config("""
# training setup
epochs = 5
learning_rate = 0.05   # inline comment
channels = gray
augment = off
stratified = yes
""")
    assert cfg.epochs == 5
    assert cfg.learning_rate == 0.05
    assert cfg.channels == "gray"
    assert cfg.augment is False
    assert cfg.stratified is True


def test_unknown_key_rejected():
    with pytest.raises(ValueError, match="unknown config key"):
        parse_config("learning_rte = 0.1")


def test_bad_value_types():
    with pytest.raises(ValueError):
        parse_config("epochs = many")
    with pytest.raises(ValueError):
        parse_config("augment = perhaps")
    with pytest.raises(ValueError):
        parse_config("just a line without equals")


def test_semantic_validation():
    with pytest.raises(ValueError):
        parse_config("split_ratio = 1.5")
    with pytest.raises(ValueError):
        parse_config("stage = otsu")  # conflicts with default channels=rgb
    with pytest.raises(ValueError):
        parse_config("momentum = 1.0")
    with pytest.raises(ValueError):
        parse_config("normalize = minmax")
    cfg = parse_config("stage = otsu\nchannels = gray")
    assert cfg.stage == "otsu"


def test_overrides():
    cfg = parse_config("epochs = 5", overrides={"epochs": 9, "seed": 3})
    assert cfg.epochs == 9 and cfg.seed == 3
    with pytest.raises(ValueError):
        parse_config("", overrides={"not_a_key": 1})


def test_load_config_missing(tmp_path):
    with pytest.raises(DataError):
        load_config(tmp_path / "none.cfg")


def test_load_config_reports_path(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("epochs = zero\n")
    with pytest.raises(ValueError, match="bad.cfg"):
        load_config(p)


def test_to_train_and_augment_configs():
    cfg = parse_config("epochs = 3\nnoise_factor = 2.0\npca_alpha_std = 0.2")
    tc = cfg.to_train_config()
    assert tc.epochs == 3 and tc.batch_size == cfg.batch_size
    ac = cfg.to_augment_config()
    assert ac.noise_factor == 2.0 and ac.pca_alpha_std == 0.2
    assert ac.mode == "joint"


def test_pca_disabled_for_gray():
    cfg = parse_config("channels = gray")
    assert cfg.to_augment_config().pca is False


def test_to_pipeline_wiring():
    cfg = parse_config("image_size = 32\nblur_sigma = 0.7\nprecision = float64")
    pipe = cfg.to_pipeline(training=True)
    assert pipe.image_size == 32
    assert pipe.blur_sigma == 0.7
    assert pipe.dtype == np.float64
    assert pipe.augment_cfg is not None
    eval_pipe = cfg.to_pipeline(training=False)
    assert eval_pipe.augment_cfg is None


def test_input_shape():
    assert parse_config("image_size = 64").input_shape() == (3, 64, 64)
    assert parse_config("channels = gray\nimage_size = 32").input_shape() == (1, 32, 32)


def test_meta_roundtrip_to_pipeline():
    cfg = parse_config("image_size = 48\nchannels = gray\nblur_sigma = 0.8\n"
                       "stage = canny\ncanny_low = 0.05")
    pipe = cfgmod.pipeline_from_meta(cfg.preprocess_meta())
    assert pipe.image_size == 48
    assert pipe.channels == "gray"
    assert pipe.blur_sigma == 0.8
    assert pipe.stage == "canny"
    assert pipe.canny_low == 0.05


def test_describe_lists_every_field():
    from dataclasses import fields

    cfg = PipelineConfig()
    text = cfg.describe()
    for f in fields(PipelineConfig):
        assert f.name in text
