import pytest

from inrmri import ConfigError
from inrmri.runconfig import load_config, parse_config_text

MINIMAL = """
[recon]
lambda_s = 0.05
lambda_l = 0.02
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config_text(MINIMAL)
    assert cfg.get("phantom", "n") == 64
    assert cfg.get("phantom", "frames") == 16
    assert cfg.get("recon", "lambda_s") == 0.05
    assert cfg.get("recon", "epochs") == 500
    assert cfg.get("recon", "lr") == 1e-3
    assert cfg.get("recon", "deterministic") is True
    assert cfg.samples_per_spoke() == 128  # 2n default
    assert cfg.yt_column() == 32


def test_full_round_of_sections():
    text = """
    [phantom]
    n = 32
    frames = 8
    coils = 4
    noise_std = 0.01

    [trajectory]
    spokes_per_frame = 8
    samples_per_spoke = 64

    [encoder]
    levels = 10
    growth_factor = 1.5

    [recon]
    lambda_s = 1e-3
    lambda_l = 1e-4
    epochs = 50
    seed = 7

    [output]
    dir = results
    save_images = false
    """
    cfg = parse_config_text(text)
    assert cfg.get("trajectory", "samples_per_spoke") == 64
    assert cfg.samples_per_spoke() == 64
    assert cfg.encoder_config().levels == 10
    assert cfg.recon_config().seed == 7
    assert cfg.get("output", "save_images") is False
    model = cfg.model_config()
    assert model.hidden_layers == 5 and model.hidden_units == 64


def test_unknown_key_names_key_and_line():
    text = "[phantom]\nn = 64\nnn = 32\n"
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text(text)
    msg = str(excinfo.value)
    assert "'nn'" in msg and "line 3" in msg


def test_unknown_section_rejected():
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text("[phantomm]\nn = 64\n")
    assert "phantomm" in str(excinfo.value)


def test_missing_required_lambda():
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text("[recon]\nlambda_s = 0.1\n")
    assert "lambda_l" in str(excinfo.value)


def test_bad_value_reports_line():
    text = "[recon]\nlambda_s = 0.1\nlambda_l = abc\n"
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text(text)
    assert "line 3" in str(excinfo.value)


def test_key_outside_section_rejected():
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text("n = 64\n")
    assert "line 1" in str(excinfo.value)


def test_duplicate_key_rejected():
    text = "[recon]\nlambda_s = 0.1\nlambda_s = 0.2\nlambda_l = 0.1\n"
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text(text)
    assert "duplicate" in str(excinfo.value)


def test_comments_and_blank_lines_ignored():
    text = """
    # top comment
    [recon]
    lambda_s = 0.1  # inline comment
    lambda_l = 0.2

    """
    cfg = parse_config_text(text)
    assert cfg.get("recon", "lambda_s") == 0.1


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_bool_parsing():
    text = "[recon]\nlambda_s = 0\nlambda_l = 0\ndeterministic = off\n"
    assert parse_config_text(text).get("recon", "deterministic") is False
    with pytest.raises(ConfigError):
        parse_config_text("[recon]\nlambda_s=0\nlambda_l=0\ndeterministic = maybe\n")
