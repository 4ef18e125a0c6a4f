import numpy as np
import pytest

from uavmob.config import ConfigError, load_config, parse_config
from uavmob.models import AsymmetricModel, OnOff, OU, PiecewiseLinear, SymmetricModel

FIG4 = """
[model]
type = asymmetric-ou
alpha = 1
sigma = 1.3, 1, 0.7
beta = 1; 3; 10
s = 1

[sim]
n_samples = 5000
seed = 7
dt = 0.005

[output]
prefix = fig4
"""


def test_minimal_ou_defaults():
    cfg = parse_config("[model]\ncontrol = ou\nalpha = 1\n")
    assert cfg.model_type == "symmetric"
    (entry,) = cfg.models
    assert entry.label == "ou_alpha1"
    assert isinstance(entry.model, SymmetricModel) and entry.model.control == OU(1.0) and entry.model.sigma == 1.0
    assert cfg.sim.seed == 0
    assert len(cfg.analysis.r_grid) == 101 and cfg.analysis.r_grid[-1] == 5.0
    assert cfg.analysis.gammas == (2.0, 3.0, 4.0)
    np.testing.assert_allclose(cfg.analysis.snr_ratios, np.logspace(-3, 2, 26))
    assert cfg.analysis.tol == 1e-12
    assert (cfg.output.dir, cfg.output.prefix) == ("out", "run")


def test_fig4_sweep_gives_three_models():
    cfg = parse_config(FIG4)
    assert [e.label for e in cfg.models] == ["beta1", "beta3", "beta10"]
    for entry, beta in zip(cfg.models, (1, 3, 10)):
        assert isinstance(entry.model, AsymmetricModel)
        assert [a.sigma for a in entry.model.axes] == [1.3, 1.0, 0.7]
        assert all(a.beta == beta and a.s == 1.0 for a in entry.model.axes)
    assert cfg.sim.n_samples == 5000 and cfg.sim.seed == 7 and cfg.sim.dt == 0.005
    assert cfg.output.prefix == "fig4"


def test_onoff_and_piecewise():
    cfg = parse_config("[model]\ncontrol = onoff\nc = 1; 0.5\nm = 1\nsigma = 1\n")
    assert [e.label for e in cfg.models] == ["oc_c1_m1", "oc_c0.5_m1"]
    assert cfg.models[1].model.control == OnOff(0.5, 1.0)
    cfg = parse_config("[model]\ncontrol = piecewise\nknots = 0:0, 1:1, 3:1\n")
    assert isinstance(cfg.models[0].model.control, PiecewiseLinear)


def test_negative_alpha_names_parameter_and_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[model]\ncontrol = ou\nalpha = -1\n")
    msg = str(exc.value)
    assert "alpha" in msg and "line 3" in msg


@pytest.mark.parametrize(
    "text,needle",
    [
        ("", "empty"),
        ("   \n", "empty"),
        ("[sim]\nseed = 1\n", "[model]"),
        ("[model]\nalpha = 1\n[plots]\nx = 1\n", "plots"),
        ("[model]\nalpha = 1\ncolour = red\n", "colour"),
        ("[model]\ntype = brownian\n", "type"),
        ("[model]\ncontrol = ou\n", "alpha"),
        ("[model]\nalpha = one\n", "alpha"),
        ("[model]\ncontrol = onoff\nc = 1\nm = -1\n", "m"),
        ("[model]\ntype = asymmetric-ou\nalpha = 1\nsigma = 1, 2\nbeta = 1\n", "sigma"),
        ("[model]\nalpha = 1\n[sim]\nn_samples = 0\n", "n_samples"),
        ("[model]\nalpha = 1\n[analysis]\ngammas = 1.5\n", "gammas"),
        ("[model]\nalpha = 1\n[analysis]\ntol = 0.1\n", "tol"),
        ("[model]\nalpha = 1\n[analysis]\nsnr_ratios = 1, -2\n", "snr_ratios"),
        ("[model]\nalpha = 1\n[analysis]\nr_grid = 3, 2, 1\n", "r_grid"),
        ("[model]\ncontrol = piecewise\nknots = 0-1\n", "knots"),
        ("[model\nalpha=1\n", "parse"),
    ],
)
def test_errors(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert needle in str(exc.value)


def test_partial_symmetry_requires_equal_xy():
    ok = parse_config("[model]\ntype = partial-symmetry\nalpha = 1\nsigma = 1, 1, 0.01\nbeta = 10\ns = 1\n")
    assert ok.model_type == "partial-symmetry" and len(ok.models) == 1
    with pytest.raises(ConfigError) as exc:
        parse_config("[model]\ntype = partial-symmetry\nalpha = 1\nsigma = 1, 2, 0.01\nbeta = 10\ns = 1\n")
    assert "equal" in str(exc.value)


def test_analysis_forms():
    cfg = parse_config(
        "[model]\nalpha = 1\n[analysis]\nr_grid = 0, 2, 5\nsnr_ratios = logspace(-1, 1, 3)\ngammas = 2, 4  # comment\n"
    )
    assert cfg.analysis.r_grid == (0.0, 0.5, 1.0, 1.5, 2.0)
    np.testing.assert_allclose(cfg.analysis.snr_ratios, [0.1, 1.0, 10.0])
    assert cfg.analysis.gammas == (2.0, 4.0)


def test_label_override_and_file(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[model]\nalpha = 2\nlabel = mine\n")
    cfg = load_config(path)
    assert cfg.models[0].label == "mine"
