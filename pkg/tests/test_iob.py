import numpy as np
import pytest

from csdis import synth
from csdis.errors import ConfigError, ShapeError
from csdis.iob import (
    IobConfig,
    combine,
    compute_iob,
    iob_pair_report,
    iob_run,
    make_bias_input,
)
from csdis.nn import DecoderSpec, TrainConfig, builtin_spec


def tiny_spec(in_shape):
    """FC decoder onto 3x8x8 images, small enough for unit tests."""
    layers = [] if len(in_shape) == 1 else [{"kind": "flatten"}]
    layers += [
        {"kind": "fully_connected", "out_features": 32},
        {"kind": "leaky_relu"},
        {"kind": "fully_connected", "out_features": 192},
        {"kind": "reshape", "target_shape": [3, 8, 8]},
        {"kind": "tanh"},
    ]
    return DecoderSpec.from_dict({
        "input_shape": list(in_shape),
        "expected_output_shape": [3, 8, 8],
        "layers": layers,
    })


@pytest.fixture(scope="module")
def small():
    ss = synth.generate(300, 4)
    images = np.ascontiguousarray(ss.images[:, :, 4::8, 4::8])
    masks = np.ascontiguousarray(ss.contents[:, :, 4::8, 4::8])
    return images, masks, ss.styles.astype(np.float32)


def cfg_for(in_shape, runs=3, epochs=15):
    train = TrainConfig(learning_rate=3e-3, epochs=epochs, batch_size=10)
    return IobConfig(decoder_spec_z=tiny_spec(in_shape), train=train, runs=runs)


def test_bias_input_is_ones():
    ones = make_bias_input((3,))
    assert ones.shape == (3,) and np.all(ones == 1.0)
    assert make_bias_input((1, 64, 64)).shape == (1, 64, 64)


def test_combine_is_mean_of_ratios():
    r = combine(0, (np.array([2.0, 3.0]), 0.0), (np.array([1.0, 1.0]), 0.0), epsilon=0.0 + 1e-12)
    assert r.iob == pytest.approx(2.5)
    r = combine(0, (np.array([1.0]), 0.0), (np.array([0.0]), 0.0), epsilon=1e-8)
    assert r.iob == pytest.approx(1e8)


def test_defaults():
    cfg = IobConfig(decoder_spec_z=builtin_spec("teapot_style"))
    assert cfg.runs == 3 and cfg.epsilon == 1e-8
    assert cfg.decoder_spec_bias == cfg.decoder_spec_z
    with pytest.raises(ConfigError):
        IobConfig(decoder_spec_z=builtin_spec("teapot_style"), runs=0)


def test_shape_errors(small):
    images, masks, styles = small
    spec = tiny_spec((3,))
    with pytest.raises(ShapeError):
        iob_run(images, styles[:10], spec, spec, TrainConfig(epochs=1), 0)
    with pytest.raises(ShapeError):
        iob_run(images, masks, spec, spec, TrainConfig(epochs=1), 0)


def test_range_is_checked(small):
    images, _, styles = small
    with pytest.raises(ConfigError):
        compute_iob(images * 2.0, styles, cfg_for((3,), runs=1, epochs=1))


def test_constant_latent_is_near_one(small):
    images, _, _ = small
    ones = np.ones((len(images), 3), dtype=np.float32)
    res = compute_iob(images, ones, cfg_for((3,)), base_seed=0)
    assert 0.8 <= res.mean <= 1.2
    assert len(res.per_run) == 3 and res.std >= 0


def test_informative_style_beats_shuffled(small):
    images, _, styles = small
    cfg = cfg_for((3,))
    real = compute_iob(images, styles, cfg, base_seed=1)
    perm = np.random.default_rng(0).permutation(len(styles))
    shuffled = compute_iob(images, styles[perm], cfg, base_seed=1)
    assert real.mean >= shuffled.mean
    assert real.mean > 1.2


def test_deterministic(small):
    images, _, styles = small
    cfg = cfg_for((3,), runs=2, epochs=2)
    a = compute_iob(images, styles, cfg, base_seed=5)
    b = compute_iob(images, styles, cfg, base_seed=5)
    assert a.per_run == b.per_run
    assert [r.seed for r in a.runs] == [5, 6]


def test_scale_cancellation(small):
    images, _, styles = small
    cfg = cfg_for((3,))
    full = compute_iob(images, styles, cfg, base_seed=2)
    half = compute_iob(images * 0.5, styles, cfg, base_seed=2)
    spread = max(full.std, half.std)
    # both MSEs scale by c^2; only the training dynamics differ
    assert abs(full.mean - half.mean) <= 3 * spread + 0.25


def test_pair_report_collapse_flag(small):
    images, masks, styles = small
    cfg_c = cfg_for((1, 8, 8), runs=2)
    cfg_s = cfg_for((3,), runs=2)
    const = np.full_like(styles, 0.5)
    rep = iob_pair_report(images, masks, const, cfg_c, cfg_s, base_seed=0)
    assert rep["dc_cs"] is None
    assert rep["posterior_collapse"] is True
    rep = iob_pair_report(images, masks, styles, cfg_c, cfg_s, base_seed=0)
    assert rep["iob_ic"].mean > 1.2 and rep["iob_is"].mean > 1.2
    assert rep["posterior_collapse"] is False


def test_pair_report_requires_styles(small):
    images, masks, _ = small
    with pytest.raises(ShapeError):
        iob_pair_report(images, masks, None, cfg_for((1, 8, 8)), cfg_for((3,)))
