import math

import numpy as np
import pytest

freqrise = pytest.importorskip("freqrise")


def test_dft_round_trip():
    rng = np.random.default_rng(3)
    for n in (64, 255, 2560):
        x = rng.standard_normal(n)
        coeffs = freqrise.dft(x)
        assert coeffs.shape == (n // 2 + 1,)
        np.testing.assert_allclose(coeffs, np.fft.rfft(x), atol=1e-9)
        np.testing.assert_allclose(freqrise.idft(coeffs, n), x, atol=1e-9)


def test_stdft_shape_and_inverse():
    x = np.random.default_rng(4).standard_normal(8000)
    view = freqrise.stdft(x, "hann:455:420")
    assert view.shape == (216, 228)
    back = freqrise.istdft(view, 8000, "hann:455:420")
    np.testing.assert_allclose(back[10:7000], x[10:7000], atol=1e-6)


def test_bad_window_raises():
    with pytest.raises(freqrise.InvalidWindow):
        freqrise.stdft(np.zeros(100), "hann:0:0")


def test_synthetic_and_oracle():
    signals, labels, truth = freqrise.gen_synthetic(20, seed=1)
    assert signals.shape == (20, 2560)
    oracle = freqrise.OracleModel()
    predicted = oracle.logits(signals).argmax(axis=1)
    assert list(predicted) == labels
    assert all(len(t) == 0 or t[0] in (5, 16, 32, 53) for t in truth)


def test_explain_recovers_ground_truth():
    signals, labels, truth = freqrise.gen_synthetic(30, seed=2)
    oracle = freqrise.OracleModel()
    i = next(k for k, t in enumerate(truth) if t)
    r = freqrise.explain(oracle, signals[i], labels[i], n_masks=1000, output="probability", seed=9)
    assert r.domain == "frequency"
    assert r.values.shape == (1281,)
    assert freqrise.rank_accuracy(r.values, truth[i]) == 1.0
    post = freqrise.postprocess(r, 0.997)
    assert freqrise.entropy(post.values) < freqrise.entropy(r.values)
    curve = freqrise.deletion_curve(oracle, signals[i], labels[i], r, [0.05, 0.5])
    assert curve["scores"][0] < curve["unmodified_score"]
    assert 0.0 <= curve["auc"] <= 1.0


def test_callable_model_constant_map():
    def constant(batch):
        return np.tile([0.0, math.log(3.0)], (batch.shape[0], 1))

    r = freqrise.explain(constant, np.ones(64), 1, n_masks=50, seed=1)
    assert np.all(r.values == math.log(3.0))


def test_callable_model_wrong_shape():
    with pytest.raises(freqrise.Error):
        freqrise.explain(lambda b: np.zeros(3), np.ones(16), 0, n_masks=4)


def test_entropy_undefined():
    with pytest.raises(freqrise.UndefinedMetric):
        freqrise.entropy(np.zeros(4))
    assert freqrise.entropy(np.ones(4)) == pytest.approx(math.log(4))


def test_baselines():
    x = np.sin(2 * np.pi * 5 * np.arange(64) / 64)
    amp = freqrise.amplitude_map(x)
    assert int(np.argmax(amp.values)) == 5
    rnd = freqrise.random_map(64, seed=7)
    assert rnd.values.shape == (33,)
    assert np.all((rnd.values >= 0) & (rnd.values < 1))
