import numpy as np
import pytest

from mimodist import ChannelConfig, build_curve, eval_d, short_term_exponent
from mimodist.tradeoff import TradeoffCurve


def test_vertices_match_closed_form():
    for m in range(1, 9):
        for n in range(1, 9):
            cfg = ChannelConfig(m, n, m + n - 1)
            curve = build_curve(cfg)
            for r in range(min(m, n) + 1):
                assert eval_d(curve, float(r)) == (m - r) * (n - r)


def test_curve_monotone_and_convex():
    curve = build_curve(ChannelConfig(4, 4, 7))
    grid = np.linspace(0.0, 4.0, 401)
    vals = eval_d(curve, grid)
    assert np.all(np.diff(vals) <= 1e-12)
    # convex: second differences of a piecewise-linear convex function >= 0
    second = np.diff(vals, 2)
    assert np.all(second >= -1e-9)


def test_arq_window_scales_domain():
    cfg = ChannelConfig(4, 4, 7)
    plain = build_curve(cfg)
    scaled = build_curve(cfg, arq_window=3)
    assert scaled.max_rate == 12.0
    for r in np.linspace(0.0, 4.0, 17):
        assert eval_d(scaled, 3.0 * r) == pytest.approx(eval_d(plain, r), abs=1e-12)


def test_window_scaling_dominates_pointwise():
    cfg = ChannelConfig(4, 4, 7)
    l1 = build_curve(cfg, arq_window=1)
    l2 = build_curve(cfg, arq_window=2)
    for r in np.linspace(0.0, l1.max_rate, 101):
        assert eval_d(l2, r) >= eval_d(l1, r) - 1e-12


def test_short_term_exponent():
    cfg = ChannelConfig(2, 2, 4)
    curve = build_curve(cfg, arq_window=2)
    assert short_term_exponent(curve, 1.0) == pytest.approx(2.0 * eval_d(curve, 1.0))


def test_domain_errors():
    curve = build_curve(ChannelConfig(2, 2, 3))
    with pytest.raises(ValueError):
        eval_d(curve, -0.1)
    with pytest.raises(ValueError):
        eval_d(curve, 2.0001)
    with pytest.raises(ValueError):
        eval_d(curve, np.array([0.5, 5.0]))


def test_with_window_and_knots():
    curve = build_curve(ChannelConfig(3, 2, 4))
    w = curve.with_window(4)
    assert w.arq_window == 4 and w.vertices == curve.vertices
    knots_r, knots_d = w.scaled_knots
    assert knots_r[-1] == 4 * 2 and knots_d[-1] == 0.0


def test_tightness_flag():
    assert ChannelConfig(4, 4, 7).tight
    assert not ChannelConfig(4, 4, 6).tight


def test_channel_validation():
    with pytest.raises(ValueError):
        ChannelConfig(0, 2, 3)
    with pytest.raises(ValueError):
        ChannelConfig(2, 2, 0)


def test_curve_validation():
    with pytest.raises(ValueError):  # not reaching zero
        TradeoffCurve(((0.0, 4.0), (1.0, 1.0)))
    with pytest.raises(ValueError):  # not decreasing
        TradeoffCurve(((0.0, 4.0), (1.0, 4.0), (2.0, 0.0)))
    with pytest.raises(ValueError):  # not convex
        TradeoffCurve(((0.0, 9.0), (1.0, 8.0), (2.0, 0.0)))
    with pytest.raises(ValueError):
        TradeoffCurve(((0.0, 1.0), (1.0, 0.0)), arq_window=0)
