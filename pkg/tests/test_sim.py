import numpy as np
import pytest

from mimodist import (
    ArqConfig,
    ChannelConfig,
    SimConfig,
    SourceConfig,
    build_mdp,
    evaluate_policy,
    extract_policy,
    run,
    solve,
    static_policy,
    to_lp,
)

CHAN = ChannelConfig(2, 2, 4, snr_db=10.0)
SRC = SourceConfig(2.0, 8.0)


def model_and_policy(lam=0.6):
    cfg = ArqConfig(lam, 2, 2, (1.0, 2.0))
    model = build_mdp(cfg, CHAN, SRC)
    sol = solve(to_lp(model))
    return model, extract_policy(sol, model)


def test_reproducible_given_seed():
    model, policy = model_and_policy()
    sim = SimConfig(horizon_blocks=20000, seed=5, policy=policy)
    r1, r2 = run(model, sim), run(model, sim)
    assert r1 == r2
    r3 = run(model, SimConfig(horizon_blocks=20000, seed=6, policy=policy))
    assert r3.avg_reward_per_block != r1.avg_reward_per_block


def test_matches_exact_value():
    model, policy = model_and_policy()
    exact = evaluate_policy(model, policy)
    report = run(model, SimConfig(horizon_blocks=400000, seed=1, policy=policy))
    assert abs(report.avg_reward_per_block - exact) <= 3.0 * report.confidence_halfwidth


def test_fixed_policy_tuple_shortcut():
    model, _ = model_and_policy()
    exact = evaluate_policy(model, static_policy(model, 1.0, 2))
    report = run(model, SimConfig(horizon_blocks=400000, seed=2, policy=(1.0, 2)))
    assert abs(report.avg_reward_per_block - exact) <= 3.0 * report.confidence_halfwidth


def test_silent_source_reports_zero():
    cfg = ArqConfig(0.0, 2, 2, (1.0, 2.0))
    model = build_mdp(cfg, CHAN, SRC)
    report = run(
        model, SimConfig(horizon_blocks=5000, seed=0, policy=(1.0, 1))
    )
    assert report.avg_reward_per_block == 0.0
    assert report.delivery_rate == 0.0
    assert report.deadline_violation_rate == 0.0
    assert report.throughput_eta == 0.0


def test_warmup_and_validation():
    model, policy = model_and_policy()
    with pytest.raises(ValueError):
        SimConfig(horizon_blocks=100, seed=0, policy=policy, warmup_blocks=100)
    with pytest.raises(ValueError):
        SimConfig(horizon_blocks=100, seed=0, policy=policy, warmup_blocks=-1)
    report = run(
        model,
        SimConfig(horizon_blocks=40000, seed=3, policy=policy, warmup_blocks=1000),
    )
    assert np.isfinite(report.avg_reward_per_block)


def test_trace_output(tmp_path):
    model, policy = model_and_policy()
    trace = tmp_path / "trace.csv"
    run(
        model,
        SimConfig(horizon_blocks=200, seed=4, policy=policy, trace_path=str(trace)),
    )
    lines = trace.read_text().splitlines()
    assert lines[0] == "block,queue_len,head_age,round,event"
    assert len(lines) == 201


def test_report_rates_consistent():
    model, policy = model_and_policy(lam=0.8)
    report = run(model, SimConfig(horizon_blocks=100000, seed=7, policy=policy))
    # boundary messages still in flight keep the empirical rates within
    # O(k_dl / horizon) of their stationary counterparts
    assert 0.0 <= report.delivery_rate <= 1.0 + 1e-3
    assert 0.0 <= report.deadline_violation_rate <= 1.0
    assert report.delivery_rate + report.deadline_violation_rate <= 1.0 + 1e-3
    assert report.throughput_eta > 0.0
    assert report.csv_row().count(",") == 5
