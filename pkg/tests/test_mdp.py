import itertools
import math

import numpy as np
import pytest

from mimodist import (
    Action,
    ArqConfig,
    ChannelConfig,
    MdpState,
    Policy,
    SourceConfig,
    bellman_residuals,
    build_mdp,
    cumulative_decode_prob,
    decode_prob,
    evaluate_policy,
    extract_policy,
    solve,
    static_policy,
    stationary_report,
    to_lp,
)
from mimodist.mdp import CONTINUE, enumerate_states, export_policy_csv

CHAN2 = ChannelConfig(2, 2, 4, snr_db=10.0)
SRC = SourceConfig(2.0, 8.0)


def small_model(deadline=2, max_window=2, allowed_r=(1.0, 2.0), lam=0.6):
    cfg = ArqConfig(
        arrival_prob=lam,
        deadline=deadline,
        max_window=max_window,
        allowed_r=allowed_r,
    )
    return build_mdp(cfg, CHAN2, SRC)


def enumerate_deterministic_values(model):
    """Oracle: evaluate every deterministic policy by stationary analysis."""
    choice_sets = [range(len(a)) for a in model.admissible]
    values = []
    for combo in itertools.product(*choice_sets):
        probs = []
        for x, k in enumerate(combo):
            row = np.zeros(len(model.admissible[x]))
            row[k] = 1.0
            probs.append(row)
        values.append(evaluate_policy(model, Policy(probs)))
    return values


def test_state_counts():
    cfg3 = ArqConfig(0.5, 3, 1, (1.0,))
    queue_only = [s for s in enumerate_states(cfg3) if s.service is None]
    assert len(queue_only) == 8  # subsets of {0,1,2}
    cfg1 = ArqConfig(0.5, 1, 4, (1.0, 2.0))
    assert len(enumerate_states(cfg1)) == 2  # empty / one fresh message


def test_state_invariants():
    cfg = ArqConfig(0.5, 3, 3, (1.0, 2.0))
    for s in enumerate_states(cfg):
        assert list(s.ages) == sorted(set(s.ages))
        assert all(0 <= a < cfg.deadline for a in s.ages)
        if s.service is not None:
            _, used = s.service
            assert s.ages and s.ages[-1] >= used >= 1


def test_state_budget():
    with pytest.raises(ValueError, match="budget"):
        enumerate_states(ArqConfig(0.5, 8, 4, (1.0, 2.0, 3.0), state_budget=100))


def test_decode_prob_examples():
    cfg = ArqConfig(0.5, 2, 2, (1.0, 2.0))
    # r = 1, two rounds on a 2x2 channel: d*(0.5) = 2.5
    f2 = cumulative_decode_prob(1.0, 2, cfg, CHAN2)
    assert f2 == pytest.approx(1.0 - 10.0 ** (-2.5), abs=1e-15)
    # zero diversity at r = L*min(M,N): certain failure under K_e = 1
    assert cumulative_decode_prob(2.0, 1, cfg, CHAN2) == 0.0
    # exploding SNR drives cumulative success to 1
    hot = ChannelConfig(2, 2, 4, snr_db=200.0)
    assert cumulative_decode_prob(1.0, 1, cfg, hot) == pytest.approx(1.0)


def test_decode_prob_conditional_consistency():
    cfg = ArqConfig(0.5, 4, 4, (1.0,))
    # product of conditional failures must reproduce the cumulative model
    fail = 1.0
    for l in range(1, 5):
        fail *= 1.0 - decode_prob(1.0, l, cfg, CHAN2)
        assert 1.0 - fail == pytest.approx(
            cumulative_decode_prob(1.0, l, cfg, CHAN2), abs=1e-12
        )


def test_row_sums():
    model = small_model()
    for x in range(model.n_states):
        for k in range(len(model.admissible[x])):
            total = sum(br.prob for br in model.branches[x][k])
            assert abs(total - 1.0) <= 1e-12


def test_silent_source_is_absorbing():
    model = small_model(lam=0.0)
    idle = model.index[MdpState((), None)]
    for k in range(len(model.admissible[idle])):
        live = [br for br in model.branches[idle][k] if br.prob > 0.0]
        assert len(live) == 1
        assert live[0].next_state == idle
        assert live[0].reward == 0.0
    sol = solve(to_lp(model))
    assert sol.objective_value == pytest.approx(0.0, abs=1e-12)


def test_perfect_channel_never_drops():
    # SNR high enough that every first round decodes: no ARQ failures, and
    # with k_dl >= 2 and one arrival per block, no deadline drops either
    chan = ChannelConfig(2, 2, 4, snr_db=300.0)
    cfg = ArqConfig(0.7, 2, 1, (1.0,))
    model = build_mdp(cfg, chan, SRC)
    report = stationary_report(model, static_policy(model, 1.0, 1))
    assert report.deadline_violation_rate == pytest.approx(0.0, abs=1e-12)
    assert report.delivery_rate == pytest.approx(1.0, abs=1e-9)


def test_lp_matches_policy_enumeration():
    model = small_model()
    sol = solve(to_lp(model))
    oracle = min(enumerate_deterministic_values(model))
    assert sol.objective_value == pytest.approx(oracle, abs=1e-8)


def test_extract_policy_reevaluates_to_lp_value():
    model = small_model(deadline=2, max_window=2, allowed_r=(1.0, 2.0), lam=0.8)
    sol = solve(to_lp(model))
    policy = extract_policy(sol, model)
    assert evaluate_policy(model, policy) == pytest.approx(
        sol.objective_value, abs=1e-8
    )


def test_adaptive_dominates_fixed():
    model = small_model(lam=0.8)
    sol = solve(to_lp(model))
    for action in set(model.actions):
        fixed = evaluate_policy(
            model, static_policy(model, action.multiplexing, action.window)
        )
        assert sol.objective_value <= fixed + 1e-9


def test_bellman_residuals_certify_optimality():
    model = small_model(lam=0.8)
    sol = solve(to_lp(model))
    res = bellman_residuals(sol, model)
    assert min(r.min() for r in res) >= -1e-8
    # every recurrent state must expose at least one co-optimal action
    policy = extract_policy(sol, model)
    from mimodist.mdp import _chain, _stationary

    pi = _stationary(_chain(model, policy)[0])
    for x in np.flatnonzero(pi > 1e-12):
        assert res[x].min() <= 1e-8


def test_reward_bounds():
    model = small_model(deadline=3, max_window=3)
    bound = 2.0 + model.cfg.deadline
    for x in range(model.n_states):
        for k in range(len(model.admissible[x])):
            for br in model.branches[x][k]:
                assert 0.0 <= br.reward <= bound


def test_policy_validation():
    with pytest.raises(ValueError):
        Policy([np.array([0.5, 0.4])])  # does not sum to one
    with pytest.raises(ValueError):
        Policy([np.array([1.5, -0.5])])


def test_arq_config_validation():
    with pytest.raises(ValueError):
        ArqConfig(1.0, 2, 2, (1.0,))
    with pytest.raises(ValueError):
        ArqConfig(0.5, 0, 2, (1.0,))
    with pytest.raises(ValueError):
        ArqConfig(0.5, 2, 2, ())
    cfg = ArqConfig(0.5, 2, 2, (3.0,))
    with pytest.raises(ValueError):
        cfg.validate_rates(CHAN2)  # r beyond min(M, N)


def test_static_policy_unknown_action():
    model = small_model()
    with pytest.raises(ValueError):
        static_policy(model, 1.5, 1)


def test_export_policy_csv(tmp_path):
    model = small_model()
    sol = solve(to_lp(model))
    policy = extract_policy(sol, model)
    path = tmp_path / "policy.csv"
    export_policy_csv(model, policy, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "state_id,ages,round,action_r,action_L,prob"
    assert len(lines) > 1
    for line in lines[1:]:
        fields = line.split(",")
        assert len(fields) == 6
        assert 0.0 < float(fields[5]) <= 1.0


def test_value_report_fields():
    model = small_model(lam=0.6)
    report = stationary_report(model, static_policy(model, 1.0, 2))
    assert 0.0 <= report.delivery_rate <= 1.0
    assert 0.0 <= report.deadline_violation_rate <= 1.0
    assert report.per_message_distortion >= report.avg_reward_per_block
    assert "average reward per block" in str(report)
