"""Monte-Carlo simulation of the MIMO-ARQ queue.

The simulator draws sample paths from the *same* transition kernel the MDP
was built from, so analysis and simulation cannot drift apart semantically:
the only layer the simulation adds is sampling, which the kernel-equivalence
chi-square test in the suite guards.  Confidence intervals use batch means
over 32 batches, the standard choice for steady-state output analysis
without an independence assumption.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate
from typing import Optional, Union

import numpy as np
from scipy import stats

from .mdp import Branch, MdpModel, MdpState, Policy, static_policy

__all__ = ["SimConfig", "SimReport", "run", "sample_branch"]

N_BATCHES = 32


@dataclass(frozen=True)
class SimConfig:
    horizon_blocks: int
    seed: int
    policy: Union[Policy, tuple[float, int]]
    warmup_blocks: int = 0
    trace_path: Optional[str] = None

    def __post_init__(self):
        if self.horizon_blocks <= self.warmup_blocks:
            raise ValueError("horizon_blocks must exceed warmup_blocks")
        if self.warmup_blocks < 0:
            raise ValueError("warmup_blocks must be nonnegative")


@dataclass(frozen=True)
class SimReport:
    avg_reward_per_block: float
    per_message_distortion: float
    delivery_rate: float
    deadline_violation_rate: float
    throughput_eta: float
    confidence_halfwidth: float
    # extra diagnostics (not part of the headline metrics)
    mean_queue_length: float
    mean_sojourn_blocks: float

    def csv_row(self) -> str:
        return ",".join(
            repr(v)
            for v in (
                self.avg_reward_per_block,
                self.per_message_distortion,
                self.delivery_rate,
                self.deadline_violation_rate,
                self.throughput_eta,
                self.confidence_halfwidth,
            )
        )

    def __str__(self) -> str:
        return (
            "simulation report\n"
            f"  average reward per block : {self.avg_reward_per_block:.10g}"
            f" +/- {self.confidence_halfwidth:.3g} (95% CI)\n"
            f"  per-message distortion   : {self.per_message_distortion:.10g}\n"
            f"  delivery rate            : {self.delivery_rate:.10g}\n"
            f"  deadline violation rate  : {self.deadline_violation_rate:.10g}\n"
            f"  throughput (bits/use)    : {self.throughput_eta:.10g}\n"
        )


def _cumulative(branches: list[Branch]) -> list[float]:
    return list(accumulate(br.prob for br in branches))


def sample_branch(
    branches: list[Branch], cum: list[float], rng: np.random.Generator
) -> Branch:
    """Inverse-transform sampling of one transition outcome."""
    u = rng.random() * cum[-1]
    return branches[bisect_right(cum, u)] if u < cum[-1] else branches[-1]


def run(mdp: MdpModel, sim: SimConfig) -> SimReport:
    """Simulate the block-synchronous dynamics and report batch-means estimates."""
    policy = sim.policy
    if not isinstance(policy, Policy):
        policy = static_policy(mdp, *policy)

    rng = np.random.default_rng(np.uint64(sim.seed))
    # Per-state action sampling tables and per-pair cumulative branch tables.
    action_cum = [list(accumulate(p)) for p in policy.probs]
    branch_cum = [[_cumulative(bl) for bl in row] for row in mdp.branches]

    state = mdp.index[MdpState((), None)]
    effective = sim.horizon_blocks - sim.warmup_blocks
    rewards = np.zeros(effective)
    delivered = arrivals = drops = 0
    bits = 0.0
    queue_len_sum = 0
    sojourn_sum = 0

    trace = open(sim.trace_path, "w") if sim.trace_path else None
    if trace:
        trace.write("block,queue_len,head_age,round,event\n")

    try:
        for block in range(sim.horizon_blocks):
            st = mdp.states[state]
            row = policy.probs[state]
            if len(row) == 1:
                k = 0
            else:
                u = rng.random()
                k = bisect_right(action_cum[state], u)
                if k >= len(row):
                    k = len(row) - 1
            br = sample_branch(mdp.branches[state][k], branch_cum[state][k], rng)

            measuring = block >= sim.warmup_blocks
            if measuring:
                rewards[block - sim.warmup_blocks] = br.reward
                delivered += br.delivered
                arrivals += br.arrival
                drops += br.deadline_drops
                bits += br.bits
                queue_len_sum += len(st.ages)
                if br.delivered:
                    # the head message occupied the system for head_age+1 blocks
                    head_age = st.ages[-1] if st.ages else 0
                    sojourn_sum += head_age + 1
            if trace:
                event = (
                    "deliver"
                    if br.delivered
                    else "arq_fail"
                    if br.arq_fail
                    else "drop"
                    if br.deadline_drops
                    else "idle"
                    if not st.ages
                    else "round"
                )
                head_age = st.ages[-1] if st.ages else -1
                rnd = st.service[1] + 1 if st.service else (1 if st.ages else 0)
                trace.write(f"{block},{len(st.ages)},{head_age},{rnd},{event}\n")
            state = br.next_state
    finally:
        if trace:
            trace.close()

    batch = effective // N_BATCHES
    means = rewards[: batch * N_BATCHES].reshape(N_BATCHES, batch).mean(axis=1)
    half = float(
        stats.t.ppf(0.975, N_BATCHES - 1) * means.std(ddof=1) / np.sqrt(N_BATCHES)
    )

    avg = float(rewards.mean())
    T = mdp.chan.block_length
    return SimReport(
        avg_reward_per_block=avg,
        per_message_distortion=avg / delivered * effective if delivered else float("inf"),
        delivery_rate=delivered / arrivals if arrivals else 0.0,
        deadline_violation_rate=drops / arrivals if arrivals else 0.0,
        throughput_eta=bits / (T * effective),
        confidence_halfwidth=half,
        mean_queue_length=queue_len_sum / effective,
        mean_sojourn_blocks=sojourn_sum / delivered if delivered else 0.0,
    )
