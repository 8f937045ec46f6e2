"""Average-reward MDP for a MIMO-ARQ transmitter serving deadline-bound messages.

The state couples the queue of waiting messages (tracked by age, since a
message close to its deadline must be distinguished from a fresh one) with
the progress of the ARQ process.  Actions fix a (multiplexing gain, ARQ
window) pair at the start of each ARQ block and remain committed until the
message is decoded, the window expires, or the deadline kills the message.
The optimal adaptive policy comes from the standard state-action-frequency
linear program; policy evaluation solves the stationary distribution
directly and doubles as an independent oracle for the LP value.

Timing convention for one transmission block, starting from the state
observed at the block boundary:

  1. If an ARQ round is in progress the transmitter continues it; otherwise
     the oldest queued message starts round 1 of the chosen action.  When the
     queue is empty the chosen action is pre-committed: a message arriving
     during this block starts round 1 immediately (an idle transmitter serves
     an arrival in its arrival block).
  2. The round succeeds or fails.  Success delivers the head message and
     charges the quantizer distortion term.  Failure on the last window round
     completes the ARQ block unsuccessfully (quantizer term plus unit
     penalty); otherwise the round counter advances.
  3. Surviving messages age by one block.  Any message whose age reaches the
     deadline is dropped with a unit penalty; an in-service message that
     expires this way aborts its ARQ block and the next block starts fresh.
  4. A new message arrives with probability lambda and will appear in the
     next state with age 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .exponent import SourceConfig
from .lp import LpProblem, LpSolution
from .tradeoff import ChannelConfig, build_curve, eval_d

__all__ = [
    "ArqConfig",
    "MdpState",
    "Action",
    "CONTINUE",
    "Policy",
    "MdpModel",
    "ValueReport",
    "enumerate_states",
    "decode_prob",
    "cumulative_decode_prob",
    "build_mdp",
    "to_lp",
    "extract_policy",
    "evaluate_policy",
    "static_policy",
    "stationary_report",
    "export_policy_csv",
]

ROW_SUM_TOL = 1e-12

# Sentinel action index for mid-window states, where the committed choice
# must be carried through.
CONTINUE = -1


@dataclass(frozen=True)
class ArqConfig:
    """Arrival, deadline, and action-set parameters of the ARQ queue."""

    arrival_prob: float
    deadline: int
    max_window: int
    allowed_r: tuple[float, ...]
    error_coeff: float = 1.0
    state_budget: int = 10**6

    def __post_init__(self):
        # lambda = 0 (a silent source) is allowed for degenerate sanity checks
        if not 0.0 <= self.arrival_prob < 1.0:
            raise ValueError("arrival_prob must be in [0, 1)")
        if int(self.deadline) != self.deadline or self.deadline < 1:
            raise ValueError("deadline must be a positive integer")
        if int(self.max_window) != self.max_window or self.max_window < 1:
            raise ValueError("max_window must be a positive integer")
        if not self.allowed_r:
            raise ValueError("allowed_r must be non-empty")
        if self.error_coeff <= 0:
            raise ValueError("error_coeff must be positive")
        object.__setattr__(self, "allowed_r", tuple(float(r) for r in self.allowed_r))

    def validate_rates(self, chan: ChannelConfig) -> None:
        k = chan.max_multiplexing
        for r in self.allowed_r:
            if not 0.0 < r <= k:
                raise ValueError(f"allowed multiplexing gain {r} not in (0, {k}]")


@dataclass(frozen=True)
class Action:
    """A committed (multiplexing gain, ARQ window) pair."""

    multiplexing: float
    window: int


class MdpState(NamedTuple):
    """Queue ages (ascending; the oldest message, at the end, is the head)
    plus the in-progress ARQ annotation (action index, rounds already used)."""

    ages: tuple[int, ...]
    service: Optional[tuple[int, int]]


class Branch(NamedTuple):
    """One probabilistic outcome of a (state, action) step.

    Event counters ride along so that the simulator and the stationary
    analysis share a single transition kernel.
    """

    next_state: int
    prob: float
    reward: float
    delivered: int
    bits: float
    deadline_drops: int
    arq_fail: int
    arrival: int


def cumulative_decode_prob(
    r: float, rounds: int, cfg: ArqConfig, chan: ChannelConfig
) -> float:
    """P{decoded within the first ``rounds`` rounds}: the cumulative model
    F(l) = 1 - min(1, K_e * SNR^(-d*(r/l))).

    The exponent d*(r/l) is the ARQ-enhanced diversity available once l
    rounds have accumulated.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    curve = build_curve(chan)
    d = eval_d(curve, r / rounds)
    return 1.0 - min(1.0, cfg.error_coeff * chan.snr_linear ** (-d))


def decode_prob(r: float, rounds: int, cfg: ArqConfig, chan: ChannelConfig) -> float:
    """Conditional per-round success: P{decoded by end of round l | not
    decoded in rounds 1..l-1}, derived from consecutive cumulative values."""
    f_now = cumulative_decode_prob(r, rounds, cfg, chan)
    if rounds == 1:
        return f_now
    f_prev = cumulative_decode_prob(r, rounds - 1, cfg, chan)
    remaining = 1.0 - f_prev
    if remaining <= 0.0:
        return 1.0
    return min(1.0, max(0.0, (f_now - f_prev) / remaining))


def _actions(cfg: ArqConfig) -> list[Action]:
    return [
        Action(r, window)
        for r in cfg.allowed_r
        for window in range(1, cfg.max_window + 1)
    ]


def enumerate_states(cfg: ArqConfig) -> list[MdpState]:
    """Exhaustive state list: every strictly-increasing age subset of
    [0, deadline), crossed with the feasible in-service annotations.

    An annotation (action, used rounds l) requires a head old enough to have
    been in service that long (max age >= l).
    """
    actions = _actions(cfg)
    mid_annotations = sum(a.window - 1 for a in actions)
    bound = 2 ** cfg.deadline * (1 + mid_annotations)
    if bound > cfg.state_budget:
        raise ValueError(
            f"state space bound {bound} exceeds budget {cfg.state_budget}; "
            f"reduce deadline ({cfg.deadline}), max_window ({cfg.max_window}) "
            f"or the action set ({len(cfg.allowed_r)} rates)"
        )

    states: list[MdpState] = []
    for mask in range(2 ** cfg.deadline):
        ages = tuple(i for i in range(cfg.deadline) if mask >> i & 1)
        states.append(MdpState(ages, None))
        if not ages:
            continue
        head = ages[-1]
        for a_idx, action in enumerate(actions):
            for used in range(1, action.window):
                if head >= used:
                    states.append(MdpState(ages, (a_idx, used)))
    return states


@dataclass
class Policy:
    """Distribution over admissible actions per state."""

    probs: list[np.ndarray]

    def __post_init__(self):
        for i, p in enumerate(self.probs):
            if abs(float(np.sum(p)) - 1.0) > 1e-9 or np.any(p < -1e-12):
                raise ValueError(f"policy row {i} is not a distribution: {p}")

    def deterministic(self) -> list[int]:
        """Position (within the state's admissible list) of the most likely action."""
        return [int(np.argmax(p)) for p in self.probs]

    @property
    def is_deterministic(self) -> bool:
        return all(np.max(p) > 1.0 - 1e-9 for p in self.probs)


@dataclass
class MdpModel:
    """States, actions, transition kernel with event metadata, and rewards."""

    cfg: ArqConfig
    chan: ChannelConfig
    src: SourceConfig
    states: list[MdpState]
    actions: list[Action]
    admissible: list[list[int]]  # action indices per state; [CONTINUE] mid-window
    branches: list[list[list[Branch]]]  # per state, per admissible action
    reward: list[list[float]]  # expected one-step reward, same shape
    source_terms: np.ndarray  # per action: quantizer distortion 2^{-p s / k}
    bits_per_message: np.ndarray  # per action: s = T r log2 SNR
    first_round_success: np.ndarray  # per action: F(1), used for fallbacks

    index: dict[MdpState, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {s: i for i, s in enumerate(self.states)}

    @property
    def n_states(self) -> int:
        return len(self.states)

    def pair_count(self) -> int:
        return sum(len(a) for a in self.admissible)


def build_mdp(cfg: ArqConfig, chan: ChannelConfig, src: SourceConfig) -> MdpModel:
    """Construct the full transition kernel and reward table."""
    cfg.validate_rates(chan)
    actions = _actions(cfg)
    states = enumerate_states(cfg)
    index = {s: i for i, s in enumerate(states)}
    lam = cfg.arrival_prob
    k_dl = cfg.deadline

    source_terms = np.empty(len(actions))
    bits = np.empty(len(actions))
    f1 = np.empty(len(actions))
    cond_success = []  # per action, conditional success for rounds 1..window
    for i, action in enumerate(actions):
        s_bits = src.matched_bits(chan, action.multiplexing)
        bits[i] = s_bits
        source_terms[i] = 2.0 ** (-src.norm_order * s_bits / src.source_dim)
        cond_success.append(
            [decode_prob(action.multiplexing, l, cfg, chan) for l in range(1, action.window + 1)]
        )
        f1[i] = cumulative_decode_prob(action.multiplexing, 1, cfg, chan)

    def age_and_drop(ages_list):
        """Apply one block of aging; return (surviving ages, drop count)."""
        survivors = []
        drops = 0
        for age in ages_list:
            if age + 1 >= k_dl:
                drops += 1
            else:
                survivors.append(age + 1)
        return survivors, drops

    def with_arrival(branches_core):
        """Cross the decode outcomes with the Bernoulli arrival."""
        out = []
        for ages_list, service, prob, reward, delivered, bbits, drops, fail in branches_core:
            for arrival, p_arr in ((1, lam), (0, 1.0 - lam)):
                next_ages = tuple(sorted(ages_list + [0])) if arrival else tuple(ages_list)
                nxt = index[MdpState(next_ages, service)]
                out.append(
                    Branch(nxt, prob * p_arr, reward, delivered, bbits, drops, fail, arrival)
                )
        return out

    def step_branches(state: MdpState, a_idx: int) -> list[Branch]:
        ages, service = state
        core = []
        if not ages:
            # Idle: the committed action serves a message that arrives at the
            # start of this block; it ages to 1 if its first round fails.
            action = actions[a_idx]
            f = cond_success[a_idx][0]
            out = []
            out.append(Branch(index[MdpState((), None)], 1.0 - lam, 0.0, 0, 0.0, 0, 0, 0))
            if f > 0.0:
                out.append(
                    Branch(
                        index[MdpState((), None)],
                        lam * f,
                        source_terms[a_idx],
                        1,
                        bits[a_idx],
                        0,
                        0,
                        1,
                    )
                )
            if f < 1.0:
                if action.window == 1:
                    reward = source_terms[a_idx] + 1.0
                    nxt, fail, drops = MdpState((), None), 1, 0
                elif k_dl == 1:
                    # ages to 1 = deadline: expires mid-window
                    reward = 1.0
                    nxt, fail, drops = MdpState((), None), 0, 1
                else:
                    reward = 0.0
                    nxt, fail, drops = MdpState((1,), (a_idx, 1)), 0, 0
                out.append(
                    Branch(index[nxt], lam * (1.0 - f), reward, 0, 0.0, drops, fail, 1)
                )
            return out

        if service is None:
            committed, rounds_used = a_idx, 0
        else:
            committed, rounds_used = service
        action = actions[committed]
        this_round = rounds_used + 1
        f = cond_success[committed][this_round - 1]
        head, rest = ages[-1], list(ages[:-1])

        if f > 0.0:  # round succeeds, head delivered
            survivors, drops = age_and_drop(rest)
            core.append(
                (survivors, None, f, source_terms[committed] + drops, 1,
                 bits[committed], drops, 0)
            )
        if f < 1.0:  # round fails
            if this_round == action.window:
                # window exhausted: ARQ block completes in error
                survivors, drops = age_and_drop(rest)
                core.append(
                    (survivors, None, 1.0 - f,
                     source_terms[committed] + 1.0 + drops, 0, 0.0, drops, 1)
                )
            else:
                survivors, drops = age_and_drop(list(ages))
                if head + 1 >= k_dl:
                    # head expired mid-window: transmission aborted
                    core.append((survivors, None, 1.0 - f, float(drops), 0, 0.0, drops, 0))
                else:
                    core.append(
                        (survivors, (committed, this_round), 1.0 - f,
                         float(drops), 0, 0.0, drops, 0)
                    )
        return with_arrival(core)

    admissible: list[list[int]] = []
    branches: list[list[list[Branch]]] = []
    reward: list[list[float]] = []
    for state in states:
        acts = list(range(len(actions))) if state.service is None else [CONTINUE]
        row_branches = []
        row_reward = []
        for a in acts:
            a_eff = a if a != CONTINUE else state.service[0]
            bl = step_branches(state, a_eff)
            total = sum(br.prob for br in bl)
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise AssertionError(
                    f"transition row for state {state} action {a} sums to {total!r}"
                )
            row_branches.append(bl)
            row_reward.append(sum(br.prob * br.reward for br in bl))
        admissible.append(acts)
        branches.append(row_branches)
        reward.append(row_reward)

    return MdpModel(
        cfg=cfg,
        chan=chan,
        src=src,
        states=states,
        actions=actions,
        admissible=admissible,
        branches=branches,
        reward=reward,
        source_terms=source_terms,
        bits_per_message=bits,
        first_round_success=f1,
    )


def _lp_columns(mdp: MdpModel) -> list[tuple[int, int]]:
    """Canonical (state index, admissible position) order of LP variables."""
    return [(x, k) for x in range(mdp.n_states) for k in range(len(mdp.admissible[x]))]


def to_lp(mdp: MdpModel) -> LpProblem:
    """State-action frequency LP: minimize expected reward subject to the
    stationarity balance equations and normalization."""
    columns = _lp_columns(mdp)
    n = len(columns)
    m = mdp.n_states + 1

    rows, cols, data = [], [], []
    c = np.empty(n)
    for j, (x, k) in enumerate(columns):
        c[j] = mdp.reward[x][k]
        entries = {x: 1.0}  # delta(x, x')
        for br in mdp.branches[x][k]:
            entries[br.next_state] = entries.get(br.next_state, 0.0) - br.prob
        for i, v in entries.items():
            if v != 0.0:
                rows.append(i)
                cols.append(j)
                data.append(v)
        rows.append(mdp.n_states)
        cols.append(j)
        data.append(1.0)

    A = sp.csc_matrix(sp.coo_matrix((data, (rows, cols)), shape=(m, n)))
    b = np.zeros(m)
    b[-1] = 1.0
    return LpProblem(c, A, b)


def extract_policy(sol: LpSolution, mdp: MdpModel) -> Policy:
    """Normalize state-action frequencies into a policy.

    States the optimal chain never visits carry zero frequency; they get the
    admissible action with the greatest one-round decode probability (a
    documented deterministic fallback - the LP only pins down the policy on
    recurrent states).
    """
    if sol.x is None:
        raise ValueError(f"cannot extract a policy from status {sol.status}")
    columns = _lp_columns(mdp)
    freq = [np.zeros(len(mdp.admissible[x])) for x in range(mdp.n_states)]
    for j, (x, k) in enumerate(columns):
        freq[x][k] = max(sol.x[j], 0.0)

    probs = []
    for x in range(mdp.n_states):
        total = float(np.sum(freq[x]))
        if total > 1e-12:
            probs.append(freq[x] / total)
        else:
            row = np.zeros(len(mdp.admissible[x]))
            if mdp.admissible[x] == [CONTINUE]:
                row[0] = 1.0
            else:
                best = int(np.argmax(mdp.first_round_success[mdp.admissible[x]]))
                row[best] = 1.0
            probs.append(row)
    return Policy(probs)


def bellman_residuals(sol: LpSolution, mdp: MdpModel) -> list[np.ndarray]:
    """Average-reward optimality residuals from the LP dual certificate.

    The duals of the balance rows act as bias values h(x) and the dual of the
    normalization row is the optimal gain; the residual of (x, a) is

        r(x, a) - gain + E[h(x')] - h(x)  >=  0,

    with equality (up to solver tolerance) exactly on the co-optimal actions.
    Useful for detecting ties the frequency vector breaks arbitrarily.
    """
    if sol.dual is None:
        raise ValueError("solution carries no dual certificate")
    h = sol.dual[: mdp.n_states]
    gain = sol.dual[mdp.n_states]
    out = []
    for x in range(mdp.n_states):
        res = np.empty(len(mdp.admissible[x]))
        for k in range(res.size):
            exp_h = sum(br.prob * h[br.next_state] for br in mdp.branches[x][k])
            res[k] = mdp.reward[x][k] - gain + exp_h - h[x]
        out.append(res)
    return out


def static_policy(mdp: MdpModel, multiplexing: float, window: int) -> Policy:
    """Fixed-allocation policy: the same (r, L) at every decision state."""
    target = Action(float(multiplexing), int(window))
    try:
        a_idx = mdp.actions.index(target)
    except ValueError:
        raise ValueError(f"action {target} not in the model's action set") from None
    probs = []
    for x in range(mdp.n_states):
        row = np.zeros(len(mdp.admissible[x]))
        row[0 if mdp.admissible[x] == [CONTINUE] else a_idx] = 1.0
        probs.append(row)
    return Policy(probs)


def _chain(mdp: MdpModel, policy: Policy):
    """Transition matrix and expected reward vector under a policy."""
    n = mdp.n_states
    rows, cols, data = [], [], []
    rho = np.zeros(n)
    for x in range(n):
        for k, g in enumerate(policy.probs[x]):
            if g <= 0.0:
                continue
            rho[x] += g * mdp.reward[x][k]
            for br in mdp.branches[x][k]:
                rows.append(x)
                cols.append(br.next_state)
                data.append(g * br.prob)
    Q = sp.csr_matrix(sp.coo_matrix((data, (rows, cols)), shape=(n, n)))
    return Q, rho


def _stationary(Q: sp.csr_matrix) -> np.ndarray:
    """Stationary distribution of the unique closed communicating class,
    zero elsewhere.  Multiple closed classes indicate a modeling bug and are
    reported as an error."""
    n = Q.shape[0]
    n_comp, labels = connected_components(Q, directed=True, connection="strong")
    # a class is closed iff no edge leaves it
    open_class = np.zeros(n_comp, dtype=bool)
    coo = sp.coo_matrix(Q)
    for i, j, v in zip(coo.row, coo.col, coo.data):
        if v > 0.0 and labels[i] != labels[j]:
            open_class[labels[i]] = True
    closed = np.flatnonzero(~open_class)
    if closed.size != 1:
        raise RuntimeError(
            f"chain has {closed.size} closed classes; expected exactly one "
            "(irreducibility on the recurrent class fails)"
        )
    members = np.flatnonzero(labels == closed[0])
    Qc = Q[np.ix_(members, members)].toarray()
    a = Qc.T - np.eye(members.size)
    a[-1, :] = 1.0
    rhs = np.zeros(members.size)
    rhs[-1] = 1.0
    pi_c = np.linalg.solve(a, rhs)
    pi = np.zeros(n)
    pi[members] = np.clip(pi_c, 0.0, None)
    pi /= pi.sum()
    return pi


def evaluate_policy(mdp: MdpModel, policy: Policy) -> float:
    """Long-run average reward per block: pi(g) . r(g)."""
    Q, rho = _chain(mdp, policy)
    pi = _stationary(Q)
    return float(pi @ rho)


@dataclass(frozen=True)
class ValueReport:
    """Stationary performance of a policy, per block and per message."""

    avg_reward_per_block: float
    per_message_distortion: float
    delivery_rate: float
    deadline_violation_rate: float

    def __str__(self) -> str:
        return (
            "policy value report\n"
            f"  average reward per block : {self.avg_reward_per_block:.10g}\n"
            f"  per-message distortion   : {self.per_message_distortion:.10g}\n"
            f"  delivery rate            : {self.delivery_rate:.10g}\n"
            f"  deadline violation rate  : {self.deadline_violation_rate:.10g}\n"
        )


def stationary_report(mdp: MdpModel, policy: Policy) -> ValueReport:
    """Exact stationary event rates under a policy."""
    Q, rho = _chain(mdp, policy)
    pi = _stationary(Q)
    value = float(pi @ rho)
    delivered = drops = 0.0
    for x in range(mdp.n_states):
        if pi[x] == 0.0:
            continue
        for k, g in enumerate(policy.probs[x]):
            if g <= 0.0:
                continue
            for br in mdp.branches[x][k]:
                delivered += pi[x] * g * br.prob * br.delivered
                drops += pi[x] * g * br.prob * br.deadline_drops
    lam = mdp.cfg.arrival_prob
    return ValueReport(
        avg_reward_per_block=value,
        per_message_distortion=value / delivered if delivered > 0 else math.inf,
        delivery_rate=delivered / lam if lam > 0 else 0.0,
        deadline_violation_rate=drops / lam if lam > 0 else 0.0,
    )


def export_policy_csv(mdp: MdpModel, policy: Policy, path) -> None:
    """Write the policy as rows `state_id,ages,round,action_r,action_L,prob`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state_id", "ages", "round", "action_r", "action_L", "prob"])
        for x, state in enumerate(mdp.states):
            ages = "|".join(str(a) for a in state.ages)
            rounds_used = state.service[1] if state.service else 0
            for k, a in enumerate(mdp.admissible[x]):
                p = policy.probs[x][k]
                if p <= 0.0:
                    continue
                action = mdp.actions[a if a != CONTINUE else state.service[0]]
                writer.writerow(
                    [x, ages, rounds_used, action.multiplexing, action.window, repr(float(p))]
                )
