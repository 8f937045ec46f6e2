"""Two-phase revised simplex solver for standard-form linear programs.

Solves min c'x subject to Ax = b, x >= 0.  The basis is kept as a dense LU
factorization plus a product-form eta file, refactorized every
``REFACTOR_INTERVAL`` pivots.  Dantzig pricing is used until the objective
stalls, after which Bland's rule takes over to guarantee termination on
degenerate problems.  The solver is deterministic given the input ordering
and returns a vertex solution, whose zero pattern cleanly identifies
deterministic policies when the LP comes from an average-reward MDP.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

__all__ = ["LpProblem", "LpSolution", "LpStatus", "LpNumericalError", "solve", "dump_problem"]

PIVOT_TOL = 1e-10
OPT_TOL = 1e-9
REFACTOR_INTERVAL = 64
RCOND_LIMIT = 1e-14


class LpNumericalError(RuntimeError):
    """Basis factorization broke down (singular or hopelessly ill-conditioned)."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """Standard-form LP: min c'x s.t. Ax = b, x >= 0."""

    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        b = np.asarray(self.b, dtype=float)
        A = sp.csc_matrix(self.A)
        if A.shape != (b.size, c.size):
            raise ValueError(
                f"dimension mismatch: A is {A.shape}, b has {b.size}, c has {c.size}"
            )
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b)) and np.all(np.isfinite(A.data))):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n_constraints(self) -> int:
        return self.b.size

    @property
    def n_variables(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpSolution:
    x: Optional[np.ndarray]
    objective_value: float
    status: LpStatus
    iteration_count: int
    dual: Optional[np.ndarray] = None

    def feasibility_residual(self, problem: LpProblem) -> float:
        return float(np.max(np.abs(problem.A @ self.x - problem.b)))

    def duality_gap(self) -> float:
        """|c'x - y'b| for the dual certificate produced with the solution."""
        return float(abs(self.objective_value - self._dual_objective))

    @property
    def _dual_objective(self) -> float:
        if self.dual is None:
            raise ValueError("no dual certificate available")
        return float(self._yb)

    # set by the solver; kept out of the dataclass signature on purpose
    _yb: float = float("nan")


class _Basis:
    """Dense LU of the basis matrix plus a product-form eta file."""

    def __init__(self, A: sp.csc_matrix, n_structural: int):
        self.A = A
        self.m = A.shape[0]
        self.n_structural = n_structural
        self.etas: list[tuple[int, np.ndarray]] = []
        self.lu = None

    def column(self, j: int) -> np.ndarray:
        """Constraint column j; indices >= n_structural are phase-1 artificials."""
        col = np.zeros(self.m)
        if j < self.n_structural:
            start, end = self.A.indptr[j], self.A.indptr[j + 1]
            col[self.A.indices[start:end]] = self.A.data[start:end]
        else:
            col[j - self.n_structural] = 1.0
        return col

    def refactorize(self, basis: np.ndarray) -> None:
        B = np.zeros((self.m, self.m))
        for i, j in enumerate(basis):
            B[:, i] = self.column(j)
        try:
            self.lu = sla.lu_factor(B)
        except (sla.LinAlgError, ValueError) as exc:  # pragma: no cover
            raise LpNumericalError(f"basis factorization failed: {exc}") from exc
        # LAPACK reciprocal condition estimate on the factored basis
        gecon = sla.get_lapack_funcs(("gecon",), (B,))[0]
        rcond, info = gecon(self.lu[0], np.linalg.norm(B, 1))
        if info != 0 or not np.isfinite(rcond) or rcond < RCOND_LIMIT:
            raise LpNumericalError(
                f"basis condition estimate overflow (rcond={rcond:.3e})"
            )
        self.etas = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        """Solve B d = a."""
        d = sla.lu_solve(self.lu, a)
        for p, w in self.etas:
            dp = d[p] / w[p]
            d -= w * dp
            d[p] = dp
        return d

    def btran(self, c: np.ndarray) -> np.ndarray:
        """Solve y' B = c'."""
        v = c.copy()
        for p, w in reversed(self.etas):
            v[p] = (v[p] - v @ w) / w[p] + v[p]
        return sla.lu_solve(self.lu, v, trans=1)

    def push_eta(self, p: int, w: np.ndarray) -> None:
        if abs(w[p]) < PIVOT_TOL:
            raise LpNumericalError(f"pivot element {w[p]:.3e} below tolerance")
        self.etas.append((p, w.copy()))


def _simplex(
    basis_mgr: _Basis,
    basis: np.ndarray,
    costs: np.ndarray,
    b: np.ndarray,
    allowed: np.ndarray,
    iteration_start: int,
    max_iterations: int,
    evict_artificials: bool = False,
    stop_at_zero: bool = False,
):
    """Run the revised simplex from the given basis.

    ``allowed`` marks columns eligible to enter.  ``evict_artificials``
    enables the phase-2 rule that treats basic artificials at zero as
    upper-bounded by zero, kicking them out at theta = 0 whenever a pivot
    touches their row.  Returns (status_flag, basis, x_B, iterations) where
    status_flag is "optimal" or "unbounded".
    """
    m = basis_mgr.m
    AT = sp.csr_matrix(basis_mgr.A.T)
    basis_mgr.refactorize(basis)
    x_B = basis_mgr.ftran(b)

    n_total = costs.size
    stall_limit = 3 * (m + n_total)
    stall = 0
    bland = False
    best_obj = np.inf
    iterations = iteration_start

    in_basis = np.zeros(n_total, dtype=bool)
    in_basis[basis] = True

    b_scale = 1.0 + float(np.max(np.abs(b))) if b.size else 1.0

    while True:
        if iterations - iteration_start >= max_iterations:
            raise LpNumericalError(
                f"iteration limit {max_iterations} exceeded"
            )
        # Phase 1 only needs feasibility: once the artificial sum is zero,
        # grinding through degenerate pivots to evict zero-valued artificials
        # would merely degrade the basis conditioning.
        if stop_at_zero and float(costs[basis] @ x_B) <= 1e-10 * b_scale:
            return "optimal", basis, x_B, iterations
        y = basis_mgr.btran(costs[basis].astype(float))
        reduced = costs.copy()
        reduced[: basis_mgr.n_structural] -= AT @ y
        if n_total > basis_mgr.n_structural:
            reduced[basis_mgr.n_structural :] -= y
        candidates = np.flatnonzero((reduced < -OPT_TOL) & allowed & ~in_basis)
        if candidates.size == 0:
            return "optimal", basis, x_B, iterations
        if bland:
            q = int(candidates[0])
        else:
            q = int(candidates[np.argmin(reduced[candidates])])

        d = basis_mgr.ftran(basis_mgr.column(q))
        pos = np.flatnonzero(d > PIVOT_TOL)
        # Basic artificials sitting at zero are implicitly bounded above by
        # zero: any pivot touching their row must kick them out at theta = 0.
        # This drives leftover phase-1 artificials out lazily, without a
        # separate (and eta-file-hostile) drive-out pass.
        # Negative entries there would otherwise let the artificial grow
        # positive (making the final point infeasible), so those rows are
        # mandatory theta = 0 candidates; positive entries are already in
        # ``pos`` and get preferred through the tie-break below.
        # Entries below 1e-7 are treated as exact zeros: genuine transition
        # couplings are far larger, and the bookkeeping drift a true zero
        # causes is wiped out every time x_B is refreshed at refactorization.
        if evict_artificials:
            art_zero = np.flatnonzero(
                (basis >= basis_mgr.n_structural)
                & (d < -1e-7)
                & (x_B <= 1e-9)
            )
        else:
            art_zero = np.empty(0, dtype=int)
        if pos.size == 0 and art_zero.size == 0:
            return "unbounded", basis, x_B, iterations

        rows = np.concatenate([pos, art_zero])
        ratios = np.concatenate(
            [np.maximum(x_B[pos], 0.0) / d[pos], np.zeros(art_zero.size)]
        )
        if bland:
            # exact ratio test with smallest-index tie-break (anti-cycling)
            theta = ratios.min()
            ties = rows[np.isclose(ratios, theta, rtol=0.0, atol=1e-12)]
            p = int(ties[np.argmin(basis[ties])])
            theta = max(theta, 0.0)
        else:
            # Harris-style two-pass ratio test: pass 1 bounds the step with a
            # small feasibility slack, pass 2 picks the largest pivot among
            # rows whose exact ratio stays within that bound.  This avoids
            # pivoting on the genuinely tiny transition probabilities that an
            # exact-tie rule would be forced into.
            slack = np.concatenate(
                [(np.maximum(x_B[pos], 0.0) + 1e-10) / d[pos],
                 1e-10 / -d[art_zero]]
            )
            theta_max = slack.min()
            ok = ratios <= theta_max
            pick = int(np.argmax(np.abs(d[rows]) * ok))
            p = int(rows[pick])
            theta = max(float(ratios[pick]), 0.0)

        x_B = x_B - theta * d
        x_B[p] = theta
        in_basis[basis[p]] = False
        in_basis[q] = True
        basis[p] = q

        obj = float(costs[basis] @ x_B)
        if obj < best_obj - 1e-12:
            best_obj = obj
            stall = 0
        else:
            stall += 1
            if stall > stall_limit:
                bland = True

        basis_mgr.push_eta(p, d)
        iterations += 1
        if len(basis_mgr.etas) >= REFACTOR_INTERVAL:
            basis_mgr.refactorize(basis)
            x_B = basis_mgr.ftran(b)


def solve(problem: LpProblem, max_iterations: int = 200000) -> LpSolution:
    """Two-phase revised simplex.  See the module docstring for the method."""
    m, n = problem.n_constraints, problem.n_variables

    # Normalize to b >= 0 so the artificial basis is feasible.
    flip = problem.b < 0
    signs = np.where(flip, -1.0, 1.0)
    A = sp.csc_matrix(sp.diags(signs) @ problem.A)
    b = np.abs(problem.b.astype(float))

    basis_mgr = _Basis(A, n)
    basis = np.arange(n, n + m)

    # Phase 1: minimize the sum of artificials.
    phase1_costs = np.concatenate([np.zeros(n), np.ones(m)])
    allowed = np.ones(n + m, dtype=bool)
    allowed[n:] = False  # artificials may leave but never re-enter
    flag, basis, x_B, iters = _simplex(
        basis_mgr, basis, phase1_costs, b, allowed, 0, max_iterations,
        stop_at_zero=True,
    )
    assert flag == "optimal"  # phase 1 is always bounded below by 0
    if float(phase1_costs[basis] @ x_B) > 1e-7 * (1.0 + float(np.max(np.abs(b)))):
        return LpSolution(None, float("nan"), LpStatus.INFEASIBLE, iters)

    # Phase 2: original costs over structural columns only.  Artificials
    # still basic at zero (degenerate or redundant rows) keep cost 0; the
    # ratio test's upper-bound-at-zero rule kicks them out the moment a pivot
    # touches their row, so no separate drive-out pass is needed.  A truly
    # redundant row keeps its zero artificial forever, harmlessly.
    phase2_costs = np.concatenate([problem.c.astype(float), np.zeros(m)])
    flag, basis, x_B, iters = _simplex(
        basis_mgr, basis, phase2_costs, b, allowed, iters, max_iterations,
        evict_artificials=True,
    )
    if flag == "unbounded":
        return LpSolution(None, float("-inf"), LpStatus.UNBOUNDED, iters)

    # Refresh the basic values from a clean factorization so the returned
    # point carries no eta-file drift.
    basis_mgr.refactorize(basis)
    x_B = basis_mgr.ftran(b)
    x = np.zeros(n)
    for i, j in enumerate(basis):
        if j < n:
            x[j] = x_B[i]
    objective = float(problem.c @ x)

    y = basis_mgr.btran(phase2_costs[basis].astype(float))
    # Undo the row flips applied during normalization.
    dual_full = y * signs

    solution = LpSolution(
        x=x,
        objective_value=objective,
        status=LpStatus.OPTIMAL,
        iteration_count=iters,
        dual=dual_full,
    )
    object.__setattr__(solution, "_yb", float(dual_full @ problem.b))
    return solution


def dump_problem(problem: LpProblem, path) -> None:
    """Write the LP in a plain-text sparse form for external cross-checking:
    a header line 'm n nnz', then c, then b, then one 'i j value' triplet per
    nonzero of A."""
    coo = sp.coo_matrix(problem.A)
    with open(path, "w") as fh:
        fh.write(f"{problem.n_constraints} {problem.n_variables} {coo.nnz}\n")
        fh.write(" ".join(repr(float(v)) for v in problem.c) + "\n")
        fh.write(" ".join(repr(float(v)) for v in problem.b) + "\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {float(v)!r}\n")
