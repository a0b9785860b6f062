"""Dense two-phase simplex for small linear programs.

Variables are nonnegative with optional finite upper bounds; constraints are
equalities. Upper bounds become extra slack rows, so the working tableau is
fully dense. A tiny deterministic perturbation of the right-hand side keeps
heavily degenerate problems from stalling, and the tableau is rebuilt from
the exact constraint data at regular intervals so roundoff cannot
accumulate. The reported solution, value, and duals are recomputed from the
final basis against the unperturbed data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from diqkd.errors import ComputeError, ValidationError

FEAS_TOL = 1e-8
PIVOT_TOL = 1e-9
COST_TOL = 1e-9
MAX_VARIABLES = 4096
PIVOT_BUDGET = 100000
REFACTOR_EVERY = 200
DRIVE_OUT_TOL = 1e-7
_PERT_SIZE = 1e-10
_PERT_SEED = 24245


@dataclass(frozen=True)
class LinearProgram:
    """min (or max) c.x subject to A x = b, 0 <= x <= upper.

    Parameters
    ----------
    objective : array_like
        Coefficient vector c of length n.
    a_eq : array_like
        Equality matrix with n columns; may have zero rows.
    b_eq : array_like
        Equality right-hand sides.
    upper : array_like, optional
        Per-variable upper bounds; +inf entries mean unbounded above.
    sense : str
        "min" or "max".
    """

    objective: np.ndarray = field()
    a_eq: np.ndarray = field()
    b_eq: np.ndarray = field()
    upper: np.ndarray | None = None
    sense: str = "min"

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.array(self.objective, dtype=float))
        n = c.size
        if n < 1 or n > MAX_VARIABLES:
            raise ValidationError(f"variable count {n} outside [1, {MAX_VARIABLES}]")
        a = np.array(self.a_eq, dtype=float)
        if a.size == 0:
            a = np.zeros((0, n))
        if a.ndim != 2 or a.shape[1] != n:
            raise ValidationError(f"equality matrix shape {a.shape} mismatches n={n}")
        b = np.atleast_1d(np.array(self.b_eq, dtype=float))
        if b.size == 0:
            b = np.zeros(0)
        if b.shape != (a.shape[0],):
            raise ValidationError("equality rhs length mismatches row count")
        if not (np.isfinite(c).all() and np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValidationError("objective and constraints must be finite")
        u = self.upper
        if u is not None:
            u = np.atleast_1d(np.array(u, dtype=float))
            if u.shape != (n,):
                raise ValidationError("upper bound length mismatches variable count")
            if np.isnan(u).any() or (u == -np.inf).any():
                raise ValidationError("upper bounds must be real or +inf")
            u.setflags(write=False)
        if self.sense not in ("min", "max"):
            raise ValidationError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for name, arr in (("objective", c), ("a_eq", a), ("b_eq", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "upper", u)

    @property
    def num_variables(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class SimplexResult:
    """Outcome of a solve.

    status is one of "optimal", "infeasible", "unbounded". On "optimal",
    x and value are set, duals holds one multiplier per equality row, and
    bound_duals one per variable (zero where no finite upper bound binds).
    The certificate duals.b_eq + bound_duals.upper equals value.
    """

    status: str
    x: np.ndarray | None = None
    value: float | None = None
    duals: np.ndarray | None = None
    bound_duals: np.ndarray | None = None


class _Tableau:
    """Mutable solver state: active rows, basis, and the reduced tableau.

    Only structural and slack columns are carried in the tableau; artificial
    variables appear as basis markers with index >= n_ss and their columns
    live in the identity block of a_ext, used when refactorizing.
    """

    def __init__(self, a_ext: np.ndarray, b: np.ndarray, n_ss: int) -> None:
        m = a_ext.shape[0]
        self.a_ext = a_ext
        self.b = b
        self.n_ss = n_ss
        self.active = np.arange(m)
        self.basis = np.arange(n_ss, n_ss + m)
        rng = np.random.default_rng(_PERT_SEED)
        scale = max(1.0, float(np.abs(b).max())) if m else 1.0
        self.b_pert = b + _PERT_SIZE * scale * (1.0 + rng.random(m))
        self.tab = np.zeros((1, n_ss + 1))
        self.pivots = 0

    def _basis_matrix(self) -> np.ndarray:
        return self.a_ext[np.ix_(self.active, self.basis)]

    def refactor(self, cost: np.ndarray) -> None:
        """Rebuild the tableau exactly from the current basis."""
        rows = self.active
        aug = np.column_stack((self.a_ext[rows, : self.n_ss], self.b_pert[rows]))
        try:
            body = np.linalg.solve(self._basis_matrix(), aug)
        except np.linalg.LinAlgError as exc:
            raise ComputeError("simplex basis became singular") from exc
        c_b = cost[self.basis]
        tab = np.empty((rows.size + 1, self.n_ss + 1))
        tab[:-1] = body
        tab[-1, : self.n_ss] = cost[: self.n_ss] - c_b @ body[:, :-1]
        tab[-1, -1] = -float(c_b @ body[:, -1])
        self.tab = tab

    def pivot(self, row: int, col: int) -> None:
        tab = self.tab
        tab[row] /= tab[row, col]
        coeffs = tab[:, col].copy()
        coeffs[row] = 0.0
        tab -= np.outer(coeffs, tab[row])
        tab[:, col] = 0.0
        tab[row, col] = 1.0
        self.basis[row] = col
        self.pivots += 1

    def solution_exact(self) -> np.ndarray:
        """Basic values for the unperturbed right-hand side."""
        try:
            return np.linalg.solve(self._basis_matrix(), self.b[self.active])
        except np.linalg.LinAlgError as exc:
            raise ComputeError("simplex basis became singular") from exc

    def duals_exact(self, cost: np.ndarray) -> np.ndarray:
        """Row multipliers c_B . B^-1, zero on deleted redundant rows."""
        try:
            y = np.linalg.solve(self._basis_matrix().T, cost[self.basis])
        except np.linalg.LinAlgError as exc:
            raise ComputeError("simplex basis became singular") from exc
        full = np.zeros(self.b.size)
        full[self.active] = y
        return full


def _iterate(state: _Tableau, cost: np.ndarray) -> str:
    """Run primal pivots until the phase objective is optimal.

    Dantzig entering with a largest-pivot tie break on the ratio test;
    switches to Bland's rule if the (perturbed, hence strictly decreasing)
    objective ever stalls. Optimality and unboundedness claims found on a
    stale tableau are re-verified after a fresh refactorization.
    """
    state.refactor(cost)
    n_ss = state.n_ss
    cscale = max(1.0, float(np.abs(cost).max()))
    stall = 0
    bland = False
    since_refactor = 0
    best = -state.tab[-1, -1]
    while True:
        m = state.active.size
        costs = state.tab[-1, :n_ss]
        idx = np.nonzero(costs < -COST_TOL * cscale)[0]
        if idx.size == 0:
            if since_refactor == 0:
                return "optimal"
            state.refactor(cost)
            since_refactor = 0
            continue
        if state.pivots >= PIVOT_BUDGET:
            raise ComputeError("simplex iteration budget exhausted")
        col = int(idx[0]) if bland else int(idx[np.argmin(costs[idx])])
        column = state.tab[:m, col]
        pos = np.nonzero(column > PIVOT_TOL)[0]
        if pos.size == 0:
            if since_refactor == 0:
                return "unbounded"
            state.refactor(cost)
            since_refactor = 0
            continue
        ratios = np.maximum(state.tab[pos, -1], 0.0) / column[pos]
        theta = float(ratios.min())
        near = pos[ratios <= theta + 1e-9 * (1.0 + theta)]
        if bland:
            row = int(near[np.argmin(state.basis[near])])
        else:
            row = int(near[np.argmax(column[near])])
        state.pivot(row, col)
        since_refactor += 1
        obj = -state.tab[-1, -1]
        if obj < best - 1e-12 * (1.0 + abs(best)):
            best = obj
            stall = 0
        else:
            stall += 1
            if stall > 500 and not bland:
                bland = True
                state.refactor(cost)
                since_refactor = 0
        if since_refactor >= REFACTOR_EVERY:
            state.refactor(cost)
            since_refactor = 0


def _drive_out_artificials(state: _Tableau, cost: np.ndarray) -> None:
    """Pivot leftover basic artificials onto structural columns.

    Rows without structural support are redundant equalities and get
    deleted, together with their artificial basis entries.
    """
    state.refactor(cost)
    n_ss = state.n_ss
    keep = np.ones(state.active.size, dtype=bool)
    for r in range(state.active.size):
        if state.basis[r] < n_ss:
            continue
        row = state.tab[r, :n_ss]
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > DRIVE_OUT_TOL:
            state.pivot(r, j)
        else:
            keep[r] = False
    if not keep.all():
        state.active = state.active[keep]
        state.basis = state.basis[keep]


def simplex_solve(lp: LinearProgram) -> SimplexResult:
    """Solve a LinearProgram with the two-phase dense tableau method.

    Returns
    -------
    SimplexResult
        Infeasibility and unboundedness are reported through the status
        field, never as exceptions.
    """
    n = lp.num_variables
    sign = 1.0 if lp.sense == "min" else -1.0
    c = sign * lp.objective

    bound_idx = []
    if lp.upper is not None:
        finite = np.nonzero(np.isfinite(lp.upper))[0]
        if (lp.upper[finite] < -FEAS_TOL).any():
            return SimplexResult(status="infeasible")
        bound_idx = [int(i) for i in finite]
    m_eq = lp.a_eq.shape[0]
    m = m_eq + len(bound_idx)
    n_slack = len(bound_idx)
    n_ss = n + n_slack

    a = np.zeros((m, n_ss + m))
    b = np.zeros(m)
    a[:m_eq, :n] = lp.a_eq
    b[:m_eq] = lp.b_eq
    for j, i in enumerate(bound_idx):
        a[m_eq + j, i] = 1.0
        a[m_eq + j, n + j] = 1.0
        b[m_eq + j] = max(lp.upper[i], 0.0)
    flip = b < 0.0
    a[flip, : n_ss] *= -1.0
    b[flip] *= -1.0
    a[:, n_ss:] = np.eye(m)
    scale = max(1.0, float(np.abs(b).max())) if m else 1.0

    state = _Tableau(a, b, n_ss)

    # Phase 1: minimize total artificial mass, then measure it against the
    # unperturbed rhs so redundant rows do not count as infeasibility.
    cost1 = np.zeros(n_ss + m)
    cost1[n_ss:] = 1.0
    if _iterate(state, cost1) != "optimal":
        return SimplexResult(status="infeasible")
    x_b = state.solution_exact()
    art = state.basis >= n_ss
    if art.any() and float(np.abs(x_b[art]).sum()) > FEAS_TOL * scale:
        return SimplexResult(status="infeasible")
    _drive_out_artificials(state, cost1)

    cost2 = np.zeros(n_ss + m)
    cost2[:n] = c
    if _iterate(state, cost2) == "unbounded":
        return SimplexResult(status="unbounded")

    x_b = state.solution_exact()
    if x_b.size and float(x_b.min()) < -FEAS_TOL * scale:
        raise ComputeError("simplex basis lost primal feasibility")
    x_full = np.zeros(n_ss + m)
    x_full[state.basis] = np.maximum(x_b, 0.0)
    solution = x_full[:n].copy()
    value = float(c @ solution)

    y = state.duals_exact(cost2)
    y[flip] *= -1.0
    duals = sign * y[:m_eq]
    bound_duals = np.zeros(n)
    for j, i in enumerate(bound_idx):
        bound_duals[i] = sign * y[m_eq + j]
    return SimplexResult(
        status="optimal",
        x=solution,
        value=sign * value,
        duals=duals,
        bound_duals=bound_duals,
    )
