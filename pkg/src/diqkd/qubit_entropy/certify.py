"""Certified lower bounds on the single-round objective.

Three nested searches, each sound on its own:

* frank_wolfe_certify: fixed measurement angles; conditional-gradient
  iteration over the state block-pattern whose linear subproblem has a
  closed form, so every iterate yields the valid bound f - gap.
* certify_over_theta_b: Bob's direction ranges over a half-circle; the
  objective is affine in it, so its minimum over states is concave and
  bounded below by the minimum over vertices of any polygon enclosing
  the arc. Vertices are tangent-line intersections, refined by
  splitting the active one at the angular midpoint.
* certify_over_theta_a: Alice's angle is covered by intervals; the
  bound at an interval's center is lowered by an explicit continuity
  penalty for the half-width, and the worst interval is halved.

Heuristic minimizers (Nelder-Mead over a saturating parametrization of
the block pattern) provide the upper references the bounds are tested
against; they carry no guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from diqkd.errors import ValidationError
from diqkd.numerics import golden_section_min, nelder_mead
from diqkd.qubit_entropy.entropy import (
    _block_min_eig,
    _entropy_two,
    _gamma_bell,
    _gradient_raw,
    _objective_raw,
    _pinched_blocks,
    _rotated_state,
    _CLAMP,
)
from diqkd.qubit_entropy.states import (
    BELL_TRANSFORM,
    AlmostBellDiagonalState,
    ObjectiveSpec,
    bob_direction,
)

EIG_FLOOR = 1e-14
LINE_SEARCH_EVALS = 40


# ---------------------------------------------------------------------------
# linear subproblem


def _min_eig_vec2(a: float, d: float, off: float):
    """Minimum eigenvalue and unit eigenvector of [[a, off], [off, d]]."""
    mean = (a + d) / 2.0
    disc = math.hypot((a - d) / 2.0, off)
    lam = mean - disc
    # Two algebraic eigenvector forms; pick the better conditioned one.
    n1 = math.hypot(off, a - lam)
    n2 = math.hypot(d - lam, off)
    if max(n1, n2) < 1e-300:
        return lam, (1.0, 0.0)
    if n1 >= n2:
        return lam, (-off / n1, (a - lam) / n1)
    return lam, ((d - lam) / n2, -off / n2)


def _linear_step_raw(g: np.ndarray, rho_bell: np.ndarray):
    best_lam, best_j, best_vec = math.inf, 0, (1.0, 0.0)
    for j in (0, 2):
        a = (g[j, j] + g[j, j]) / 2.0
        d = g[j + 1, j + 1]
        off = (g[j, j + 1] + g[j + 1, j]) / 2.0
        lam, vec = _min_eig_vec2(a, d, off)
        if lam < best_lam:
            best_lam, best_j, best_vec = lam, j, vec
    sigma = np.zeros((4, 4))
    v0, v1 = best_vec
    sigma[best_j, best_j] = v0 * v0
    sigma[best_j + 1, best_j + 1] = v1 * v1
    sigma[best_j, best_j + 1] = sigma[best_j + 1, best_j] = v0 * v1
    eps = float(np.sum(g * rho_bell)) - best_lam
    return sigma - rho_bell, eps


def fw_linear_step(gradient, rho_k):
    """Best feasible displacement against a linearized objective.

    The feasible set's extreme points are rank-1 states inside one of
    the two Bell blocks, so minimizing Tr[grad sigma] reduces to the
    smaller of the two block eigenvalue minima.

    Parameters
    ----------
    gradient : HermitianMatrix or array_like
        4x4 Bell-basis gradient; blocks are symmetrized before use.
    rho_k : AlmostBellDiagonalState
        Current iterate.

    Returns
    -------
    delta : ndarray
        Displacement sigma* - rho_k toward the optimal extreme point.
    eps : float
        Dual gap Tr[grad rho_k] - lambda_min, always >= 0 up to
        roundoff; f(rho_k) - eps lower-bounds the constrained minimum.
    """
    g = np.asarray(getattr(gradient, "entries", gradient))
    if g.shape != (4, 4):
        raise ValidationError(f"gradient must be 4x4, got {g.shape}")
    g = np.real((g + g.conj().T) / 2.0)
    if not isinstance(rho_k, AlmostBellDiagonalState):
        raise ValidationError(f"rho_k must be AlmostBellDiagonalState, got {type(rho_k).__name__}")
    return _linear_step_raw(g, rho_k.bell_matrix())


# ---------------------------------------------------------------------------
# line search support


def _block_triple(m: np.ndarray, j: int):
    return m[j, j], m[j + 1, j + 1], m[j, j + 1]


def _make_line_objective(rho_bell, step_bell, theta_a, rvec, spec: ObjectiveSpec):
    """Objective along mu -> rho + mu*step, precomputing affine pieces.

    Every ingredient (constraint trace, state blocks, pinched blocks)
    is affine in the state, so each evaluation costs a handful of 2x2
    eigenvalue formulas, plus one batched 4x4 solve when p > 0.
    """
    p = spec.p
    wsum = spec.weights[0] + spec.weights[1]
    gam = _gamma_bell(spec.lambdas, theta_a, rvec)
    g0 = float(np.sum(gam * rho_bell))
    g1 = float(np.sum(gam * step_bell))
    state_parts = [(_block_triple(rho_bell, j), _block_triple(step_bell, j)) for j in (0, 2)]
    rc_rho = BELL_TRANSFORM @ rho_bell @ BELL_TRANSFORM.T
    rc_step = BELL_TRANSFORM @ step_bell @ BELL_TRANSFORM.T
    analytic = []
    stacked = []
    for x, w in enumerate(spec.weights):
        if not w:
            continue
        if p == 0.0:
            rp_r = _rotated_state(rc_rho, theta_a, x)
            rp_s = _rotated_state(rc_step, theta_a, x)
            for j in (0, 2):
                analytic.append((w, _block_triple(rp_r, j), _block_triple(rp_s, j)))
        else:
            m0r, m1r = _pinched_blocks(rc_rho, theta_a, x, p)
            m0s, m1s = _pinched_blocks(rc_step, theta_a, x, p)
            stacked.append((w, np.stack((m0r, m1r)), np.stack((m0s, m1s))))

    def value(mu: float) -> float:
        total = -(g0 + mu * g1)
        for (a0, d0, o0), (a1, d1, o1) in state_parts:
            total -= wsum * _entropy_two(a0 + mu * a1, d0 + mu * d1, o0 + mu * o1)
        for w, (a0, d0, o0), (a1, d1, o1) in analytic:
            total += w * _entropy_two(a0 + mu * a1, d0 + mu * d1, o0 + mu * o1)
        for w, mr, ms in stacked:
            vals = np.linalg.eigvalsh(mr + mu * ms).ravel()
            vals = vals[vals > _CLAMP]
            total += w * float(-(vals * np.log2(vals)).sum())
        return total

    return value


# ---------------------------------------------------------------------------
# Frank-Wolfe


@dataclass(frozen=True)
class FwResult:
    """Outcome of a conditional-gradient certification run.

    bound = objective - gap holds at the best iterate found; the bound
    is valid whether or not the gap tolerance was reached, but
    converged = False marks it as loose.
    """

    bound: float
    objective: float
    gap: float
    state: AlmostBellDiagonalState
    iterations: int
    converged: bool
    gaps: tuple


def frank_wolfe_certify(
    spec: ObjectiveSpec,
    angles,
    eps_tol: float = 1e-3,
    max_iter: int = 200,
    initial_state: AlmostBellDiagonalState | None = None,
) -> FwResult:
    """Certified lower bound on the state-minimized objective at fixed angles.

    Parameters
    ----------
    spec : ObjectiveSpec
    angles : (theta_a, direction)
        Bob's direction may be non-unit (relaxation vertices are).
    eps_tol : float
        Stop once the dual gap drops below this; must be positive.
    max_iter : int
        Iteration cap; on hitting it the best bound so far is returned
        with converged = False.
    initial_state : AlmostBellDiagonalState, optional
        Warm start; defaults to the maximally mixed state.

    Notes
    -----
    Each iterate is nudged off the boundary by delta = max(-lambda_min,
    1e-14) toward the maximally mixed state before the gradient is
    taken; the step keeps the iterate feasible, so the reported bound
    stays valid.
    """
    if len(angles) != 2:
        raise ValidationError("angles must be (theta_a, direction)")
    theta_a = float(angles[0])
    if not (math.isfinite(theta_a) and 0.0 <= theta_a <= math.pi + 1e-12):
        raise ValidationError(f"measurement angle {theta_a} outside [0, pi]")
    rvec = bob_direction(angles[1], unit=False)
    eps_tol = float(eps_tol)
    if not eps_tol > 0.0:
        raise ValidationError(f"eps_tol must be positive, got {eps_tol}")
    max_iter = int(max_iter)
    if max_iter < 1:
        raise ValidationError(f"max_iter must be at least 1, got {max_iter}")
    rho = (
        initial_state.bell_matrix()
        if initial_state is not None
        else np.eye(4) / 4.0
    )
    eye4 = np.eye(4) / 4.0
    best_bound, best_f, best_state = -math.inf, math.inf, None
    gaps = []
    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        shift = max(-_block_min_eig(rho), EIG_FLOOR)
        rho_t = (1.0 - shift) * rho + shift * eye4
        f_t = _objective_raw(rho_t, theta_a, rvec, spec)
        grad = _gradient_raw(rho_t, theta_a, rvec, spec)
        step, eps = _linear_step_raw(grad, rho_t)
        gaps.append(eps)
        if f_t - eps > best_bound:
            best_bound, best_f, best_state = f_t - eps, f_t, rho_t
        if eps <= eps_tol:
            converged = True
            break
        line = _make_line_objective(rho_t, step, theta_a, rvec, spec)
        mu, f_mu = golden_section_min(line, 0.0, 1.0, evals=LINE_SEARCH_EVALS)
        rho = rho_t + mu * step if f_mu < f_t else rho_t
    return FwResult(
        bound=best_bound,
        objective=best_f,
        gap=best_f - best_bound,
        state=AlmostBellDiagonalState.from_bell_matrix(best_state),
        iterations=iterations,
        converged=converged,
        gaps=tuple(gaps),
    )


# ---------------------------------------------------------------------------
# heuristics (upper references, no guarantee)


def _params_to_bell(z: np.ndarray) -> np.ndarray:
    """Map unconstrained R^6 onto the feasible pattern.

    Squared entries give populations, tanh factors keep coherences
    inside the positivity disc of their block.
    """
    u = z[:4]
    s = float(np.dot(u, u))
    if s < 1e-300:
        w = np.full(4, 0.25)
    else:
        w = u * u / s
    m = np.diag(w)
    m[0, 1] = m[1, 0] = math.tanh(z[4]) * math.sqrt(w[0] * w[1])
    m[2, 3] = m[3, 2] = math.tanh(z[5]) * math.sqrt(w[2] * w[3])
    return m


def heuristic_state_minimum(
    spec: ObjectiveSpec,
    angles,
    seeds: int = 6,
    max_evals: int = 4000,
):
    """Nelder-Mead search for the state minimizing the objective.

    Multi-start over deterministic seeds; returns (state, value). An
    upper reference for the certified bounds, not a bound itself.
    """
    if len(angles) != 2:
        raise ValidationError("angles must be (theta_a, direction)")
    theta_a = float(angles[0])
    rvec = bob_direction(angles[1], unit=False)

    def f(z):
        return _objective_raw(_params_to_bell(np.asarray(z)), theta_a, rvec, spec)

    starts = [np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0])]
    for s in range(int(seeds)):
        starts.append(np.random.default_rng(s).normal(size=6))
    best_x, best_f = None, math.inf
    for z0 in starts:
        x, val = nelder_mead(f, z0, {"max_evals": int(max_evals)})
        if val < best_f:
            best_x, best_f = x, val
    return AlmostBellDiagonalState.from_bell_matrix(_params_to_bell(best_x)), float(best_f)


def heuristic_c_lambda(
    spec: ObjectiveSpec,
    grid: int = 7,
    max_evals: int = 1500,
    polish_evals: int = 6000,
):
    """Heuristic minimum of the objective over state and both angles.

    Coarse angle grid (including the endpoints, where the minimum often
    sits) followed by a joint Nelder-Mead polish with angles clipped to
    [0, pi]. Returns (value, theta_a, theta_b).
    """
    grid = int(grid)
    if grid < 2:
        raise ValidationError(f"grid needs at least 2 points per axis, got {grid}")
    thetas = np.linspace(0.0, math.pi, grid)
    best = (math.inf, 0.0, 0.0, np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0]))
    for ta in thetas:
        for tb in thetas:
            rv = (math.cos(tb), math.sin(tb))

            def f(z, ta=ta, rv=rv):
                return _objective_raw(_params_to_bell(np.asarray(z)), ta, rv, spec)

            for s in (0, 1):
                z0 = (
                    np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
                    if s == 0
                    else np.random.default_rng(s).normal(size=6)
                )
                x, val = nelder_mead(f, z0, {"max_evals": int(max_evals)})
                if val < best[0]:
                    best = (val, float(ta), float(tb), np.asarray(x))

    def joint(z):
        ta = min(max(float(z[6]), 0.0), math.pi)
        tb = min(max(float(z[7]), 0.0), math.pi)
        return _objective_raw(
            _params_to_bell(np.asarray(z[:6])), ta, (math.cos(tb), math.sin(tb)), spec
        )

    z0 = np.concatenate([best[3], [best[1], best[2]]])
    x, val = nelder_mead(joint, z0, {"max_evals": int(polish_evals)})
    if val < best[0]:
        ta = min(max(float(x[6]), 0.0), math.pi)
        tb = min(max(float(x[7]), 0.0), math.pi)
        return float(val), ta, tb
    return float(best[0]), best[1], best[2]


# ---------------------------------------------------------------------------
# certification over Bob's direction


@dataclass(frozen=True)
class ThetaBResult:
    """Certified minimum over Bob's direction at fixed theta_a."""

    bound: float
    vertices: tuple
    tangents: tuple
    converged: bool
    exhausted: bool
    evaluations: int
    state: AlmostBellDiagonalState
    all_inner_converged: bool


def _tangent_intersection(phi1: float, phi2: float):
    s = math.sin(phi2 - phi1)
    return (
        (math.sin(phi2) - math.sin(phi1)) / s,
        (math.cos(phi1) - math.cos(phi2)) / s,
    )


def _verts_from_tangents(phis):
    verts = [(math.cos(phis[0]), max(math.sin(phis[0]), 0.0))]
    for p1, p2 in zip(phis, phis[1:]):
        verts.append(_tangent_intersection(p1, p2))
    verts.append((math.cos(phis[-1]), max(math.sin(phis[-1]), 0.0)))
    return verts


def certify_over_theta_b(
    spec: ObjectiveSpec,
    theta_a: float,
    eps_tol: float = 1e-3,
    max_vertices: int = 64,
    fw_eps_tol: float | None = None,
    fw_max_iter: int = 120,
    initial_state: AlmostBellDiagonalState | None = None,
) -> ThetaBResult:
    """Lower bound over all of Bob's directions at a fixed theta_a.

    The vertex polygon starts from tangents at angles {0, pi/2, pi}
    (vertices (1,0), (1,1), (-1,1), (-1,0)) and is refined by inserting
    the tangent at the angular midpoint under the active vertex. The
    two boundary vertices lie on the circle itself, hence achievable:
    when one of them is active the bound is tight and refinement stops.
    Reported bounds are the running maximum over refinement rounds, so
    they never decrease.
    """
    eps_tol = float(eps_tol)
    if not eps_tol > 0.0:
        raise ValidationError(f"eps_tol must be positive, got {eps_tol}")
    max_vertices = int(max_vertices)
    if max_vertices < 4:
        raise ValidationError(f"need at least the 4 initial vertices, got {max_vertices}")
    inner_eps = eps_tol if fw_eps_tol is None else float(fw_eps_tol)
    phis = [0.0, math.pi / 2.0, math.pi]
    cache: dict = {}
    evaluations = 0
    all_inner = True

    def fw_at(vert, warm):
        nonlocal evaluations, all_inner
        key = (round(vert[0], 12), round(vert[1], 12))
        if key not in cache:
            res = frank_wolfe_certify(
                spec, (theta_a, vert), inner_eps, fw_max_iter, initial_state=warm
            )
            evaluations += 1
            all_inner = all_inner and res.converged
            cache[key] = res
        return cache[key]

    verts = _verts_from_tangents(phis)
    for v in verts:
        fw_at(v, initial_state)
    bounds = [fw_at(v, None).bound for v in verts]
    reported = min(bounds)
    converged = exhausted = False
    while True:
        active = int(np.argmin(bounds))
        if active in (0, len(verts) - 1):
            # Boundary vertices lie on the arc, so their bound is tight.
            converged = True
            break
        if len(verts) >= max_vertices:
            exhausted = True
            break
        parent_bound = bounds[active]
        mid = (phis[active - 1] + phis[active]) / 2.0
        warm = cache[(round(verts[active][0], 12), round(verts[active][1], 12))].state
        phis.insert(active, mid)
        verts = _verts_from_tangents(phis)
        for v in (verts[active], verts[active + 1]):
            fw_at(v, warm)
        bounds = [fw_at(v, None).bound for v in verts]
        reported = max(reported, min(bounds))
        # Convergence is judged by what the split gained locally; a
        # symmetric twin of the split vertex may keep the global
        # minimum pinned even while refinement makes real progress.
        if min(bounds[active], bounds[active + 1]) - parent_bound < eps_tol:
            converged = True
            break
    active = int(np.argmin(bounds))
    active_state = fw_at(verts[active], None).state
    return ThetaBResult(
        bound=reported,
        vertices=tuple((float(a), float(b)) for a, b in verts),
        tangents=tuple(float(v) for v in phis),
        converged=converged,
        exhausted=exhausted,
        evaluations=evaluations,
        state=active_state,
        all_inner_converged=all_inner,
    )


# ---------------------------------------------------------------------------
# certification over Alice's angle


@dataclass(frozen=True)
class ThetaAResult:
    """Certified minimum over both angles and the state."""

    bound: float
    intervals: tuple
    values: tuple
    converged: bool
    exhausted: bool
    evaluations: int


def continuity_penalty(delta: float, spec: ObjectiveSpec) -> float:
    """Worst objective change when theta_a moves by at most delta.

    Two contributions: an entropy continuity term 2.012 * w1 * delta,
    and the constraint operator's shift, whose norm grows as the chord
    length sqrt(2 - 2 cos delta) times the affected coefficients.
    """
    delta = float(delta)
    if not 0.0 <= delta <= math.pi:
        raise ValidationError(f"half-width must lie in [0, pi], got {delta}")
    chord = math.sqrt(max(2.0 - 2.0 * math.cos(delta), 0.0))
    return 2.012 * spec.weights[1] * delta + (
        abs(spec.lambdas[2]) + abs(spec.lambdas[3])
    ) * chord


def certify_over_theta_a(
    spec: ObjectiveSpec,
    eps_tol: float = 1e-3,
    initial_intervals: int = 9,
    max_intervals: int = 64,
    theta_b_eps_tol: float | None = None,
    max_vertices: int = 64,
    fw_eps_tol: float | None = None,
    fw_max_iter: int = 120,
) -> ThetaAResult:
    """Certified minimum of the objective over theta_a, theta_b and states.

    Covers [0, pi] with intervals; each contributes the direction-
    certified bound at its center minus the continuity penalty of its
    half-width. The currently worst interval is halved until the
    reported bound improves by less than eps_tol or the interval budget
    runs out (exhausted = True; the bound remains valid, only loose).
    """
    eps_tol = float(eps_tol)
    if not eps_tol > 0.0:
        raise ValidationError(f"eps_tol must be positive, got {eps_tol}")
    initial_intervals = int(initial_intervals)
    if initial_intervals < 1:
        raise ValidationError(f"need at least one interval, got {initial_intervals}")
    max_intervals = int(max_intervals)
    if max_intervals < initial_intervals:
        raise ValidationError("max_intervals smaller than the initial grid")
    evaluations = 0

    def assess(lo: float, hi: float, warm):
        nonlocal evaluations
        center, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        res = certify_over_theta_b(
            spec,
            center,
            eps_tol if theta_b_eps_tol is None else theta_b_eps_tol,
            max_vertices,
            fw_eps_tol,
            fw_max_iter,
            initial_state=warm,
        )
        evaluations += res.evaluations
        return res.bound - continuity_penalty(half, spec), res.state

    edges = np.linspace(0.0, math.pi, initial_intervals + 1)
    intervals = list(zip(edges[:-1], edges[1:]))
    assessed = [assess(lo, hi, None) for lo, hi in intervals]
    values = [v for v, _ in assessed]
    states = [s for _, s in assessed]
    reported = min(values)
    converged = exhausted = False
    while True:
        if len(intervals) >= max_intervals:
            exhausted = True
            break
        j = int(np.argmin(values))
        lo, hi = intervals[j]
        parent_value = values[j]
        mid, warm = (lo + hi) / 2.0, states[j]
        left_v, left_s = assess(lo, mid, warm)
        right_v, right_s = assess(mid, hi, warm)
        # The parent's value already bounds both halves, so a child
        # never reports less; this keeps refinement monotone when the
        # center's own bound happens to fluctuate.
        left_v = max(left_v, parent_value)
        right_v = max(right_v, parent_value)
        intervals[j : j + 1] = [(lo, mid), (mid, hi)]
        values[j : j + 1] = [left_v, right_v]
        states[j : j + 1] = [left_s, right_s]
        reported = max(reported, min(values))
        # Local gain of the split, not movement of the global minimum:
        # equal-valued intervals elsewhere must not stall refinement.
        if min(left_v, right_v) - parent_value < eps_tol:
            converged = True
            break
    return ThetaAResult(
        bound=reported,
        intervals=tuple((float(a), float(b)) for a, b in intervals),
        values=tuple(float(v) for v in values),
        converged=converged,
        exhausted=exhausted,
        evaluations=evaluations,
    )
