"""Concrete nonlocal games: CHSH helpers, the magic square, and the
non-signalling hidden-variable linear programs built on the simplex kernel.

Magic-square conventions: inputs x, y range over {1, 2, 3} (stored
0-based). Alice answers with an even-parity 3-bit string, Bob with an
odd-parity one, and the game is won when the y-th bit of Alice's string
equals the x-th bit of Bob's. Output alphabets are indexed in the fixed
orders below.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from diqkd.errors import ValidationError
from diqkd.nonlocality import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    BipartiteDistribution,
    QubitStrategy,
    check_ns,
    distribution_from_strategy,
)
from diqkd.numerics import LinearProgram, simplex_solve

ALICE_OUTPUTS = ("000", "011", "101", "110")
BOB_OUTPUTS = ("001", "010", "100", "111")
_EYE2 = np.eye(2, dtype=complex)

# Observable grid: Alice's input x measures row x jointly, Bob's input y
# measures column y. Rows multiply to +1 and columns to -1, which forces
# the parity constraints on the answers.
OBSERVABLE_GRID = (
    (np.kron(PAULI_Z, _EYE2), np.kron(_EYE2, PAULI_Z), np.kron(PAULI_Z, PAULI_Z)),
    (np.kron(_EYE2, PAULI_X), np.kron(PAULI_X, _EYE2), np.kron(PAULI_X, PAULI_X)),
    (
        -np.kron(PAULI_Z, PAULI_X),
        -np.kron(PAULI_X, PAULI_Z),
        np.kron(PAULI_Y, PAULI_Y),
    ),
)


def chsh_ideal_strategy() -> QubitStrategy:
    """Singlet-free maximal-violation strategy: Z/X for Alice, rotated
    Z-X axes for Bob, on the Phi+ state."""
    phi = np.zeros((4, 4))
    phi[0, 0] = phi[0, 3] = phi[3, 0] = phi[3, 3] = 0.5
    r2 = np.sqrt(2.0)
    return QubitStrategy(
        phi,
        (PAULI_Z, PAULI_X),
        ((PAULI_Z + PAULI_X) / r2, (PAULI_Z - PAULI_X) / r2),
    )


def chsh_bell_coefficients() -> list:
    """CHSH coefficients indexed [a][b][x][y], exact integers."""
    return [
        [
            [
                [Fraction((-1) ** (x * y) * (1 - 2 * a) * (1 - 2 * b)) for y in (0, 1)]
                for x in (0, 1)
            ]
            for b in (0, 1)
        ]
        for a in (0, 1)
    ]


@dataclass(frozen=True)
class MagicSquareDistribution:
    """A 3-input, 4-output-per-party table over the parity alphabets."""

    dist: BipartiteDistribution = field()

    def __post_init__(self) -> None:
        d = self.dist
        if d.nx != 3 or d.ny != 3 or d.na != (4, 4, 4) or d.nb != (4, 4, 4):
            raise ValidationError("magic-square tables are 3x3 inputs, 4x4 outputs")

    def prob(self, a: str, b: str, x: int, y: int) -> float:
        """p(a, b | x, y) with 1-based inputs and bit-string outputs."""
        return float(
            self.dist.table[x - 1, y - 1, ALICE_OUTPUTS.index(a), BOB_OUTPUTS.index(b)]
        )


def _as_ms(d) -> MagicSquareDistribution:
    if isinstance(d, MagicSquareDistribution):
        return d
    return MagicSquareDistribution(d)


def ms_wins(a_idx: int, b_idx: int, x: int, y: int) -> bool:
    """Win predicate on alphabet indices and 0-based inputs."""
    return ALICE_OUTPUTS[a_idx][y] == BOB_OUTPUTS[b_idx][x]


def ms_win_prob(d) -> float:
    """Winning probability under uniformly random inputs."""
    ms = _as_ms(d)
    total = 0.0
    for x, y in product(range(3), repeat=2):
        for a, b in product(range(4), repeat=2):
            if ms_wins(a, b, x, y):
                total += ms.dist.table[x, y, a, b]
    return total / 9.0


def ms_canonical_distribution() -> MagicSquareDistribution:
    """Quantum strategy on two shared maximally entangled pairs.

    Alice jointly measures the three commuting observables of row x, Bob
    those of column y; the parity constraints leave four outcomes each.
    The resulting table is uniform at 1/8 over the winning combinations.
    """
    psi = np.eye(4, dtype=complex).reshape(16) / 2.0
    state = np.outer(psi, psi.conj())

    def joint_projectors(obs_triple, alphabet):
        fams = []
        for bits in alphabet:
            proj = np.eye(4, dtype=complex)
            for j, ch in enumerate(bits):
                sign = 1.0 if ch == "0" else -1.0
                proj = proj @ (np.eye(4) + sign * obs_triple[j]) / 2.0
            fams.append(proj)
        return fams

    alice = [
        joint_projectors(OBSERVABLE_GRID[x], ALICE_OUTPUTS) for x in range(3)
    ]
    bob = [
        joint_projectors([OBSERVABLE_GRID[i][y] for i in range(3)], BOB_OUTPUTS)
        for y in range(3)
    ]
    return MagicSquareDistribution(distribution_from_strategy(state, alice, bob))


def _bit_permutation_map(pi, alphabet) -> list:
    """Index map for permuting bit positions: new string i gets old bit pi^-1(i)."""
    inv = [0, 0, 0]
    for i, img in enumerate(pi):
        inv[img] = i
    mapping = []
    for s in alphabet:
        permuted = "".join(s[inv[i]] for i in range(3))
        mapping.append(alphabet.index(permuted))
    return mapping


def _normalize_perm(pi) -> tuple:
    if isinstance(pi, Mapping):
        keys = sorted(pi)
        if keys not in ([0, 1, 2], [1, 2, 3]):
            raise ValidationError(f"not a permutation of three items: {pi}")
        pi = tuple(pi[k] for k in keys)
    p = tuple(int(v) for v in pi)
    if sorted(p) == [1, 2, 3]:
        p = tuple(v - 1 for v in p)
    if sorted(p) != [0, 1, 2]:
        raise ValidationError(f"not a permutation of three items: {pi}")
    return p


def ms_relabel(d, pi, side: str = "alice_out_bob_in") -> MagicSquareDistribution:
    """Symmetry of the game: permute one party's answer bits and the
    other party's inputs by the same permutation.

    With side "alice_out_bob_in", Alice's output bits and Bob's input are
    permuted; "bob_out_alice_in" is the mirror image. Either way a
    perfectly winning table stays perfectly winning, and the win
    probability under uniform inputs is preserved for any table.
    """
    ms = _as_ms(d)
    p = _normalize_perm(pi)
    if side not in ("alice_out_bob_in", "bob_out_alice_in"):
        raise ValidationError(f"unknown side {side!r}")
    t = np.zeros((3, 3, 4, 4))
    if side == "alice_out_bob_in":
        amap = _bit_permutation_map(p, ALICE_OUTPUTS)
        for x, y, a, b in product(range(3), range(3), range(4), range(4)):
            t[x, p[y], amap[a], b] = ms.dist.table[x, y, a, b]
    else:
        bmap = _bit_permutation_map(p, BOB_OUTPUTS)
        for x, y, a, b in product(range(3), range(3), range(4), range(4)):
            t[p[x], y, a, bmap[b]] = ms.dist.table[x, y, a, b]
    return MagicSquareDistribution(BipartiteDistribution(t, (4, 4, 4), (4, 4, 4)))


def ms_explicit_ns_attack() -> MagicSquareDistribution:
    """Hard-coded no-signalling table that wins the game perfectly and is
    deterministic on the input pair (1, 1)."""
    entries = {
        (1, 1): {("000", "001"): 1.0},
        (1, 2): {("000", "001"): 0.5, ("000", "010"): 0.5},
        (1, 3): {("000", "001"): 0.5, ("000", "010"): 0.5},
        (2, 1): {("000", "001"): 0.5, ("011", "001"): 0.5},
        (2, 2): {("000", "001"): 0.5, ("011", "010"): 0.5},
        (2, 3): {("000", "001"): 0.5, ("011", "010"): 0.5},
        (3, 1): {("101", "001"): 0.5, ("110", "001"): 0.5},
        (3, 2): {("101", "010"): 0.5, ("110", "001"): 0.5},
        (3, 3): {("101", "001"): 0.5, ("110", "010"): 0.5},
    }
    t = np.zeros((3, 3, 4, 4))
    for (x, y), cells in entries.items():
        for (a, b), v in cells.items():
            t[x - 1, y - 1, ALICE_OUTPUTS.index(a), BOB_OUTPUTS.index(b)] = v
    return MagicSquareDistribution(BipartiteDistribution(t, (4, 4, 4), (4, 4, 4)))


@dataclass(frozen=True)
class NsHvModel:
    """Convex decomposition of a target into no-signalling components."""

    target: BipartiteDistribution = field()
    weights: np.ndarray = field(default=None)
    components: tuple = field(default=None)

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        comps = tuple(self.components)
        if w.ndim != 1 or w.size != len(comps):
            raise ValidationError("one weight per component required")
        if w.min() < -1e-12 or abs(float(w.sum()) - 1.0) > 1e-7:
            raise ValidationError("weights must be a probability vector")
        mix = np.zeros_like(self.target.table)
        for wl, comp in zip(w, comps):
            if comp.table.shape != self.target.table.shape:
                raise ValidationError("component shape mismatches target")
            ok, viol = check_ns(comp, tol=1e-7)
            if not ok:
                raise ValidationError(f"component signals by {viol:.3e}")
            mix += wl * comp.table
        if np.abs(mix - self.target.table).max() > 1e-7:
            raise ValidationError("mixture does not reproduce the target")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    def mixture(self) -> np.ndarray:
        out = np.zeros_like(self.target.table)
        for wl, comp in zip(self.weights, self.components):
            out += wl * comp.table
        return out


def _support_pairs(d: BipartiteDistribution, x_star: int, y_star: int) -> list:
    block = d.table[x_star, y_star]
    return [
        (a, b)
        for a in range(d.na[x_star])
        for b in range(d.nb[y_star])
        if block[a, b] > 1e-12
    ]


def _decomposition_lp(
    target: BipartiteDistribution,
    x_star: int,
    y_star: int,
    assignments: list,
    deterministic: bool,
    objective_sign: float,
):
    """Shared LP body: one subnormalized NS block per lambda, tied to the
    target by per-cell mixture rows.

    When deterministic, a lambda's variables at (x_star, y_star) exist
    only for its own output pair; the forced zeros never enter the
    program. Returns (lp, cellmaps), or (None, None) when the target has
    mass on a cell no lambda may occupy (immediately infeasible).
    """
    d = target
    n_lambda = len(assignments)
    ma, mb = d.table.shape[2], d.table.shape[3]
    cellmaps = []
    col = 0
    for a_l, b_l in assignments:
        cm = -np.ones((d.nx, d.ny, ma, mb), dtype=np.int64)
        for x in range(d.nx):
            for y in range(d.ny):
                for a in range(d.na[x]):
                    for b in range(d.nb[y]):
                        if (
                            deterministic
                            and (x, y) == (x_star, y_star)
                            and (a, b) != (a_l, b_l)
                        ):
                            continue
                        cm[x, y, a, b] = col
                        col += 1
        cellmaps.append(cm)
    n_vars = col

    rows = []
    rhs = []
    for cm in cellmaps:
        for x in range(d.nx):
            for a in range(d.na[x]):
                for y in range(d.ny - 1):
                    row = np.zeros(n_vars)
                    for b in range(d.nb[y]):
                        if cm[x, y, a, b] >= 0:
                            row[cm[x, y, a, b]] += 1.0
                    for b in range(d.nb[y + 1]):
                        if cm[x, y + 1, a, b] >= 0:
                            row[cm[x, y + 1, a, b]] -= 1.0
                    rows.append(row)
                    rhs.append(0.0)
        for y in range(d.ny):
            for b in range(d.nb[y]):
                for x in range(d.nx - 1):
                    row = np.zeros(n_vars)
                    for a in range(d.na[x]):
                        if cm[x, y, a, b] >= 0:
                            row[cm[x, y, a, b]] += 1.0
                    for a in range(d.na[x + 1]):
                        if cm[x + 1, y, a, b] >= 0:
                            row[cm[x + 1, y, a, b]] -= 1.0
                    rows.append(row)
                    rhs.append(0.0)
    for x in range(d.nx):
        for y in range(d.ny):
            for a in range(d.na[x]):
                for b in range(d.nb[y]):
                    row = np.zeros(n_vars)
                    hit = False
                    for cm in cellmaps:
                        if cm[x, y, a, b] >= 0:
                            row[cm[x, y, a, b]] = 1.0
                            hit = True
                    t_val = float(d.table[x, y, a, b])
                    if not hit:
                        if t_val > 1e-9:
                            return None, None
                        continue
                    rows.append(row)
                    rhs.append(t_val)
    c = np.zeros(n_vars)
    for lam, (a_l, b_l) in enumerate(assignments):
        c[cellmaps[lam][x_star, y_star, a_l, b_l]] = objective_sign
    lp = LinearProgram(
        objective=c, a_eq=np.array(rows), b_eq=np.array(rhs), sense="max"
    )
    return lp, cellmaps


def _blocks_to_model(target, result, cellmaps) -> NsHvModel:
    weights = []
    comps = []
    for cm in cellmaps:
        block = np.where(cm >= 0, result.x[np.maximum(cm, 0)], 0.0)
        w = float(block[0, 0].sum())
        if w < 1e-12:
            continue
        comp = np.zeros_like(block)
        for x in range(target.nx):
            for y in range(target.ny):
                comp[x, y] = np.maximum(block[x, y] / w, 0.0)
                s = comp[x, y].sum()
                if s > 0:
                    comp[x, y] /= s
        weights.append(w)
        comps.append(BipartiteDistribution(comp, target.na, target.nb))
    weights = np.array(weights)
    weights /= weights.sum()
    return NsHvModel(target=target, weights=weights, components=tuple(comps))


def ns_hv_feasibility_lp(
    target, x_star: int, y_star: int, n_lambda: int | None = None
):
    """Search for a no-signalling hidden-variable model of the target that
    is deterministic on the input pair (x_star, y_star), 1-based.

    One hidden value lambda is reserved per output pair in the support of
    the target at (x_star, y_star); each lambda's block is forced to put
    all its (x_star, y_star) mass on its own pair. Returns an NsHvModel,
    or None when the linear program is infeasible.
    """
    d = _as_ms(target).dist if not isinstance(target, BipartiteDistribution) else target
    xs, ys = x_star - 1, y_star - 1
    if not (0 <= xs < d.nx and 0 <= ys < d.ny):
        raise ValidationError("input pair outside the scenario")
    ok, viol = check_ns(d, tol=1e-7)
    if not ok:
        raise ValidationError(f"target signals by {viol:.3e}")
    assignments = _support_pairs(d, xs, ys)
    if n_lambda is not None:
        if n_lambda > d.na[xs] * d.nb[ys]:
            raise ValidationError(
                "component count exceeds the number of output pairs"
            )
        if n_lambda < len(assignments):
            raise ValidationError(
                f"need at least {len(assignments)} components for the support"
            )
        extra = [
            (a, b)
            for a in range(d.na[xs])
            for b in range(d.nb[ys])
            if (a, b) not in assignments
        ]
        assignments = assignments + extra[: n_lambda - len(assignments)]
    lp, cellmaps = _decomposition_lp(d, xs, ys, assignments, True, 0.0)
    if lp is None:
        return None
    result = simplex_solve(lp)
    if result.status != "optimal":
        return None
    return _blocks_to_model(d, result, cellmaps)


def guessing_probability_lp(
    target, x_star: int, y_star: int, model: str = "ns"
) -> float:
    """Best probability of guessing both outputs at (x_star, y_star),
    1-based, over no-signalling decompositions of the target.

    Each hidden value guesses one output pair; the objective collects the
    mass each block places on its own pair. Equals 1 exactly when a
    deterministic no-signalling model exists.
    """
    if model != "ns":
        raise ValidationError(f"unsupported model {model!r}")
    d = _as_ms(target).dist if not isinstance(target, BipartiteDistribution) else target
    xs, ys = x_star - 1, y_star - 1
    if not (0 <= xs < d.nx and 0 <= ys < d.ny):
        raise ValidationError("input pair outside the scenario")
    ok, viol = check_ns(d, tol=1e-7)
    if not ok:
        raise ValidationError(f"target signals by {viol:.3e}")
    assignments = _support_pairs(d, xs, ys)
    lp, _ = _decomposition_lp(d, xs, ys, assignments, False, 1.0)
    result = simplex_solve(lp)
    if result.status != "optimal":
        raise ValidationError(f"guessing LP returned status {result.status}")
    return float(min(result.value, 1.0))


def ms_lhv_coefficients() -> np.ndarray:
    """Bell coefficients of the win probability, exact rationals."""
    c = np.empty((4, 4, 3, 3), dtype=object)
    for a, b, x, y in product(range(4), range(4), range(3), range(3)):
        c[a, b, x, y] = Fraction(1, 9) if ms_wins(a, b, x, y) else Fraction(0)
    return c
