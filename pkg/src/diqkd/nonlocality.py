"""Bipartite nonlocal distributions and N-party correlator algebra.

Output indexing convention, fixed across the package: for binary outcomes,
index 0 means the +1 outcome and index 1 means the -1 outcome. A detector
no-click symbol, when kept, is the last output index of the enlarged
alphabet. Probability tables are stored row-major as p[x, y, a, b].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from diqkd.errors import ComputeError, DomainError, ValidationError

NORM_TOL = 1e-9
NEG_TOL = 1e-12

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def outcome_sign(index: int) -> int:
    """Map a binary output index to its +-1 value (0 -> +1, 1 -> -1)."""
    if index not in (0, 1):
        raise ValidationError(f"binary outcome index must be 0 or 1, got {index}")
    return 1 - 2 * index


@dataclass(frozen=True)
class BipartiteDistribution:
    """Conditional distribution p(a, b | x, y) over finite alphabets.

    Parameters
    ----------
    table : ndarray
        Shape (nx, ny, max_a, max_b); cells beyond the per-input output
        counts must be zero.
    na : tuple of int
        Alice's output count for each input x.
    nb : tuple of int
        Bob's output count for each input y.
    """

    table: np.ndarray = field()
    na: tuple = field(default=None)
    nb: tuple = field(default=None)

    def __post_init__(self) -> None:
        t = np.array(self.table, dtype=float)
        if t.ndim != 4:
            raise ValidationError(f"expected a 4-index table, got {t.ndim} indices")
        nx, ny, ma, mb = t.shape
        na = tuple(int(v) for v in (self.na if self.na is not None else [ma] * nx))
        nb = tuple(int(v) for v in (self.nb if self.nb is not None else [mb] * ny))
        if len(na) != nx or len(nb) != ny:
            raise ValidationError("output count lists mismatch the input counts")
        if min(na) < 1 or max(na) > ma or min(nb) < 1 or max(nb) > mb:
            raise ValidationError("per-input output counts outside the table")
        if t.min() < -NEG_TOL:
            raise ValidationError(f"negative probability {t.min():.3e}")
        for x in range(nx):
            for y in range(ny):
                block = t[x, y]
                if np.abs(block[na[x]:, :]).max(initial=0.0) > 0.0 or np.abs(
                    block[:, nb[y]:]
                ).max(initial=0.0) > 0.0:
                    raise ValidationError(f"padding cells nonzero at x={x}, y={y}")
                s = float(block[: na[x], : nb[y]].sum())
                if abs(s - 1.0) > NORM_TOL:
                    raise ValidationError(
                        f"p(.|x={x},y={y}) sums to {s:.12f}, not 1"
                    )
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "na", na)
        object.__setattr__(self, "nb", nb)

    @property
    def nx(self) -> int:
        return self.table.shape[0]

    @property
    def ny(self) -> int:
        return self.table.shape[1]

    def is_binary(self) -> bool:
        return set(self.na) == {2} and set(self.nb) == {2}

    def alice_marginal(self, x: int, y: int) -> np.ndarray:
        return self.table[x, y, : self.na[x], : self.nb[y]].sum(axis=1)

    def bob_marginal(self, x: int, y: int) -> np.ndarray:
        return self.table[x, y, : self.na[x], : self.nb[y]].sum(axis=0)

    def to_text(self) -> str:
        """Serialize to the plain-text table format (see from_text)."""
        lines = ["bipartite-distribution v1"]
        lines.append("inputs " + f"{self.nx} {self.ny}")
        lines.append("alice-outputs " + " ".join(str(v) for v in self.na))
        lines.append("bob-outputs " + " ".join(str(v) for v in self.nb))
        for x in range(self.nx):
            for y in range(self.ny):
                vals = self.table[x, y, : self.na[x], : self.nb[y]].ravel()
                body = " ".join("%.17g" % v for v in vals)
                lines.append(f"p {x} {y} : {body}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "BipartiteDistribution":
        """Parse the format written by to_text.

        Header gives input counts and per-input output counts; each body
        line "p x y : v ..." lists p(a,b|x,y) with a varying slowest.
        """
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0] != "bipartite-distribution v1":
            raise ValidationError("missing distribution header")
        try:
            nx, ny = (int(v) for v in lines[1].split()[1:])
            na = tuple(int(v) for v in lines[2].split()[1:])
            nb = tuple(int(v) for v in lines[3].split()[1:])
        except (IndexError, ValueError) as exc:
            raise ValidationError(f"malformed header: {exc}") from exc
        table = np.zeros((nx, ny, max(na), max(nb)))
        seen = set()
        for ln in lines[4:]:
            parts = ln.split()
            if len(parts) < 4 or parts[0] != "p" or parts[3] != ":":
                raise ValidationError(f"malformed body line: {ln!r}")
            x, y = int(parts[1]), int(parts[2])
            vals = [float(v) for v in parts[4:]]
            if len(vals) != na[x] * nb[y]:
                raise ValidationError(f"wrong value count for x={x}, y={y}")
            table[x, y, : na[x], : nb[y]] = np.reshape(vals, (na[x], nb[y]))
            seen.add((x, y))
        if len(seen) != nx * ny:
            raise ValidationError("missing body lines")
        return BipartiteDistribution(table, na, nb)


@dataclass(frozen=True)
class CorrelatorVector:
    """Correlators of N binary +-1 variables, one value per subset.

    values[mask] holds the expectation of the product over the parties
    whose bit is set in mask; values[0] is always 1.
    """

    n_parties: int = field()
    values: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        n = int(self.n_parties)
        if n < 1:
            raise ValidationError("need at least one party")
        v = np.array(self.values, dtype=float)
        if v.shape != (2**n,):
            raise ValidationError(f"expected {2**n} subset values, got {v.shape}")
        if abs(v[0] - 1.0) > 1e-9:
            raise ValidationError("empty-subset correlator must equal 1")
        if np.abs(v).max() > 1.0 + 1e-9:
            raise ValidationError("correlators must lie in [-1, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "n_parties", n)
        object.__setattr__(self, "values", v)

    def subset_value(self, parties) -> float:
        mask = 0
        for i in parties:
            mask |= 1 << i
        return float(self.values[mask])


@dataclass(frozen=True)
class QubitStrategy:
    """Two-qubit state with +-1-valued observables per input.

    Observables square to the identity within 1e-10; the state is
    positive semidefinite with unit trace.
    """

    state: np.ndarray = field()
    alice_obs: tuple = field()
    bob_obs: tuple = field()

    def __post_init__(self) -> None:
        rho = np.array(self.state, dtype=complex)
        if rho.shape != (4, 4):
            raise ValidationError(f"state must be 4x4, got {rho.shape}")
        if np.abs(rho - rho.conj().T).max() > 1e-10:
            raise ValidationError("state must be hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-9:
            raise ValidationError("state must have unit trace")
        if np.linalg.eigvalsh(rho).min() < -1e-9:
            raise ValidationError("state must be positive semidefinite")
        rho.setflags(write=False)

        def check_obs(seq, label):
            out = []
            for i, m in enumerate(seq):
                o = np.array(m, dtype=complex)
                if o.shape != (2, 2):
                    raise ValidationError(f"{label}[{i}] must be 2x2")
                if np.abs(o - o.conj().T).max() > 1e-10:
                    raise ValidationError(f"{label}[{i}] must be hermitian")
                if np.abs(o @ o - np.eye(2)).max() > 1e-10:
                    raise ValidationError(f"{label}[{i}] must square to identity")
                o.setflags(write=False)
                out.append(o)
            return tuple(out)

        object.__setattr__(self, "state", rho)
        object.__setattr__(self, "alice_obs", check_obs(self.alice_obs, "alice_obs"))
        object.__setattr__(self, "bob_obs", check_obs(self.bob_obs, "bob_obs"))


def observable_projectors(obs) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the +1 and -1 eigenspaces of a +-1 observable."""
    o = np.asarray(obs, dtype=complex)
    eye = np.eye(o.shape[0])
    return (eye + o) / 2.0, (eye - o) / 2.0


def check_ns(d: BipartiteDistribution, tol: float = 1e-9) -> tuple[bool, float]:
    """Check the no-signalling marginal conditions.

    Returns
    -------
    (ok, max_violation)
        ok is True when every Alice marginal is independent of y and
        every Bob marginal independent of x within tol; max_violation is
        the largest marginal spread found.
    """
    worst = 0.0
    for x in range(d.nx):
        margs = np.stack([d.alice_marginal(x, y) for y in range(d.ny)])
        worst = max(worst, float((margs.max(axis=0) - margs.min(axis=0)).max()))
    for y in range(d.ny):
        margs = np.stack([d.bob_marginal(x, y) for x in range(d.nx)])
        worst = max(worst, float((margs.max(axis=0) - margs.min(axis=0)).max()))
    return worst <= tol, worst


def chsh_score(d: BipartiteDistribution) -> tuple[float, float]:
    """CHSH value S and game winning probability w of a 2x2 binary table.

    S sums the four correlators with a minus sign on the (1,1) input
    pair; w is the chance that the output bits satisfy a XOR b = x AND y
    under uniformly random inputs. For no-signalling tables w = (S+4)/8.
    """
    if d.nx != 2 or d.ny != 2 or not d.is_binary():
        raise ValidationError("CHSH needs two binary inputs per party")
    s = 0.0
    w = 0.0
    for x, y in product(range(2), repeat=2):
        block = d.table[x, y, :2, :2]
        corr = block[0, 0] - block[0, 1] - block[1, 0] + block[1, 1]
        s += (-1.0) ** (x * y) * corr
        for a, b in product(range(2), repeat=2):
            if (a + b) % 2 == (x * y) % 2:
                w += 0.25 * block[a, b]
    return float(s), float(w)


def apply_depolarizing(d: BipartiteDistribution, q: float) -> BipartiteDistribution:
    """Mix with uniform noise: (1-2q) p + 2q / (|A||B|) per input pair."""
    if not 0.0 <= q <= 0.5:
        raise DomainError(f"depolarizing strength must lie in [0, 0.5], got {q}")
    t = d.table.copy() * (1.0 - 2.0 * q)
    for x in range(d.nx):
        for y in range(d.ny):
            t[x, y, : d.na[x], : d.nb[y]] += 2.0 * q / (d.na[x] * d.nb[y])
    return BipartiteDistribution(t, d.na, d.nb)


def apply_detection_efficiency(
    d: BipartiteDistribution, eta: float, mapping: str = "bin_to_minus_one"
) -> BipartiteDistribution:
    """Compose each party's output with an independent detector of efficiency eta.

    With probability 1 - eta an outcome is erased. "bin_to_minus_one"
    assigns erasures to the -1 output on both sides, leaving the alphabet
    binary (a Z-channel on the output bit). "keep_bob_perp" bins Alice
    the same way but appends a third no-click symbol to Bob's alphabet.
    """
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"detection efficiency must lie in [0,1], got {eta}")
    if not d.is_binary():
        raise ValidationError("detector model needs binary +-1 outputs")
    if mapping not in ("bin_to_minus_one", "keep_bob_perp"):
        raise ValidationError(f"unknown mapping {mapping!r}")
    # Row k_chan[i, j] = P[j -> i]: click kept with prob eta, else erased.
    bin_chan = np.array([[eta, 0.0], [1.0 - eta, 1.0]])
    if mapping == "bin_to_minus_one":
        chan_b = bin_chan
        nb_out = 2
    else:
        chan_b = np.array([[eta, 0.0], [0.0, eta], [1.0 - eta, 1.0 - eta]])
        nb_out = 3
    t = np.zeros((d.nx, d.ny, 2, nb_out))
    for x in range(d.nx):
        for y in range(d.ny):
            t[x, y] = bin_chan @ d.table[x, y, :2, :2] @ chan_b.T
    return BipartiteDistribution(t, d.na, tuple(nb_out for _ in d.nb))


def distribution_from_strategy(
    strategy, alice_projectors=None, bob_projectors=None
) -> BipartiteDistribution:
    """Born-rule table p(ab|xy) = Tr[(P_a|x x Q_b|y) rho].

    Accepts either a QubitStrategy (projectors derived from the +-1
    observables) or an explicit state with per-input projector families,
    each of which must resolve the identity on its party's space.
    """
    if isinstance(strategy, QubitStrategy):
        state = strategy.state
        alice_projectors = [observable_projectors(o) for o in strategy.alice_obs]
        bob_projectors = [observable_projectors(o) for o in strategy.bob_obs]
    else:
        state = np.asarray(strategy, dtype=complex)
        if alice_projectors is None or bob_projectors is None:
            raise ValidationError("need projector families with a raw state")
    da = alice_projectors[0][0].shape[0]
    db = bob_projectors[0][0].shape[0]
    if state.shape != (da * db, da * db):
        raise ValidationError(
            f"state dimension {state.shape} mismatches {da}x{db} projectors"
        )
    for label, fams, dim in (
        ("alice", alice_projectors, da),
        ("bob", bob_projectors, db),
    ):
        for x, fam in enumerate(fams):
            total = sum(np.asarray(p, dtype=complex) for p in fam)
            if np.abs(total - np.eye(dim)).max() > 1e-9:
                raise ValidationError(
                    f"{label} projectors for input {x} do not resolve identity"
                )
    nx, ny = len(alice_projectors), len(bob_projectors)
    na = tuple(len(f) for f in alice_projectors)
    nb = tuple(len(f) for f in bob_projectors)
    t = np.zeros((nx, ny, max(na), max(nb)))
    for x in range(nx):
        for y in range(ny):
            for a, pa in enumerate(alice_projectors[x]):
                for b, pb in enumerate(bob_projectors[y]):
                    val = np.trace(np.kron(pa, pb) @ state).real
                    t[x, y, a, b] = max(val, 0.0)
    return BipartiteDistribution(t, na, nb)


def _sign_vector() -> np.ndarray:
    return np.array([1.0, -1.0])


def correlators_single(outcome_probs) -> CorrelatorVector:
    """Correlator vector of one distribution over N binary +-1 outcomes.

    The transform matrix has entries prod_{i in S} sign(a_i); its rows
    are orthogonal with squared norm 2^N, so it is invertible by its
    transpose over 2^N.
    """
    q = np.asarray(outcome_probs, dtype=float)
    n = q.ndim
    if q.shape != (2,) * n:
        raise ValidationError(f"expected a (2,)*N outcome table, got {q.shape}")
    vals = np.empty(2**n)
    for mask in range(2**n):
        vals[mask] = float((q * _sign_grid(n, mask)).sum())
    return CorrelatorVector(n, vals)


def _sign_grid(n: int, mask: int) -> np.ndarray:
    signs = _sign_vector()
    ones = np.ones(2)
    grid = signs if mask & 1 else ones
    for i in range(1, n):
        grid = np.multiply.outer(grid, signs if (mask >> i) & 1 else ones)
    return grid


def probs_single(c: CorrelatorVector) -> np.ndarray:
    """Inverse of correlators_single via the transposed transform over 2^N."""
    n = c.n_parties
    q = np.zeros((2,) * n)
    for mask in range(2**n):
        q += c.values[mask] * _sign_grid(n, mask)
    return q / 2.0**n


def correlators_from_probs(table) -> dict:
    """Full correlator parametrization of an N-party binary distribution.

    Parameters
    ----------
    table : BipartiteDistribution or ndarray
        Either a binary bipartite table or an array with N input indices
        followed by N binary output indices.

    Returns
    -------
    dict
        Keys are tuples of (party, input) pairs with parties ascending,
        the empty tuple mapping to 1. Each subset's correlator is
        checked for agreement across all completions of the inputs
        outside the subset; disagreement raises a validation error
        naming the subset, since it signals.
    """
    if isinstance(table, BipartiteDistribution):
        if not table.is_binary():
            raise ValidationError("correlators need binary outputs")
        arr = table.table[:, :, :2, :2]
    else:
        arr = np.asarray(table, dtype=float)
    if arr.ndim % 2 != 0:
        raise ValidationError("table must carry N input and N output indices")
    n = arr.ndim // 2
    in_shape = arr.shape[:n]
    if arr.shape[n:] != (2,) * n:
        raise ValidationError("outputs must be binary")
    out: dict = {(): 1.0}
    pending: dict = {}
    for inputs in product(*(range(m) for m in in_shape)):
        cv = correlators_single(arr[inputs])
        for mask in range(1, 2**n):
            parties = [i for i in range(n) if (mask >> i) & 1]
            key = tuple((i, inputs[i]) for i in parties)
            pending.setdefault(key, []).append(cv.values[mask])
    for key, vals in pending.items():
        spread = max(vals) - min(vals)
        if spread > 1e-9:
            parties = tuple(p for p, _ in key)
            raise ValidationError(
                f"correlator for parties {parties} at inputs "
                f"{tuple(x for _, x in key)} varies by {spread:.3e} across "
                "other parties' inputs (signalling)"
            )
        out[key] = float(np.mean(vals))
    return out


def probs_from_correlators(corrs: dict, input_shape) -> np.ndarray:
    """Rebuild the probability table from a full correlator dictionary.

    input_shape lists each party's input count. The result has N input
    indices followed by N binary output indices; round-tripping through
    correlators_from_probs is the identity within 1e-12.
    """
    in_shape = tuple(int(m) for m in input_shape)
    n = len(in_shape)
    arr = np.zeros(in_shape + (2,) * n)
    for inputs in product(*(range(m) for m in in_shape)):
        vals = np.empty(2**n)
        vals[0] = 1.0
        for mask in range(1, 2**n):
            parties = [i for i in range(n) if (mask >> i) & 1]
            key = tuple((i, inputs[i]) for i in parties)
            if key not in corrs:
                raise ValidationError(f"missing correlator for {key}")
            vals[mask] = corrs[key]
        arr[inputs] = probs_single(CorrelatorVector(n, vals))
    return arr


def pr_box() -> BipartiteDistribution:
    """The extremal no-signalling box with p(ab|xy) = (1 + ab(-1)^xy)/4."""
    t = np.zeros((2, 2, 2, 2))
    for x, y, a, b in product(range(2), repeat=4):
        sign = outcome_sign(a) * outcome_sign(b) * (-1) ** (x * y)
        t[x, y, a, b] = (1.0 + sign) / 4.0
    return BipartiteDistribution(t)


def lhv_optimum(coeffs, na: int, nb: int) -> tuple[Fraction, tuple]:
    """Exact maximum of a Bell expression over deterministic strategies.

    Parameters
    ----------
    coeffs : nested sequence
        Bell coefficients indexed [a][b][x][y], entries int or Fraction
        (floats are converted exactly).
    na, nb : int
        Output alphabet sizes, uniform across inputs.

    Returns
    -------
    (value, (alice_assignment, bob_assignment))
        value is an exact Fraction; the assignments list the chosen
        output for each input. Bob's best response is computed per input
        against each Alice assignment, so only na^nx strategies are
        enumerated explicitly.
    """
    c = np.asarray(coeffs, dtype=object)
    if c.ndim != 4:
        raise ValidationError("coefficients must be indexed [a][b][x][y]")
    if c.shape[0] != na or c.shape[1] != nb:
        raise ValidationError("coefficient shape mismatches output counts")
    nx, ny = c.shape[2], c.shape[3]
    exact = np.empty_like(c)
    for idx in np.ndindex(c.shape):
        exact[idx] = Fraction(c[idx])
    if na**nx * nb**ny > 10**7:
        raise ComputeError("deterministic enumeration budget exceeded")
    best = None
    best_strat = None
    for fa in product(range(na), repeat=nx):
        total = Fraction(0)
        fb = []
        for y in range(ny):
            scores = [
                sum(exact[fa[x], b, x, y] for x in range(nx)) for b in range(nb)
            ]
            b_star = max(range(nb), key=lambda b: scores[b])
            total += scores[b_star]
            fb.append(b_star)
        if best is None or total > best:
            best = total
            best_strat = (fa, tuple(fb))
    return best, best_strat


def deterministic_ns_is_product(d: BipartiteDistribution) -> bool:
    """Check the factorization p(ab|xy) = p(a|x) p(b|y) of a deterministic NS table."""
    t = d.table
    if not np.isin(np.round(t, 12), (0.0, 1.0)).all():
        raise ValidationError("table is not deterministic")
    ok, viol = check_ns(d)
    if not ok:
        raise ValidationError(f"table signals (violation {viol:.3e})")
    for x in range(d.nx):
        for y in range(d.ny):
            pa = d.alice_marginal(x, y)
            pb = d.bob_marginal(x, y)
            if np.abs(np.outer(pa, pb) - t[x, y, : d.na[x], : d.nb[y]]).max() > 1e-9:
                return False
    return True


def symmetrize_outputs(d: BipartiteDistribution) -> BipartiteDistribution:
    """Average with the table where both parties flip their output bit.

    Models both parties XORing a shared uniform bit into their outcomes:
    marginals become uniform while agreement statistics are unchanged.
    """
    if not d.is_binary():
        raise ValidationError("symmetrization needs binary +-1 outputs")
    flipped = d.table[:, :, ::-1, ::-1]
    return BipartiteDistribution((d.table + flipped) / 2.0, d.na, d.nb)
