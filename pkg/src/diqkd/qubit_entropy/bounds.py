"""Affine entropy bounds, keyrates, and noise thresholds.

A certified run of the dual search produces, for each preprocessing
bias, a pair (slope, intercept) with the guarantee that the one-party
conditional entropy is at least slope*(S - 2) + intercept whenever the
CHSH value is S. This module stores such pairs, evaluates them, derives
asymptotic keyrates under depolarizing noise, and computes the two
detection-efficiency thresholds of the fixed-measurement protocol.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from diqkd.errors import ComputeError, DomainError, ValidationError
from diqkd.numerics import (
    HermitianMatrix,
    binary_entropy,
    brent_root,
    golden_section_min,
)
from diqkd.nonlocality import (
    QubitStrategy,
    apply_detection_efficiency,
    chsh_score,
    distribution_from_strategy,
)
from diqkd.qubit_entropy.states import AlmostBellDiagonalState

S_LOCAL = 2.0
S_QUANTUM = 2.0 * math.sqrt(2.0)
RANGE_TOL = 1e-9

PROVENANCES = ("closed_form", "tabulated", "locally_certified")


@dataclass(frozen=True)
class EntropyBound:
    """Affine lower bound on conditional entropy as a function of S.

    evaluate clips to [0, 1]: the certified affine function may dip
    slightly below zero near S = 2 (the p = 0 tabulated bound does) and
    zero is always a valid entropy bound, so clipping only tightens.
    """

    slope: float
    intercept: float
    s_min: float = S_LOCAL
    s_max: float = S_QUANTUM
    provenance: str = "locally_certified"

    def __post_init__(self) -> None:
        for name in ("slope", "intercept", "s_min", "s_max"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if not self.s_min < self.s_max:
            raise ValidationError(f"empty validity range [{self.s_min}, {self.s_max}]")
        if self.provenance not in PROVENANCES:
            raise ValidationError(
                f"provenance must be one of {PROVENANCES}, got {self.provenance!r}"
            )

    def evaluate(self, s: float) -> float:
        """Bound in bits at CHSH value s; DomainError outside the range."""
        s = float(s)
        if not self.s_min - RANGE_TOL <= s <= self.s_max + RANGE_TOL:
            raise DomainError(
                f"S = {s} outside validity range [{self.s_min}, {self.s_max}]"
            )
        return min(max(self.slope * (s - 2.0) + self.intercept, 0.0), 1.0)


def certified_bound_table() -> dict:
    """Tabulated affine bounds keyed by preprocessing bias p.

    The p = 0.3 intercept is stored with a positive sign: a negative
    one would make the bound negative on the whole range, break the
    intercept pattern h(p) of the neighboring rows, and contradict the
    noise threshold this table reproduces.
    """
    rows = (
        (0.00, 1.190, -0.00454),
        (0.20, 0.327, 0.72063),
        (0.30, 0.139, 0.88051),
        (0.40, 0.0341, 0.97055),
        (0.45, 0.00855, 0.992487),
    )
    return {
        p: EntropyBound(slope, intercept, provenance="tabulated")
        for p, slope, intercept in rows
    }


def bounds_to_csv(table) -> str:
    """Serialize {p: EntropyBound} as CSV with a header row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["p", "slope_bits_per_S", "intercept_bits", "s_min", "s_max", "provenance"])
    for p in sorted(table):
        b = table[p]
        writer.writerow(
            [repr(float(p)), repr(b.slope), repr(b.intercept), repr(b.s_min), repr(b.s_max), b.provenance]
        )
    return buf.getvalue()


def bounds_from_csv(text: str) -> dict:
    """Inverse of bounds_to_csv."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:3] != ["p", "slope_bits_per_S", "intercept_bits"]:
        raise ValidationError("missing entropy-bound CSV header")
    out = {}
    for row in rows[1:]:
        if not row:
            continue
        p, slope, intercept, s_min, s_max, provenance = row
        out[float(p)] = EntropyBound(
            float(slope), float(intercept), float(s_min), float(s_max), provenance
        )
    return out


def closed_form_bound(s: float, p: float = 0.0, family: str = "pab09_hst") -> float:
    """Closed-form entropy bound at CHSH value s and preprocessing bias p.

    1 - h((1 + sqrt((s/2)^2 - 1))/2) + h((1 + sqrt(1 - p(1-p)(8 - s^2)))/2)

    At p = 0 the last term vanishes; at s = 2 the value is h(p).
    """
    if family != "pab09_hst":
        raise ValidationError(f"unknown closed-form family {family!r}")
    s = float(s)
    p = float(p)
    if not 0.0 <= p <= 0.5:
        raise DomainError(f"bias must lie in [0, 1/2], got {p}")
    if not S_LOCAL - RANGE_TOL <= s <= S_QUANTUM + RANGE_TOL:
        raise DomainError(f"S = {s} outside [2, 2*sqrt(2)]")
    s = min(max(s, S_LOCAL), S_QUANTUM)
    root1 = math.sqrt(max((s / 2.0) ** 2 - 1.0, 0.0))
    root2 = math.sqrt(max(1.0 - p * (1.0 - p) * (8.0 - s * s), 0.0))
    return 1.0 - binary_entropy((1.0 + root1) / 2.0) + binary_entropy((1.0 + root2) / 2.0)


def chsh_of_depolarizing(q: float) -> float:
    """CHSH value of the optimal strategy after two-sided depolarizing q."""
    q = float(q)
    if not 0.0 <= q <= 0.5:
        raise DomainError(f"depolarizing strength must lie in [0, 1/2], got {q}")
    return S_QUANTUM * (1.0 - 2.0 * q)


def asymptotic_rate_depol(q: float, p: float, bound) -> float:
    """Keyrate bound(S(q)) - h(p + (1-2p)q) under depolarizing noise q.

    bound is an EntropyBound or a callable S -> bits. S(q) below 2
    certifies nothing, so the entropy term is evaluated at 2 (zero for
    every bound in this module). The rate is reported raw and may be
    negative.
    """
    q = float(q)
    p = float(p)
    if not 0.0 <= p <= 0.5:
        raise DomainError(f"bias must lie in [0, 1/2], got {p}")
    s = max(chsh_of_depolarizing(q), S_LOCAL)
    ent = bound.evaluate(s) if isinstance(bound, EntropyBound) else float(bound(s))
    return ent - binary_entropy(p + (1.0 - 2.0 * p) * q)


def depolarizing_threshold(p: float = 0.0, bound=None, bracket=(1e-9, 0.2)) -> float:
    """Largest depolarizing noise with nonnegative asymptotic rate.

    With bound omitted the closed-form bound at this p is used. Root
    of the rate in q on the bracket; requires a sign change there.
    """
    if bound is None:
        bnd = lambda s: closed_form_bound(s, p)
    else:
        bnd = bound

    def rate(q):
        return asymptotic_rate_depol(q, p, bnd)

    lo, hi = float(bracket[0]), float(bracket[1])
    if rate(lo) <= 0.0 or rate(hi) >= 0.0:
        raise ComputeError(f"no rate sign change on [{lo}, {hi}]")
    return brent_root(rate, lo, hi)


def optimized_preprocessing_threshold(p_max: float = 0.499, evals: int = 60):
    """Noise threshold of the closed-form bound, maximized over the bias.

    The threshold grows monotonically with p on [0, 1/2) for this bound
    family, but a golden-section search is cheap and does not rely on
    that. Returns (threshold, p_star).
    """
    p_max = float(p_max)
    if not 0.0 < p_max < 0.5:
        raise ValidationError(f"p_max must lie in (0, 1/2), got {p_max}")
    p_star, neg = golden_section_min(
        lambda p: -depolarizing_threshold(p), 0.0, p_max, evals=int(evals)
    )
    return -neg, p_star


def single_constraint_conversion(lambda_vec, constraints):
    """Collapse weighted constraints Tr[Gamma_j rho] >= gamma_j into one.

    constraints is a sequence of (operator, value) pairs; operators may
    be HermitianMatrix or arrays of one common shape. Returns
    (HermitianMatrix sum_j lambda_j Gamma_j, sum_j lambda_j gamma_j).
    """
    lam = np.asarray(lambda_vec, dtype=float).ravel()
    if lam.size != len(constraints):
        raise ValidationError(
            f"{lam.size} weights for {len(constraints)} constraints"
        )
    total_op = None
    total_val = 0.0
    for coeff, (op, val) in zip(lam, constraints):
        mat = np.array(getattr(op, "entries", op), dtype=complex)
        total_op = coeff * mat if total_op is None else total_op + coeff * mat
        total_val += coeff * float(val)
    return HermitianMatrix(total_op), total_val


_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_X = np.array([[0.0, 1.0], [1.0, 0.0]])

DETECTION_FAMILIES = ("fixed_meas_binned", "fixed_meas_keep_perp")


def _shannon(vec: np.ndarray) -> float:
    v = vec[vec > 1e-14]
    return float(-(v * np.log2(v)).sum())


def _detection_rate(eta: float, mapping: str) -> float:
    phi = AlmostBellDiagonalState.phi_plus().density_matrix().entries
    test = QubitStrategy(
        phi,
        (_Z, _X),
        ((_Z + _X) / math.sqrt(2.0), (_Z - _X) / math.sqrt(2.0)),
    )
    # Test rounds are always binned; only key rounds may keep no-clicks.
    binned = apply_detection_efficiency(
        distribution_from_strategy(test), eta, "bin_to_minus_one"
    )
    s, _ = chsh_score(binned)
    key = apply_detection_efficiency(
        distribution_from_strategy(QubitStrategy(phi, (_Z,), (_Z,))), eta, mapping
    )
    joint = key.table[0, 0, :2, : key.nb[0]]
    err_term = _shannon(joint.ravel()) - _shannon(joint.sum(axis=0))
    return closed_form_bound(max(s, S_LOCAL), 0.0) - err_term


def detection_threshold(family: str, bound: str = "pab09") -> float:
    """Detection efficiency where the fixed-measurement rate hits zero.

    The honest device measures a two-qubit maximally entangled state,
    Alice with Z and X, Bob with (Z+X)/sqrt(2) and (Z-X)/sqrt(2) for
    the test plus Z for key rounds. Each detector fires with
    probability eta; Alice bins no-clicks into the -1 outcome, Bob bins
    them too (fixed_meas_binned) or keeps them as a third symbol
    (fixed_meas_keep_perp). Root of the rate on eta in [0.8, 1].
    """
    if family not in DETECTION_FAMILIES:
        raise ValidationError(f"family must be one of {DETECTION_FAMILIES}, got {family!r}")
    if bound != "pab09":
        raise ValidationError(f"unknown bound family {bound!r}")
    mapping = "bin_to_minus_one" if family == "fixed_meas_binned" else "keep_bob_perp"

    def rate(eta):
        return _detection_rate(eta, mapping)

    lo, hi = 0.8, 1.0
    if rate(lo) * rate(hi) > 0.0:
        raise ComputeError("no detection threshold in bracket")
    return brent_root(rate, lo, hi)
