"""State and objective containers for the two-qubit entropy engine.

Everything downstream works in the Bell basis, ordered (Phi+, Psi-,
Phi-, Psi+). The states of interest are real and block-diagonal there:
one 2x2 block holds the Phi+/Psi- populations and their coherence, the
other the Phi-/Psi+ pair. Six real parameters describe the whole
family, and both measurement parties act in the Z-X plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Real

import numpy as np

from diqkd.errors import ValidationError
from diqkd.numerics import HermitianMatrix

TRACE_TOL = 1e-10
BLOCK_PSD_TOL = 1e-12
PATTERN_TOL = 1e-9

# Columns are the Bell vectors Phi+, Psi-, Phi-, Psi+ expressed in the
# computational basis; orthogonal, so comp = B @ bell @ B.T.
BELL_TRANSFORM = np.array(
    [
        [1.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, -1.0, 0.0],
        [1.0, 0.0, 0.0, -1.0],
        [0.0, 1.0, 1.0, 0.0],
    ]
).T / math.sqrt(2.0)
BELL_TRANSFORM.setflags(write=False)

_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_PAULI_Z.setflags(write=False)
_PAULI_X.setflags(write=False)


def plane_observable(theta: float) -> np.ndarray:
    """Binary observable cos(theta) Z + sin(theta) X as a real 2x2 array."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValidationError(f"angle must be finite, got {theta}")
    return math.cos(theta) * _PAULI_Z + math.sin(theta) * _PAULI_X


def bob_direction(direction, unit: bool = True) -> tuple[float, float]:
    """Normalize Bob's second-measurement direction to an (r_Z, r_X) pair.

    Parameters
    ----------
    direction : float or pair of float
        Either an angle in [0, pi] (mapped to (cos, sin)) or an explicit
        (r_Z, r_X) pair with r_X >= 0.
    unit : bool
        Require r_Z^2 + r_X^2 = 1 within 1e-9. Certification internals
        pass False, since relaxation vertices lie outside the circle.

    Raises
    ------
    ValidationError
        Angle outside [0, pi], negative r_X, or (when requested) a
        non-unit vector.
    """
    if isinstance(direction, Real) or (
        isinstance(direction, np.ndarray) and direction.ndim == 0
    ):
        theta = float(direction)
        if not 0.0 <= theta <= math.pi + 1e-12:
            raise ValidationError(f"measurement angle {theta} outside [0, pi]")
        return math.cos(theta), max(math.sin(theta), 0.0)
    try:
        rz, rx = (float(v) for v in direction)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"expected an angle or a pair, got {direction!r}") from exc
    if not (math.isfinite(rz) and math.isfinite(rx)):
        raise ValidationError(f"direction components must be finite, got {(rz, rx)}")
    if rx < -1e-12:
        raise ValidationError(f"r_X must be nonnegative, got {rx}")
    rx = max(rx, 0.0)
    if unit and abs(rz * rz + rx * rx - 1.0) > 1e-9:
        raise ValidationError(f"direction ({rz}, {rx}) is not unit length")
    return rz, rx


@dataclass(frozen=True)
class AlmostBellDiagonalState:
    """Two-qubit state that is block-diagonal in the Bell basis.

    Parameters
    ----------
    l_phi_plus, l_psi_minus, l_phi_minus, l_psi_plus : float
        Bell populations; must sum to 1 within 1e-10.
    ell1 : float
        Real coherence between Phi+ and Psi-.
    ell2 : float
        Real coherence between Phi- and Psi+.

    Both 2x2 blocks must be positive semidefinite, checked through
    their trace and determinant.
    """

    l_phi_plus: float = field()
    l_psi_minus: float = field()
    l_phi_minus: float = field()
    l_psi_plus: float = field()
    ell1: float = 0.0
    ell2: float = 0.0

    def __post_init__(self) -> None:
        vals = {}
        for name in ("l_phi_plus", "l_psi_minus", "l_phi_minus", "l_psi_plus", "ell1", "ell2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            vals[name] = v
            object.__setattr__(self, name, v)
        total = (
            vals["l_phi_plus"] + vals["l_psi_minus"] + vals["l_phi_minus"] + vals["l_psi_plus"]
        )
        if abs(total - 1.0) > TRACE_TOL:
            raise ValidationError(f"populations sum to {total!r}, not 1")
        for a, d, off, label in (
            (vals["l_phi_plus"], vals["l_psi_minus"], vals["ell1"], "Phi+/Psi-"),
            (vals["l_phi_minus"], vals["l_psi_plus"], vals["ell2"], "Phi-/Psi+"),
        ):
            if a + d < -BLOCK_PSD_TOL or a * d - off * off < -BLOCK_PSD_TOL:
                raise ValidationError(f"{label} block is not positive semidefinite")

    def bell_matrix(self) -> np.ndarray:
        """The 4x4 real matrix in the Bell basis (fresh array)."""
        m = np.zeros((4, 4))
        m[0, 0] = self.l_phi_plus
        m[1, 1] = self.l_psi_minus
        m[2, 2] = self.l_phi_minus
        m[3, 3] = self.l_psi_plus
        m[0, 1] = m[1, 0] = self.ell1
        m[2, 3] = m[3, 2] = self.ell2
        return m

    def density_matrix(self) -> HermitianMatrix:
        """The state in the computational basis."""
        b = self.bell_matrix()
        return HermitianMatrix(BELL_TRANSFORM @ b @ BELL_TRANSFORM.T)

    def as_vector(self) -> np.ndarray:
        """Parameter vector (populations..., ell1, ell2)."""
        return np.array(
            [
                self.l_phi_plus,
                self.l_psi_minus,
                self.l_phi_minus,
                self.l_psi_plus,
                self.ell1,
                self.ell2,
            ]
        )

    @classmethod
    def from_vector(cls, vec) -> "AlmostBellDiagonalState":
        v = np.asarray(vec, dtype=float).ravel()
        if v.shape != (6,):
            raise ValidationError(f"expected 6 parameters, got shape {v.shape}")
        return cls(*v)

    @classmethod
    def from_bell_matrix(cls, matrix, atol: float = PATTERN_TOL) -> "AlmostBellDiagonalState":
        """Extract the six parameters from a Bell-basis matrix.

        Raises when the matrix has entries outside the two-block
        pattern (or imaginary parts) larger than atol.
        """
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError(f"expected a 4x4 matrix, got {m.shape}")
        if np.abs(m.imag).max() > atol:
            raise ValidationError("matrix has imaginary entries; pattern is real")
        r = m.real
        if np.abs(r - r.T).max() > atol:
            raise ValidationError("matrix is not symmetric")
        off = max(np.abs(r[0:2, 2:4]).max(), np.abs(r[2:4, 0:2]).max())
        if off > atol:
            raise ValidationError(f"cross-block entries up to {off:.3e} break the pattern")
        return cls(
            r[0, 0],
            r[1, 1],
            r[2, 2],
            r[3, 3],
            (r[0, 1] + r[1, 0]) / 2.0,
            (r[2, 3] + r[3, 2]) / 2.0,
        )

    @classmethod
    def maximally_mixed(cls) -> "AlmostBellDiagonalState":
        return cls(0.25, 0.25, 0.25, 0.25)

    @classmethod
    def phi_plus(cls) -> "AlmostBellDiagonalState":
        return cls(1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ObjectiveSpec:
    """Weights of the single-round objective.

    Parameters
    ----------
    lambdas : float or 4-sequence
        Bell-operator coefficients lambda_xy, ordered (00, 01, 10, 11).
        A scalar lam is shorthand for the CHSH pattern
        (lam, lam, lam, -lam).
    weights : pair of float
        Key-generation weights (w0, w1), nonnegative, summing to at
        most 1.
    p : float
        Bitflip bias applied to Alice's key output, in [0, 1/2].
    """

    lambdas: tuple = field()
    weights: tuple = (0.5, 0.5)
    p: float = 0.0

    def __post_init__(self) -> None:
        lam = self.lambdas
        if isinstance(lam, Real) or (isinstance(lam, np.ndarray) and lam.ndim == 0):
            v = float(lam)
            lam4 = (v, v, v, -v)
        else:
            lam4 = tuple(float(v) for v in lam)
            if len(lam4) != 4:
                raise ValidationError(f"lambdas needs 4 entries, got {len(lam4)}")
        if not all(math.isfinite(v) for v in lam4):
            raise ValidationError(f"lambdas must be finite, got {lam4}")
        w = tuple(float(v) for v in self.weights)
        if len(w) != 2:
            raise ValidationError(f"weights needs 2 entries, got {len(w)}")
        if min(w) < 0.0 or w[0] + w[1] > 1.0 + 1e-12:
            raise ValidationError(f"weights must be nonnegative and sum to <= 1, got {w}")
        p = float(self.p)
        if not 0.0 <= p <= 0.5:
            raise ValidationError(f"preprocessing bias must lie in [0, 1/2], got {p}")
        object.__setattr__(self, "lambdas", lam4)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "p", p)

    @classmethod
    def chsh(cls, lam: float, weights=(0.5, 0.5), p: float = 0.0) -> "ObjectiveSpec":
        """CHSH-pattern spec (lam, lam, lam, -lam)."""
        return cls(float(lam), weights, p)

    @property
    def is_chsh(self) -> bool:
        a, b, c, d = self.lambdas
        return a == b == c == -d

    def alice_observable(self, x: int, theta_a: float) -> np.ndarray:
        """A_0 = Z; A_1 = cos(theta_a) Z + sin(theta_a) X."""
        if x not in (0, 1):
            raise ValidationError(f"alice input must be 0 or 1, got {x}")
        if x == 0:
            return _PAULI_Z.copy()
        return plane_observable(theta_a)

    def bob_observable(self, y: int, direction) -> np.ndarray:
        """B_0 = Z; B_1 points along the unit (r_Z, r_X) direction."""
        if y not in (0, 1):
            raise ValidationError(f"bob input must be 0 or 1, got {y}")
        if y == 0:
            return _PAULI_Z.copy()
        rz, rx = bob_direction(direction, unit=True)
        return rz * _PAULI_Z + rx * _PAULI_X

    def gamma_matrix(self, theta_a: float, direction) -> np.ndarray:
        """Constraint operator sum_xy lambda_xy A_x (x) B_y, computational basis.

        The direction may be non-unit; the result is affine in it.
        """
        rz, rx = bob_direction(direction, unit=False)
        b_obs = (_PAULI_Z, rz * _PAULI_Z + rx * _PAULI_X)
        a_obs = (_PAULI_Z, plane_observable(theta_a))
        total = np.zeros((4, 4))
        for (x, y), lam in zip(((0, 0), (0, 1), (1, 0), (1, 1)), self.lambdas):
            if lam:
                total += lam * np.kron(a_obs[x], b_obs[y])
        return total
