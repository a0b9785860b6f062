"""Single-round conditional entropies and the certification objective.

The quantity of interest is the entropy of Alice's (noisily
preprocessed) key bit given an adversary holding a purification. For a
measurement A_x on a two-qubit state it equals a relative entropy
between two operators built from the state: append an ancilla bit T in
the pure state sqrt(1-p)|0> + sqrt(p)|1>, then pinch with projectors
that flip Alice's outcome when T reads 1. The public entropy routines
evaluate that 8-dimensional formula through the numerics kernel; the
objective and gradient use an equivalent reduced form, two 4x4 blocks
per measurement, which the tests cross-check against the kernel route.
"""

from __future__ import annotations

import math

import numpy as np

from diqkd.errors import DomainError, ValidationError
from diqkd.numerics import HermitianMatrix, relative_entropy
from diqkd.qubit_entropy.states import (
    BELL_TRANSFORM,
    AlmostBellDiagonalState,
    ObjectiveSpec,
    bob_direction,
    plane_observable,
)

_CLAMP = 1e-14

# Bell-basis forms of the plane correlator operators. All four fit the
# two-block pattern, so constraint operators never leave it.
_ZZ_BELL = np.diag([1.0, -1.0, 1.0, -1.0])
_XX_BELL = np.diag([1.0, -1.0, -1.0, 1.0])
_ZX_BELL = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ]
)
_XZ_BELL = np.array(
    [
        [0.0, -1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ]
)
for _m in (_ZZ_BELL, _XX_BELL, _ZX_BELL, _XZ_BELL):
    _m.setflags(write=False)


def _gamma_bell(lambdas, theta_a: float, rvec) -> np.ndarray:
    """Bell-basis constraint operator for B_0 = Z, B_1 = rz Z + rx X."""
    l00, l01, l10, l11 = lambdas
    rz, rx = rvec
    c, s = math.cos(theta_a), math.sin(theta_a)
    return (
        (l00 + l01 * rz + (l10 + l11 * rz) * c) * _ZZ_BELL
        + (l01 + l11 * c) * rx * _ZX_BELL
        + (l10 + l11 * rz) * s * _XZ_BELL
        + l11 * s * rx * _XX_BELL
    )


def _entropy_two(a: float, d: float, off: float) -> float:
    """Entropy in bits of a PSD 2x2 [[a, off], [off, d]], eigenvalues clamped."""
    mean = (a + d) / 2.0
    disc = math.hypot((a - d) / 2.0, off)
    total = 0.0
    for lam in (mean - disc, mean + disc):
        if lam > _CLAMP:
            total -= lam * math.log2(lam)
    return total


def _pattern_entropy(rho_bell: np.ndarray) -> float:
    return _entropy_two(rho_bell[0, 0], rho_bell[1, 1], rho_bell[0, 1]) + _entropy_two(
        rho_bell[2, 2], rho_bell[3, 3], rho_bell[2, 3]
    )


def _entropy_psd(m: np.ndarray) -> float:
    w = np.linalg.eigvalsh(m)
    w = w[w > _CLAMP]
    return float(-(w * np.log2(w)).sum())


def _alice_rotation(theta_a: float) -> np.ndarray:
    # Columns are the +1 and -1 eigenvectors of cos(t) Z + sin(t) X.
    c, s = math.cos(theta_a / 2.0), math.sin(theta_a / 2.0)
    return np.array([[c, -s], [s, c]])


def _rotated_state(rho_c: np.ndarray, theta_a: float, x: int) -> np.ndarray:
    if x == 0:
        return rho_c
    ri = np.kron(_alice_rotation(theta_a), np.eye(2))
    return ri.T @ rho_c @ ri


def _pinched_blocks(rho_c: np.ndarray, theta_a: float, x: int, p: float):
    """The two 4x4 blocks of the pinched ancilla-extended state.

    Block a collects the (A = a, T = 0) and (A = 1-a, T = 1) sectors in
    Alice's measurement eigenbasis; its entropy sum minus the state
    entropy gives the conditional entropy.
    """
    rp = _rotated_state(rho_c, theta_a, x)
    cross = math.sqrt(p * (1.0 - p))
    r00, r01 = rp[0:2, 0:2], rp[0:2, 2:4]
    r10, r11 = rp[2:4, 0:2], rp[2:4, 2:4]
    m0 = np.block([[(1.0 - p) * r00, cross * r01], [cross * r10, p * r11]])
    m1 = np.block([[(1.0 - p) * r11, cross * r10], [cross * r01, p * r00]])
    return m0, m1


def _cond_core(rho_bell: np.ndarray, theta_a: float, x: int, p: float) -> float:
    """Conditional entropy via the two-block form (no kernel round trip)."""
    rho_c = BELL_TRANSFORM @ rho_bell @ BELL_TRANSFORM.T
    if p == 0.0:
        # Zero ancilla weight: each block degenerates to a 2x2 corner.
        rp = _rotated_state(rho_c, theta_a, x)
        pinched = _entropy_two(rp[0, 0], rp[1, 1], rp[0, 1]) + _entropy_two(
            rp[2, 2], rp[3, 3], rp[2, 3]
        )
    else:
        m0, m1 = _pinched_blocks(rho_c, theta_a, x, p)
        w = np.linalg.eigvalsh(np.stack((m0, m1))).ravel()
        w = w[w > _CLAMP]
        pinched = float(-(w * np.log2(w)).sum())
    return pinched - _pattern_entropy(rho_bell)


def _check_inputs(theta_a: float, x: int, p: float) -> float:
    theta_a = float(theta_a)
    if not (math.isfinite(theta_a) and 0.0 <= theta_a <= math.pi + 1e-12):
        raise ValidationError(f"measurement angle {theta_a} outside [0, pi]")
    if x not in (0, 1):
        raise ValidationError(f"input index must be 0 or 1, got {x}")
    if not 0.0 <= float(p) <= 0.5:
        raise ValidationError(f"preprocessing bias must lie in [0, 1/2], got {p}")
    return theta_a


def _as_state(rho) -> AlmostBellDiagonalState:
    if isinstance(rho, AlmostBellDiagonalState):
        return rho
    raise ValidationError(f"expected an AlmostBellDiagonalState, got {type(rho).__name__}")


def cond_entropy_given_eve(rho, theta_a: float, x: int, p: float) -> float:
    """Entropy of Alice's preprocessed output of input x given the adversary.

    Evaluates the pinched relative entropy on the 8-dimensional
    ancilla-extended operator through numerics.relative_entropy.

    Parameters
    ----------
    rho : AlmostBellDiagonalState
    theta_a : float
        Angle of A_1 in [0, pi]; A_0 is Z.
    x : int
        Which of Alice's inputs generates the bit.
    p : float
        Bitflip bias in [0, 1/2]. The result always lies in
        [h(p), 1], reaching h(p) when the adversary predicts the raw
        bit perfectly.
    """
    state = _as_state(rho)
    theta_a = _check_inputs(theta_a, x, p)
    p = float(p)
    rho_c = np.asarray(state.density_matrix().entries)
    phi = np.array([math.sqrt(1.0 - p), math.sqrt(p)])
    big = np.kron(rho_c, np.outer(phi, phi))
    evec = np.eye(2) if x == 0 else _alice_rotation(theta_a)
    t_diag = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    pinched = np.zeros_like(big)
    for a in (0, 1):
        proj = np.kron(np.kron(np.outer(evec[:, a], evec[:, a]), np.eye(2)), t_diag[0])
        proj += np.kron(
            np.kron(np.outer(evec[:, 1 - a], evec[:, 1 - a]), np.eye(2)), t_diag[1]
        )
        pinched += proj @ big @ proj
    value = relative_entropy(HermitianMatrix(big), HermitianMatrix(pinched))
    return float(min(max(value, 0.0), 1.0))


def two_party_entropy(rho, theta_a: float, theta_b: float, x: int, y: int) -> float:
    """Joint entropy of both parties' outputs of inputs (x, y) given Eve.

    Same pinching identity one dimension down: no preprocessing
    register, and the pinching runs over the four joint measurement
    projectors. Lies in [0, 2] and dominates the one-party entropy of
    the same x at p = 0.
    """
    state = _as_state(rho)
    theta_a = _check_inputs(theta_a, x, 0.0)
    theta_b = float(theta_b)
    if not (math.isfinite(theta_b) and 0.0 <= theta_b <= math.pi + 1e-12):
        raise ValidationError(f"measurement angle {theta_b} outside [0, pi]")
    if y not in (0, 1):
        raise ValidationError(f"input index must be 0 or 1, got {y}")
    rho_c = np.asarray(state.density_matrix().entries)
    obs_a = plane_observable(0.0 if x == 0 else theta_a)
    obs_b = plane_observable(0.0 if y == 0 else theta_b)
    eye = np.eye(2)
    pinched = np.zeros_like(rho_c)
    for sa in (1.0, -1.0):
        for sb in (1.0, -1.0):
            proj = np.kron((eye + sa * obs_a) / 2.0, (eye + sb * obs_b) / 2.0)
            pinched += proj @ rho_c @ proj
    value = relative_entropy(HermitianMatrix(rho_c), HermitianMatrix(pinched))
    return float(min(max(value, 0.0), 2.0))


def _objective_raw(rho_bell: np.ndarray, theta_a: float, rvec, spec: ObjectiveSpec) -> float:
    total = 0.0
    for x, w in enumerate(spec.weights):
        if w:
            total += w * _cond_core(rho_bell, theta_a, x, spec.p)
    gam = _gamma_bell(spec.lambdas, theta_a, rvec)
    return total - float(np.sum(gam * rho_bell))


def objective_value(rho, theta_a: float, direction, spec: ObjectiveSpec) -> float:
    """Weighted entropy sum minus the constraint term Tr[Gamma rho].

    Parameters
    ----------
    rho : AlmostBellDiagonalState
    theta_a : float
        Alice's second-measurement angle in [0, pi].
    direction : float or (r_Z, r_X)
        Bob's second measurement; must be unit length here. The value
        is affine in the direction and convex in the state.
    spec : ObjectiveSpec
    """
    state = _as_state(rho)
    theta_a = _check_inputs(theta_a, 0, spec.p)
    rvec = bob_direction(direction, unit=True)
    return _objective_raw(state.bell_matrix(), theta_a, rvec, spec)


def _log2_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    logs = np.where(w > _CLAMP, np.log2(np.maximum(w, _CLAMP)), 0.0)
    return (v * logs) @ v.T


def _block_min_eig(rho_bell: np.ndarray) -> float:
    low = math.inf
    for j in (0, 2):
        a, d, off = rho_bell[j, j], rho_bell[j + 1, j + 1], rho_bell[j, j + 1]
        low = min(low, (a + d) / 2.0 - math.hypot((a - d) / 2.0, off))
    return low


def _gradient_raw(rho_bell: np.ndarray, theta_a: float, rvec, spec: ObjectiveSpec) -> np.ndarray:
    if _block_min_eig(rho_bell) <= 0.0:
        raise DomainError("state is singular; gradient needs strictly positive blocks")
    p = spec.p
    cross = math.sqrt(p * (1.0 - p))
    total = (spec.weights[0] + spec.weights[1]) * _log2_psd(rho_bell)
    rho_c = BELL_TRANSFORM @ rho_bell @ BELL_TRANSFORM.T
    for x, w in enumerate(spec.weights):
        if not w:
            continue
        m0, m1 = _pinched_blocks(rho_c, theta_a, x, p)
        l0, l1 = _log2_psd(m0), _log2_psd(m1)
        # Partial inner product with the ancilla state, by T-sector.
        gx = np.zeros((4, 4))
        gx[0:2, 0:2] = (1.0 - p) * l0[0:2, 0:2] + p * l1[2:4, 2:4]
        gx[2:4, 2:4] = p * l0[2:4, 2:4] + (1.0 - p) * l1[0:2, 0:2]
        gx[0:2, 2:4] = cross * (l0[0:2, 2:4] + l1[2:4, 0:2])
        gx[2:4, 0:2] = gx[0:2, 2:4].T
        if x == 1:
            ri = np.kron(_alice_rotation(theta_a), np.eye(2))
            gx = ri @ gx @ ri.T
        total -= w * (BELL_TRANSFORM.T @ gx @ BELL_TRANSFORM)
    total -= _gamma_bell(spec.lambdas, theta_a, rvec)
    # Keep only the feasible parameter directions: real two-block pattern.
    out = np.zeros((4, 4))
    out[0:2, 0:2] = total[0:2, 0:2]
    out[2:4, 2:4] = total[2:4, 2:4]
    return (out + out.T) / 2.0


def objective_gradient(rho, angles, spec: ObjectiveSpec) -> HermitianMatrix:
    """Gradient of objective_value in the six state directions.

    Parameters
    ----------
    rho : AlmostBellDiagonalState
        Must have strictly positive blocks (perturb first if needed).
    angles : (theta_a, direction)
        The direction may be non-unit; the constraint term is affine
        in it and its gradient contribution is state-independent.
    spec : ObjectiveSpec

    Returns
    -------
    HermitianMatrix
        4x4 real Bell-basis matrix supported on the two-block pattern;
        its entrywise inner product with a feasible displacement is the
        directional derivative.

    Raises
    ------
    DomainError
        Singular state (a log would diverge).
    """
    state = _as_state(rho)
    if len(angles) != 2:
        raise ValidationError("angles must be (theta_a, direction)")
    theta_a = _check_inputs(angles[0], 0, spec.p)
    rvec = bob_direction(angles[1], unit=False)
    return HermitianMatrix(_gradient_raw(state.bell_matrix(), theta_a, rvec, spec))
