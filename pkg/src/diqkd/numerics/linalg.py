"""Dense hermitian linear algebra on small matrices.

The eigensolver is a cyclic Jacobi iteration with complex rotations. It is
slow compared to LAPACK but has a simple convergence proof and no external
dependencies, which is what this kernel is for; dimensions are capped at 32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from diqkd.errors import DomainError, ValidationError

MAX_DIM = 32
HERMITICITY_TOL = 1e-12
OFFDIAG_TOL = 1e-13
EIG_CLAMP = 1e-14
SUPPORT_TOL = 1e-9
_MAX_SWEEPS = 60


@dataclass(frozen=True)
class HermitianMatrix:
    """A dense hermitian matrix of dimension at most 32.

    Parameters
    ----------
    entries : array_like
        Square complex matrix, row-major. Must equal its conjugate
        transpose entrywise within ``HERMITICITY_TOL`` (relative to the
        largest entry magnitude).
    """

    entries: np.ndarray = field()

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {m.shape}")
        dim = m.shape[0]
        if dim < 1 or dim > MAX_DIM:
            raise ValidationError(f"dimension {dim} outside [1, {MAX_DIM}]")
        scale = max(float(np.abs(m).max()), 1.0)
        dev = float(np.abs(m - m.conj().T).max())
        if dev > HERMITICITY_TOL * scale:
            raise ValidationError(f"matrix is not hermitian: max deviation {dev:.3e}")
        m = (m + m.conj().T) / 2.0
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _as_hermitian_array(m) -> np.ndarray:
    if isinstance(m, HermitianMatrix):
        return np.array(m.entries, dtype=complex)
    return HermitianMatrix(m).entries.copy()


def hermitian_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : HermitianMatrix or array_like
        Hermitian input (validated).

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in ascending order.
    eigenvectors : ndarray
        Unitary matrix whose columns are the matching eigenvectors, so
        that ``V @ diag(w) @ V.conj().T`` reconstructs the input.
    """
    a = _as_hermitian_array(m)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return np.array([a[0, 0].real]), v

    scale = max(float(np.abs(a).max()), 1.0)
    stop = OFFDIAG_TOL * scale
    for _ in range(_MAX_SWEEPS):
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= stop:
                    continue
                # Phase out a[p,q], then a real 2x2 rotation annihilates it.
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                # Column transform coefficients: col_p' = c*col_p - conj(g)*col_q,
                # col_q' = g*col_p + c*col_q with g = s*phase.
                g = s * phase
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - np.conj(g) * col_q
                a[:, q] = g * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - g * row_q
                a[q, :] = np.conj(g) * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vcol_p = v[:, p].copy()
                vcol_q = v[:, q].copy()
                v[:, p] = c * vcol_p - np.conj(g) * vcol_q
                v[:, q] = g * vcol_p + c * vcol_q
        # Rotations regrow previously zeroed entries, so measure the true
        # residual after the sweep rather than trusting visit-time skips.
        off = float(np.abs(a - np.diag(np.diag(a))).max())
        if off <= stop:
            break

    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def von_neumann_entropy(rho) -> float:
    """Entropy -Tr[rho log2 rho] in bits, clamping eigenvalues below 1e-14."""
    w, _ = hermitian_eig(rho)
    total = 0.0
    for lam in w:
        if lam > EIG_CLAMP:
            total -= lam * math.log2(lam)
    return total


def relative_entropy(rho, sigma) -> float:
    """Relative entropy D(rho || sigma) = Tr[rho(log2 rho - log2 sigma)] in bits.

    Parameters
    ----------
    rho : HermitianMatrix or array_like
        Positive semidefinite with unit trace.
    sigma : HermitianMatrix or array_like
        Positive semidefinite; must carry the support of ``rho``.

    Raises
    ------
    DomainError
        If ``rho`` places more than ``SUPPORT_TOL`` weight on the kernel
        of ``sigma``, or either input fails positivity/trace checks.
    """
    r = _as_hermitian_array(rho)
    s = _as_hermitian_array(sigma)
    if r.shape != s.shape:
        raise ValidationError("operands must share a dimension")
    wr, vr = hermitian_eig(r)
    ws, vs = hermitian_eig(s)
    scale = max(float(wr.max()), float(ws.max()), 1.0)
    if wr.min() < -1e-10 * scale or ws.min() < -1e-10 * scale:
        raise DomainError("inputs must be positive semidefinite")
    if abs(float(wr.sum()) - 1.0) > 1e-8:
        raise DomainError(f"rho must have unit trace, got {float(wr.sum()):.12f}")

    # Weight of rho on sigma's kernel decides the support precondition.
    kernel = ws <= EIG_CLAMP
    if kernel.any():
        k_vecs = vs[:, kernel]
        mass = float(np.real(np.einsum("ij,ik,kj->", k_vecs.conj(), r, k_vecs)))
        if mass > SUPPORT_TOL:
            raise DomainError(f"support violation: {mass:.3e} outside support of sigma")

    term_r = 0.0
    for lam in wr:
        if lam > EIG_CLAMP:
            term_r += lam * math.log2(lam)
    # Tr[rho log sigma] = sum_j log(s_j) <v_j| rho |v_j>.
    proj = np.real(np.einsum("ij,ik,kj->j", vs.conj(), r, vs))
    term_s = 0.0
    for lam, m_j in zip(ws, proj):
        lam = max(float(lam), EIG_CLAMP)
        if m_j > 0.0:
            term_s += m_j * math.log2(lam)
    d = term_r - term_s
    if d < 0.0:
        if d < -1e-9:
            raise DomainError(f"relative entropy evaluated to {d:.3e} < 0")
        d = 0.0
    return d
