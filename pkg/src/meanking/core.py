"""Small complex linear algebra for one- and two-spin states.

Two-particle amplitudes are ordered as the Kronecker product of the
single-spin basis (|+z>, |-z>):

    index 0: |+z>|+z>,  1: |+z>|-z>,  2: |-z>|+z>,  3: |-z>|-z>

States and operators are plain numpy arrays (complex128).
"""

from __future__ import annotations

import numpy as np

from .errors import NonHermitian, NonUnitVector

# tolerances shared by every module
TOL_STATE = 1e-12
TOL_OPERATOR = 1e-10
TOL_INPUT = 1e-9

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

IDENTITY4 = np.eye(4, dtype=complex)


def unit_vector(n, tol: float = TOL_INPUT) -> np.ndarray:
    """Validate a real 3-vector as unit length and return it renormalized.

    Raises NonUnitVector if the norm is off by more than ``tol`` or the
    entries are not finite.
    """
    v = np.asarray(n, dtype=float)
    if v.shape != (3,):
        raise NonUnitVector(f"expected a real 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonUnitVector(f"non-finite direction {v.tolist()}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise NonUnitVector(f"|n| = {norm!r} is not 1 within {tol}")
    return v / norm


def check_sign(beta) -> int:
    if beta not in (1, -1):
        raise ValueError(f"outcome sign must be +1 or -1, got {beta!r}")
    return int(beta)


def tensor(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def spin_operator(n) -> np.ndarray:
    """n . sigma for a real 3-vector n."""
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


def spin_eigenstate(n, beta: int) -> np.ndarray:
    """Eigenvector of n . sigma with eigenvalue ``beta``.

    Bloch-angle convention, with n = (sin t cos p, sin t sin p, cos t):

        |+1, n> = (cos(t/2), e^{ip} sin(t/2))
        |-1, n> = (-e^{-ip} sin(t/2), cos(t/2))

    At the poles p is taken as 0. The half-angle terms are formed without
    arccos so that directions close to +-z stay accurate.
    """
    x, y, z = unit_vector(n)
    beta = check_sign(beta)
    rho = np.hypot(x, y)
    if z >= 0:
        c = np.sqrt((1.0 + z) / 2.0)
        # e^{ip} sin(t/2) = (x + iy) / (2 cos(t/2))
        es = complex(x, y) / (2.0 * c)
    else:
        s = np.sqrt((1.0 - z) / 2.0)
        c = rho / (2.0 * s)
        es = complex(x, y) / rho * s if rho > 0 else complex(s)
    if beta == 1:
        return np.array([c, es], dtype=complex)
    return np.array([-np.conj(es), c], dtype=complex)


def is_hermitian(op, tol: float = TOL_STATE) -> bool:
    op = np.asarray(op)
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol)


def _require_hermitian(op) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise NonHermitian(f"operator must be square, got shape {op.shape}")
    if not is_hermitian(op):
        raise NonHermitian("operator is not Hermitian within 1e-12")
    return op


def expectation(op, psi) -> float:
    """Real expectation value <psi|op|psi> of a Hermitian operator."""
    op = _require_hermitian(op)
    psi = np.asarray(psi, dtype=complex)
    value = np.vdot(psi, op @ psi)
    if abs(value.imag) > TOL_STATE * max(1.0, abs(value.real)):
        raise NonHermitian(f"expectation has imaginary part {value.imag!r}")
    return float(value.real)


def min_eigenvalue(op) -> float:
    op = _require_hermitian(op)
    return float(np.linalg.eigvalsh(op)[0])


def eigenvalues(op) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian operator."""
    return np.linalg.eigvalsh(_require_hermitian(op))


def overlap(a, b) -> complex:
    """<a|b>."""
    return complex(np.vdot(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)))


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())
