"""Named two-spin states: the singlet, the triplet-sector basis, vector kets
and the states Alice holds after Bob's measurement."""

from __future__ import annotations

import numpy as np

from .core import check_sign, spin_eigenstate, tensor, unit_vector

_R2 = 1.0 / np.sqrt(2.0)


def singlet() -> np.ndarray:
    """(|+z>|-z> - |-z>|+z>) / sqrt(2)."""
    return np.array([0.0, _R2, -_R2, 0.0], dtype=complex)


def triplet_basis() -> dict[str, np.ndarray]:
    """The kets |X>, |Y>, |Z> spanning the complement of the singlet.

    Each is (sigma_a (x) 1)|Psi0> for a = x, y, z, which makes
    |-beta, n>|beta, n> = (|n> - beta |Psi0>) / sqrt(2) hold up to phase for
    every direction n. Assigning i(e1 + e4)/sqrt(2) to X and
    (e1 - e4)/sqrt(2) to Y instead would break that identity off the z axis.
    """
    return {
        "X": np.array([-_R2, 0, 0, _R2], dtype=complex),
        "Y": np.array([1j * _R2, 0, 0, 1j * _R2], dtype=complex),
        "Z": np.array([0, _R2, _R2, 0], dtype=complex),
    }


def named_states() -> dict[str, np.ndarray]:
    return {"Psi0": singlet(), **triplet_basis()}


_XYZ = np.stack(list(triplet_basis().values()))


def vector_ket(n) -> np.ndarray:
    """|n> = n_x |X> + n_y |Y> + n_z |Z>, so that <m|n> = m . n."""
    return unit_vector(n) @ _XYZ


def raw_vector_ket(v) -> np.ndarray:
    """Same linear map as :func:`vector_ket` without the unit-norm check."""
    return np.asarray(v, dtype=float) @ _XYZ


def singlet_in_basis(n) -> np.ndarray:
    """The singlet written with eigenstates of n . sigma."""
    up, down = spin_eigenstate(n, 1), spin_eigenstate(n, -1)
    return _R2 * (tensor(up, down) - tensor(down, up))


def bob_post_state(n, beta: int) -> np.ndarray:
    """|-beta, n> (x) |beta, n>: Alice's two particles after Bob finds beta."""
    beta = check_sign(beta)
    return tensor(spin_eigenstate(n, -beta), spin_eigenstate(n, beta))


def bob_post_state_expanded(n, beta: int) -> np.ndarray:
    """(|n> - beta |Psi0>) / sqrt(2); equals :func:`bob_post_state` up to phase."""
    beta = check_sign(beta)
    return _R2 * (vector_ket(n) - beta * singlet())
