"""Exact complex 2x2 linear algebra for a spin-1/2.

Pauli operators, axis rotations, density-matrix states, and the
population readout used throughout the package.  The computational
basis is fixed once here: index 0 is the level |0>, index 1 the level
|-1>.  Spin operators are S_k = pauli(k) / 2.

All values are plain numpy arrays of complex128 and are treated as
immutable after construction; every function returns fresh arrays.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "PAULI_LABELS",
    "pauli",
    "axis_rotation",
    "SpinState",
    "population0",
    "phase_equal",
    "phase_distance",
]

PAULI_LABELS = ("I", "X", "Y", "Z")

_PAULI = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(which: str) -> np.ndarray:
    """Return the standard Pauli matrix for label ``which``.

    Parameters
    ----------
    which : str
        One of ``"I"``, ``"X"``, ``"Y"``, ``"Z"``.

    Returns
    -------
    numpy.ndarray
        Fresh 2x2 complex matrix.
    """
    try:
        return _PAULI[which].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli label {which!r}; expected one of {PAULI_LABELS}") from None


def axis_rotation(phi: float, theta: float) -> np.ndarray:
    """Rotation by ``theta`` about the equatorial axis at azimuth ``phi``.

    Implements exp(-i theta (cos(phi) S_x + sin(phi) S_y)) for spin
    operators S_k = sigma_k / 2, i.e. the propagator of a resonant
    constant drive with phase ``phi`` and pulse area ``theta``.

    Parameters
    ----------
    phi : float
        Drive phase in radians; 0 is the X axis, pi/2 the Y axis.
    theta : float
        Rotation angle (pulse area) in radians.

    Returns
    -------
    numpy.ndarray
        Unitary 2x2 complex matrix.
    """
    if not (np.isfinite(phi) and np.isfinite(theta)):
        raise ValueError("axis_rotation requires finite phi and theta")
    axis = np.cos(phi) * _PAULI["X"] + np.sin(phi) * _PAULI["Y"]
    return np.cos(theta / 2) * _PAULI["I"] - 1j * np.sin(theta / 2) * axis


class SpinState:
    """Density matrix of the spin-1/2, basis (|0>, |-1>).

    Parameters
    ----------
    rho : array_like
        2x2 complex density matrix.  Validated on construction:
        Hermitian to 1e-10, unit trace to 1e-10, eigenvalues >= -1e-10.
    """

    __slots__ = ("rho",)

    def __init__(self, rho) -> None:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError(f"SpinState needs a 2x2 matrix, got shape {rho.shape}")
        if not np.all(np.isfinite(rho.view(float))):
            raise ValueError("SpinState entries must be finite")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("SpinState must be Hermitian to 1e-10")
        if abs(rho.trace() - 1.0) > 1e-10:
            raise ValueError("SpinState must have unit trace to 1e-10")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("SpinState must be positive semidefinite to 1e-10")
        self.rho = rho
        self.rho.flags.writeable = False

    @classmethod
    def from_ket(cls, psi) -> "SpinState":
        """Build the pure state |psi><psi| / <psi|psi>."""
        psi = np.asarray(psi, dtype=complex).reshape(2)
        norm = np.vdot(psi, psi).real
        if norm <= 0:
            raise ValueError("zero ket")
        return cls(np.outer(psi, psi.conj()) / norm)

    def evolved(self, unitary: np.ndarray) -> "SpinState":
        """Return U rho U^dagger as a new state."""
        return SpinState(unitary @ self.rho @ unitary.conj().T)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"SpinState({self.rho.tolist()!r})"


def population0(state: SpinState) -> float:
    """Population of the |0> level, Re(rho[0][0]).

    Values within 1e-9 outside [0, 1] are clamped to the boundary;
    anything further out raises ``ValueError``.
    """
    value = state.rho[0, 0].real
    if not -1e-9 <= value <= 1 + 1e-9:
        raise ValueError(f"population0 out of range: {value!r}")
    return min(max(value, 0.0), 1.0)


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over unit phases e^{i alpha} of max-abs entry of (a - e^{i alpha} b).

    The minimizing phase aligns the largest-magnitude entries, which is
    exact for the unitary-vs-unitary comparisons this is used for.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    k = np.argmax(np.abs(b))
    bk = b.flat[k]
    if abs(bk) < 1e-300:
        return float(np.max(np.abs(a - b)))
    phase = a.flat[k] / bk
    mag = abs(phase)
    if mag < 1e-300:
        return float(np.max(np.abs(a - b)))
    phase /= mag
    return float(np.max(np.abs(a - phase * b)))


def phase_equal(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True when ``a`` equals ``b`` up to a global phase, to ``tol``."""
    return phase_distance(a, b) <= tol
