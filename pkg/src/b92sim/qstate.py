"""Two-level quantum states, projectors, and Born-rule measurement.

Everything here is exact 2x2 complex algebra in the spin-z basis
{|up>, |down>}. Randomness for measurement collapse comes from an
injected numpy Generator; this module never owns global RNG state,
so every experiment built on it is reproducible from its seeds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError

ATOL = 1e-12


@dataclass(frozen=True)
class StateVector:
    """Unit vector of two complex amplitudes in the spin-z basis."""

    amp_up: complex
    amp_down: complex

    def __post_init__(self):
        n = abs(self.amp_up) ** 2 + abs(self.amp_down) ** 2
        if abs(n - 1.0) > 1e-9:
            raise InvalidStateError(f"state norm^2 = {n!r}, expected 1")

    def vec(self) -> np.ndarray:
        return np.array([self.amp_up, self.amp_down], dtype=complex)


def inner(a: StateVector, b: StateVector) -> complex:
    """Hermitian inner product <a|b>."""
    return complex(np.vdot(a.vec(), b.vec()))


def norm(a: StateVector) -> float:
    return float(np.linalg.norm(a.vec()))


def states_equal(a: StateVector, b: StateVector, atol: float = ATOL) -> bool:
    """Equality up to an unobservable global phase: |<a|b>| = 1."""
    return abs(abs(inner(a, b)) - 1.0) <= atol


def _state_from_vec(v: np.ndarray) -> StateVector:
    return StateVector(complex(v[0]), complex(v[1]))


class Projector:
    """Rank-1 Hermitian idempotent on the two-dimensional space."""

    def __init__(self, matrix: np.ndarray):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"projector must be 2x2, got {m.shape}")
        if not np.allclose(m, m.conj().T, atol=ATOL):
            raise ValueError("projector is not Hermitian")
        if not np.allclose(m @ m, m, atol=ATOL):
            raise ValueError("projector is not idempotent")
        if abs(np.trace(m) - 1.0) > ATOL:
            raise ValueError("projector is not rank-1 (trace != 1)")
        self.matrix = m
        self.matrix.setflags(write=False)

    @classmethod
    def onto(cls, state: StateVector) -> "Projector":
        """|s><s| for a normalized state."""
        v = state.vec()
        return cls(np.outer(v, v.conj()))

    def __repr__(self):
        return f"Projector({self.matrix.tolist()})"


@dataclass(frozen=True)
class PauliSet:
    """The three spin operators plus the Levi-Civita coefficient tying
    them together via [sigma_i, sigma_j] = 2i eps_ijk sigma_k."""

    sigma1: np.ndarray
    sigma2: np.ndarray
    sigma3: np.ndarray

    def all(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.sigma1, self.sigma2, self.sigma3)


def _levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


LEVI_CIVITA = _levi_civita()
LEVI_CIVITA.setflags(write=False)

PAULI = PauliSet(
    sigma1=np.array([[0, 1], [1, 0]], dtype=complex),
    sigma2=np.array([[0, -1j], [1j, 0]], dtype=complex),
    sigma3=np.array([[1, 0], [0, -1]], dtype=complex),
)
for _m in PAULI.all():
    _m.setflags(write=False)

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def basis_states() -> tuple[StateVector, StateVector, StateVector, StateVector]:
    """The four working states: spin-z up/down and spin-x up/down.

    Returns (up, down, right, left) with right = (up + down)/sqrt(2)
    and left = (up - down)/sqrt(2).
    """
    up = StateVector(1.0, 0.0)
    down = StateVector(0.0, 1.0)
    right = StateVector(_INV_SQRT2, _INV_SQRT2)
    left = StateVector(_INV_SQRT2, -_INV_SQRT2)
    return up, down, right, left


UP, DOWN, RIGHT, LEFT = basis_states()
P_UP = Projector.onto(UP)
P_DOWN = Projector.onto(DOWN)
P_RIGHT = Projector.onto(RIGHT)
P_LEFT = Projector.onto(LEFT)


def pass_probability(psi: StateVector, p: Projector) -> float:
    """Born-rule probability <psi|P|psi> that ``psi`` passes ``p``."""
    v = psi.vec()
    n = float(np.real(np.vdot(v, v)))
    if abs(n - 1.0) > 1e-9:
        raise InvalidStateError(f"state norm^2 = {n!r}, expected 1")
    val = np.vdot(v, p.matrix @ v)
    return float(np.real(val))


def measure(
    psi: StateVector, p: Projector, rng: np.random.Generator
) -> tuple[bool, StateVector]:
    """Sample one projective measurement of ``p`` on ``psi``.

    Returns (passed, collapsed). On a pass the state collapses to
    P|psi>/||P|psi>||, on a fail to (1-P)|psi>/||(1-P)|psi>||; the
    collapsed state is normalized either way.
    """
    prob = pass_probability(psi, p)
    passed = bool(rng.random() < prob)
    v = psi.vec()
    if passed:
        w = p.matrix @ v
    else:
        w = v - p.matrix @ v
    wn = np.linalg.norm(w)
    # the sampled branch always has nonzero weight: a zero-probability
    # branch is never drawn because random() lies in [0, 1)
    assert wn > 1e-9, "degenerate collapse on a sampled branch"
    return passed, _state_from_vec(w / wn)


def commutator_norm(p1: Projector, p2: Projector) -> float:
    """Frobenius norm of [p1, p2]; zero iff the measurements commute."""
    c = p1.matrix @ p2.matrix - p2.matrix @ p1.matrix
    return float(np.linalg.norm(c))
