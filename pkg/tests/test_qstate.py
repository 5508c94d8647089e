import math

import numpy as np
import pytest

from b92sim import qstate
from b92sim.errors import InvalidStateError
from b92sim.qstate import (
    DOWN,
    LEFT,
    P_DOWN,
    P_LEFT,
    P_UP,
    PAULI,
    RIGHT,
    UP,
    Projector,
    StateVector,
    basis_states,
    commutator_norm,
    inner,
    measure,
    norm,
    pass_probability,
    states_equal,
)

INV_SQRT2 = 1.0 / math.sqrt(2.0)


def test_basis_state_coefficients():
    up, down, right, left = basis_states()
    assert (up.amp_up, up.amp_down) == (1.0, 0.0)
    assert (down.amp_up, down.amp_down) == (0.0, 1.0)
    assert right.amp_up == pytest.approx(INV_SQRT2, abs=1e-15)
    assert right.amp_down == pytest.approx(INV_SQRT2, abs=1e-15)
    assert left.amp_down == pytest.approx(-INV_SQRT2, abs=1e-15)


def test_orthonormality():
    assert inner(UP, DOWN) == 0
    assert abs(inner(UP, RIGHT)) == pytest.approx(INV_SQRT2, abs=1e-12)
    assert norm(LEFT) == pytest.approx(1.0, abs=1e-12)
    assert abs(inner(RIGHT, LEFT)) < 1e-12
    assert abs(inner(UP, UP) - 1) < 1e-12


def test_state_normalization_enforced():
    with pytest.raises(InvalidStateError):
        StateVector(1.0, 1.0)
    with pytest.raises(InvalidStateError):
        StateVector(0.5, 0.5)


def test_states_equal_up_to_global_phase():
    phased = StateVector(INV_SQRT2 * np.exp(1j * 0.9), INV_SQRT2 * np.exp(1j * 0.9))
    assert states_equal(phased, RIGHT)
    assert not states_equal(UP, DOWN)


def test_projector_validation():
    with pytest.raises(ValueError):
        Projector(np.array([[1, 0], [1, 0]]))  # not Hermitian
    with pytest.raises(ValueError):
        Projector(np.eye(2))  # trace 2
    with pytest.raises(ValueError):
        Projector(0.5 * np.eye(2))  # not idempotent


@pytest.mark.parametrize(
    "psi,proj,expected",
    [
        (UP, P_DOWN, 0.0),
        (RIGHT, P_DOWN, 0.5),
        (UP, P_UP, 1.0),
        (UP, P_LEFT, 0.5),
        (RIGHT, P_LEFT, 0.0),
        (DOWN, P_LEFT, 0.5),
        (DOWN, P_DOWN, 1.0),
    ],
)
def test_pass_probabilities(psi, proj, expected):
    assert pass_probability(psi, proj) == pytest.approx(expected, abs=1e-12)


def test_pass_probability_is_real_in_range():
    rng = np.random.default_rng(7)
    for _ in range(200):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v = v / np.linalg.norm(v)
        psi = StateVector(complex(v[0]), complex(v[1]))
        for p in (P_UP, P_DOWN, P_LEFT):
            val = pass_probability(psi, p)
            assert 0.0 - 1e-12 <= val <= 1.0 + 1e-12


def test_measure_orthogonal_always_fails():
    rng = np.random.default_rng(0)
    for _ in range(200):
        passed, collapsed = measure(UP, P_DOWN, rng)
        assert not passed
        assert states_equal(collapsed, UP)


def test_measure_collapse_on_pass():
    # superposition through P(down): the pass branch lands on |down>
    rng = np.random.default_rng(3)
    seen_pass = False
    for _ in range(100):
        passed, collapsed = measure(RIGHT, P_DOWN, rng)
        if passed:
            seen_pass = True
            assert states_equal(collapsed, DOWN)
        else:
            assert states_equal(collapsed, UP)
        assert abs(norm(collapsed) - 1.0) < 1e-12
    assert seen_pass


def test_measure_born_frequency():
    rng = np.random.default_rng(42)
    n = 100_000
    hits = sum(measure(RIGHT, P_DOWN, rng)[0] for _ in range(n))
    assert hits / n == pytest.approx(0.5, abs=0.01)


def test_measure_repeatability():
    # a pass of P makes an immediate re-measurement of P pass surely
    rng = np.random.default_rng(5)
    repeats = 0
    for _ in range(10_000):
        passed, collapsed = measure(RIGHT, P_DOWN, rng)
        if passed:
            again, _ = measure(collapsed, P_DOWN, rng)
            assert again
            repeats += 1
    assert repeats > 4000


def test_commutator_norms():
    assert commutator_norm(P_UP, P_UP) == 0
    expected = math.sqrt(2.0) / 2.0
    assert commutator_norm(P_UP, qstate.P_RIGHT) == pytest.approx(expected, abs=1e-12)
    assert commutator_norm(P_DOWN, P_LEFT) == pytest.approx(expected, abs=1e-12)


def test_pauli_algebra_exact():
    sigmas = PAULI.all()
    for i in range(3):
        for j in range(3):
            comm = sigmas[i] @ sigmas[j] - sigmas[j] @ sigmas[i]
            expected = sum(
                2j * qstate.LEVI_CIVITA[i, j, k] * sigmas[k] for k in range(3)
            )
            assert np.array_equal(comm, expected)


def test_projector_completeness():
    assert np.allclose(P_UP.matrix + P_DOWN.matrix, np.eye(2), atol=1e-12)
