from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abelca.engine import (
    Configuration, check_dual_identity, is_weakly_p_fermat, spacetime, spacetime_by_powers, step,
)
from abelca.ring import LaurentPoly, PolyMatrix

from conftest import spec
from test_ring import matrices


def test_configuration_normalizes():
    c = Configuration({0: (2, 1), 3: (0, 0)}, 2, 2)
    assert c.cells == {0: (0, 1)}
    assert c.shift(2)[2] == (0, 1)
    with pytest.raises(ValueError):
        Configuration({0: (1,)}, 2, 2)


def test_step_is_linear():
    T = spec("theta").automaton()
    a = Configuration({0: (1, 0), 2: (1, 1)}, 2, 2)
    b = Configuration({1: (0, 1), 2: (1, 0)}, 2, 2)
    assert step(a + b, T) == step(a, T) + step(b, T)
    assert step(a.shift(3), T) == step(a, T).shift(3)


@pytest.mark.parametrize("name", ["theta", "theta_u", "theta_k4", "tf4", "rule90", "shift"])
def test_dense_simulation_matches_matrix_powers(name):
    s = spec(name)
    T, xi = s.automaton(), s.initial()
    diag = spacetime(T, xi, 12)
    for y, row in enumerate(spacetime_by_powers(T, xi, 12)):
        assert diag.row(y) == row


@given(T=matrices(4, 2), xi=st.tuples(st.integers(0, 3), st.integers(0, 3)))
@settings(max_examples=20, deadline=None)
def test_dense_simulation_matches_stepping(T, xi):
    diag = spacetime(T, xi, 6)
    c = Configuration.delta(xi, 4)
    for y in range(7):
        assert diag.row(y) == c
        c = step(c, T)


def test_rule90_is_pascal_mod_two():
    s = spec("rule90")
    diag = spacetime(s.automaton(), s.initial(), 31)
    for y in range(32):
        for x in range(-y, y + 1):
            want = comb(y, (x + y) // 2) % 2 if (x + y) % 2 == 0 else 0
            assert diag.value(x, y) == (want,)


def test_zero_initial_state_stays_zero():
    T = spec("theta").automaton()
    assert not spacetime(T, (0, 0), 5).nonzero().any()


def test_simulate_zero_steps_is_one_row():
    T = spec("theta").automaton()
    diag = spacetime(T, (1, 0), 0)
    assert diag.cells.shape == (1, 1, 2)


def test_dual_identity_theta():
    rep = check_dual_identity(spec("theta").automaton(), 6)
    assert rep.ok and len(rep.per_n) == 7


def test_dual_identity_reports_unsupported_rings():
    rep = check_dual_identity(spec("theta_k4").automaton(), 2)
    assert not rep.supported and "characteristic" in rep.reason
    rep = check_dual_identity(spec("rule90").automaton(), 2)
    assert not rep.supported


def _fermat_oracle(T, xi, p, horizon):
    rows = spacetime_by_powers(T, xi, horizon)
    for n in range(horizon // p + 1):
        big = set(rows[n * p].cells)
        small = {p * x for x in rows[n].cells}
        if big != small:
            return n
    return None


@pytest.mark.parametrize("name,horizon", [("theta", 8), ("rule90", 16), ("theta_u", 8), ("shift", 8)])
def test_fermat_matches_oracle(name, horizon):
    s = spec(name)
    T, xi = s.automaton(), s.initial()
    v = is_weakly_p_fermat(T, xi, 2, horizon)
    n = _fermat_oracle(T, xi, 2, horizon)
    assert (v.violation is None) == (n is None)
    if n is not None:
        assert v.violation[1] == n


def test_fermat_needs_a_full_period():
    with pytest.raises(ValueError):
        is_weakly_p_fermat(spec("theta").automaton(), (1, 0), 3, 2)


def test_shift_has_a_trivial_spacetime():
    T = PolyMatrix([[LaurentPoly.mono(1, 1, 2)]], 2)
    diag = spacetime(T, (1,), 5)
    assert [tuple(np.nonzero(diag.nonzero()[y])[0] + diag.x0) for y in range(6)] == [(y,) for y in range(6)]
