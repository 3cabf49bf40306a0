from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SMALL_GRID, grid_code
from qmds_lab.errors import BudgetExceeded, NotUnitary, ParameterViolation
from qmds_lab.qmds import (
    QmdsCode,
    derive_small_code,
    extract_helper_unitary,
    format_descriptor,
    gram_matrix,
    load_descriptor,
    make_code,
    parse_descriptor,
    pauli_expectations,
    verify_distance,
    verify_marginals,
)
from qmds_lab.qstate import generalized_pauli, partial_inner, reduced_density


def _apply_local(tensor: np.ndarray, op: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, tensor, axes=([1], [axis])), 0, axis)


def _pauli_oracle(code: QmdsCode, subset, xs, zs, i, j) -> complex:
    """<phi_i| X^xs Z^zs |phi_j> by applying single-qudit Paulis to the full tensor."""
    q, n = code.q, code.n
    t = code.states[j].reshape((q,) * n).astype(complex)
    for pos, a, b in zip(subset, xs, zs):
        t = _apply_local(t, generalized_pauli(q, a, b), pos)
    return complex(np.vdot(code.states[i], t.reshape(-1)))


def test_code_examples():
    c = grid_code(5, 5, 3)
    assert (c.k, c.K, c.design_distance, c.name()) == (1, 5, 3, "[[5,1]]_5")
    assert c.states.shape == (5, 5**5)
    ame = grid_code(5, 4, 2)
    assert (ame.k, ame.K, ame.design_distance) == (0, 1, 3)
    assert np.allclose(gram_matrix(c), np.eye(5))
    # each code state is a uniform superposition over Q**(n-t) basis words
    assert np.count_nonzero(c.states[0]) == 25
    assert np.allclose(c.states[0][c.states[0] != 0], 1 / 5)
    with pytest.raises(ParameterViolation):
        make_code(5, 5, 2)
    with pytest.raises(ParameterViolation):
        make_code(4, 4, 2)


@pytest.mark.parametrize("qnt", SMALL_GRID)
def test_gram_is_identity(qnt):
    code = grid_code(*qnt)
    assert np.max(np.abs(gram_matrix(code) - np.eye(code.K))) < 1e-12


def test_pauli_expectations_match_direct_application():
    code = grid_code(5, 5, 3)
    rng = np.random.default_rng(0)
    for subset in [(0,), (1, 3), (2, 4)]:
        e = pauli_expectations(code.states, 5, 5, list(subset))
        w = len(subset)
        for _ in range(15):
            xs = tuple(int(v) for v in rng.integers(0, 5, w))
            zs = tuple(int(v) for v in rng.integers(0, 5, w))
            i, j = (int(v) for v in rng.integers(0, 5, 2))
            a = int(np.ravel_multi_index(xs, (5,) * w))
            b = int(np.ravel_multi_index(zs, (5,) * w))
            assert abs(e[i, j, a, b] - _pauli_oracle(code, subset, xs, zs, i, j)) < 1e-12


def test_ame_brute_force_pauli_oracle():
    # every non-identity Pauli of weight <= 2 has zero expectation on the [[4,0]]_5 state
    code = grid_code(5, 4, 2)
    worst = 0.0
    for w in (1, 2):
        for subset in itertools.combinations(range(4), w):
            for xs in itertools.product(range(5), repeat=w):
                for zs in itertools.product(range(5), repeat=w):
                    if not any(xs) and not any(zs):
                        continue
                    worst = max(worst, abs(_pauli_oracle(code, subset, xs, zs, 0, 0)))
    assert worst < 1e-12
    rep = verify_distance(code)
    assert rep.ok and rep.distance == 3


@pytest.mark.parametrize("qnt", SMALL_GRID)
def test_distance_equals_design(qnt):
    code = grid_code(*qnt)
    rep = verify_distance(code)
    assert rep.ok
    assert rep.distance == code.n - code.t + 1
    assert 2 * (rep.distance - 1) == code.n - code.k
    assert rep.checks > 0


def test_distance_witness_for_product_state():
    q, n = 5, 4
    states = np.zeros((1, q**n))
    states[0, 0] = 1.0
    bad = QmdsCode(q, n, 2, states)
    rep = verify_distance(bad)
    assert not rep.ok and rep.distance == 1
    wit = rep.witness
    assert len(wit["subset"]) == 1 and wit["x_powers"] == (0,)
    assert wit["z_powers"][0] != 0
    assert abs(wit["value"] - 1) < 1e-12 and wit["expected"] == 0
    with pytest.raises(NotUnitary):
        extract_helper_unitary(bad, (1, 2))
    dev, where = verify_marginals(bad)
    assert dev > 0.5 and where[0] == 0


def test_distance_budget():
    fake = QmdsCode(11, 3, 2, np.zeros((11, 11**3)))
    with pytest.raises(BudgetExceeded):
        verify_distance(fake)


@pytest.mark.parametrize("qnt", SMALL_GRID)
def test_marginals_maximally_mixed(qnt):
    dev, _ = verify_marginals(grid_code(*qnt))
    assert dev < 1e-12


def _reference_state(code: QmdsCode):
    from qmds_lab.protocol import encode_with_reference

    return encode_with_reference(code).state


@pytest.mark.parametrize("qnt", [(5, 5, 3), (5, 4, 3)])
def test_erasure_recoverability_matches_distance(qnt):
    # Any n - t nodes carry no information: rho_{R,A} = rho_R (x) I / Q**|A|.
    code = grid_code(*qnt)
    phi = _reference_state(code)
    refs = [f"R{i}" for i in range(1, code.k + 1)]
    rho_r = reduced_density(phi, refs)
    for a in itertools.combinations(range(1, code.n + 1), code.n - code.t):
        names = refs + [f"W{i}" for i in a]
        rho = reduced_density(phi, names)
        target = np.kron(rho_r, np.eye(code.q ** len(a)) / code.q ** len(a))
        assert np.max(np.abs(rho - target)) < 1e-12


@pytest.mark.parametrize("qnt", SMALL_GRID)
def test_every_helper_set_gives_a_unitary(qnt):
    code = grid_code(*qnt)
    for helpers in itertools.combinations(range(1, code.n + 1), code.t):
        hu = extract_helper_unitary(code, helpers)
        u = hu.dense()
        assert u.shape == (code.q**code.t,) * 2
        assert np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-12)
        assert hu.residual < 1e-12


def test_helper_unitary_columns_against_projection():
    # U_T |s>|r> = sqrt(Q**(n-t)) <r|_{complement} |phi_s>
    code = grid_code(5, 5, 3)
    helpers = (4, 1, 3)
    hu = extract_helper_unitary(code, helpers)
    assert hu.complement == (2, 5)
    for s in range(code.K):
        for r in itertools.product(range(5), repeat=2):
            res, w = partial_inner(code.state(s), list(r), ["W2", "W5"])
            ref = res.permuted(["W4", "W1", "W3"]).amplitudes * 5
            col = hu.column(s * 25 + r[0] * 5 + r[1])
            assert np.allclose(col, ref, atol=1e-12)
            assert w == pytest.approx(1 / 25)
    assert extract_helper_unitary(code, helpers) is hu
    with pytest.raises(ParameterViolation):
        extract_helper_unitary(code, (1, 2))
    with pytest.raises(ParameterViolation):
        extract_helper_unitary(code, (1, 2, 3), complement=(4, 4))


@pytest.mark.parametrize("qnt", SMALL_GRID)
def test_derived_code_has_distance_two(qnt):
    code = grid_code(*qnt)
    for helpers in itertools.combinations(range(1, code.n + 1), code.t):
        small = derive_small_code(code, helpers)
        assert (small.n, small.k, small.K) == (code.t + 1, code.t - 1, code.q ** (code.t - 1))
        assert small.parent == (code, helpers)
        assert np.allclose(gram_matrix(small), np.eye(small.K), atol=1e-12)
        rep = verify_distance(small)
        assert rep.ok and rep.distance == 2
        dev, _ = verify_marginals(small, 1)
        assert dev < 1e-12


def test_descriptor_round_trip():
    code = make_code(7, 6, 4, points=(1, 2, 3, 4, 5, 6), multipliers=(1, 3, 1, 2, 1, 1))
    text = format_descriptor(code)
    assert text == "qmds v1; Q=7; n=6; t=4; points=1,2,3,4,5,6; multipliers=1,3,1,2,1,1\n"
    d = parse_descriptor(text)
    assert (d["q"], d["n"], d["t"]) == (7, 6, 4)
    back = load_descriptor(text)
    assert np.array_equal(back.states, code.states)
    with pytest.raises(ValueError):
        parse_descriptor("qmds v2; Q=5")


@settings(max_examples=10, deadline=None)
@given(st.permutations(range(5)), st.lists(st.integers(1, 4), min_size=5, max_size=5))
def test_any_grs_data_gives_a_qmds_code(points, mults):
    code = make_code(5, 5, 3, points=tuple(points), multipliers=tuple(mults))
    assert np.allclose(gram_matrix(code), np.eye(5))
    rep = verify_distance(code)
    assert rep.ok and rep.distance == 3


def test_construction_is_deterministic():
    a = make_code(5, 5, 3)
    b = make_code(5, 5, 3)
    assert np.array_equal(a.states, b.states)
    assert math.isclose(float(np.sum(a.states**2)), 5.0)
