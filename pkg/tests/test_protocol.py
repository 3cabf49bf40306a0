from __future__ import annotations

import itertools

import numpy as np
import pytest

from conftest import SMALL_GRID, grid_code
from qmds_lab.errors import AccessViolation, AlreadyErased, BadHelperSet, BudgetExceeded, HubNotHelper
from qmds_lab.network import star_h1
from qmds_lab.protocol import (
    Session,
    attempt_with_fewer_helpers,
    encode_logical,
    encode_with_reference,
    erase,
    run_download_return_h1,
    run_download_return_h2,
)
from qmds_lab.qstate import generalized_pauli, reduced_density, schmidt_rank, trace_distance


def test_encode_with_reference_examples(code551, code542):
    ame = encode_with_reference(code542)
    assert ame.state.labels == ("W1", "W2", "W3", "W4")
    assert np.allclose(ame.state.amplitudes, code542.states[0])
    inst = encode_with_reference(code551)
    assert inst.state.size == 5**6
    assert inst.state.is_normalized()
    for i in range(1, 6):
        rho = reduced_density(inst.state, [f"W{i}"])
        assert np.allclose(rho, np.eye(5) / 5, atol=1e-12)
    # the reference is maximally entangled with the code space
    assert np.allclose(reduced_density(inst.state, ["R1"]), np.eye(5) / 5, atol=1e-12)


def test_encode_logical(code551):
    inst = encode_logical(code551, seed=3)
    assert inst.state.labels == tuple(f"W{i}" for i in range(1, 6))
    assert inst.state.is_normalized()
    again = encode_logical(code551, seed=3)
    assert np.array_equal(inst.state.amplitudes, again.state.amplitudes)
    basis = encode_logical(code551, np.eye(5)[2])
    assert np.allclose(basis.state.amplitudes, code551.states[2])


def test_erase_examples(code551):
    inst = encode_with_reference(code551)
    gone = erase(inst, 5)
    assert gone.erased == 5 and "W5" in gone.inaccessible
    assert gone.pending == {"Wh5": 0}
    assert gone.state.norm() == pytest.approx(1.0)
    with pytest.raises(AlreadyErased):
        erase(gone, 4)
    with pytest.raises(BadHelperSet):
        erase(inst, 6)
    session = Session(gone, star_h1(5, (1, 2, 3)), seed=0)
    with pytest.raises(AccessViolation):
        session.local("Wh5", generalized_pauli(5, 1, 0), ["W5"])
    with pytest.raises(AccessViolation):
        session.send("W5", "Wh5", "copy")
    with pytest.raises(AccessViolation):
        session.measure("Wh5", "W1")  # W1 is held by node W1, not the hub


def test_h1_examples(code551, code542):
    res = run_download_return_h1(erase(encode_with_reference(code551), 5), (1, 2, 3), seed=0)
    assert res.passed and res.fidelity >= 1 - 1e-9
    assert res.ec == 6
    assert dict(res.ledger.beta) == {"W1-Wh5": 25, "W2-Wh5": 25, "W3-Wh5": 25}
    res = run_download_return_h1(erase(encode_with_reference(code542), 4), (1, 2), seed=0)
    assert res.passed and res.ec == 4


def test_h2_examples(code551, code542):
    res = run_download_return_h2(erase(encode_with_reference(code551), 5), (1, 2, 3), 1, seed=0)
    assert res.passed and res.ec == 5
    assert dict(res.ledger.beta) == {"W1-W2": 25, "W1-W3": 25, "W1-Wh5": 5}
    res = run_download_return_h2(erase(encode_with_reference(code542), 4), (1, 2), 2, seed=0)
    assert res.passed and res.ec == 3
    quantum = [ev for ev in res.ledger.events if ev.tag == "quantum"]
    assert [(ev.src, ev.dst) for ev in quantum] == [("W1", "W2"), ("W2", "W1"), ("W2", "Wh4")]
    with pytest.raises(HubNotHelper):
        run_download_return_h2(erase(encode_with_reference(code542), 4), (1, 2), 3)


@pytest.mark.parametrize("kind", ["h1", "h2"])
def test_every_measurement_branch_restores_the_state(code551, kind):
    inst = erase(encode_with_reference(code551), 2)
    for eps in range(5):
        if kind == "h1":
            res = run_download_return_h1(inst, (1, 4, 5), seed=eps, outcome=eps)
        else:
            res = run_download_return_h2(inst, (1, 4, 5), 4, seed=eps, outcome=eps)
        assert res.outcomes["measure"][0][1] == (eps,)
        assert res.fidelity == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("qnt", SMALL_GRID)
def test_exhaustive_small_grid(qnt):
    code = grid_code(*qnt)
    base = encode_with_reference(code)
    for e in range(1, code.n + 1):
        inst = erase(base, e)
        others = [i for i in range(1, code.n + 1) if i != e]
        for helpers in itertools.combinations(others, code.t):
            r1 = run_download_return_h1(inst, helpers, seed=e)
            assert r1.passed and r1.ec == 2 * code.t
            for hub in helpers:
                r2 = run_download_return_h2(inst, helpers, hub, seed=e)
                assert r2.passed and r2.ec == 2 * code.t - 1


def test_logical_state_repair():
    code = grid_code(7, 6, 3)
    inst = erase(encode_logical(code, seed=5), 2)
    res = run_download_return_h1(inst, (1, 3, 6), seed=1)
    assert res.passed and res.ec == 6


def test_determinism(code551):
    inst = erase(encode_with_reference(code551), 3)
    a = run_download_return_h2(inst, (1, 2, 5), 2, seed=42)
    b = run_download_return_h2(inst, (1, 2, 5), 2, seed=42)
    assert a.trace == b.trace
    assert a.ledger.events == b.ledger.events
    assert np.array_equal(a.state.amplitudes, b.state.amplitudes)
    assert a.outcomes == b.outcomes
    outcomes = {str(run_download_return_h1(inst, (1, 2, 5), seed=s).outcomes) for s in range(5)}
    assert len(outcomes) > 1


def test_reference_untouched(code551):
    inst = erase(encode_with_reference(code551), 1)
    before = reduced_density(inst.state, ["R1"])
    for seed in range(3):
        res = run_download_return_h1(inst, (2, 3, 4), seed=seed)
        after = reduced_density(res.state, ["R1"])
        assert trace_distance(before, after) < 1e-9


def test_budget(code551):
    inst = erase(encode_with_reference(code551), 5)
    with pytest.raises(BudgetExceeded):
        run_download_return_h1(inst, (1, 2, 3), seed=0, cap=1)
    assert run_download_return_h1(inst, (1, 2, 3), seed=0, cap=2).passed
    with pytest.raises(BudgetExceeded):
        run_download_return_h2(inst, (1, 2, 3), 1, seed=0, cap=1)
    assert run_download_return_h2(inst, (1, 2, 3), 1, seed=0, cap=2).passed


def test_bad_helper_counts(code551):
    inst = erase(encode_with_reference(code551), 5)
    with pytest.raises(BadHelperSet):
        run_download_return_h1(inst, (1, 2), seed=0)
    with pytest.raises(BadHelperSet):
        run_download_return_h1(encode_with_reference(code551), (1, 2, 3), seed=0)


def test_trace_format(code551):
    inst = erase(encode_with_reference(code551), 5)
    res = run_download_return_h1(inst, (1, 2, 3), seed=7)
    lines = res.trace.splitlines()
    assert lines[0] == "qmds-trace v1"
    assert lines[1] == "Q=5 n=5 t=3 e=5 T=1,2,3 topology=h1 hub=- seed=7"
    assert lines[2].startswith("step 1 ")
    assert any(l.startswith("edge=W1-Wh5 dir=W1→Wh5 dim=5 tag=quantum") for l in lines)
    assert sum(" tag=classical" in l for l in lines) == 12
    assert lines[-1] == f"fidelity={res.fidelity:.17g} ec=6"


def test_local_operations_do_not_raise_rank(code551):
    # LOCC monotonicity: a hub-local unitary keeps sr(hub | rest), a measurement cannot raise it
    inst = erase(encode_with_reference(code551), 5)
    s = Session(inst, star_h1(5, (1, 2, 3)), seed=0)
    copies = ["Wh5:W1", "Wh5:W2"]
    for j, name in zip((1, 2), copies):
        s.send(f"W{j}", "Wh5", name)
    before = schmidt_rank(s.state, copies)
    rng = np.random.default_rng(0)
    z = rng.normal(size=(25, 25)) + 1j * rng.normal(size=(25, 25))
    s.local("Wh5", np.linalg.qr(z)[0], copies)
    assert schmidt_rank(s.state, copies) == before == 25
    s.measure("Wh5", copies[0])
    assert schmidt_rank(s.state, copies) <= before


@pytest.mark.parametrize("qnt,helpers,expected", [((5, 5, 3), (1, 2), (25, 125)), ((5, 4, 2), (1,), (5, 25))])
def test_fewer_helpers_examples(qnt, helpers, expected):
    code = grid_code(*qnt)
    inst = erase(encode_with_reference(code), code.n)
    cert = attempt_with_fewer_helpers(inst, helpers)
    assert (cert.sr_in, cert.sr_required) == expected
    assert cert.violated
    text = cert.export()
    assert f"sr_in={expected[0]} sr_out={expected[1]}" in text
    assert attempt_with_fewer_helpers(inst, tuple(range(1, code.t + 1))) is None
    with pytest.raises(BadHelperSet):
        attempt_with_fewer_helpers(inst, (code.n,))


def test_fewer_helpers_from_logical_state():
    code = grid_code(5, 5, 3)
    inst = erase(encode_logical(code, seed=0), 1)
    cert = attempt_with_fewer_helpers(inst, (2, 4))
    assert (cert.sr_in, cert.sr_required) == (25, 125)
