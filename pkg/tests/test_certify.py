import math

import numpy as np
import pytest

from distcert.certify import (
    C_HS,
    Decision,
    InsufficientCopies,
    InsufficientNodes,
    Outcome,
    calibrate_c2,
    hs_certify,
    hs_certify_detailed,
    hs_required_copies,
    padded_dimension,
    public_unitary,
    required_nodes,
    run_algorithm1,
    unitary_digest,
)
from distcert.linalg import DensityMatrix
from distcert.protocol import BudgetViolation, NodeMessage, ProtocolConfig, budget_enforcer
from distcert.randomness import SeededStream, random_density


def copies(rho, n):
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    return [rho] * n


# the single-register tester


def test_required_copies_formula():
    assert hs_required_copies(0.5, 0.1) == math.ceil(C_HS * math.log(10) / 0.25)
    assert hs_required_copies(1.0, 1.0) == 2


def test_identical_states_close(src):
    sigma = np.eye(2) / 2
    assert hs_certify(copies(sigma, 1000), sigma, 0.5, 0.1, src) == Outcome.CLOSE


def test_orthogonal_pure_states_far(src):
    rho, sigma = np.diag([1.0, 0]), np.diag([0, 1.0])
    assert hs_certify(copies(rho, 1000), sigma, 0.5, 0.1, src) == Outcome.FAR


def test_strict_copy_count(src):
    sigma = np.eye(2) / 2
    with pytest.raises(InsufficientCopies) as info:
        hs_certify(copies(sigma, 10), sigma, 0.5, 0.1, src)
    assert info.value.required == hs_required_copies(0.5, 0.1) and info.value.provided == 10
    with pytest.raises(InsufficientCopies):
        hs_certify([], sigma, 0.5, 0.1, src)
    assert hs_certify(copies(sigma, 10), sigma, 0.5, 0.1, src, strict=False) in (Outcome.CLOSE, Outcome.FAR)


def test_large_eps_always_close(src):
    """||rho - sigma||_2 <= sqrt(2) < eps: the estimate cannot exceed eps^2 / 2."""
    rho, sigma = np.diag([1.0, 0]), np.diag([0, 1.0])
    assert hs_certify(copies(rho, 50), sigma, 2.5, 0.5, src) == Outcome.CLOSE


def test_input_validation(src):
    sigma = np.eye(2) / 2
    with pytest.raises(ValueError):
        hs_certify(copies(sigma, 100), np.eye(3) / 3, 0.5, 0.1, src, strict=False)
    with pytest.raises(ValueError):
        hs_certify([DensityMatrix(sigma), DensityMatrix(np.diag([1.0, 0]))], sigma, 0.5, 0.5, src, strict=False)
    with pytest.raises(ValueError):
        hs_certify(copies(sigma, 100), sigma, 0.5, 0.0, src)


@pytest.mark.parametrize("d", [2, 4])
def test_error_rates_flat_sigma(d):
    eps, delta = 0.4, 0.1
    sigma = np.eye(d) / d
    far_rho = np.diag([1.0] + [0.0] * (d - 1))
    n = hs_required_copies(eps, delta)
    errs_close = sum(
        hs_certify(copies(sigma, n), sigma, eps, delta, SeededStream(1, ("c", d, k))) == Outcome.FAR
        for k in range(100)
    )
    errs_far = sum(
        hs_certify(copies(far_rho, n), sigma, eps, delta, SeededStream(1, ("f", d, k))) == Outcome.CLOSE
        for k in range(100)
    )
    assert errs_close <= 10 and errs_far <= 10


def test_non_flat_sigma_path():
    eps, delta = 0.4, 0.1
    sigma = np.diag([0.7, 0.3])
    far = np.diag([0.2, 0.8])  # ||far - sigma||_2 = sqrt(2) * 0.5
    n = hs_required_copies(eps, delta)
    res_close = [hs_certify_detailed(copies(sigma, n), sigma, eps, delta, SeededStream(2, (k,))) for k in range(100)]
    res_far = [hs_certify_detailed(copies(far, n), sigma, eps, delta, SeededStream(3, (k,))) for k in range(100)]
    assert sum(r.outcome == Outcome.FAR for r in res_close) <= 10
    assert sum(r.outcome == Outcome.CLOSE for r in res_far) <= 10
    # the median estimator is centred near the true squared distance
    assert np.median([r.estimate for r in res_far]) == pytest.approx(0.5, abs=0.1)


def test_detailed_fields(src):
    sigma = np.eye(2) / 2
    n = hs_required_copies(0.5, 0.1)
    res = hs_certify_detailed(copies(sigma, n), sigma, 0.5, 0.1, src)
    assert res.threshold == 0.125 and res.copies == n and res.required == n
    assert res.groups == math.ceil(math.log(10))


def test_tester_deterministic():
    sigma = np.diag([0.6, 0.4])
    rho = np.diag([0.5, 0.5])
    a = hs_certify_detailed(copies(rho, 300), sigma, 0.3, 0.2, SeededStream(5, ("x",)), strict=False)
    b = hs_certify_detailed(copies(rho, 300), sigma, 0.3, 0.2, SeededStream(5, ("x",)), strict=False)
    assert a == b


# messages and budgets


def test_budget_enforcer():
    cfg = ProtocolConfig(m=4, d=4, n_c=2, n_q=1)
    ok = NodeMessage(classical="10", quantum=DensityMatrix.maximally_mixed(2))
    assert budget_enforcer(ok, cfg) is ok
    with pytest.raises(BudgetViolation):
        budget_enforcer(NodeMessage(classical="101"), cfg)
    with pytest.raises(BudgetViolation):
        budget_enforcer(NodeMessage(quantum=DensityMatrix.maximally_mixed(4)), cfg)
    with pytest.raises(BudgetViolation):
        budget_enforcer(NodeMessage(quantum=DensityMatrix.maximally_mixed(2)), ProtocolConfig(m=1, d=2, n_q=0))
    with pytest.raises(ValueError):
        NodeMessage(classical="012")


@pytest.mark.parametrize(
    "kwargs",
    [{"m": 0, "d": 2}, {"m": 1, "d": 2, "eps": 0.0}, {"m": 1, "d": 2, "delta": 1.5}, {"m": 1, "d": 2, "R": "shared"}, {"m": 1, "d": 2, "n_c": -1}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ProtocolConfig(**kwargs)


# the distributed protocol


def test_node_requirements():
    m_prime, R = required_nodes(8, 2, 0.5, 0.2)
    assert m_prime == math.ceil(16 * 64 / (2 * 0.25)) and R == math.ceil(8 * math.log(5))
    cfg = ProtocolConfig(m=m_prime * R - 1, d=8, n_q=1, eps=0.5, delta=0.2)
    with pytest.raises(InsufficientNodes):
        run_algorithm1(np.eye(8) / 8, np.eye(8) / 8, cfg)


def test_protocol_rejects_wrong_model():
    with pytest.raises(ValueError):
        run_algorithm1(np.eye(4) / 4, np.eye(4) / 4, ProtocolConfig(m=10**6, d=4, n_c=1, eps=0.5, delta=0.2))
    with pytest.raises(ValueError):
        run_algorithm1(np.eye(2) / 2, np.eye(2) / 2, ProtocolConfig(m=10**6, d=2, n_q=2, eps=0.5, delta=0.2))


def _cfg(d, n_q, eps=0.5, delta=0.2, seed=0):
    dp = padded_dimension(d, 2**n_q)
    m_prime, R = required_nodes(dp, 2**n_q, eps, delta)
    return ProtocolConfig(m=m_prime * R, d=d, n_q=n_q, eps=eps, delta=delta, seed=seed)


def test_protocol_deterministic_and_consistent():
    cfg = _cfg(4, 1, seed=11)
    rho, sigma = random_density(4, SeededStream(1)), np.eye(4) / 4
    a, b = run_algorithm1(rho, sigma, cfg), run_algorithm1(rho, sigma, cfg)
    assert a.to_dict() == b.to_dict()
    diag = a.diagnostics
    assert a.recompute() == a.decision
    assert len(diag["batch_outcomes"]) == diag["R"] == len(diag["unitary_sha256"])
    assert diag["messages_checked"] == diag["R"] * diag["batch_size"]
    assert diag["budget_violations"] == 0
    assert diag["batch_size"] >= diag["m_prime"]


def test_public_coin_digests():
    """Every party re-derives the batch unitary from the shared seed."""
    U = public_unitary(123, 4, 8)
    assert unitary_digest(U) == unitary_digest(public_unitary(123, 4, 8))
    assert unitary_digest(U) != unitary_digest(public_unitary(123, 5, 8))


def test_protocol_decisions():
    cfg = _cfg(4, 1, seed=3)
    sigma = np.eye(4) / 4
    far = np.diag([1.0, 0, 0, 0])
    assert run_algorithm1(sigma, sigma, cfg).decision == Decision.ACCEPT
    assert run_algorithm1(far, sigma, cfg).decision == Decision.REJECT


def test_padding():
    cfg = _cfg(3, 1, seed=4)
    sigma = np.eye(3) / 3
    v = run_algorithm1(sigma, sigma, cfg)
    assert v.diagnostics["padded_dim"] == 4 and v.decision == Decision.ACCEPT
    far = np.diag([1.0, 0, 0])
    assert run_algorithm1(far, sigma, cfg).decision == Decision.REJECT


def test_full_dimension_message():
    """d_q = d: each node forwards its whole state."""
    cfg = _cfg(2, 1, seed=5)
    sigma = np.eye(2) / 2
    v = run_algorithm1(np.diag([1.0, 0]), sigma, cfg)
    assert v.diagnostics["padded_dim"] == 2 and v.decision == Decision.REJECT


def test_calibrate_c2(src):
    res = calibrate_c2([(4, 2)], pairs=2, trials=2000, src=src)
    assert len(res["rows"]) == 2
    assert 0 < res["min_paley_zygmund"] <= res["min_event_frequency"] <= 1
    assert res["C2_direct"] == pytest.approx(1 / res["min_event_frequency"])
