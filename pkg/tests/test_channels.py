import json

import numpy as np
import pytest

from distcert.channels import (
    ChannelBundle,
    KrausChannel,
    channel_from_json,
    channel_to_json,
    choi_to_kraus,
    compression_apply,
    compression_channel,
    depolarizing_channel,
    identity_channel,
    is_mixedness_preserving,
    kadison_schwarz_probe,
    kraus_to_liouville,
    liouville_to_choi,
    mixture,
    norm_bound_check,
    random_mixedness_preserving,
    replacement_channel,
    unitary_channel,
)
from distcert.linalg import Bipartition, DimensionError, partial_trace, schatten_norm
from distcert.randomness import SeededStream, ginibre, haar_unitary, random_density

from conftest import rand_complex


def liouville_by_columns(ch: ChannelBundle):
    """Oracle: column (i,j) of M is vec(Phi(|i><j|))."""
    d = ch.d_in
    cols = []
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d))
            E[i, j] = 1
            cols.append(ch.kraus.apply(E).reshape(-1))
    return np.stack(cols, axis=1)


def test_compression_fixes_maximally_mixed(src):
    for d, dA in [(4, 2), (8, 2), (6, 3), (8, 8)]:
        ch = compression_channel(haar_unitary(d, src), Bipartition.of(d, dA))
        assert np.abs(ch.apply(np.eye(d) / d) - np.eye(dA) / dA).max() < 1e-10


def test_compression_identity_is_partial_trace(src):
    part = Bipartition(2, 3)
    rho = random_density(6, src)
    ch = compression_channel(np.eye(6), part)
    assert np.abs(ch.apply(rho) - partial_trace(rho, part)).max() < 1e-14


def test_compression_trace_preserving(src):
    part = Bipartition(2, 4)
    for _ in range(50):
        U, rho = haar_unitary(8, src), random_density(8, src)
        out = compression_channel(U, part).apply(rho)
        assert abs(np.trace(out) - 1) < 1e-12
        assert np.abs(out - compression_apply(U, rho, part)).max() < 1e-13


def test_compression_rejects_nonunitary():
    with pytest.raises(ValueError):
        compression_channel(np.diag([1, 1, 1, 1.001]), Bipartition(2, 2))
    with pytest.raises(DimensionError):
        compression_channel(np.eye(4), Bipartition(2, 3))


def test_kraus_shape_and_tp_checks():
    with pytest.raises(DimensionError):
        KrausChannel(2, 2, (np.eye(3),))
    with pytest.raises(ValueError):
        KrausChannel(2, 2, (0.5 * np.eye(2),))


def test_identity_liouville():
    assert np.abs(identity_channel(3).liouville.mat - np.eye(9)).max() < 1e-15


def test_depolarizing_liouville_norm():
    ch = depolarizing_channel(4, 2)
    # rank-one: M = vec(1_2/2) vec(1_4)^dagger
    oracle = np.outer(np.eye(2).reshape(-1) / 2, np.eye(4).reshape(-1))
    assert np.abs(ch.liouville.mat - oracle).max() < 1e-15
    assert ch.norm_2 == pytest.approx(np.sqrt(2))


def test_liouville_defining_identity(src):
    ch = random_mixedness_preserving(6, 3, src)
    rng = np.random.default_rng(0)
    M = ch.liouville.mat
    assert np.abs(M - liouville_by_columns(ch)).max() < 1e-12
    for _ in range(20):
        X = rand_complex(rng, 6, 6)
        assert np.linalg.norm(ch.apply(X).reshape(-1) - M @ X.reshape(-1)) < 1e-10


def test_representations_agree(src):
    rng = np.random.default_rng(1)
    for d, dq in [(4, 2), (6, 2), (8, 4)]:
        ch = random_mixedness_preserving(d, dq, src)
        for _ in range(20):
            X = rand_complex(rng, d, d)
            ref = ch.kraus.apply(X)
            assert np.abs(ch.liouville.apply(X) - ref).max() < 1e-9
            assert np.abs(ch.choi.apply(X) - ref).max() < 1e-9


def test_roundtrip_kraus_liouville_choi_kraus(src):
    ch = compression_channel(haar_unitary(8, src), Bipartition(2, 4))
    back = choi_to_kraus(liouville_to_choi(kraus_to_liouville(ch.kraus)))
    rho = random_density(8, src)
    assert np.abs(back.apply(rho) - ch.apply(rho)).max() < 1e-9
    assert len(back.kraus) <= 4


def test_choi_facts(src):
    part = Bipartition(2, 4)
    ch = compression_channel(haar_unitary(8, src), part)
    J = ch.choi.mat
    assert np.abs(partial_trace(J, Bipartition(8, 2), keep="A") - np.eye(8)).max() < 1e-9
    assert abs(np.trace(J) - 8) < 1e-9
    assert np.linalg.eigvalsh(J).min() > -1e-9


def test_from_choi(src):
    ch = random_mixedness_preserving(4, 2, src)
    ch2 = ChannelBundle.from_choi(ch.choi.mat, 4, 2)
    X = random_density(4, src)
    assert np.abs(ch2.apply(X) - ch.apply(X)).max() < 1e-9


def test_mixedness_preservation_flags(src):
    assert is_mixedness_preserving(compression_channel(haar_unitary(4, src), Bipartition(2, 2)))
    assert not is_mixedness_preserving(replacement_channel(4, 2))
    assert is_mixedness_preserving(depolarizing_channel(4, 2))
    assert is_mixedness_preserving(unitary_channel(haar_unitary(3, src)))


def test_norm_bounds_equality_cases():
    rep = norm_bound_check(identity_channel(5))
    assert rep.norm_2 == pytest.approx(5) and rep.bound_2 == pytest.approx(5)
    assert rep.norm_inf == pytest.approx(1) and rep.passed
    rep = norm_bound_check(depolarizing_channel(4, 2))
    assert rep.norm_2 == pytest.approx(np.sqrt(2)) and rep.bound_2 == pytest.approx(np.sqrt(8))
    assert rep.norm_inf == pytest.approx(np.sqrt(2)) and rep.bound_inf == pytest.approx(np.sqrt(2))
    assert rep.passed


def test_norm_bounds_random_compressions(src):
    part = Bipartition(2, 4)
    for _ in range(100):
        ch = compression_channel(haar_unitary(8, src), part)
        rep = norm_bound_check(ch)
        assert rep.passed and rep.mixedness_preserving
        # oracle: norms from a full SVD of the Liouville matrix
        s = np.linalg.svd(ch.liouville.mat, compute_uv=False)
        assert rep.norm_inf == pytest.approx(s.max(), rel=1e-9)


def test_norm_report_advisory_for_replacement():
    rep = norm_bound_check(replacement_channel(4, 2))
    assert not rep.mixedness_preserving


@pytest.mark.parametrize("d,dq", [(2, 2), (4, 2), (4, 4), (6, 3), (8, 2)])
def test_random_generator_is_mixedness_preserving(d, dq):
    for k in range(20):
        ch = random_mixedness_preserving(d, dq, SeededStream(3, (d, dq, k)))
        assert ch.d_in == d and ch.d_out == dq
        assert is_mixedness_preserving(ch)


def test_generator_needs_divisor(src):
    with pytest.raises(DimensionError):
        random_mixedness_preserving(6, 4, src)


def test_mixture_weights(src):
    a = compression_channel(haar_unitary(4, src), Bipartition(2, 2))
    b = depolarizing_channel(4, 2)
    ch = mixture([a, b], [0.3, 0.7])
    X = random_density(4, src)
    assert np.abs(ch.apply(X) - 0.3 * a.apply(X) - 0.7 * b.apply(X)).max() < 1e-12
    with pytest.raises(ValueError):
        mixture([a, b], [0.5, 0.6])


def test_kadison_schwarz(src):
    for k in range(100):
        s = SeededStream(8, (k,))
        ch = random_mixedness_preserving(6, 3, s)
        assert kadison_schwarz_probe(ch, ginibre(3, s)) >= -1e-9


def test_adjoint_is_unital(src):
    ch = random_mixedness_preserving(8, 2, src)
    # the adjoint of a trace-preserving map is unital
    assert np.abs(ch.apply_adjoint(np.eye(2)) - np.eye(8)).max() < 1e-12
    X, Y = ginibre(8, src), ginibre(2, src)
    assert abs(np.trace(Y.conj().T @ ch.apply(X)) - np.trace(ch.apply_adjoint(Y).conj().T @ X)) < 1e-10


def test_data_processing(src):
    for _ in range(30):
        ch = random_mixedness_preserving(6, 2, src)
        rho, sigma = random_density(6, src), random_density(6, src)
        assert schatten_norm(ch.apply(rho) - ch.apply(sigma), 1) <= schatten_norm(rho - sigma, 1) + 1e-9


def test_json_roundtrip(src):
    ch = random_mixedness_preserving(4, 2, src)
    obj = json.loads(json.dumps(channel_to_json(ch)))
    back = channel_from_json(obj)
    X = random_density(4, src)
    assert np.array_equal(back.apply(X), ch.apply(X))
