import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qinstrument import linalg, randmat
from qinstrument.dilation import (
    IndirectModel,
    model_choi,
    model_induced_povm,
    model_instrument,
    model_nonselective_state,
    model_output_distribution,
    model_post_state,
    realize,
)
from qinstrument.errors import DimensionMismatch, ValidationError
from qinstrument.instrument import (
    Instrument,
    apply,
    choi_distance,
    choi_matrix,
    effect,
    induced_povm,
    is_completely_positive,
    luders_instrument,
    nonselective_operation,
)
from qinstrument.povm import outcome_distribution
from qinstrument.quantum import DensityOperator, Observable, pure_state

seeds = st.integers(0, 2**32 - 1)

Z = Observable(np.diag([1.0, -1.0]))
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
ZERO, PLUS = pure_state([1, 0]), pure_state([1, 1])
HALF = DensityOperator(np.eye(2) / 2)


def cnot_model(probe=ZERO):
    return IndirectModel(2, 2, probe, CNOT, Z)


def decoupled_model():
    return IndirectModel(2, 2, ZERO, np.eye(4), Z)


def conjugation_oracle(u, rho, sigma, p):
    """Tr{[I ⊗ P] U(ρ⊗σ)U†} written out with explicit index loops."""
    joint = u @ np.kron(rho, sigma) @ u.conj().T
    weighted = np.kron(np.eye(2), p) @ joint
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                out[i, j] += weighted[2 * i + k, 2 * j + k]
    return out


def trine():
    ks = []
    for k in range(3):
        v = np.array([np.cos(np.pi * k / 3), np.sin(np.pi * k / 3)])
        ks.append(np.sqrt(2 / 3) * np.outer(v, v))
    return Instrument({k: [m] for k, m in enumerate(ks)})


def test_model_validates_coupling():
    with pytest.raises(ValidationError) as err:
        IndirectModel(2, 2, ZERO, 1.1 * np.eye(4), Z)
    assert err.value.reason == "not-unitary"
    with pytest.raises(DimensionMismatch):
        IndirectModel(2, 3, ZERO, np.eye(6), Z)


def test_output_distribution_examples(rng):
    for _ in range(3):
        d = model_output_distribution(decoupled_model(), randmat.density(rng, 2))
        assert dict(d) == pytest.approx({1.0: 1.0, -1.0: 0.0})
    assert dict(model_output_distribution(cnot_model(), PLUS)) == pytest.approx({1.0: 0.5, -1.0: 0.5})
    assert dict(model_output_distribution(cnot_model(), ZERO)) == pytest.approx({1.0: 1.0, -1.0: 0.0})
    with pytest.raises(DimensionMismatch):
        model_output_distribution(cnot_model(), DensityOperator(np.eye(3) / 3))


def test_output_distribution_matches_conjugation_oracle(rng):
    for _ in range(5):
        rho = randmat.density(rng, 2)
        for x, p in Z.spectrum:
            expected = np.trace(conjugation_oracle(CNOT, rho.matrix, ZERO.matrix, p)).real
            assert model_output_distribution(cnot_model(), rho)[x] == pytest.approx(expected, abs=1e-14)


def test_induced_povm_examples():
    assert list(model_induced_povm(decoupled_model()).elements) == [1.0]
    assert np.allclose(model_induced_povm(decoupled_model()).elements[1.0], np.eye(2))
    cnot = model_induced_povm(cnot_model()).elements
    assert np.allclose(cnot[1.0], np.diag([1, 0])) and np.allclose(cnot[-1.0], np.diag([0, 1]))
    noisy = model_induced_povm(cnot_model(HALF)).elements
    assert np.allclose(noisy[1.0], np.eye(2) / 2) and np.allclose(noisy[-1.0], np.eye(2) / 2)


def test_nonselective_examples(rng):
    rho = randmat.density(rng, 2)
    assert np.allclose(model_nonselective_state(decoupled_model(), rho).matrix, rho.matrix)
    assert np.allclose(model_nonselective_state(cnot_model(), PLUS).matrix, np.eye(2) / 2)
    diag = DensityOperator(np.diag([0.3, 0.7]))
    assert np.allclose(model_nonselective_state(cnot_model(), diag).matrix, np.diag([0.3, 0.7]))


def test_post_state_examples(rng):
    assert np.allclose(model_post_state(cnot_model(), 1, PLUS).matrix, np.diag([1, 0]))
    rho = randmat.density(rng, 2)
    assert np.allclose(model_post_state(decoupled_model(), 1, rho).matrix, rho.matrix)
    with pytest.raises(ValidationError) as err:
        model_post_state(cnot_model(), -1, ZERO)
    assert err.value.reason == "zero-probability-outcome"


def test_model_instrument_examples():
    ident = model_instrument(decoupled_model())
    assert ident.labels == (1.0,)
    assert choi_distance(ident[1], choi_matrix(Instrument({0: [np.eye(2)]})[0])) < 1e-12
    lz = luders_instrument(Z)
    cnot = model_instrument(cnot_model())
    for x in lz.labels:
        assert choi_distance(cnot[x], lz[x]) < 1e-9
    noisy = model_instrument(cnot_model(HALF))
    for x, op in noisy:
        assert np.allclose(effect(op), np.eye(2) / 2)
        # each outcome dephases and halves: ρ ↦ diag(ρ)/2
        m = np.array([[0.6, 0.2 - 0.1j], [0.2 + 0.1j, 0.4]])
        assert np.allclose(apply(op, m), np.diag(np.diag(m)) / 2)


def test_model_choi_against_oracle(rng):
    m = cnot_model(HALF)
    for x, p in Z.spectrum:
        expected = np.zeros((4, 4), dtype=complex)
        for i in range(2):
            for j in range(2):
                e = np.zeros((2, 2))
                e[i, j] = 1
                expected[2 * i:2 * i + 2, 2 * j:2 * j + 2] = conjugation_oracle(CNOT, e, HALF.matrix, p)
        assert np.allclose(model_choi(m, x), expected, atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, sd=st.integers(1, 3), pd=st.integers(1, 3), mixed=st.booleans())
def test_consistency_square(seed, sd, pd, mixed):
    rng = np.random.default_rng(seed)
    m = randmat.model(rng, sd, pd, mixed=mixed)
    rho = randmat.density(rng, sd)
    direct = model_output_distribution(m, rho)
    paired = outcome_distribution(model_induced_povm(m), rho)
    ins = model_instrument(m)
    for x in direct:
        assert abs(direct[x] - paired.prob(x)) < 1e-10
        traced = np.trace(apply(ins[x], rho)).real if x in ins.labels else 0.0
        assert abs(direct[x] - traced) < 1e-10
    for _, op in ins:
        assert is_completely_positive(op).is_cp
    whole = apply(nonselective_operation(ins), rho)
    assert np.linalg.norm(model_nonselective_state(m, rho).matrix - whole) < 1e-10


def test_realize_luders():
    m = realize(luders_instrument(Z))
    assert m.probe_dim == 2 and m.is_pure
    lz = luders_instrument(Z)
    back = model_instrument(m)
    assert all(choi_distance(back[x], lz[x]) < 1e-9 for x in lz.labels)
    # slot 0 holds label −1, so the coupling is CNOT with the probe basis swapped
    swap_probe = np.kron(np.eye(2), [[0, 1], [1, 0]])
    for psi in (np.array([1, 0]), np.array([0, 1]), np.array([1, 1j]) / np.sqrt(2)):
        start = np.kron(psi, [1, 0])
        assert np.allclose(m.coupling @ start, swap_probe @ CNOT @ start)


def test_realize_identity_has_trivial_probe(rng):
    m = realize(Instrument({0: [np.eye(3)]}))
    assert m.probe_dim == 1
    u = m.coupling
    assert np.allclose(u, u[0, 0] * np.eye(3)) and abs(u[0, 0]) == pytest.approx(1)


def test_realize_trine():
    ins = trine()
    m = realize(ins)
    assert m.probe_dim == 3
    povm = model_induced_povm(m)
    for x, op in ins:
        assert np.linalg.norm(povm.elements[x] - effect(op)) < 1e-9
    assert induced_povm(model_instrument(m)).labels() == ins.labels


def test_realize_rejects_merging_labels():
    k = np.eye(2) / np.sqrt(2)
    with pytest.raises(ValidationError, match="duplicate-label"):
        realize(Instrument({1.0: [k], 1.0 + 1e-10: [k]}))


def test_realize_is_deterministic(rng):
    ins = randmat.instrument(rng, 3, 3, 2)
    assert np.array_equal(realize(ins).coupling, realize(ins).coupling)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, dim=st.integers(2, 4), n=st.integers(1, 4))
def test_realize_round_trip(seed, dim, n):
    rng = np.random.default_rng(seed)
    ins = randmat.instrument(rng, dim, n, 3)
    m = realize(ins)
    assert m.is_pure
    assert m.probe_dim == sum(len(op) for _, op in ins)
    assert m.meter.eigenvalues == ins.labels
    assert linalg.gram_defect(m.coupling) < 1e-10
    back = model_instrument(m)
    assert back.labels == ins.labels
    for x in ins.labels:
        assert choi_distance(back[x], ins[x]) < 1e-8
