import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qinstrument import randmat
from qinstrument.errors import DimensionMismatch, ValidationError
from qinstrument.quantum import (
    DensityOperator,
    Observable,
    OutcomeDistribution,
    born_distribution,
    canonical_label,
    evolve,
    make_density,
    mean_and_std,
    mix,
    pure_state,
    robertson_gap,
    spectral_measure,
)

seeds = st.integers(0, 2**32 - 1)

Z = Observable(np.diag([1.0, -1.0]))
X = Observable([[0, 1], [1, 0]])
Y = Observable([[0, -1j], [1j, 0]])
ZERO, ONE = pure_state([1, 0]), pure_state([0, 1])
PLUS, MINUS = pure_state([1, 1]), pure_state([1, -1])


def test_make_density_examples():
    assert make_density(np.eye(2) / 2).dim == 2
    make_density(np.diag([0.75, 0.25]))
    with pytest.raises(ValidationError) as err:
        make_density(np.diag([1.2, -0.2]))
    assert err.value.reason == "not-PSD"


@pytest.mark.parametrize(
    "matrix, reason",
    [
        ([[0.5, 0.5], [0.0, 0.5]], "not-Hermitian"),
        (np.diag([0.5, 0.4]), "trace-not-one"),
        (np.diag([1.5, -0.5]), "not-PSD"),
    ],
)
def test_make_density_names_failed_invariant(matrix, reason):
    with pytest.raises(ValidationError) as err:
        make_density(matrix)
    assert err.value.reason == reason


def test_density_operator_is_immutable():
    rho = make_density(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0


def test_pure_state_examples():
    assert np.allclose(pure_state([1, 0]).matrix, np.diag([1, 0]))
    assert np.allclose(PLUS.matrix, np.full((2, 2), 0.5))
    assert np.allclose(pure_state([2, 0]).matrix, np.diag([1, 0]))
    assert np.linalg.matrix_rank(pure_state([1, 1j, 2]).matrix) == 1
    with pytest.raises(ValidationError):
        pure_state([0, 0])


def test_spectral_measure_examples():
    z = spectral_measure(Z)
    assert set(z) == {1.0, -1.0}
    assert np.allclose(z[1.0], np.diag([1, 0])) and np.allclose(z[-1.0], np.diag([0, 1]))
    eye = spectral_measure(Observable(np.eye(2)))
    assert list(eye) == [1.0] and np.allclose(eye[1.0], np.eye(2))
    a = spectral_measure(Observable(np.diag([2.0, 2.0, 5.0])))
    # oracle: sum the rank-one projectors of the equal eigenvalues
    e = np.eye(3)
    assert np.allclose(a[2.0], np.outer(e[0], e[0]) + np.outer(e[1], e[1]))
    assert np.allclose(a[5.0], np.outer(e[2], e[2]))


def test_degenerate_cluster_merges_near_equal_eigenvalues():
    a = Observable(np.diag([1.0, 1.0 + 1e-12, 3.0]))
    assert a.eigenvalues == (1.0, 3.0)
    assert np.trace(spectral_measure(a)[1.0]).real == pytest.approx(2.0)


def test_labels_are_canonical():
    assert canonical_label(0.9999999999999998) == 1.0
    assert math.copysign(1.0, canonical_label(-0.0)) == 1.0
    assert X.eigenvalues == (-1.0, 1.0)


def test_born_distribution_examples():
    assert dict(born_distribution(Z, ZERO)) == {1.0: 1.0, -1.0: 0.0}
    d = born_distribution(Z, PLUS)
    assert d[1.0] == pytest.approx(0.5) and d[-1.0] == pytest.approx(0.5)
    a = Observable(np.diag([2.0, 2.0, 5.0]))
    rho = DensityOperator(np.diag([0.2, 0.3, 0.5]))
    d = born_distribution(a, rho)
    assert d[2.0] == pytest.approx(0.2 + 0.3, abs=1e-15) and d[5.0] == pytest.approx(0.5)
    with pytest.raises(DimensionMismatch):
        born_distribution(a, PLUS)


def test_mean_and_std_examples():
    assert mean_and_std(Z, ZERO) == pytest.approx((1.0, 0.0))
    assert mean_and_std(Z, DensityOperator(np.eye(2) / 2)) == pytest.approx((0.0, 1.0))
    # ⟨Z⟩ = 0.75 − 0.25, ⟨Z²⟩ = 1
    assert mean_and_std(Z, DensityOperator(np.diag([0.75, 0.25]))) == pytest.approx(
        (0.5, math.sqrt(1 - 0.25))
    )


def test_robertson_examples(rng):
    lhs, rhs = robertson_gap(Z, Z, randmat.density(rng, 2))
    assert rhs == 0.0 and lhs >= 0.0
    # [X, Z] = −2iY and ⟨Y⟩ = 0 on |0⟩
    assert robertson_gap(X, Z, ZERO)[1] == pytest.approx(0.0, abs=1e-15)
    # [X, Y] = 2iZ, σ(X) = σ(Y) = 1 on |0⟩
    assert robertson_gap(X, Y, ZERO) == pytest.approx((1.0, 1.0))


@settings(max_examples=50, deadline=None)
@given(seed=seeds, dim=st.integers(2, 8))
def test_robertson_inequality(seed, dim):
    rng = np.random.default_rng(seed)
    lhs, rhs = robertson_gap(randmat.observable(rng, dim), randmat.observable(rng, dim),
                             randmat.density(rng, dim))
    assert lhs >= rhs - 1e-9


def test_evolve_examples(rng):
    rho = randmat.density(rng, 3)
    assert np.allclose(evolve(rho, Observable(np.zeros((3, 3))), 4.0).matrix, rho.matrix)
    out = evolve(PLUS, Z, np.pi / 2, 1.0)
    assert np.allclose(out.matrix, MINUS.matrix, atol=1e-12)
    h = randmat.observable(rng, 3)
    _, proj = h.spectrum[0]
    eigenstate = DensityOperator(proj / np.trace(proj).real)
    assert np.linalg.norm(evolve(eigenstate, h, 1.7).matrix - eigenstate.matrix) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=seeds, dim=st.integers(1, 6), tau=st.floats(-5, 5))
def test_evolve_preserves_spectrum(seed, dim, tau):
    rng = np.random.default_rng(seed)
    rho, h = randmat.density(rng, dim), randmat.observable(rng, dim)
    out = evolve(rho, h, tau, hbar=0.8)
    assert abs(np.trace(out.matrix) - 1) < 1e-10
    assert np.allclose(np.linalg.eigvalsh(out.matrix), np.linalg.eigvalsh(rho.matrix), atol=1e-10)


def test_mix_examples(rng):
    r1, r2 = randmat.density(rng, 2), randmat.density(rng, 2)
    assert np.allclose(mix(r1, r2, 1.0).matrix, r1.matrix)
    assert np.allclose(mix(ZERO, ONE, 0.5).matrix, np.eye(2) / 2)
    out = mix(ZERO, DensityOperator(np.eye(2) / 2), 0.25)
    assert np.allclose(out.matrix, np.diag([0.25 + 0.375, 0.375]))
    with pytest.raises(ValidationError):
        mix(r1, r2, 1.5)
    with pytest.raises(DimensionMismatch):
        mix(r1, randmat.density(rng, 3), 0.5)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, dim=st.integers(1, 16), p=st.floats(0, 1))
def test_born_is_affine_and_normalized(seed, dim, p):
    rng = np.random.default_rng(seed)
    a = randmat.observable(rng, dim)
    r1, r2 = randmat.density(rng, dim), randmat.density(rng, dim)
    d1, d2, dm = born_distribution(a, r1), born_distribution(a, r2), born_distribution(a, mix(r1, r2, p))
    assert abs(sum(dm.values()) - 1) < 1e-9
    for x in dm:
        assert abs(dm[x] - (p * d1[x] + (1 - p) * d2[x])) < 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=seeds, dim=st.integers(1, 8))
def test_spectral_projectors_orthogonal(seed, dim):
    a = randmat.observable(np.random.default_rng(seed), dim)
    projs = [p for _, p in a.spectrum]
    for i, p in enumerate(projs):
        for j, q in enumerate(projs):
            expected = p if i == j else np.zeros_like(p)
            assert np.linalg.norm(p @ q - expected) < 1e-9
    assert np.linalg.norm(sum(projs) - np.eye(dim)) < 1e-9
    assert np.linalg.norm(sum(x * p for x, p in a.spectrum) - a.matrix) < 1e-9


def test_outcome_distribution_clamps_and_rejects():
    d = OutcomeDistribution({0: 1.0 + 5e-13, 1: -5e-13})
    assert d[1] == 0.0 and d[0] == 1.0
    assert d.prob(7) == 0.0
    with pytest.raises(ValidationError, match="sum-not-one"):
        OutcomeDistribution({0: 0.5, 1: 0.4})
    with pytest.raises(ValidationError, match="probability-out-of-range"):
        OutcomeDistribution({0: 1.1, 1: -0.1})
