"""Random matrices, states and instruments for testing and benchmarks."""
import numpy as np

from .dilation import IndirectModel
from .instrument import Instrument, Operation
from .povm import validate_povm
from .quantum import DensityOperator, Observable


def ginibre(rng, rows, cols=None):
    cols = rows if cols is None else cols
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def unitary(rng, dim):
    q, r = np.linalg.qr(ginibre(rng, dim))
    d = np.diag(r)
    return q * (d / np.abs(d))


def hermitian(rng, dim, scale=1.0):
    g = ginibre(rng, dim)
    return scale * (g + g.conj().T) / 2


def density(rng, dim, rank=None):
    g = ginibre(rng, dim, rank or dim)
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)


def pure(rng, dim):
    return density(rng, dim, rank=1)


def observable(rng, dim):
    return Observable(hermitian(rng, dim))


def _normalize_stack(stack):
    # K_j <- K_j S^{-1/2} with S = Σ K†K, so that Σ K_j† K_j = I exactly
    s = np.einsum("kba,kbc->ac", stack.conj(), stack)
    w, v = np.linalg.eigh(s)
    return stack @ ((v / np.sqrt(w)) @ v.conj().T)


def instrument(rng, dim, n_outcomes=None, max_kraus=3, labels=None):
    n_outcomes = n_outcomes or int(rng.integers(1, 5))
    counts = [int(rng.integers(1, max_kraus + 1)) for _ in range(n_outcomes)]
    stack = _normalize_stack(np.stack([ginibre(rng, dim) for _ in range(sum(counts))]))
    if labels is None:
        labels = sorted(rng.choice(np.arange(-8, 9), size=n_outcomes, replace=False).tolist())
    ops, pos = {}, 0
    for x, c in zip(labels, counts):
        ops[x] = Operation(stack[pos:pos + c])
        pos += c
    return Instrument(ops)


def povm(rng, dim, n_outcomes=3):
    stack = _normalize_stack(np.stack([ginibre(rng, dim) for _ in range(n_outcomes)]))
    return validate_povm({x: k.conj().T @ k for x, k in enumerate(stack)})


def model(rng, system_dim, probe_dim, mixed=True, meter_values=None):
    sigma = density(rng, probe_dim) if mixed else pure(rng, probe_dim)
    if meter_values is None:
        meter_values = rng.integers(-2, 3, size=probe_dim)
    meter = Observable(np.diag(np.asarray(meter_values, dtype=float)))
    u = unitary(rng, system_dim * probe_dim)
    return IndirectModel(system_dim, probe_dim, sigma, u, meter)
