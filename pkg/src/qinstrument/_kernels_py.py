"""Pure-Python (numpy) implementation of the hot kernels.

Must stay call-compatible with ``_kernels.pyx``.  All arrays are
C-contiguous ``complex128`` except offsets (``int64``) and uniforms
(``float64``).
"""
import numpy as np

NAME = "python"

DUST = 1e-12


def kraus_apply(kraus, rho):
    """Return ``Σ_k K_k ρ K_k†`` for a stack ``kraus`` of shape (m, d, d)."""
    out = np.zeros_like(rho)
    for k in kraus:
        out += k @ rho @ k.conj().T
    return out


def choose_outcome(probs, u):
    total = 0.0
    for p in probs:
        total += p
    target = u * total
    acc = 0.0
    last = -1
    for j, p in enumerate(probs):
        if p <= 0.0:
            continue
        last = j
        acc += p
        if target < acc:
            return j
    return last


def sample_outcomes(unitaries, effects, step_offsets, kraus, kraus_offsets, rho0, uniforms):
    """Sample outcome indices for ``uniforms.shape[0]`` trajectories.

    Step ``s`` evolves with ``unitaries[s]``, then picks among the effects
    ``effects[step_offsets[s]:step_offsets[s+1]]`` using ``uniforms[i, s]``
    and applies the chosen outcome's Kraus operators
    ``kraus[kraus_offsets[j]:kraus_offsets[j+1]]`` (``j`` a global outcome
    index).  Returned indices are local to each step.
    """
    n, n_steps = uniforms.shape
    out = np.empty((n, n_steps), dtype=np.int64)
    adj_u = [u.conj().T for u in unitaries]
    for i in range(n):
        rho = rho0
        for s in range(n_steps):
            rho = unitaries[s] @ rho @ adj_u[s]
            lo, hi = step_offsets[s], step_offsets[s + 1]
            probs = np.einsum("kab,ba->k", effects[lo:hi], rho).real
            probs[probs < DUST] = 0.0
            j = choose_outcome(probs, uniforms[i, s])
            g = lo + j
            rho = kraus_apply(kraus[kraus_offsets[g]:kraus_offsets[g + 1]], rho)
            rho = rho / np.trace(rho).real
            out[i, s] = j
    return out
