"""Indirect measurement models and their realization of CP instruments.

A model couples the system (first tensor factor) to a probe (second
factor) through a unitary, then reads a meter observable on the probe.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, ValidationError
from .instrument import (
    PROB_FLOOR,
    ChoiMatrix,
    Instrument,
    _choi_of,
    kraus_from_choi,
)
from .povm import Povm, validate_povm
from .quantum import (
    CLUSTER_TOL,
    DensityOperator,
    Observable,
    OutcomeDistribution,
    canonical_label,
    state_from_unnormalized,
)

UNITARY_TOL = 1e-9
# meter outcomes whose POVM element / operation is this small are dropped
ZERO_ELEMENT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class IndirectModel:
    system_dim: int
    probe_dim: int
    probe_state: DensityOperator
    coupling: np.ndarray
    meter: Observable

    def __post_init__(self):
        n = self.system_dim * self.probe_dim
        u = linalg.as_cmatrix(self.coupling, "coupling")
        if u.shape != (n, n):
            raise DimensionMismatch(f"coupling must be {n}x{n}, got {u.shape}")
        if self.probe_state.dim != self.probe_dim or self.meter.dim != self.probe_dim:
            raise DimensionMismatch("probe state and meter must act on the probe space")
        defect = linalg.frob(u.conj().T @ u - np.eye(n))
        if defect > UNITARY_TOL:
            raise ValidationError("not-unitary", f"‖U†U − I‖ = {defect:.3e}", defect=defect)
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "coupling", u)

    @property
    def is_pure(self) -> bool:
        return np.linalg.matrix_rank(self.probe_state.matrix, tol=1e-9) == 1

    def _meter_projector(self, p):
        return np.kron(np.eye(self.system_dim), p)

    def _joint_state(self, rho):
        u = self.coupling
        return u @ np.kron(rho, self.probe_state.matrix) @ u.conj().T

    def operation_matrix(self, x_projector, rho) -> np.ndarray:
        """``Tr_K{[I ⊗ P] U(ρ ⊗ σ)U†}`` for an arbitrary (not necessarily state) ``ρ``."""
        joint = self._meter_projector(x_projector) @ self._joint_state(rho)
        return linalg.partial_trace(joint, self.system_dim, self.probe_dim, keep="first")


def _check(m: IndirectModel, rho: DensityOperator):
    if rho.dim != m.system_dim:
        raise DimensionMismatch(f"state dimension {rho.dim} vs system dimension {m.system_dim}")


def model_output_distribution(m: IndirectModel, rho: DensityOperator) -> OutcomeDistribution:
    _check(m, rho)
    joint = m._joint_state(rho.matrix)
    return OutcomeDistribution(
        {x: np.trace(m._meter_projector(p) @ joint).real for x, p in m.meter.spectrum}
    )


def model_induced_povm(m: IndirectModel) -> Povm:
    """``Π(x) = Tr_K{U†[I ⊗ P^M(x)]U(I ⊗ σ)}``, zero elements dropped."""
    u = m.coupling
    sigma = np.kron(np.eye(m.system_dim), m.probe_state.matrix)
    elements = {}
    for x, p in m.meter.spectrum:
        e = linalg.partial_trace(
            u.conj().T @ m._meter_projector(p) @ u @ sigma, m.system_dim, m.probe_dim, keep="first"
        )
        e = linalg.hermitize(e)
        if linalg.frob(e) > ZERO_ELEMENT_TOL:
            elements[x] = e
    return validate_povm(elements)


def model_nonselective_state(m: IndirectModel, rho: DensityOperator) -> DensityOperator:
    _check(m, rho)
    out = linalg.partial_trace(m._joint_state(rho.matrix), m.system_dim, m.probe_dim, keep="first")
    return state_from_unnormalized(out)


def model_post_state(m: IndirectModel, x, rho: DensityOperator) -> DensityOperator:
    _check(m, rho)
    proj = dict(m.meter.spectrum).get(canonical_label(x))
    out = None if proj is None else m.operation_matrix(proj, rho.matrix)
    p = 0.0 if out is None else float(np.trace(out).real)
    if p <= PROB_FLOOR:
        raise ValidationError(
            "zero-probability-outcome", f"meter outcome {x!r} has probability {p:.3e}", label=x
        )
    return state_from_unnormalized(out / p)


def model_choi(m: IndirectModel, x) -> np.ndarray:
    """Choi matrix of the model's operation for meter value ``x``."""
    proj = dict(m.meter.spectrum)[canonical_label(x)]
    return linalg.hermitize(_choi_of(lambda e: m.operation_matrix(proj, e), m.system_dim))


def model_instrument(m: IndirectModel) -> Instrument:
    """Instrument of a model, built by Kraus-decomposing each outcome's Choi matrix."""
    ops = {}
    for x, _ in m.meter.spectrum:
        c = model_choi(m, x)
        if linalg.frob(c) <= ZERO_ELEMENT_TOL:
            continue
        ops[x] = kraus_from_choi(ChoiMatrix(m.system_dim, c))
    return Instrument(ops)


def realize(ins: Instrument) -> IndirectModel:
    """Pure indirect model reproducing ``ins``.

    Probe slots are laid out by ascending outcome label, then Kraus order
    within an outcome; the probe starts in slot 0.  The coupling sends
    ``ψ ⊗ e_0`` to ``Σ_{x,k} K_{x,k}ψ ⊗ e_{x,k}`` and is completed to a
    unitary deterministically.  The meter is diagonal with value ``x`` on
    every slot of outcome ``x``.
    """
    d = ins.dim
    labels = sorted(ins.labels)
    slots = [(x, k) for x in labels for k in ins.operations[x].kraus]
    # the meter's clustering threshold scales with its Frobenius norm
    scale = max(1.0, float(np.sqrt(sum(x * x for x, _ in slots))))
    for a, b in zip(labels, labels[1:]):
        if b - a <= CLUSTER_TOL * scale:
            raise ValidationError(
                "duplicate-label", f"labels {a!r} and {b!r} would merge in the meter spectrum"
            )
    n = len(slots)
    # isometry column i is the image of e_i ⊗ e_0
    iso = np.zeros((d * n, d), dtype=np.complex128)
    for s, (_, k) in enumerate(slots):
        iso[s::n, :] = k
    # unity holds only to 1e-9; the polar factor restores an exact isometry
    iso = iso @ np.linalg.inv(linalg.sqrt_psd(iso.conj().T @ iso))
    w = linalg.unitary_completion(iso)
    # place the isometry columns at indices i*n (e_i ⊗ e_0); fill the rest in order
    order = [i * n for i in range(d)] + [c for c in range(d * n) if c % n != 0]
    u = np.empty_like(w)
    u[:, order] = w
    meter = np.diag([x for x, _ in slots]).astype(np.complex128)
    probe = np.zeros((n, n), dtype=np.complex128)
    probe[0, 0] = 1.0
    return IndirectModel(d, n, DensityOperator(probe), u, Observable(meter))
