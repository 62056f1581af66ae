"""Probability operator-valued measures."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, ValidationError
from .quantum import (
    DensityOperator,
    Observable,
    OutcomeDistribution,
    _frozen,
    canonical_label,
)

UNITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Povm:
    dim: int
    elements: dict

    def __iter__(self):
        return iter(self.elements.items())

    def labels(self):
        return tuple(self.elements)


def validate_povm(elements) -> Povm:
    """Check positivity and unity and return a :class:`Povm`.

    Labels are canonicalized; two keys collapsing onto the same label is an
    error rather than a silent merge.
    """
    checked = {}
    dim = None
    for label, e in dict(elements).items():
        x = canonical_label(label)
        if x in checked:
            raise ValidationError("duplicate-label", f"label {label!r} collides with {x!r}", label=x)
        try:
            m = linalg.require_hermitian(e, f"POVM element {x!r}")
        except ValidationError as exc:
            exc.label = x
            raise
        if dim is None:
            dim = m.shape[0]
        elif m.shape[0] != dim:
            raise DimensionMismatch(f"POVM element {x!r} has dimension {m.shape[0]}, expected {dim}")
        if not linalg.is_psd(m):
            raise ValidationError(
                "not-PSD", f"POVM element {x!r} has a negative eigenvalue", label=x,
                defect=-linalg.min_eigenvalue(m),
            )
        checked[x] = _frozen(m)
    if not checked:
        raise ValidationError("unity-violation", "a POVM needs at least one element")
    defect = linalg.frob(sum(checked.values()) - np.eye(dim))
    if defect > UNITY_TOL:
        raise ValidationError(
            "unity-violation", f"‖Σ Π(x) − I‖ = {defect:.3e}", defect=defect
        )
    return Povm(dim, checked)


def _pair(e, rho: DensityOperator) -> float:
    # Tr(Eρ) as an elementwise product: avoids forming E @ ρ
    return float(np.einsum("ij,ji->", e, rho.matrix).real)


def outcome_distribution(p: Povm, rho: DensityOperator) -> OutcomeDistribution:
    if p.dim != rho.dim:
        raise DimensionMismatch(f"POVM dimension {p.dim} vs state dimension {rho.dim}")
    return OutcomeDistribution({x: _pair(e, rho) for x, e in p})


def spectral_povm(a: Observable) -> Povm:
    return Povm(a.dim, {x: proj for x, proj in a.spectrum})


def event_probability(p: Povm, labels, rho: DensityOperator) -> float:
    if p.dim != rho.dim:
        raise DimensionMismatch(f"POVM dimension {p.dim} vs state dimension {rho.dim}")
    wanted = {canonical_label(x) for x in labels}
    return sum(_pair(e, rho) for x, e in p if x in wanted)
