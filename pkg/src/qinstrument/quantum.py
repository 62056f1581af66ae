"""States, observables, Born statistics and unitary evolution."""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionMismatch, ValidationError

TRACE_TOL = 1e-9
SUM_TOL = 1e-9
PROB_DUST = 1e-12
# relative eigenvalue gap below which spectral clusters merge
CLUSTER_TOL = 1e-8
LABEL_DIGITS = 12


def canonical_label(x) -> float:
    """Snap an outcome label to 12 significant digits.

    Removes floating-point dust from eigenvalues (``0.9999999999999998`` ->
    ``1.0``) and maps ``-0.0`` to ``0.0``, so labels can be compared with
    exact equality afterwards.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError("bad-label", f"outcome label must be finite, got {x}")
    return float(f"{x:.{LABEL_DIGITS}g}") + 0.0


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated quantum state.  Construction checks every invariant."""

    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.require_hermitian(self.matrix, "density matrix")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(
                "trace-not-one", f"trace is {tr:.12g}, defect {abs(tr - 1.0):.3e}",
                defect=abs(tr - 1.0),
            )
        lo = linalg.min_eigenvalue(m)
        if lo < -linalg.PSD_TOL * max(1.0, linalg.frob(m)):
            raise ValidationError("not-PSD", f"minimum eigenvalue {lo:.3e}", defect=-lo)
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def make_density(m) -> DensityOperator:
    return DensityOperator(m)


def state_from_unnormalized(m) -> DensityOperator:
    """Hermitize and renormalize a PSD operator produced by a CP map."""
    m = linalg.hermitize(np.asarray(m, dtype=np.complex128))
    return DensityOperator(m / np.trace(m).real)


def pure_state(psi) -> DensityOperator:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    norm2 = float(np.vdot(psi, psi).real)
    if norm2 <= 0.0:
        raise ValidationError("zero-vector", "pure_state needs a nonzero vector")
    return DensityOperator(np.outer(psi, psi.conj()) / norm2)


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim) / dim)


def _cluster_spectrum(m):
    eig = linalg.eig_hermitian(m)
    w, v = eig.eigenvalues, eig.eigenvectors
    gap = CLUSTER_TOL * max(1.0, linalg.frob(m))
    groups = [[0]]
    for k in range(1, len(w)):
        if w[k] - w[k - 1] <= gap:
            groups[-1].append(k)
        else:
            groups.append([k])
    spectrum = []
    for g in groups:
        label = canonical_label(np.mean(w[g]))
        cols = v[:, g]
        spectrum.append((label, _frozen(cols @ cols.conj().T)))
    return tuple(spectrum)


@dataclass(frozen=True, eq=False)
class Observable:
    """Self-adjoint operator with its clustered spectral decomposition.

    ``spectrum`` is a tuple of ``(eigenvalue, projector)`` pairs ordered by
    eigenvalue.  Nearly-equal eigenvalues are merged and labelled by their
    mean, snapped with :func:`canonical_label`.
    """

    matrix: np.ndarray
    spectrum: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = linalg.require_hermitian(self.matrix, "observable")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "spectrum", _cluster_spectrum(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> tuple:
        return tuple(x for x, _ in self.spectrum)

    @property
    def is_degenerate(self) -> bool:
        return any(np.trace(p).real > 1.5 for _, p in self.spectrum)


def make_observable(m) -> Observable:
    return Observable(m)


class OutcomeDistribution(Mapping):
    """Finite map from outcome label to probability.

    Raw values must lie in ``[-1e-12, 1 + 1e-12]`` and sum to one within
    ``1e-9``.  Stored values are clamped (dust below ``1e-12`` becomes 0)
    and renormalized.  Labels absent from the map have probability zero;
    use :meth:`prob` for that lookup.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        raw = {k: float(v) for k, v in dict(entries).items()}
        for k, p in raw.items():
            if not (-PROB_DUST <= p <= 1.0 + PROB_DUST):
                raise ValidationError(
                    "probability-out-of-range", f"P({k}) = {p:.3e}", label=k
                )
        total = sum(raw.values())
        if abs(total - 1.0) > SUM_TOL:
            raise ValidationError(
                "sum-not-one", f"probabilities sum to {total:.12g}", defect=abs(total - 1.0)
            )
        clamped = {k: (0.0 if p < PROB_DUST else min(p, 1.0)) for k, p in raw.items()}
        s = sum(clamped.values())
        self._entries = {k: p / s for k, p in clamped.items()}

    def __getitem__(self, key):
        return self._entries[key]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def prob(self, key) -> float:
        return self._entries.get(key, 0.0)

    def __repr__(self):
        return f"{type(self).__name__}({self._entries!r})"


def _check_dims(*objs):
    dims = {o.dim for o in objs}
    if len(dims) != 1:
        raise DimensionMismatch(f"incompatible dimensions {sorted(dims)}")


def spectral_measure(a: Observable) -> dict:
    return {x: p for x, p in a.spectrum}


def born_distribution(a: Observable, rho: DensityOperator) -> OutcomeDistribution:
    _check_dims(a, rho)
    return OutcomeDistribution(
        {x: np.trace(p @ rho.matrix).real for x, p in a.spectrum}
    )


def expectation(a, rho: DensityOperator) -> float:
    m = a.matrix if isinstance(a, Observable) else np.asarray(a)
    return float(np.trace(m @ rho.matrix).real)


def mean_and_std(a: Observable, rho: DensityOperator) -> tuple[float, float]:
    _check_dims(a, rho)
    mean = expectation(a, rho)
    second = expectation(a.matrix @ a.matrix, rho)
    return mean, math.sqrt(max(0.0, second - mean * mean))


def robertson_gap(a: Observable, b: Observable, rho: DensityOperator) -> tuple[float, float]:
    """Both sides of Robertson's inequality: ``(σ(A)σ(B), |⟨[A,B]⟩|/2)``."""
    _check_dims(a, b, rho)
    _, sa = mean_and_std(a, rho)
    _, sb = mean_and_std(b, rho)
    comm = a.matrix @ b.matrix - b.matrix @ a.matrix
    return sa * sb, abs(np.trace(comm @ rho.matrix)) / 2.0


def evolve(rho: DensityOperator, h: Observable, tau: float, hbar: float = 1.0) -> DensityOperator:
    _check_dims(rho, h)
    u = linalg.evolution_unitary(h.matrix, tau, hbar)
    return DensityOperator(linalg.hermitize(u @ rho.matrix @ u.conj().T))


def mix(rho1: DensityOperator, rho2: DensityOperator, p: float) -> DensityOperator:
    if not 0.0 <= p <= 1.0:
        raise ValidationError("bad-weight", f"mixing weight must lie in [0, 1], got {p}")
    _check_dims(rho1, rho2)
    return DensityOperator(p * rho1.matrix + (1.0 - p) * rho2.matrix)
