"""Completely positive instruments in Kraus form.

Conventions
-----------
Vectorization is column-stacking: ``vec(A X B) = (Bᵀ ⊗ A) vec(X)``.  A
superoperator ``S`` acts as ``vec(S(X)) = action @ vec(X)``.  The Choi
matrix of ``S`` is ``Σ_ij E_ij ⊗ S(E_ij)``, so its ``(i, j)`` block is
``S(E_ij)``; with this layout a Kraus operator ``K`` contributes the rank-one
term ``vec(K) vec(K)†``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend, linalg
from .errors import DimensionMismatch, ValidationError
from .povm import Povm, validate_povm
from .quantum import (
    DensityOperator,
    Observable,
    OutcomeDistribution,
    canonical_label,
    state_from_unnormalized,
)

UNITY_TOL = 1e-9
PROB_FLOOR = 1e-12
# Choi eigenvalues at or below this fraction of the largest are dropped
KRAUS_RANK_TOL = 1e-10
CP_TOL = 1e-9


def _kraus_stack(kraus) -> np.ndarray:
    mats = [linalg.as_cmatrix(k, "Kraus operator") for k in kraus]
    if not mats:
        raise ValidationError("empty-kraus", "an operation needs at least one Kraus operator")
    d = mats[0].shape[0]
    for k in mats:
        if k.shape != (d, d):
            raise DimensionMismatch(f"Kraus operators must all be {d}x{d}, got {k.shape}")
    stack = np.ascontiguousarray(np.stack(mats))
    stack.flags.writeable = False
    return stack


@dataclass(frozen=True, eq=False)
class Operation:
    """A CP, trace-nonincreasing map ``ρ ↦ Σ_k K_k ρ K_k†``."""

    kraus: np.ndarray

    def __post_init__(self):
        stack = _kraus_stack(self.kraus)
        object.__setattr__(self, "kraus", stack)
        slack = np.eye(stack.shape[1]) - effect_of_stack(stack)
        if not linalg.is_psd(slack, UNITY_TOL):
            raise ValidationError(
                "trace-increasing",
                f"Σ K†K exceeds I by {-linalg.min_eigenvalue(slack):.3e}",
                defect=-linalg.min_eigenvalue(slack),
            )

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    @property
    def dim_in(self) -> int:
        return self.dim

    @property
    def dim_out(self) -> int:
        return self.dim

    def __len__(self):
        return self.kraus.shape[0]


def effect_of_stack(stack) -> np.ndarray:
    return np.einsum("kba,kbc->ac", stack.conj(), stack)


def _unity_defect(operations, dim) -> float:
    total = sum(effect_of_stack(op.kraus) for op in operations.values())
    return linalg.frob(total - np.eye(dim))


@dataclass(frozen=True, eq=False)
class Instrument:
    """Outcome label -> :class:`Operation`, summing to a trace-preserving map.

    ``operations`` accepts Operations or plain Kraus lists; labels are
    canonicalized and kept in ascending order.
    """

    operations: dict
    unity_defect: float = field(init=False)

    def __post_init__(self):
        ops = {}
        for label, op in dict(self.operations).items():
            x = canonical_label(label)
            if x in ops:
                raise ValidationError("duplicate-label", f"outcome label {label!r} repeated", label=x)
            ops[x] = op if isinstance(op, Operation) else Operation(op)
        if not ops:
            raise ValidationError("unity-violation", "an instrument needs at least one outcome")
        dims = {op.dim for op in ops.values()}
        if len(dims) != 1:
            raise DimensionMismatch(f"operations have mixed dimensions {sorted(dims)}")
        ops = dict(sorted(ops.items()))
        defect = _unity_defect(ops, dims.pop())
        if defect > UNITY_TOL:
            raise ValidationError(
                "unity-violation", f"‖Σ_x Σ_k K†K − I‖ = {defect:.3e}", defect=defect
            )
        object.__setattr__(self, "operations", ops)
        object.__setattr__(self, "unity_defect", defect)

    @property
    def dim(self) -> int:
        return next(iter(self.operations.values())).dim

    @property
    def labels(self) -> tuple:
        return tuple(self.operations)

    def __getitem__(self, x) -> Operation:
        return self.operations[canonical_label(x)]

    def __iter__(self):
        return iter(self.operations.items())


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.require_hermitian(self.matrix, "Choi matrix")
        if m.shape[0] != self.dim * self.dim:
            raise DimensionMismatch(f"Choi matrix of a dim-{self.dim} map must be {self.dim ** 2} square")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class RawSuperoperator:
    """A Hermiticity-preserving linear map not known to be CP."""

    dim: int
    action: np.ndarray

    def __post_init__(self):
        a = linalg.as_cmatrix(self.action, "superoperator")
        n = self.dim * self.dim
        if a.shape != (n, n):
            raise DimensionMismatch(f"superoperator on dim {self.dim} must be {n}x{n}, got {a.shape}")
        object.__setattr__(self, "action", a)
        choi = _choi_of(self.apply, self.dim)
        if linalg.hermitian_defect(choi) > linalg.HERM_TOL:
            raise ValidationError("not-Hermiticity-preserving", "map does not preserve Hermiticity")

    def apply(self, m) -> np.ndarray:
        return linalg.unvec(self.action @ linalg.vec(m), self.dim)


def superoperator(op: Operation) -> RawSuperoperator:
    return RawSuperoperator(op.dim, sum(np.kron(k.conj(), k) for k in op.kraus))


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=np.complex128)


def _check(op_dim, rho_dim):
    if op_dim != rho_dim:
        raise DimensionMismatch(f"operation dimension {op_dim} vs operand dimension {rho_dim}")


def apply(op: Operation, rho) -> np.ndarray:
    """Unnormalized post-measurement operator ``Σ_k K_k ρ K_k†``."""
    m = _as_matrix(rho)
    _check(op.dim, m.shape[0])
    return _backend.kernels.kraus_apply(op.kraus, np.ascontiguousarray(m))


def outcome_probability(ins: Instrument, x, rho: DensityOperator) -> float:
    _check(ins.dim, rho.dim)
    op = ins.operations.get(canonical_label(x))
    if op is None:
        return 0.0
    return float(np.trace(apply(op, rho)).real)


def outcome_distribution(ins: Instrument, rho: DensityOperator) -> OutcomeDistribution:
    _check(ins.dim, rho.dim)
    return OutcomeDistribution({x: np.trace(apply(op, rho)).real for x, op in ins})


def post_state(ins: Instrument, x, rho: DensityOperator) -> DensityOperator:
    """State after outcome ``x``; an error when ``x`` has (numerically) zero probability."""
    _check(ins.dim, rho.dim)
    op = ins.operations.get(canonical_label(x))
    out = apply(op, rho) if op is not None else None
    p = 0.0 if out is None else float(np.trace(out).real)
    if p <= PROB_FLOOR:
        raise ValidationError(
            "zero-probability-outcome", f"outcome {x!r} has probability {p:.3e}; post state indefinite",
            label=x,
        )
    return state_from_unnormalized(out / p)


def dual_apply(op: Operation, a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    _check(op.dim, a.shape[0])
    return np.einsum("kba,bc,kcd->ad", op.kraus.conj(), a, op.kraus)


def effect(op: Operation) -> np.ndarray:
    return effect_of_stack(op.kraus)


def induced_povm(ins: Instrument) -> Povm:
    return validate_povm({x: effect(op) for x, op in ins})


def _zero_operation(dim) -> Operation:
    return Operation([np.zeros((dim, dim))])


def selective_operation(ins: Instrument, labels) -> Operation:
    """Operation for the event "outcome in ``labels``"; all labels gives the non-selective channel."""
    wanted = {canonical_label(x) for x in labels}
    kraus = [k for x, op in ins if x in wanted for k in op.kraus]
    if not kraus:
        return _zero_operation(ins.dim)
    return Operation(kraus)


def nonselective_operation(ins: Instrument) -> Operation:
    return selective_operation(ins, ins.labels)


def joint_distribution(first: Instrument, second: Instrument, rho: DensityOperator) -> dict:
    """``(x, y) ↦ Tr[I₂(y) I₁(x) ρ]`` for every label pair."""
    _check(first.dim, rho.dim)
    _check(second.dim, rho.dim)
    out = {}
    for x, op1 in first:
        mid = apply(op1, rho)
        for y, op2 in second:
            out[(x, y)] = float(np.trace(apply(op2, mid)).real)
    return out


def joint_distribution_dual(first: Instrument, second: Instrument, rho: DensityOperator) -> dict:
    """Same joint law through the Heisenberg picture: ``Tr{[I₁(x)* Π₂(y)] ρ}``."""
    _check(first.dim, rho.dim)
    effects = {y: effect(op) for y, op in second}
    return {
        (x, y): float(np.trace(dual_apply(op1, e) @ rho.matrix).real)
        for x, op1 in first
        for y, e in effects.items()
    }


def conditional_distribution(first: Instrument, second: Instrument, x, rho: DensityOperator):
    after = post_state(first, x, rho)
    return outcome_distribution(second, after)


def luders_instrument(a: Observable) -> Instrument:
    return Instrument({x: Operation([p]) for x, p in a.spectrum})


def von_neumann_instrument(a: Observable) -> Instrument:
    """Repeatable instrument ``ρ ↦ |φ_n⟩⟨φ_n|ρ|φ_n⟩⟨φ_n|``; needs a non-degenerate observable."""
    if a.is_degenerate:
        raise ValidationError(
            "degenerate-observable",
            "repeatability does not single out an eigenstate for a degenerate eigenvalue",
        )
    return luders_instrument(a)


def transpose_superoperator(dim: int) -> np.ndarray:
    """Action matrix of ``X ↦ Xᵀ`` on column-stacked vectors (the commutation matrix)."""
    n = dim * dim
    perm = np.zeros((n, n), dtype=np.complex128)
    for i in range(dim):
        for j in range(dim):
            perm[i + j * dim, j + i * dim] = 1.0
    return perm


def transpose_pseudo_instrument(mu, dim: int) -> dict:
    """``x ↦ μ(x)·T`` with ``T`` the transpose: positive, unital in sum, but not CP."""
    mu = mu if isinstance(mu, OutcomeDistribution) else OutcomeDistribution(mu)
    t = transpose_superoperator(dim)
    return {canonical_label(x): RawSuperoperator(dim, p * t) for x, p in mu.items()}


def _choi_of(apply_fn, dim) -> np.ndarray:
    n = dim * dim
    choi = np.zeros((n, n), dtype=np.complex128)
    for i in range(dim):
        for j in range(dim):
            choi[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = apply_fn(linalg.matrix_unit(i, j, dim))
    return choi


def choi_matrix(s) -> ChoiMatrix:
    """Choi matrix ``Σ_ij E_ij ⊗ S(E_ij)`` of a RawSuperoperator or Operation."""
    if isinstance(s, ChoiMatrix):
        return s
    if isinstance(s, Operation):
        c = _choi_of(lambda e: apply(s, e), s.dim)
        if not linalg.is_psd(c, CP_TOL):
            raise ValidationError("not-PSD", "Choi matrix of a Kraus-form operation is not PSD")
        return ChoiMatrix(s.dim, c)
    return ChoiMatrix(s.dim, _choi_of(s.apply, s.dim))


@dataclass(frozen=True)
class CPWitness:
    """Sequences ``ξ_i``, ``ρ_i`` making ``Σ_ij ⟨ξ_i, T(ρ_i†ρ_j) ξ_j⟩`` negative."""

    vectors: tuple
    operators: tuple
    value: float


@dataclass(frozen=True)
class CPVerdict:
    is_cp: bool
    min_eigenvalue: float
    witness: CPWitness | None = None

    def __bool__(self):
        return self.is_cp


def _apply_fn(s):
    if isinstance(s, Operation):
        return lambda m: apply(s, m)
    return s.apply


def bilinear_form(s, vectors, operators) -> complex:
    """``Σ_ij ⟨ξ_i, T(ρ_i† ρ_j) ξ_j⟩`` evaluated by applying the map directly."""
    fn = _apply_fn(s)
    total = 0j
    for xi, ri in zip(vectors, operators):
        for xj, rj in zip(vectors, operators):
            total += np.vdot(xi, fn(ri.conj().T @ rj) @ xj)
    return total


def is_completely_positive(s, tol: float = CP_TOL) -> CPVerdict:
    """Choi-matrix certificate of complete positivity.

    On failure the eigenvector ``v`` of the most negative Choi eigenvalue is
    turned into a witness: ``ξ_i`` is the ``i``-th length-``d`` block of ``v``
    and ``ρ_i = E_0i``, so that ``ρ_i†ρ_j = E_ij`` and the bilinear form
    equals ``⟨v|Choi|v⟩``, the negative eigenvalue itself.
    """
    if isinstance(s, Operation):
        c = _choi_of(lambda e: apply(s, e), s.dim)
    else:
        c = choi_matrix(s).matrix
    eig = linalg.eig_hermitian(c)
    lo = float(eig.eigenvalues[0])
    if lo >= -tol * max(1.0, linalg.frob(c)):
        return CPVerdict(True, lo)
    d = s.dim
    v = eig.eigenvectors[:, 0]
    vectors = tuple(np.array(v[i * d:(i + 1) * d]) for i in range(d))
    operators = tuple(linalg.matrix_unit(0, i, d) for i in range(d))
    value = float(bilinear_form(s, vectors, operators).real)
    return CPVerdict(False, lo, CPWitness(vectors, operators, value))


def bilinear_cp_check(s, trials: int = 2000, max_len: int = 4, seed: int = 0, tol: float = CP_TOL):
    """Randomized search for violations of the bilinear CP criterion.

    Draws finite sequences of length 1..``max_len`` of Gaussian vectors and
    operators, normalized to unit norm, and evaluates :func:`bilinear_form`.
    Only a violation is conclusive; passing means none was found.
    """
    rng = np.random.default_rng(seed)
    d = s.dim
    worst = np.inf
    witness = None
    for _ in range(trials):
        n = int(rng.integers(1, max_len + 1))
        xs = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
        rs = rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))
        xs /= np.linalg.norm(xs, axis=1, keepdims=True)
        rs /= np.linalg.norm(rs, axis=(1, 2), keepdims=True)
        value = float(bilinear_form(s, xs, rs).real)
        if value < worst:
            worst = value
            witness = CPWitness(tuple(xs), tuple(rs), value)
    ok = worst >= -tol * max_len * max_len
    return CPVerdict(ok, worst, None if ok else witness)


def kraus_from_choi(c, tol: float = CP_TOL) -> Operation:
    """Kraus decomposition of a PSD Choi matrix.

    Eigenpairs are taken in descending eigenvalue order, dropping those at
    or below ``1e-10`` times the largest; each eigenvector's first
    non-negligible component is rotated to be real positive.
    """
    if not isinstance(c, ChoiMatrix):
        m = np.asarray(c, dtype=np.complex128)
        c = ChoiMatrix(int(round(np.sqrt(m.shape[0]))), m)
    d = c.dim
    eig = linalg.eig_hermitian(c.matrix)
    w = eig.eigenvalues[::-1]
    v = eig.eigenvectors[:, ::-1]
    if w[-1] < -tol * max(1.0, linalg.frob(c.matrix)):
        raise ValidationError("not-PSD", f"Choi matrix has eigenvalue {w[-1]:.3e}", defect=-w[-1])
    top = w[0]
    kraus = []
    if top > 0:
        for lam, vecs in zip(w, v.T):
            if lam <= KRAUS_RANK_TOL * top:
                break
            big = np.flatnonzero(np.abs(vecs) > 1e-8 * np.abs(vecs).max())[0]
            vecs = vecs * (abs(vecs[big]) / vecs[big])
            kraus.append(np.sqrt(lam) * linalg.unvec(vecs, d))
    if not kraus:
        return _zero_operation(d)
    return Operation(kraus)


def choi_distance(a, b) -> float:
    ca = a if isinstance(a, np.ndarray) else choi_matrix(a).matrix
    cb = b if isinstance(b, np.ndarray) else choi_matrix(b).matrix
    return linalg.frob(ca - cb)


def tensor_extend(ins: Instrument, extra_dim: int) -> Instrument:
    """``I(x) ⊗ id`` on the system enlarged by an untouched ``extra_dim`` factor."""
    if extra_dim < 1:
        raise ValidationError("bad-dimension", f"extra_dim must be >= 1, got {extra_dim}")
    eye = np.eye(extra_dim)
    return Instrument({x: Operation([np.kron(k, eye) for k in op.kraus]) for x, op in ins})


def dl_verdict(maps: dict, samples: int = 200, seed: int = 0) -> dict:
    """Davies-Lewis checks for a family of raw maps.

    Positivity is sampled on basis and random pure states (pure states are
    the extreme points, so this is the natural probe); unity compares the
    summed map's Choi partial trace with the identity; finiteness holds for
    any finite dict.
    """
    rng = np.random.default_rng(seed)
    maps = dict(maps)
    d = next(iter(maps.values())).dim
    probes = [np.eye(d)[:, i] for i in range(d)]
    probes += [
        (lambda z: z / np.linalg.norm(z))(rng.normal(size=d) + 1j * rng.normal(size=d))
        for _ in range(samples)
    ]
    worst = np.inf
    for s in maps.values():
        fn = _apply_fn(s)
        for psi in probes:
            out = fn(np.outer(psi, psi.conj()))
            worst = min(worst, linalg.min_eigenvalue(linalg.hermitize(out)))
    total = sum(_choi_of(_apply_fn(s), d) for s in maps.values())
    # trace preservation <=> Tr_out(Choi) = I
    unity = linalg.frob(linalg.partial_trace(total, d, d, keep="first") - np.eye(d))
    return {
        "positive": bool(worst >= -CP_TOL),
        "min_output_eigenvalue": float(worst),
        "unity_defect": float(unity),
        "unital_sum": bool(unity <= UNITY_TOL),
        "finite": True,
    }
