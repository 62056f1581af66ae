"""Joint statistics of measurement sequences with free evolution in between."""
from __future__ import annotations

import itertools
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from . import _backend, linalg
from .errors import DimensionMismatch, ValidationError
from .instrument import Instrument
from .quantum import PROB_DUST, DensityOperator, Observable

JOINT_SUM_TOL = 1e-8
# branches with smaller trace are left out of the output map
BRANCH_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class MeasurementStep:
    instrument: Instrument
    time: float


@dataclass(frozen=True, eq=False)
class Scenario:
    initial_state: DensityOperator
    hamiltonian: Observable
    steps: tuple
    hbar: float = 1.0

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        if not steps:
            raise ValidationError("no-steps", "a scenario needs at least one measurement step")
        if not self.hbar > 0:
            raise ValidationError("bad-hbar", f"hbar must be positive, got {self.hbar}")
        d = self.initial_state.dim
        if self.hamiltonian.dim != d:
            raise DimensionMismatch(f"Hamiltonian dimension {self.hamiltonian.dim} vs state {d}")
        check_times([s.time for s in steps])
        for k, s in enumerate(steps):
            if s.instrument.dim != d:
                raise DimensionMismatch(f"step {k} instrument dimension {s.instrument.dim} vs state {d}")

    @property
    def dim(self) -> int:
        return self.initial_state.dim

    def gaps(self) -> list:
        times = [0.0] + [s.time for s in self.steps]
        return [b - a for a, b in zip(times, times[1:])]

    def unitaries(self) -> list:
        h = self.hamiltonian.matrix
        return [linalg.evolution_unitary(h, g, self.hbar) for g in self.gaps()]


def check_times(times):
    prev = 0.0
    for k, t in enumerate(times):
        if not t > prev:
            raise ValidationError(
                "non-increasing-times",
                f"step {k} time {t} must exceed {prev} (times strictly increasing and positive)",
            )
        prev = t


class JointDistribution(Mapping):
    """Outcome tuple -> probability, with the number of pruned tuples recorded."""

    __slots__ = ("_entries", "pruned")

    def __init__(self, entries, pruned: int = 0):
        entries = {tuple(k): float(v) for k, v in dict(entries).items()}
        low = min(entries.values(), default=0.0)
        if low < -PROB_DUST:
            raise ValidationError("probability-out-of-range", f"joint probability {low:.3e}")
        total = sum(entries.values())
        if abs(total - 1.0) > JOINT_SUM_TOL:
            raise ValidationError("sum-not-one", f"joint probabilities sum to {total:.12g}")
        self._entries = entries
        self.pruned = pruned

    def __getitem__(self, key):
        return self._entries[tuple(key)]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def prob(self, key) -> float:
        return self._entries.get(tuple(key), 0.0)

    def marginal(self, steps) -> dict:
        """Sum out every step not listed in ``steps``."""
        out = {}
        for k, p in self._entries.items():
            key = tuple(k[s] for s in steps)
            out[key] = out.get(key, 0.0) + p
        return out

    def __repr__(self):
        return f"{type(self).__name__}({self._entries!r})"


def wigner_joint(observables, times, h: Observable, hbar: float, rho: DensityOperator) -> JointDistribution:
    """Projective-sequence joint law from the nested projector sandwich.

    For every outcome tuple the operator ``E_n U(t_n − t_{n−1}) ⋯ E_1 U(t_1)``
    is formed explicitly and ``Tr[M ρ M†]`` evaluated; no branch is pruned.
    """
    observables = list(observables)
    if len(observables) != len(times):
        raise ValidationError("bad-scenario", "one time per observable is required")
    check_times(times)
    d = rho.dim
    if h.dim != d or any(a.dim != d for a in observables):
        raise DimensionMismatch("observables, Hamiltonian and state must share a dimension")
    prev = 0.0
    props = []
    for t in times:
        props.append(linalg.evolution_unitary(h.matrix, t - prev, hbar))
        prev = t
    out = {}
    for branch in itertools.product(*(a.spectrum for a in observables)):
        m = np.eye(d, dtype=np.complex128)
        for u, (_, proj) in zip(props, branch):
            m = proj @ u @ m
        out[tuple(x for x, _ in branch)] = float(np.trace(m @ rho.matrix @ m.conj().T).real)
    return JointDistribution(out)


def branch_states(scenario: Scenario, floor: float = BRANCH_FLOOR):
    """Unnormalized final state of every surviving outcome branch.

    Returns ``(branches, pruned)`` where ``branches`` maps outcome tuples to
    ``I_n(x_n) α(t_n − t_{n−1}) ⋯ I_1(x_1) α(t_1) ρ`` and ``pruned`` counts
    the leaf tuples dropped because an ancestor's trace fell below ``floor``.
    """
    kraus_apply = _backend.kernels.kraus_apply
    frontier = {(): np.ascontiguousarray(scenario.initial_state.matrix)}
    pruned = 0
    remaining = [len(s.instrument.labels) for s in scenario.steps]
    for k, (step, u) in enumerate(zip(scenario.steps, scenario.unitaries())):
        tail = int(np.prod(remaining[k + 1:], dtype=np.int64))
        ud = u.conj().T
        nxt = {}
        for key, m in frontier.items():
            evolved = np.ascontiguousarray(u @ m @ ud)
            for x, op in step.instrument:
                child = kraus_apply(op.kraus, evolved)
                if np.trace(child).real < floor:
                    pruned += tail
                    continue
                nxt[key + (x,)] = child
        frontier = nxt
    return frontier, pruned


def generalized_wigner_joint(scenario: Scenario) -> JointDistribution:
    branches, pruned = branch_states(scenario)
    return JointDistribution(
        {k: np.trace(m).real for k, m in branches.items()}, pruned=pruned
    )


def _blocks_per_trajectory(n_steps: int) -> int:
    # Philox4x64 emits four 64-bit words (four doubles) per counter block
    return -(-n_steps // 4)


def trajectory_uniforms(seed: int, n: int, n_steps: int, start: int = 0) -> np.ndarray:
    """Uniform variates for trajectories ``start .. start + n − 1``.

    The generator is Philox4x64-10 keyed by ``seed``.  Trajectory ``i`` owns
    counter blocks ``[i·b, (i+1)·b)`` with ``b = ceil(n_steps / 4)``, so its
    stream depends only on ``(seed, i)`` and any slice of trajectories can
    be regenerated independently (``Philox(key=seed).advance(i·b)``).
    """
    b = _blocks_per_trajectory(n_steps)
    bitgen = np.random.Philox(key=int(seed) % (1 << 64)).advance(start * b)
    u = np.random.Generator(bitgen).random((n, 4 * b))
    return np.ascontiguousarray(u[:, :n_steps])


def _kernel_arrays(scenario: Scenario):
    effects, kraus, step_off, kraus_off, labels = [], [], [0], [0], []
    for step in scenario.steps:
        labels.append(step.instrument.labels)
        for _, op in step.instrument:
            effects.append(np.einsum("kba,kbc->ac", op.kraus.conj(), op.kraus))
            kraus.extend(op.kraus)
            kraus_off.append(len(kraus))
        step_off.append(len(effects))
    return (
        np.ascontiguousarray(np.stack(scenario.unitaries())),
        np.ascontiguousarray(np.stack(effects)),
        np.asarray(step_off, dtype=np.int64),
        np.ascontiguousarray(np.stack(kraus)),
        np.asarray(kraus_off, dtype=np.int64),
        labels,
    )


def sample_outcome_indices(scenario: Scenario, n: int, seed: int) -> np.ndarray:
    """``(n, steps)`` array of per-step outcome indices (positions in ascending label order)."""
    if n < 1:
        raise ValidationError("bad-count", f"number of trajectories must be >= 1, got {n}")
    unitaries, effects, step_off, kraus, kraus_off, _ = _kernel_arrays(scenario)
    uniforms = trajectory_uniforms(seed, n, len(scenario.steps))
    rho0 = np.ascontiguousarray(scenario.initial_state.matrix)
    return _backend.kernels.sample_outcomes(
        unitaries, effects, step_off, kraus, kraus_off, rho0, uniforms
    )


def sample_trajectories(scenario: Scenario, n: int, seed: int) -> list:
    """Monte Carlo outcome tuples, one per trajectory, ordered by trajectory index.

    Each trajectory evolves, draws an outcome from the current conditional
    distribution, jumps to the post-measurement state and continues.
    """
    idx = sample_outcome_indices(scenario, n, seed)
    labels = [step.instrument.labels for step in scenario.steps]
    return [tuple(labels[s][j] for s, j in enumerate(row)) for row in idx.tolist()]


def empirical_frequencies(trajectories) -> dict:
    counts = {}
    for t in trajectories:
        counts[t] = counts.get(t, 0) + 1
    n = len(trajectories)
    return {k: c / n for k, c in counts.items()}
