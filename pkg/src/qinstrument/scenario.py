"""JSON formats for matrices, instruments, models and scenarios, plus the report writer.

Matrices are nested row-major arrays whose entries are ``[re, im]`` pairs
(bare real numbers are accepted on input).  Outcome labels are object keys
written as the shortest round-trip decimal string of the double (``"1"``,
``"-0.5"``).  Numbers in reports are rounded to 12 decimal places so that
reports are byte-stable across kernel backends.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import seqsim
from .dilation import IndirectModel, model_instrument
from .errors import ParseError, ValidationError
from .instrument import (
    Instrument,
    Operation,
    RawSuperoperator,
    bilinear_cp_check,
    choi_matrix,
    dl_verdict,
    is_completely_positive,
    kraus_from_choi,
    luders_instrument,
    von_neumann_instrument,
)
from .quantum import DensityOperator, Observable, canonical_label

REPORT_DECIMALS = 12


def format_label(x: float) -> str:
    s = repr(float(x) + 0.0)
    return s[:-2] if s.endswith(".0") else s


def _num(v: float) -> float:
    return round(float(v), REPORT_DECIMALS) + 0.0


# -- encoding -----------------------------------------------------------------


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in row] for row in m]


def encode_instrument(ins: Instrument) -> dict:
    return {
        "dim": ins.dim,
        "operations": {
            format_label(x): {"kraus": [encode_matrix(k) for k in op.kraus]} for x, op in ins
        },
    }


def encode_model(m: IndirectModel) -> dict:
    return {
        "system_dim": m.system_dim,
        "probe_dim": m.probe_dim,
        "probe_state": encode_matrix(m.probe_state.matrix),
        "coupling": encode_matrix(m.coupling),
        "meter": encode_matrix(m.meter.matrix),
    }


# -- decoding -----------------------------------------------------------------


def _entry(z, path):
    if isinstance(z, bool):
        raise ParseError("matrix entry must be a number or [re, im] pair", path)
    if isinstance(z, (int, float)):
        return complex(z)
    if isinstance(z, list) and len(z) == 2 and all(
        isinstance(t, (int, float)) and not isinstance(t, bool) for t in z
    ):
        return complex(z[0], z[1])
    raise ParseError("matrix entry must be a number or [re, im] pair", path)


def decode_matrix(obj, path="$") -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ParseError("matrix must be a non-empty array of rows", path)
    width = len(obj[0])
    rows = []
    for i, row in enumerate(obj):
        if len(row) != width or width == 0:
            raise ParseError("matrix rows must be non-empty and of equal length", f"{path}[{i}]")
        rows.append([_entry(z, f"{path}[{i}][{j}]") for j, z in enumerate(row)])
    return np.array(rows, dtype=np.complex128)


def _require(obj, key, path, kind=None):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", path)
    if key not in obj:
        raise ParseError(f"missing key {key!r}", path)
    value = obj[key]
    if kind is not None and (not isinstance(value, kind) or isinstance(value, bool)):
        raise ParseError(f"key {key!r} has the wrong type", f"{path}.{key}")
    return value


def _label(key, path) -> float:
    try:
        return canonical_label(float(key))
    except (TypeError, ValueError, ValidationError) as exc:
        raise ParseError(f"outcome label {key!r} is not a finite number", path) from exc


def _operations(obj, path):
    ops = _require(obj, "operations", path, dict)
    if not ops:
        raise ParseError("instrument has no operations", f"{path}.operations")
    out = {}
    for key, entry in ops.items():
        p = f"{path}.operations[{key!r}]"
        x = _label(key, p)
        if x in out:
            raise ValidationError("duplicate-label", f"label {key!r} repeated", label=x)
        out[x] = (entry, p)
    return out


def decode_instrument(obj, path="$") -> Instrument:
    """Decode any of the accepted instrument forms into an :class:`Instrument`."""
    if not isinstance(obj, dict):
        raise ParseError("instrument must be an object", path)
    if "luders_of" in obj:
        return luders_instrument(Observable(decode_matrix(obj["luders_of"], f"{path}.luders_of")))
    if "von_neumann_of" in obj:
        a = Observable(decode_matrix(obj["von_neumann_of"], f"{path}.von_neumann_of"))
        return von_neumann_instrument(a)
    if "indirect_model" in obj:
        return model_instrument(decode_model(obj["indirect_model"], f"{path}.indirect_model"))
    ops = {}
    for x, (entry, p) in _operations(obj, path).items():
        kraus = _require(entry, "kraus", p, list)
        ops[x] = Operation([decode_matrix(k, f"{p}.kraus[{i}]") for i, k in enumerate(kraus)])
    ins = Instrument(ops)
    if "dim" in obj and obj["dim"] != ins.dim:
        raise ValidationError("dimension-mismatch", f"declared dim {obj['dim']} vs operators {ins.dim}")
    return ins


def decode_map_family(obj, path="$") -> dict:
    """Decode an instrument file whose operations may be non-CP.

    Entries may give ``"kraus"``, ``"choi"`` or ``"superoperator"`` (action on
    column-stacked vectors).  No unity check is made here; the caller reports
    on it.
    """
    family = {}
    for x, (entry, p) in _operations(obj, path).items():
        if not isinstance(entry, dict):
            raise ParseError("operation must be an object", p)
        if "kraus" in entry:
            kraus = _require(entry, "kraus", p, list)
            family[x] = Operation([decode_matrix(k, f"{p}.kraus[{i}]") for i, k in enumerate(kraus)])
        elif "superoperator" in entry:
            a = decode_matrix(entry["superoperator"], f"{p}.superoperator")
            family[x] = RawSuperoperator(int(round(np.sqrt(a.shape[0]))), a)
        elif "choi" in entry:
            c = decode_matrix(entry["choi"], f"{p}.choi")
            d = int(round(np.sqrt(c.shape[0])))
            family[x] = RawSuperoperator(d, _choi_to_action(c, d))
        else:
            raise ParseError("operation needs 'kraus', 'choi' or 'superoperator'", p)
    return family


def _choi_to_action(c, d):
    # Choi block (i, j) is S(E_ij), and vec(E_ij) is basis index i + j*d
    action = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            block = c[i * d:(i + 1) * d, j * d:(j + 1) * d]
            action[:, i + j * d] = block.reshape(-1, order="F")
    return action


def decode_model(obj, path="$") -> IndirectModel:
    sd = _require(obj, "system_dim", path, int)
    pd = _require(obj, "probe_dim", path, int)
    return IndirectModel(
        sd,
        pd,
        DensityOperator(decode_matrix(_require(obj, "probe_state", path), f"{path}.probe_state")),
        decode_matrix(_require(obj, "coupling", path), f"{path}.coupling"),
        Observable(decode_matrix(_require(obj, "meter", path), f"{path}.meter")),
    )


def decode_scenario(obj, path="$") -> seqsim.Scenario:
    dim = _require(obj, "dim", path, int)
    hbar = obj.get("hbar", 1.0) if isinstance(obj, dict) else 1.0
    if not isinstance(hbar, (int, float)) or isinstance(hbar, bool):
        raise ParseError("hbar must be a number", f"{path}.hbar")
    rho = DensityOperator(decode_matrix(_require(obj, "initial_state", path), f"{path}.initial_state"))
    if "hamiltonian" in obj:
        h = Observable(decode_matrix(obj["hamiltonian"], f"{path}.hamiltonian"))
    else:
        h = Observable(np.zeros((dim, dim)))
    raw_steps = _require(obj, "steps", path, list)
    steps = []
    for k, s in enumerate(raw_steps):
        p = f"{path}.steps[{k}]"
        t = _require(s, "time", p, (int, float))
        ins = decode_instrument(_require(s, "instrument", p), f"{p}.instrument")
        steps.append(seqsim.MeasurementStep(ins, float(t)))
    if rho.dim != dim:
        raise ValidationError("dimension-mismatch", f"declared dim {dim} vs initial state {rho.dim}")
    return seqsim.Scenario(rho, h, tuple(steps), float(hbar))


def load_json(path):
    """Read a JSON file, converting syntax errors to :class:`ParseError` with line:col."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{exc.lineno}:{exc.colno}") from exc


def load_scenario(path) -> seqsim.Scenario:
    return decode_scenario(load_json(path))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# -- reports ------------------------------------------------------------------


def _outcomes(key):
    return [format_label(x) for x in key]


def step_diagnostics(ins: Instrument) -> dict:
    cp = []
    for x, op in ins:
        verdict = is_completely_positive(op)
        cp.append({
            "label": format_label(x),
            "completely_positive": verdict.is_cp,
            "min_choi_eigenvalue": _num(verdict.min_eigenvalue),
        })
    return {"unity_defect": _num(ins.unity_defect), "cp": cp}


def run_scenario(scenario: seqsim.Scenario, samples: int = 0, seed: int = 0,
                 final_states: bool = False) -> dict:
    branches, pruned = seqsim.branch_states(scenario)
    joint = seqsim.JointDistribution(
        {k: np.trace(m).real for k, m in branches.items()}, pruned=pruned
    )
    keys = sorted(joint)
    steps = []
    for k, step in enumerate(scenario.steps):
        marg = joint.marginal([k])
        steps.append({
            "time": step.time,
            "labels": [format_label(x) for x in step.instrument.labels],
            "marginal": {format_label(x): _num(marg.get((x,), 0.0)) for x in step.instrument.labels},
            **step_diagnostics(step.instrument),
        })
    report = {
        "dim": scenario.dim,
        "hbar": scenario.hbar,
        "steps": steps,
        "joint": [{"outcomes": _outcomes(k), "probability": _num(joint[k])} for k in keys],
        "diagnostics": {
            "branches": len(keys),
            "pruned_branches": pruned,
            "joint_sum_defect": _num(abs(sum(joint.values()) - 1.0)),
        },
    }
    if final_states:
        report["final_states"] = [
            {"outcomes": _outcomes(k),
             "state": [[[_num(z.real), _num(z.imag)] for z in row]
                       for row in branches[k] / np.trace(branches[k]).real]}
            for k in keys
        ]
    if samples:
        traj = seqsim.sample_trajectories(scenario, samples, seed)
        freq = seqsim.empirical_frequencies(traj)
        counts = {k: round(f * samples) for k, f in freq.items()}
        report["samples"] = {
            "n": samples,
            "seed": seed,
            "rng": "philox4x64-10, trajectory i uses counter blocks [i*b, (i+1)*b), b = ceil(steps/4)",
            "frequencies": [
                {"outcomes": _outcomes(k), "count": counts[k], "frequency": _num(freq[k])}
                for k in sorted(freq)
            ],
            "max_abs_deviation": _num(max(
                abs(freq.get(k, 0.0) - joint.prob(k)) for k in set(freq) | set(joint)
            )),
        }
    return report


def run_scenario_file(path, samples: int = 0, seed: int = 0, final_states: bool = False) -> dict:
    return run_scenario(load_scenario(path), samples=samples, seed=seed, final_states=final_states)


def _witness_json(w) -> dict:
    return {
        "vectors": [[[_num(z.real), _num(z.imag)] for z in v] for v in w.vectors],
        "operators": [[[[_num(z.real), _num(z.imag)] for z in row] for row in r] for r in w.operators],
        "value": _num(w.value),
    }


def check_report(family: dict) -> dict:
    """DL and CP verdicts for a decoded map family (see :func:`decode_map_family`)."""
    dims = {s.dim for s in family.values()}
    if len(dims) != 1:
        raise ValidationError("dimension-mismatch", f"operations have mixed dimensions {sorted(dims)}")
    outcomes = []
    all_cp = True
    for x, s in sorted(family.items()):
        verdict = is_completely_positive(s)
        sampled = bilinear_cp_check(s)
        entry = {
            "label": format_label(x),
            "representation": "kraus" if isinstance(s, Operation) else "superoperator",
            "completely_positive": verdict.is_cp,
            "min_choi_eigenvalue": _num(verdict.min_eigenvalue),
            "bilinear_check": {
                "violation_found": not sampled.is_cp,
                "min_value": _num(sampled.min_eigenvalue),
            },
        }
        if verdict.witness is not None:
            entry["witness"] = _witness_json(verdict.witness)
        all_cp = all_cp and verdict.is_cp
        outcomes.append(entry)
    dl = dl_verdict(family)
    dl_ok = dl["positive"] and dl["unital_sum"] and dl["finite"]
    return {
        "dim": dims.pop(),
        "davies_lewis": {
            "positive": dl["positive"],
            "min_output_eigenvalue": _num(dl["min_output_eigenvalue"]),
            "unity_defect": _num(dl["unity_defect"]),
            "unital_sum": dl["unital_sum"],
            "finite": dl["finite"],
        },
        "outcomes": outcomes,
        "dl_instrument": dl_ok,
        "cp_instrument": dl_ok and all_cp,
    }


def family_to_instrument(family: dict) -> Instrument:
    """Convert a verified CP family into a Kraus-form instrument."""
    ops = {}
    for x, s in family.items():
        ops[x] = s if isinstance(s, Operation) else kraus_from_choi(choi_matrix(s))
    return Instrument(ops)
