"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Sequence

import jsonschema
import numpy as np

from . import compiler, laddersim, tqc, vbs
from .gates import Circuit
from .mbqc import MeasurementPattern, PatternError, branch_table, run_pattern
from .qmath import QubitState, fidelity_up_to_phase, random_state
from .stabilizer import NotClifford, verify_clifford_pattern

EXHAUSTIVE_BUDGET = 20

_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}}}
_SITE = {"type": ["integer", "string"]}

CIRCUIT_SCHEMA = {
    "type": "object",
    "required": ["n", "gates"],
    "properties": {
        "n": {"type": "integer", "minimum": 0},
        "gates": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "targets"],
                "properties": {
                    "kind": {"type": "string"},
                    "targets": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "theta": {"type": "number"},
                    "matrix": _MATRIX,
                    "cond": {"type": "array", "items": {"type": "string"}},
                    "label": {"type": "string"},
                    "basis": _MATRIX,
                },
            },
        },
    },
}

PATTERN_SCHEMA = {
    "type": "object",
    "required": ["sites", "edges", "inputs", "outputs", "instructions", "frame"],
    "properties": {
        "sites": {"type": "array", "items": _SITE},
        "edges": {"type": "array", "items": {"type": "array", "items": _SITE, "minItems": 2, "maxItems": 2}},
        "inputs": {"type": "array", "items": _SITE},
        "outputs": {"type": "array", "items": _SITE},
        "instructions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["site", "basis"],
                "properties": {
                    "site": _SITE,
                    "basis": {"enum": ["M", "Z"]},
                    "theta": {"type": "number"},
                    "sign_deps": {"type": "array", "items": _SITE},
                    "id": _SITE,
                },
            },
        },
        "frame": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "x_deps": {"type": "array", "items": _SITE},
                    "z_deps": {"type": "array", "items": _SITE},
                },
            },
        },
        "unitary": _MATRIX,
    },
}

LADDER_SCHEMA = {
    "type": "object",
    "required": ["n", "unitaries"],
    "properties": {"n": {"type": "integer", "minimum": 2}, "unitaries": {"type": "array", "items": _MATRIX}},
}

QUERY_SCHEMA = {
    "type": "object",
    "required": ["items"],
    "properties": {
        "items": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["line", "basis"],
                "properties": {
                    "line": {"type": "integer", "minimum": 0},
                    "basis": {"enum": ["Z", "M"]},
                    "theta": {"type": "number"},
                    "outcome": {"enum": [0, 1]},
                },
            },
        }
    },
}


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


def _load(path: str, schema: dict) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    jsonschema_validate(data, schema, path)
    return data


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None, name: str | None = None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = os.path.join(out, name) if name else out
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _parse_circuit(data: dict) -> Circuit:
    try:
        return Circuit.from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"invalid circuit: {exc}") from None


def _parse_pattern(data: dict) -> MeasurementPattern:
    try:
        return MeasurementPattern.from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"invalid pattern: {exc}") from None


def _input_state(label: str | None, n: int) -> QubitState | None:
    if n == 0:
        return None
    label = label or "0" * n
    if len(label) != n or set(label) - set("01+-"):
        raise InputError(f"--input must be {n} characters from 0 1 + -")
    return QubitState.from_label(label)


# Commands --------------------------------------------------------------


def cmd_compile(args: argparse.Namespace) -> int:
    c = _parse_circuit(_load(args.circuit, CIRCUIT_SCHEMA))
    try:
        if args.two_layer:
            p, s = compiler.compile_two_layer(c)
        else:
            p = compiler.compile(c, args.one_qubit)
            s = compiler.schedule(p)
    except PatternError as exc:
        raise InputError(str(exc)) from None
    report = compiler.depth_report(s, gate_count=len(c.gates))
    files = {
        "pattern.json": _dump(p.to_json()),
        "schedule.json": _dump(s.to_json()),
        "report.json": _dump(report.to_json()),
    }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for name, text in files.items():
            _emit(text, args.out, name)
    else:
        _emit(_dump({"pattern": p.to_json(), "schedule": s.to_json(), "report": report.to_json()}), None)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        with open(args.file) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {args.file}: {exc}") from None
    if isinstance(raw, dict) and "gates" in raw:
        jsonschema_validate(raw, CIRCUIT_SCHEMA, args.file)
        c = _parse_circuit(raw)
        try:
            p = compiler.compile(c)
        except PatternError as exc:
            raise InputError(str(exc)) from None
        target = c.unitary()
    else:
        jsonschema_validate(raw, PATTERN_SCHEMA, args.file)
        p = _parse_pattern(raw)
        if p.target is None:
            raise InputError("pattern file needs a 'unitary' field to verify against")
        target = p.target
    tol = args.tolerance
    if len(p.instructions) > EXHAUSTIVE_BUDGET:
        try:
            verdict = verify_clifford_pattern(p, target)
        except NotClifford:
            sys.stderr.write(
                f"refusing: {len(p.instructions)} measured sites exceed the exhaustive budget of "
                f"{EXHAUSTIVE_BUDGET} and the pattern is not Clifford\n"
            )
            return 2
        report = {
            "method": "symbolic-stabilizer",
            "verdict": "PASS" if verdict.passed else "FAIL",
            "branches": 2**verdict.free_symbols,
            "mismatched_generators": list(verdict.mismatches),
        }
        _emit(_dump(report), args.out)
        return 0 if verdict.passed else 1
    rep = compiler.verify_pattern(p, target, inputs=3, seed=args.seed or 0, tol=tol, max_sites=EXHAUSTIVE_BUDGET)
    report = {
        "method": "exhaustive",
        "verdict": "PASS" if rep.passed else "FAIL",
        "branches": rep.branches,
        "inputs": rep.inputs,
        "max_infidelity": rep.max_infidelity,
        "max_distribution_deviation": rep.max_tv,
        "failing_branches": list(rep.failures[:20]),
    }
    _emit(_dump(report), args.out)
    return 0 if rep.passed else 1


def jsonschema_validate(data: dict, schema: dict, path: str) -> None:
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        raise InputError(f"{path}: schema violation at {list(exc.absolute_path)}: {exc.message}") from None


def cmd_sample(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise InputError("sample needs --seed")
    p = _parse_pattern(_load(args.pattern, PATTERN_SCHEMA))
    psi = _input_state(args.input, len(p.input_sites))
    rng = np.random.default_rng(args.seed)
    measured = p.measured_sites
    n = len(p.output_sites)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["shot"] + [f"s_{s}" for s in measured] + [f"out_{s}" for s in p.output_sites])
    if len(p.instructions) <= EXHAUSTIVE_BUDGET:
        # one draw from the exact joint law of (branch, raw readout)
        table = branch_table(p, psi)
        joint = (np.abs(table.outputs) ** 2 * table.probability[:, None]).reshape(-1)
        picks = rng.choice(joint.size, size=args.shots, p=joint / joint.sum())
        draws = [(table.record(int(i) // table.outputs.shape[1]), int(i) % table.outputs.shape[1]) for i in picks]
    else:
        draws = []
        for _ in range(args.shots):
            r = run_pattern(p, psi, seed=rng)
            probs = np.abs(r.output.amplitudes) ** 2
            draws.append((r.outcomes, int(rng.choice(probs.size, p=probs / probs.sum()))))
    for shot, (record, k) in enumerate(draws):
        raw = {s: (k >> (n - 1 - i)) & 1 for i, s in enumerate(p.output_sites)}
        bits = compiler.reinterpret_output(raw, p.output_frame, record)
        w.writerow([shot] + [record[s] for s in measured] + list(bits))
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_ladder(args: argparse.Namespace) -> int:
    try:
        spec = laddersim.LadderSpec.from_json(_load(args.spec, LADDER_SCHEMA))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    items = []
    if args.query:
        q = _load(args.query, QUERY_SCHEMA)
        items = [
            laddersim.QueryItem(d["line"], d["basis"], float(d.get("theta", 0.0)), int(d.get("outcome", 0)))
            for d in q["items"]
        ]
    try:
        query = laddersim.make_query(items, spec.n)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.shots:
        if args.seed is None:
            raise InputError("sampling needs --seed")
        strategy = laddersim.fixed_order([(it.line, it.basis, it.theta) for it in items])
        counts = laddersim.sample_counts(spec, strategy, args.seed, args.shots)
        rows = [
            {"outcomes": {str(line): bit for line, bit in key}, "count": n}
            for key, n in sorted(counts.items())
        ]
        _emit(_dump({"shots": args.shots, "counts": rows}), args.out)
        return 0
    _emit(_dump({"probability": laddersim.joint_probability(spec, query)}), args.out)
    return 0


def _parse_geometry(text: str) -> int | tuple[int, int]:
    try:
        if "x" in text:
            r, c = text.split("x")
            return int(r), int(c)
        return int(text)
    except ValueError:
        raise InputError(f"geometry must look like 5 or 2x3, got {text!r}") from None


def cmd_lemma3(args: argparse.Namespace) -> int:
    tol = args.tolerance if args.tolerance is not None else 1e-12
    rows = []
    ok = True
    for g in args.geometry or ["2", "3", "4", "5", "6", "2x3"]:
        try:
            f = vbs.verify_lemma3(_parse_geometry(g))
        except ValueError as exc:
            raise InputError(str(exc)) from None
        passed = f >= 1 - tol
        ok &= passed
        rows.append({"geometry": g, "fidelity": f, "pass": passed})
    _emit(_dump({"results": rows}), args.out)
    return 0 if ok else 1


def cmd_tqc_check(args: argparse.Namespace) -> int:
    tol = args.tolerance if args.tolerance is not None else 1e-9
    rng = np.random.default_rng(args.seed or 0)
    results = {}
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    for name, scheme, gate in (("bell", tqc.pauli_scheme(), np.eye(2)), ("cz", tqc.pauli_scheme(cz, 2), cz)):
        psi = random_state(scheme.d.bit_length() - 1, rng)
        worst_f, worst_p = 1.0, 0.0
        for i in range(len(scheme.operators)):
            r = tqc.teleport_gate(scheme, gate, psi, outcome=i)
            want = QubitState(r.residual.matrix() @ gate @ psi.amplitudes)
            worst_f = min(worst_f, fidelity_up_to_phase(r.output, want))
            worst_p = max(worst_p, abs(r.probability - 1 / scheme.d**2))
        results[name] = {"min_fidelity": worst_f, "max_probability_error": worst_p, "pass": worst_f >= 1 - tol and worst_p <= 1e-10}
    psi = random_state(2, rng)
    target = tqc.GHZ_CZ_TARGET @ psi.amplitudes
    worst = 1.0
    for i in range(8):
        for j in range(8):
            _, out, res, _ = tqc.teleport_cz_fig3(psi, outcomes=(i, j))
            worst = min(worst, fidelity_up_to_phase(out, QubitState(res.matrix() @ target)))
    results["ghz_cz"] = {"pairing": [list(p) for p in tqc.ghz_pairing()], "min_fidelity": worst, "pass": worst >= 1 - tol}
    _emit(_dump(results), args.out)
    return 0 if all(r["pass"] for r in results.values()) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mbqcc", description="Measurement-based quantum computation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tolerance", type=float, default=None)
        p.add_argument("--out", default=None, help="output file (directory for compile)")

    p = sub.add_parser("compile", help="compile a circuit to a pattern, schedule and depth report")
    p.add_argument("circuit")
    p.add_argument("--two-layer", action="store_true")
    p.add_argument("--one-qubit", choices=["native", "w", "euler"], default="native")
    common(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("verify", help="branch-exhaustive check of a circuit or pattern")
    p.add_argument("file")
    p.add_argument("--mode", choices=["exhaustive"], default="exhaustive")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="seeded sampling of a pattern, CSV output")
    p.add_argument("pattern")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--input", default=None, help="product input label over 0 1 + -")
    p.add_argument("--mode", choices=["sample"], default="sample")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("ladder", help="joint probability or samples on a ladder state")
    p.add_argument("spec")
    p.add_argument("query", nargs="?")
    p.add_argument("--shots", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("lemma3", help="projected bond state versus cluster state")
    p.add_argument("--geometry", action="append", help="line length (5) or grid (2x3); repeatable")
    common(p)
    p.set_defaults(func=cmd_lemma3)

    p = sub.add_parser("tqc-check", help="teleportation branch laws")
    common(p)
    p.set_defaults(func=cmd_tqc_check)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "tolerance", None) is None and args.command == "verify":
        args.tolerance = 1e-9
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
