"""Command-line interface: every verb reads JSON files and prints a JSON report.

Exit codes: 0 success, 2 invalid input (missing file, bad schema, pattern
mismatch, failed validation), 3 infeasible protocol.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import channel, lindblad, sacrifice, standard_forms, twirl
from .linalg import DimensionError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 2, 3


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = EXIT_INVALID, extra: dict | None = None):
        super().__init__(message)
        self.code, self.exit_code, self.extra = code, exit_code, extra or {}

    def report(self) -> dict:
        return {"error": self.code, "message": str(self), **self.extra}


def _jsonable(x):
    if isinstance(x, dict):
        return {(k if isinstance(k, str) else "".join(map(str, k)) if isinstance(k, tuple) else str(k)): _jsonable(v)
                for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(report: dict) -> str:
    return json.dumps(_jsonable(report), separators=(",", ":"), allow_nan=False)


def _read_json(path: str | Path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise CliError("file-not-found", f"no such file: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError("schema", f"{path}: invalid JSON ({exc})") from exc


def _channel(path) -> channel.ChoiState:
    if path is None:
        raise CliError("usage", "--in is required")
    return channel.channel_from_dict(_read_json(path))


def _matrix(data: dict, key: str = "") -> np.ndarray:
    try:
        return np.asarray(data[key + "re"], dtype=float) + 1j * np.asarray(data[key + "im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError("schema", f"matrix needs '{key}re' and '{key}im' arrays") from exc


def _write_channel(e: channel.ChoiState, out) -> None:
    if out:
        channel.save_channel(e, out)


def _twirl_set(name: str, e: channel.ChoiState, alpha) -> twirl.TwirlSet:
    if name.startswith("custom:"):
        return twirl.load_custom_set(name.split(":", 1)[1])
    parties = e.parties
    d = e.in_dims[0]
    if name == "pauli":
        return twirl.pauli_set(d, parties)
    if name == "depolarizing":
        return twirl.depolarizing_set(d, parties)
    if name == "phase-gate":
        return twirl.phase_gate_set(alpha)
    if name == "cnot":
        return twirl.cnot_form_set()
    if name == "swap":
        return twirl.swap_set(d)
    raise CliError("usage", f"unknown twirl set {name!r}")


def _form(e: channel.ChoiState, gate: str | None, alpha) -> dict:
    if gate is None:
        return standard_forms.extract_pauli_channel(e).to_dict()
    if gate == "white-noise":
        return standard_forms.extract_white_noise(e).to_dict()
    if gate == "phase":
        if alpha is None:
            raise CliError("usage", "--alpha is required for the phase gate")
        return standard_forms.extract_phase_gate_form(e, alpha).to_dict()
    if gate == "cnot":
        return standard_forms.extract_cnot_form(e).to_dict()
    if gate == "swap":
        return standard_forms.extract_swap_form(e).to_dict()
    raise CliError("usage", f"unknown gate {gate!r}")


# Verbs ----------------------------------------------------------------------


def cmd_validate(args) -> dict:
    e = _channel(args.inp)
    report = {"cp": e.is_cp(), "tp": e.is_tp()}
    if e.in_dims == e.out_dims:
        report["fidelity_identity"] = channel.jamiolkowski_fidelity(e, np.eye(e.d_in))
    return report


def cmd_apply(args) -> dict:
    e = _channel(args.inp)
    if not args.rho:
        raise CliError("usage", "--rho is required")
    rho = _matrix(_read_json(args.rho))
    out = channel.apply(e, rho)
    return {"re": out.real, "im": out.imag}


def cmd_choi(args) -> dict:
    if not args.kraus:
        raise CliError("usage", "--kraus is required")
    data = _read_json(args.kraus)
    try:
        ops = [_matrix(k) for k in data["kraus"]]
        e = channel.choi_from_kraus(ops, tuple(data["in_dims"]), tuple(data.get("out_dims", data["in_dims"])))
    except (KeyError, TypeError) as exc:
        raise CliError("schema", "Kraus file needs 'kraus' and 'in_dims'") from exc
    _write_channel(e, args.out)
    return json.loads(channel.channel_to_json(e))


def cmd_kraus(args) -> dict:
    e = _channel(args.inp)
    ops = channel.kraus_from_choi(e)
    return {"in_dims": list(e.in_dims), "out_dims": list(e.out_dims),
            "kraus": [{"re": k.real, "im": k.imag} for k in ops]}


def cmd_twirl(args) -> dict:
    e = _channel(args.inp)
    s = _twirl_set(args.set or "pauli", e, args.alpha)
    out = twirl.twirl(e, s)
    _write_channel(out, args.out)
    report = {"set": s.label, "elements": len(s)}
    if args.set in (None, "pauli"):
        basis, _ = standard_forms.bell_product_basis(e.in_dims[0], e.parties)
        m = basis.conj().T @ out.matrix @ basis
        report["form"] = standard_forms.extract_pauli_channel(out).to_dict()
        report["offdiagonal_residual"] = float(np.max(np.abs(m - np.diag(np.diag(m)))))
    elif args.set == "depolarizing":
        report["form"] = standard_forms.extract_white_noise(out).to_dict()
    elif args.set == "phase-gate" and args.alpha is not None:
        report["form"] = standard_forms.extract_phase_gate_form(out, args.alpha).to_dict()
    elif args.set == "cnot":
        report["form"] = standard_forms.extract_cnot_form(out).to_dict()
    elif args.set == "swap":
        report["form"] = standard_forms.extract_swap_form(out).to_dict()
    return report


def cmd_form(args) -> dict:
    return _form(_channel(args.inp), args.gate, args.alpha)


def cmd_sacrifice(args) -> dict:
    if args.target != "white-noise":
        raise CliError("usage", "only --target white-noise is supported")
    e = _channel(args.inp)
    if args.gate == "swap":
        res = sacrifice.swap_sacrifice(e)
    elif args.gate == "cnot":
        res = sacrifice.cnot_sacrifice(e)
    elif args.gate == "phase":
        if args.alpha is None:
            raise CliError("usage", "--alpha is required for the phase gate")
        res = sacrifice.phase_gate_sacrifice(e, args.alpha)
    elif args.gate in (None, "identity"):
        res = sacrifice.identity_channel_sacrifice(e)
    else:
        raise CliError("usage", f"unknown gate {args.gate!r}")
    if res.output is not None:
        _write_channel(res.output, args.out)
    report = res.to_dict()
    if not args.emit_schedule:
        report.pop("schedule", None)
    return report


def cmd_lindblad(args) -> dict:
    if not args.inp:
        raise CliError("usage", "--in is required")
    z = lindblad.generator_from_dict(_read_json(args.inp))
    t = 1.0 if args.time is None else args.time
    if args.steps is None:
        out = lindblad.evolve(z, t)
        _write_channel(out, args.out)
        return {"time": t, "cp": out.is_cp(), "tp": out.is_tp()}
    name = args.set or "pauli"
    if name == "phase-gate":
        s = twirl.phase_gate_set()
    elif name == "pauli":
        s = twirl.pauli_set(2, z.qubits)
    elif name == "depolarizing":
        s = twirl.depolarizing_set(2, z.qubits)
    elif name.startswith("custom:"):
        s = twirl.load_custom_set(name.split(":", 1)[1])
    else:
        raise CliError("usage", f"unknown set {name!r}")
    schedule = lindblad.PulseSchedule.from_set(s, args.steps, t)
    out = lindblad.stroboscopic_evolve(z, schedule, args.mode)
    exact = lindblad.evolve(lindblad.schedule_average(z, schedule), t)
    _write_channel(out, args.out)
    report = {
        "time": t,
        "steps": args.steps,
        "mode": args.mode,
        "set": s.label,
        "trace_distance_to_limit": channel.trace_distance(out, exact),
    }
    if args.emit_schedule:
        report["schedule"] = schedule.to_dict()
    return report


def cmd_distance(args) -> dict:
    a, b = _channel(args.inp), _channel(args.other)
    return {"trace_distance": channel.trace_distance(a, b), "hilbert_schmidt": channel.hilbert_schmidt(a, b)}


VERBS = {
    "validate": cmd_validate,
    "apply": cmd_apply,
    "choi": cmd_choi,
    "kraus": cmd_kraus,
    "twirl": cmd_twirl,
    "form": cmd_form,
    "sacrifice": cmd_sacrifice,
    "lindblad": cmd_lindblad,
    "distance": cmd_distance,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noiseforms", description="Standard forms of noisy quantum operations.")
    parser.add_argument("verb", choices=sorted(VERBS))
    parser.add_argument("--in", dest="inp", help="input channel or generator JSON")
    parser.add_argument("--out", help="write the resulting channel JSON here")
    parser.add_argument("--other", help="second channel (distance)")
    parser.add_argument("--rho", help="density matrix JSON {re, im} (apply)")
    parser.add_argument("--kraus", help="Kraus operator JSON (choi)")
    parser.add_argument("--set", help="pauli | depolarizing | phase-gate | cnot | swap | custom:FILE")
    parser.add_argument("--gate", choices=["swap", "cnot", "phase", "identity", "white-noise"])
    parser.add_argument("--alpha", type=float, help="phase-gate angle in radians")
    parser.add_argument("--target", default="white-noise")
    parser.add_argument("--steps", type=int, help="stroboscopic repetitions M")
    parser.add_argument("--time", type=float, help="total evolution time")
    parser.add_argument("--mode", choices=["sequential", "random"], default="sequential")
    parser.add_argument("--emit-schedule", action="store_true", help="include the mixing or pulse schedule")
    parser.add_argument("--batch", help="run the verb on every *.json file in this directory (as --in)")
    return parser


def run_one(args) -> tuple[int, dict]:
    try:
        return EXIT_OK, VERBS[args.verb](args)
    except CliError as exc:
        return exc.exit_code, exc.report()
    except sacrifice.InfeasibleError as exc:
        return EXIT_INFEASIBLE, {"error": "infeasible", "message": str(exc)}
    except standard_forms.PatternError as exc:
        return EXIT_INVALID, exc.report()
    except (ValidationError, DimensionError) as exc:
        return EXIT_INVALID, {"error": "validation", "message": str(exc)}


def run(argv=None) -> tuple[int, str]:
    args = build_parser().parse_args(argv)
    if args.batch:
        files = sorted(Path(args.batch).glob("*.json"))
        if not files:
            return EXIT_INVALID, dumps({"error": "file-not-found", "message": f"no JSON files in {args.batch}"})

        def one(path):
            sub = argparse.Namespace(**{**vars(args), "inp": str(path), "out": None, "batch": None})
            return path.name, run_one(sub)

        with ThreadPoolExecutor() as pool:
            results = list(pool.map(one, files))
        code = max(c for _, (c, _) in results)
        return code, dumps({name: {"exit": c, "report": r} for name, (c, r) in results})
    code, report = run_one(args)
    return code, dumps(report)


def main(argv=None) -> int:
    code, text = run(argv)
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
