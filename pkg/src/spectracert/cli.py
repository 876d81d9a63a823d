"""Command-line front end.

Subcommands wrap the library searches and emit certificate JSON next to a
human-readable (or ``--json``) run report.  Two rules hold for every
command: nothing is written to disk unless its independent re-verification
passed first, and reports are deterministic for fixed inputs and settings
(wall-clock timings appear only behind ``--timings``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .certificates import (
    InfeasibilityCertificate,
    NotFoundUpToLevel,
    boundedness_certificate,
    classify,
    infeasibility_level,
    load_certificate,
    lowdim_certificate,
    save_certificate,
)
from .duals import SdpInstance, build_sos_dual, extract_sos_solution, gap_report
from .pencil import LinearPencil, SdpaParseError, load_pencil, load_sdpa, save_pencil
from .polynomials import (
    EXACT,
    PolynomialParseError,
    format_polynomial,
    parse_polynomial,
)
from .verify import rationalize_membership


@dataclass
class RunReport:
    """One command invocation: inputs, artifacts, outcome.

    ``inputs`` maps a role name to path and content digest; ``outputs``
    lists files written (always re-verified before writing); ``status``
    is a stable machine-readable tag; ``lines`` is the human transcript.
    """
    command: str
    status: str = "ok"
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    timings_ms: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)

    def add_input(self, role: str, path) -> None:
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        self.inputs[role] = {"path": str(path), "sha256": digest}

    def say(self, text: str) -> None:
        self.lines.append(text)

    def to_json_dict(self, with_timings: bool) -> dict:
        out = {
            "command": self.command,
            "status": self.status,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "details": self.details,
        }
        if with_timings:
            out["timings_ms"] = self.timings_ms
        return out


class _Phases:
    """Accumulates per-phase wall-clock milliseconds."""

    def __init__(self, report: RunReport):
        self.report = report
        self.mark = time.perf_counter()

    def done(self, name: str) -> None:
        now = time.perf_counter()
        self.report.timings_ms[name] = round((now - self.mark) * 1000, 3)
        self.mark = now


def _emit(report: RunReport, args) -> None:
    if args.json:
        print(json.dumps(report.to_json_dict(args.timings),
                         indent=1, sort_keys=True))
        return
    for line in report.lines:
        print(line)
    if args.timings:
        for name, ms in report.timings_ms.items():
            print(f"timing {name}: {ms} ms")


def _default_out(input_path, suffix: str) -> Path:
    return Path(Path(input_path).stem + suffix)


def _write_certificate(cert, path, report: RunReport) -> None:
    save_certificate(cert, path)
    report.outputs.append(str(path))
    report.say(f"wrote {path}")


def _maybe_exact(pencil, cert, args, report: RunReport):
    """Try the exact upgrade of a float refutation certificate."""
    if args.mode != "exact" or cert.mode == EXACT:
        return cert
    exact = rationalize_certificate(pencil, cert)
    if exact is None:
        report.say("exact upgrade unavailable; keeping float certificate")
        return cert
    report.say("certificate upgraded to exact arithmetic")
    return exact


def _human_label(label: str) -> str:
    return label.replace("_", " ")


def cmd_classify(args) -> int:
    report = RunReport("classify")
    phases = _Phases(report)
    pencil = load_pencil(args.pencil)
    report.add_input("pencil", args.pencil)
    phases.done("load")
    outcome = classify(pencil, tol=args.tol)
    phases.done("solve")
    headline = _human_label(outcome.label)
    if outcome.certificate is not None:
        headline += f", level {outcome.certificate.level}"
    report.say(headline)
    report.status = outcome.label
    report.details["label"] = outcome.label
    out = Path(args.out) if args.out else _default_out(args.pencil, ".cert.json")
    if outcome.certificate is not None:
        cert = _maybe_exact(pencil, outcome.certificate, args, report)
        check = cert.verify(pencil, tol=args.tol)
        phases.done("verify")
        if not check.passed:
            report.say("refutation failed re-verification; nothing written")
            report.status = "unverified"
            _emit(report, args)
            return 1
        report.details["level"] = cert.level
        report.say(f"refutation verified ({check.mode} mode)")
        _write_certificate(cert, out, report)
        phases.done("write")
    elif outcome.witness is not None:
        point = [float(v) for v in np.atleast_1d(outcome.witness)]
        w = np.linalg.eigvalsh(pencil.to_float().evaluate(point))
        phases.done("verify")
        if w[0] < -args.tol:
            report.say("witness failed the eigenvalue recheck; nothing written")
            report.status = "unverified"
            _emit(report, args)
            return 1
        report.say(f"witness point {point} has min eigenvalue {w[0]:.6g}")
        payload = {"kind": "witness", "nvars": pencil.nvars,
                   "point": point, "min_eig": float(w[0])}
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
        report.outputs.append(str(out))
        report.say(f"wrote {out}")
        phases.done("write")
    else:
        report.say("no certificate or witness found up to the level bound")
        _emit(report, args)
        return 1
    _emit(report, args)
    return 0


def cmd_certify_infeasible(args) -> int:
    report = RunReport("certify-infeasible")
    phases = _Phases(report)
    pencil = load_pencil(args.pencil)
    report.add_input("pencil", args.pencil)
    phases.done("load")
    search = infeasibility_level(pencil, max_level=args.max_level,
                                 tol=args.tol)
    phases.done("solve")
    if not search.found:
        report.status = "not-found"
        report.say("no refutation found up to the level bound")
        report.details["statuses"] = {str(k): v
                                      for k, v in search.statuses.items()}
        _emit(report, args)
        return 1
    cert = _maybe_exact(pencil, search.certificate, args, report)
    check = cert.verify(pencil, tol=args.tol)
    phases.done("verify")
    if not check.passed:
        report.status = "unverified"
        report.say("refutation failed re-verification; nothing written")
        _emit(report, args)
        return 1
    report.status = "certified"
    report.details["level"] = cert.level
    report.say(f"infeasible at level {cert.level} ({check.mode} mode)")
    out = Path(args.out) if args.out else _default_out(args.pencil,
                                                       ".infeasibility.json")
    _write_certificate(cert, out, report)
    phases.done("write")
    _emit(report, args)
    return 0


def cmd_certify_lowdim(args) -> int:
    report = RunReport("certify-lowdim")
    phases = _Phases(report)
    pencil = load_pencil(args.pencil)
    report.add_input("pencil", args.pencil)
    phases.done("load")
    result = lowdim_certificate(pencil, tol=args.tol)
    phases.done("solve")
    if isinstance(result, NotFoundUpToLevel):
        report.status = "not-found"
        report.say("no low-dimensionality certificate found")
        _emit(report, args)
        return 1
    check = result.verify(pencil, tol=args.tol)
    phases.done("verify")
    if not check.passed:
        report.status = "unverified"
        report.say("certificate failed re-verification; nothing written")
        _emit(report, args)
        return 1
    report.status = "certified"
    linear = format_polynomial(result.linear)
    report.details["hyperplane"] = linear
    report.say(f"solution set lies in the hyperplane {linear} = 0")
    out = Path(args.out) if args.out else _default_out(args.pencil,
                                                       ".lowdim.json")
    _write_certificate(result, out, report)
    phases.done("write")
    _emit(report, args)
    return 0


def cmd_certify_bounded(args) -> int:
    report = RunReport("certify-bounded")
    phases = _Phases(report)
    pencil = load_pencil(args.pencil)
    report.add_input("pencil", args.pencil)
    phases.done("load")
    result = boundedness_certificate(pencil, max_level=args.max_level,
                                     tol=args.tol)
    phases.done("solve")
    if isinstance(result, NotFoundUpToLevel):
        report.status = "not-found"
        report.say(f"no boundedness certificate up to level {result.level}")
        _emit(report, args)
        return 1
    check = result.verify(pencil, tol=args.tol)
    phases.done("verify")
    if not check.passed:
        report.status = "unverified"
        report.say("certificate failed re-verification; nothing written")
        _emit(report, args)
        return 1
    report.status = "certified"
    report.details["bound"] = result.bound
    report.details["level"] = result.level
    report.say(f"solution set bounded: N = {result.bound:g} at level "
               f"{result.level}")
    out = Path(args.out) if args.out else _default_out(args.pencil,
                                                       ".boundedness.json")
    _write_certificate(result, out, report)
    phases.done("write")
    _emit(report, args)
    return 0


def cmd_dual_sos(args) -> int:
    report = RunReport("dual-sos")
    phases = _Phases(report)
    pencil = load_pencil(args.pencil)
    report.add_input("pencil", args.pencil)
    objective = parse_polynomial(args.objective, nvars=pencil.nvars)
    inst = SdpInstance(pencil, objective)
    phases.done("load")
    gaps = gap_report(inst, tol=min(args.tol, 1e-8))
    phases.done("solve")

    def fmt(value, status):
        return f"{value:.6g} ({status})" if value is not None else status

    report.say(f"objective: {format_polynomial(objective)}")
    report.say("P*    = " + fmt(gaps.primal_value, gaps.primal_status))
    report.say("D*    = " + fmt(gaps.dual_value, gaps.dual_status))
    report.say("Dsos* = " + fmt(gaps.sos_value, gaps.sos_status))
    report.details["primal"] = {"value": gaps.primal_value,
                                "status": gaps.primal_status}
    report.details["dual"] = {"value": gaps.dual_value,
                              "status": gaps.dual_status}
    report.details["sos"] = {"value": gaps.sos_value,
                             "status": gaps.sos_status,
                             "attained": gaps.sos_status == "optimal"}
    if gaps.solution is None:
        report.status = "no-solution"
        report.say("structured dual produced no extractable point")
        _emit(report, args)
        return 1
    if gaps.verification is None or not gaps.verification.passed:
        report.status = "unverified"
        report.say("structured dual point failed re-verification; "
                   "nothing written")
        _emit(report, args)
        return 1
    phases.done("verify")
    report.status = "certified"
    gap = gaps.gap()
    if gap is not None:
        report.say(f"duality gap P* - D* = {gap:.6g}; closed by the "
                   "structured dual: " + ("yes" if gaps.closed() else "no"))
        report.details["gap"] = gap
        report.details["closed"] = gaps.closed()
    out = Path(args.out) if args.out else _default_out(args.pencil,
                                                       ".sos-dual.json")
    _write_certificate(gaps.solution, out, report)
    phases.done("write")
    _emit(report, args)
    return 0


def cmd_verify(args) -> int:
    report = RunReport("verify")
    phases = _Phases(report)
    pencil = load_pencil(args.pencil)
    report.add_input("pencil", args.pencil)
    report.add_input("certificate", args.certificate)
    with open(args.certificate) as fh:
        payload = json.load(fh)
    phases.done("load")
    if payload.get("kind") == "witness":
        point = payload["point"]
        w = np.linalg.eigvalsh(pencil.to_float().evaluate(point))
        ok = bool(w[0] >= -args.tol)
        report.say(f"witness min eigenvalue {w[0]:.6g}")
        checks = [("witness eigenvalues", ok, f"min eigenvalue {w[0]:.6g}")]
    else:
        cert = load_certificate(args.certificate)
        if args.mode == "exact" and cert.mode != EXACT:
            report.status = "fail"
            report.say("exact mode requested but certificate is float")
            _emit(report, args)
            return 1
        outcome = cert.verify(pencil, tol=args.tol)
        ok = outcome.passed
        checks = outcome.checks
    phases.done("verify")
    for name, passed, detail in checks:
        report.say(f"[{'ok' if passed else 'FAIL'}] {name}: {detail}")
    report.details["checks"] = [
        {"name": n, "passed": p, "detail": d} for n, p, d in checks]
    report.status = "pass" if ok else "fail"
    report.say(f"verification: {report.status}")
    _emit(report, args)
    return 0 if ok else 1


def cmd_functional(args) -> int:
    from .duals import functional_positivity

    report = RunReport("functional")
    phases = _Phases(report)
    with open(args.basis) as fh:
        basis = [np.asarray(M, dtype=float) for M in json.load(fh)]
    report.add_input("basis", args.basis)
    values = [float(Fraction(tok)) for tok in args.values.split(",")]
    phases.done("load")
    result = functional_positivity(basis, values, tol=min(args.tol, 1e-8))
    phases.done("solve")
    report.details["values"] = values
    if result.positive:
        report.status = "positive"
        report.say("functional is nonnegative on the cone")
        out = Path(args.out) if args.out else _default_out(args.basis,
                                                           ".sos-dual.json")
        _write_certificate(result.certificate, out, report)
        phases.done("write")
        _emit(report, args)
        return 0
    report.status = "not-positive"
    report.say("functional is negative somewhere on the cone")
    if result.witness_matrix is not None:
        report.details["witness"] = [[float(v) for v in row]
                                     for row in result.witness_matrix]
        report.details["witness_value"] = result.witness_value
        report.say(f"witness value {result.witness_value:.6g} at cone member "
                   f"{np.round(result.witness_matrix, 6).tolist()}")
    _emit(report, args)
    return 1


def cmd_import_sdpa(args) -> int:
    report = RunReport("import-sdpa")
    phases = _Phases(report)
    pencil = load_sdpa(args.input)
    report.add_input("sdpa", args.input)
    phases.done("load")
    out = Path(args.out) if args.out else _default_out(args.input,
                                                       ".pencil.json")
    save_pencil(pencil, out)
    report.outputs.append(str(out))
    report.status = "imported"
    report.say(f"pencil with {pencil.nvars} variables, size {pencil.size}")
    report.say(f"wrote {out}")
    phases.done("write")
    _emit(report, args)
    return 0


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-6,
                        help="verification tolerance (default 1e-6)")
    common.add_argument("--mode", choices=("exact", "float"), default="float",
                        help="try exact-arithmetic certificates when 'exact'")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for randomized searches (reserved; the "
                             "shipped searches are deterministic)")
    common.add_argument("--json", action="store_true",
                        help="machine-readable run report on stdout")
    common.add_argument("--timings", action="store_true",
                        help="include wall-clock phase timings in the report")

    parser = argparse.ArgumentParser(
        prog="spectracert",
        description="certificates for linear matrix inequalities")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("classify", parents=[common],
                       help="decide the feasibility class of a pencil")
    p.add_argument("pencil")
    p.add_argument("-o", "--out", help="certificate/witness output path")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("certify-infeasible", parents=[common],
                       help="search the refutation hierarchy")
    p.add_argument("pencil")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--max-level", type=int, default=None,
                       help="cap the hierarchy level")
    group.add_argument("--auto-bound", action="store_true",
                       help="use the dimension-based level bound (default)")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_certify_infeasible)

    p = sub.add_parser("certify-lowdim", parents=[common],
                       help="certify that the solution set has empty interior")
    p.add_argument("pencil")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_certify_lowdim)

    p = sub.add_parser("certify-bounded", parents=[common],
                       help="certify boundedness of the solution set")
    p.add_argument("pencil")
    p.add_argument("--max-level", type=int, default=3)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_certify_bounded)

    p = sub.add_parser("dual-sos", parents=[common],
                       help="solve primal, standard dual, and structured dual")
    p.add_argument("pencil")
    p.add_argument("--objective", required=True,
                   help="linear objective, e.g. '1 + 2*x1 - x2'")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_dual_sos)

    p = sub.add_parser("verify", parents=[common],
                       help="re-check a certificate against a pencil")
    p.add_argument("pencil")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("functional", parents=[common],
                       help="decide positivity of a functional on a "
                            "matrix cone")
    p.add_argument("--basis", required=True,
                   help="JSON file holding a list of symmetric matrices")
    p.add_argument("--values", required=True,
                   help="comma-separated functional values on the basis")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_functional)

    p = sub.add_parser("import-sdpa", parents=[common],
                       help="convert an SDPA sparse file to pencil JSON")
    p.add_argument("input")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_import_sdpa)

    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SdpaParseError, PolynomialParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON at line {exc.lineno}, column "
              f"{exc.colno}: {exc.msg}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
