"""Command-line front end: inspect, parallelize, simulate, verify, bench.

Model and plan documents are JSON; traces are CSV with a one-line header.
Exit codes: 0 success, 1 verification failure, 2 usage or document error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fixtures
from .channels import (
    Channel,
    ParallelModel,
    PrunedTerm,
    assemble_serial,
    realize_channels,
    verify_order,
)
from .discretize import build_mesh, discretize_parallel_model, rule_by_name
from .errors import DocumentError, LtiparError
from .model import Polynomial, StateSpaceModel, TransferMatrix, PolyMatrix, transfer_matrix, validate_model
from .pfd import ResidueSet, Term, decompose_matrix, recombine
from .sim import InputSignal, benchmark, compare, simulate_parallel, simulate_serial
from .spectrum import ComplexGroup, RealGroup, SpectrumClassification, classify_spectrum, find_roots

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


# ---------------------------------------------------------------------------
# documents


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DocumentError(f"cannot read {path}: no such file")
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")


def _matrix(doc: dict, field: str, path: str) -> np.ndarray:
    if field not in doc:
        raise DocumentError(f"{path}: missing field: {field}")
    try:
        return np.asarray(doc[field], dtype=float)
    except (TypeError, ValueError):
        raise DocumentError(f"{path}: field {field} is not a numeric array")


def load_model_document(path: str) -> tuple[str, StateSpaceModel]:
    doc = _load_json(path)
    name = doc.get("name", Path(path).stem)
    has_matrices = any(k in doc for k in ("A", "B", "C", "D"))
    has_params = "dcDriveParams" in doc
    if has_matrices and has_params:
        raise DocumentError(f"{path}: give either matrices or dcDriveParams, not both")
    if has_params:
        params = doc["dcDriveParams"]
        for key in ("J", "R", "c", "L", "Tc"):
            if key not in params:
                raise DocumentError(f"{path}: missing field: dcDriveParams.{key}")
        A, B, C, D = fixtures.expand_dc_drive(
            params["J"], params["R"], params["c"], params["L"], params["Tc"]
        )
    elif has_matrices:
        A = _matrix(doc, "A", path)
        B = _matrix(doc, "B", path)
        C = _matrix(doc, "C", path)
        D = _matrix(doc, "D", path)
    else:
        raise DocumentError(f"{path}: missing field: A/B/C/D or dcDriveParams")
    model = validate_model(A, B, C, D)
    for field in ("n", "m", "r"):
        if field in doc and doc[field] != getattr(model, field):
            raise DocumentError(
                f"{path}: declared {field}={doc[field]} but matrices imply {getattr(model, field)}"
            )
    return name, model


def _spectrum_to_doc(spec: SpectrumClassification) -> dict:
    return {
        "zeroMultiplicity": spec.zero_multiplicity,
        "real": [{"value": g.value, "multiplicity": g.multiplicity} for g in spec.real_groups],
        "complex": [
            {"re": g.re, "im": g.im, "multiplicity": g.multiplicity}
            for g in spec.complex_groups
        ],
    }


def _spectrum_from_doc(doc: dict) -> SpectrumClassification:
    return SpectrumClassification(
        doc["zeroMultiplicity"],
        tuple(RealGroup(g["value"], g["multiplicity"]) for g in doc["real"]),
        tuple(ComplexGroup(g["re"], g["im"], g["multiplicity"]) for g in doc["complex"]),
    )


def _residues_to_doc(res: ResidueSet) -> dict:
    return {
        "feedthrough": res.feedthrough.tolist(),
        "integrator": [t.tolist() for t in res.integrator_terms],
        "real": [[t.tolist() for t in group] for group in res.real_terms],
        "complex": [
            [{"c1": c1.tolist(), "c0": c0.tolist()} for c1, c0 in group]
            for group in res.complex_terms
        ],
    }


def _residues_from_doc(doc: dict) -> ResidueSet:
    return ResidueSet(
        feedthrough=np.asarray(doc["feedthrough"], dtype=float),
        integrator_terms=tuple(np.asarray(t, dtype=float) for t in doc["integrator"]),
        real_terms=tuple(
            tuple(np.asarray(t, dtype=float) for t in group) for group in doc["real"]
        ),
        complex_terms=tuple(
            tuple(
                (np.asarray(t["c1"], dtype=float), np.asarray(t["c0"], dtype=float))
                for t in group
            )
            for group in doc["complex"]
        ),
    )


def write_plan(
    path: str,
    name: str,
    model: StateSpaceModel,
    tf: TransferMatrix,
    spec: SpectrumClassification,
    residues: ResidueSet,
    pm: ParallelModel,
    rule_name: str | None = None,
    T: float | None = None,
) -> None:
    doc = {
        "name": name,
        "n": model.n,
        "m": model.m,
        "r": model.r,
        "model": {
            "A": model.A.tolist(),
            "B": model.B.tolist(),
            "C": model.C.tolist(),
            "D": model.D.tolist(),
        },
        "transfer": {
            "denominator": tf.denominator.coeffs.tolist(),
            "numerator": [
                [tf.numerator.entry(i, j).coeffs.tolist() for j in range(model.r)]
                for i in range(model.m)
            ],
        },
        "spectrum": _spectrum_to_doc(spec),
        "residues": _residues_to_doc(residues),
        "channels": [
            {
                "index": c.index,
                "kind": c.kind,
                "term": {"kind": c.term.kind, "group": c.term.group, "power": c.term.power},
                "order": c.order,
                "labels": list(c.labels),
                "A": c.model.A.tolist(),
                "B": c.model.B.tolist(),
                "C": c.model.C.tolist(),
            }
            for c in pm.channels
        ],
        "pruned": [
            {
                "term": {"kind": p.term.kind, "group": p.term.group, "power": p.term.power},
                "order": p.order,
            }
            for p in pm.pruned
        ],
        "feedthrough": pm.feedthrough.tolist(),
    }
    if rule_name is not None and T is not None:
        dpm = discretize_parallel_model(pm, rule_by_name(rule_name), T)
        mesh = build_mesh([list(ch.equations) for ch in dpm.channels], model.r)
        doc["discretization"] = {
            "rule": rule_name,
            "T": T,
            "mesh": {
                "Ad": mesh.Ad.tolist(),
                "Md": mesh.Md.tolist(),
                "yLayout": list(mesh.y_labels),
                "uLayout": list(mesh.u_labels),
            },
        }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_plan(path: str) -> dict:
    """Plan document parsed into live objects (keys: name, model, spectrum,
    residues, parallel, transfer)."""
    doc = _load_json(path)
    for field in ("channels", "spectrum", "residues", "feedthrough"):
        if field not in doc:
            raise DocumentError(f"{path}: missing field: {field}")
    spec = _spectrum_from_doc(doc["spectrum"])
    residues = _residues_from_doc(doc["residues"])
    channels = []
    for c in doc["channels"]:
        A = np.asarray(c["A"], dtype=float)
        B = np.asarray(c["B"], dtype=float)
        C = np.asarray(c["C"], dtype=float)
        m = C.shape[0]
        r = B.shape[1]
        channels.append(
            Channel(
                index=c["index"],
                kind=c["kind"],
                term=Term(c["term"]["kind"], c["term"]["group"], c["term"]["power"]),
                order=c["order"],
                model=validate_model(A, B, C, np.zeros((m, r))),
                labels=tuple(c["labels"]),
            )
        )
    pruned = tuple(
        PrunedTerm(
            Term(p["term"]["kind"], p["term"]["group"], p["term"]["power"]), p["order"]
        )
        for p in doc.get("pruned", [])
    )
    pm = ParallelModel(
        channels=tuple(channels),
        pruned=pruned,
        feedthrough=np.asarray(doc["feedthrough"], dtype=float),
        spectrum=spec,
    )
    model = None
    if "model" in doc:
        model = validate_model(
            doc["model"]["A"], doc["model"]["B"], doc["model"]["C"], doc["model"]["D"]
        )
    tf = None
    if "transfer" in doc:
        den = Polynomial(doc["transfer"]["denominator"])
        num = PolyMatrix(
            [
                [Polynomial(cell) for cell in row]
                for row in doc["transfer"]["numerator"]
            ]
        )
        tf = TransferMatrix(num, den)
    return {
        "name": doc.get("name", Path(path).stem),
        "model": model,
        "transfer": tf,
        "spectrum": spec,
        "residues": residues,
        "parallel": pm,
        "discretization": doc.get("discretization"),
    }


def _is_plan(path: str) -> bool:
    try:
        return "channels" in _load_json(path)
    except DocumentError:
        return False


# ---------------------------------------------------------------------------
# shared pieces


def parse_input_spec(text: str) -> InputSignal:
    kind, _, rest = text.partition(":")
    args = [a for a in rest.split(",") if a] if rest else []
    try:
        if kind == "step":
            return InputSignal("step", amplitude=float(args[0]) if args else 1.0)
        if kind == "ramp":
            return InputSignal("ramp", amplitude=float(args[0]) if args else 1.0)
        if kind == "sine":
            return InputSignal(
                "sine",
                amplitude=float(args[0]) if args else 1.0,
                frequency=float(args[1]) if len(args) > 1 else 1.0,
                phase=float(args[2]) if len(args) > 2 else 0.0,
            )
        if kind == "table":
            if not args:
                raise DocumentError("table input needs a CSV path: table:<file>")
            samples = np.loadtxt(args[0], delimiter=",", ndmin=2)
            return InputSignal("table", samples=samples)
    except (ValueError, OSError) as exc:
        raise DocumentError(f"bad input spec {text!r}: {exc}")
    raise DocumentError(f"unknown input kind {kind!r} (step | ramp | sine | table)")


def _fmt(value: float) -> str:
    return repr(float(value))


def write_trace_csv(path: str, trace, u_arr: np.ndarray) -> None:
    m = trace.outputs.shape[1]
    r = u_arr.shape[1]
    cols = ["t"]
    cols += ["u"] if r == 1 else [f"u{j + 1}" for j in range(r)]
    cols += ["y"] if m == 1 else [f"y{j + 1}" for j in range(m)]
    per_channel = trace.per_channel
    if per_channel is not None:
        for c in range(per_channel.shape[0]):
            base = f"y{c + 1}" if m == 1 else f"ch{c + 1}"
            cols += [base] if m == 1 else [f"{base}_{j + 1}" for j in range(m)]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(trace.N + 1):
            row = [_fmt(i * trace.T)]
            row += [_fmt(v) for v in u_arr[i]]
            row += [_fmt(v) for v in trace.outputs[i]]
            if per_channel is not None:
                for c in range(per_channel.shape[0]):
                    row += [_fmt(v) for v in per_channel[c, i]]
            fh.write(",".join(row) + "\n")


def write_plot_script(path: str, csv_paths: list[str]) -> None:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 't [s]'",
        "set ylabel 'y'",
    ]
    plots = ", ".join(f"'{p}' using 1:3 with lines" for p in csv_paths)
    lines.append(f"plot {plots}")
    Path(path).write_text("\n".join(lines) + "\n")


class _Stage:
    """Annotates pipeline failures with the stage that produced them."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, LtiparError):
            raise type(exc)(f"[stage: {self.name}] {exc}") from exc
        return False


def decompose_pipeline(model: StateSpaceModel):
    with _Stage("transfer function"):
        tf = transfer_matrix(model)
    with _Stage("eigenvalues"):
        roots = find_roots(tf.denominator)
        spec = classify_spectrum(roots)
    with _Stage("partial fraction decomposition"):
        residues = decompose_matrix(tf, spec)
    with _Stage("channel realization"):
        pm = realize_channels(residues, spec)
    return tf, spec, residues, pm


def _recombination_error(tf: TransferMatrix, residues: ResidueSet, spec) -> float:
    rebuilt = recombine(residues, spec, tf.denominator)
    m, r = tf.shape
    scale = max(
        (np.max(np.abs(tf.numerator.entry(i, j).coeffs)) for i in range(m) for j in range(r)),
        default=1.0,
    )
    scale = max(scale, 1.0)
    worst = 0.0
    n = tf.denominator.degree
    for i in range(m):
        for j in range(r):
            a = tf.numerator.entry(i, j).padded(n + 1)
            b = rebuilt.entry(i, j).padded(n + 1)
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst / scale


# ---------------------------------------------------------------------------
# commands


def cmd_inspect(args) -> int:
    name, model = load_model_document(args.model)
    tf = transfer_matrix(model)
    spec = classify_spectrum(find_roots(tf.denominator))
    print(f"model: {name}")
    print(f"dimensions: n={model.n} states, r={model.r} input(s), m={model.m} output(s)")
    print(f"denominator coefficients (ascending): {tf.denominator.coeffs.tolist()}")
    for i in range(model.m):
        for j in range(model.r):
            print(
                f"numerator[{i}][{j}] coefficients (ascending): "
                f"{tf.numerator.entry(i, j).coeffs.tolist()}"
            )
    print("eigenvalues:")
    if spec.zero_multiplicity:
        print(f"  0 (multiplicity {spec.zero_multiplicity})")
    for g in spec.real_groups:
        print(f"  {g.value:.10g} (multiplicity {g.multiplicity})")
    for g in spec.complex_groups:
        print(f"  {g.re:.10g} +/- {g.im:.10g}i (multiplicity {g.multiplicity})")
    return EXIT_OK


def cmd_parallelize(args) -> int:
    if (args.rule is None) != (args.T is None):
        print("error: --rule and --T must be given together", file=sys.stderr)
        return EXIT_USAGE
    name, model = load_model_document(args.model)
    tf, spec, residues, pm = decompose_pipeline(model)
    write_plan(args.output, name, model, tf, spec, residues, pm, args.rule, args.T)
    report = verify_order(pm, model.n)
    print(f"wrote plan: {args.output}")
    print(f"channels: {len(pm.channels)} (orders {list(report.channel_orders)})")
    if pm.pruned:
        print(f"pruned zero-residue terms: {len(pm.pruned)}")
    return EXIT_OK


def _load_model_or_plan(path: str):
    """Returns (name, model, plan_dict_or_None)."""
    if _is_plan(path):
        plan = load_plan(path)
        model = plan["model"]
        if model is None:
            model = assemble_serial(plan["parallel"])
        return plan["name"], model, plan
    name, model = load_model_document(path)
    return name, model, None


def cmd_simulate(args) -> int:
    if args.steps < 1:
        print("error: --steps must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.T <= 0:
        print("error: --T must be positive", file=sys.stderr)
        return EXIT_USAGE
    name, model, plan = _load_model_or_plan(args.model)
    rule = rule_by_name(args.rule)
    u = parse_input_spec(args.input)
    u_arr = u.sample(args.T, args.steps, model.r)

    written = []
    serial_trace = parallel_trace = None
    if args.engine in ("serial", "both"):
        serial_trace = simulate_serial(model, rule, args.T, args.steps, u)
        path = f"{args.output}_serial.csv"
        write_trace_csv(path, serial_trace, u_arr)
        written.append(path)
    if args.engine in ("parallel", "both"):
        pm = plan["parallel"] if plan else decompose_pipeline(model)[3]
        dpm = discretize_parallel_model(pm, rule, args.T)
        parallel_trace = simulate_parallel(
            dpm, args.steps, u, workers=args.workers, per_channel=args.per_channel
        )
        path = f"{args.output}_parallel.csv"
        write_trace_csv(path, parallel_trace, u_arr)
        written.append(path)
    for path in written:
        print(f"wrote trace: {path}")
    if args.plot_script:
        script = f"{args.output}.gp"
        write_plot_script(script, written)
        print(f"wrote plot script: {script}")
    if serial_trace is not None and parallel_trace is not None:
        stats = compare(serial_trace, parallel_trace)
        print(
            f"serial vs parallel: maxAbs={stats.max_abs:.6e} rms={stats.rms:.6e} "
            f"argmaxStep={stats.argmax_step}"
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.steps < 1 or args.T <= 0:
        print("error: --steps must be >= 1 and --T positive", file=sys.stderr)
        return EXIT_USAGE
    name, model, plan = _load_model_or_plan(args.model)
    if plan:
        tf = plan["transfer"]
        if tf is None:
            tf = transfer_matrix(model)
        spec, residues, pm = plan["spectrum"], plan["residues"], plan["parallel"]
    else:
        tf, spec, residues, pm = decompose_pipeline(model)
    rule = rule_by_name(args.rule)
    u = parse_input_spec(args.input)

    failed = False

    def check(label: str, measured: float, tol: float) -> None:
        nonlocal failed
        ok = measured <= tol
        failed = failed or not ok
        print(f"{'PASS' if ok else 'FAIL'} {label}: {measured:.3e} (tolerance {tol:.1e})")

    check("pfd recombination", _recombination_error(tf, residues, spec), args.pfd_tol)

    report = verify_order(pm, model.n)
    ok = report.passed
    failed = failed or not ok
    print(
        f"{'PASS' if ok else 'FAIL'} order conservation: accounted "
        f"{report.accounted} of {report.expected} (orders {list(report.channel_orders)})"
    )

    dpm = discretize_parallel_model(pm, rule, args.T)
    serial_trace = simulate_serial(model, rule, args.T, args.steps, u)
    parallel_trace = simulate_parallel(dpm, args.steps, u, workers=args.workers)
    stats = compare(serial_trace, parallel_trace)
    check("serial vs parallel trace", stats.max_abs, args.trace_tol)

    print("verification " + ("FAILED" if failed else "passed"))
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_bench(args) -> int:
    if args.steps < 1 or args.T <= 0:
        print("error: --steps must be >= 1 and --T positive", file=sys.stderr)
        return EXIT_USAGE
    name, model, plan = _load_model_or_plan(args.model)
    pm = plan["parallel"] if plan else decompose_pipeline(model)[3]
    rule = rule_by_name(args.rule)
    u = parse_input_spec(args.input)
    worker_counts = tuple(int(w) for w in args.workers.split(","))
    report = benchmark(model, pm, rule, args.T, args.steps, u, worker_counts)
    print(f"bench: {name}")
    print(report)
    if args.output:
        doc = {
            "name": name,
            "steps": report.steps,
            "channels": report.channels,
            "serialSeconds": report.serial_seconds,
            "workerCounts": list(report.worker_counts),
            "parallelSeconds": list(report.parallel_seconds),
            "perChannelSeconds": [list(t) for t in report.per_channel_seconds],
            "summationSeconds": list(report.summation_seconds),
            "speedupPercent": list(report.speedup_percent),
        }
        with open(args.output, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        print(f"wrote report: {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltipar",
        description="Transform serial LTI models into parallel channels and simulate them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print dimensions, transfer function and spectrum")
    p.add_argument("model")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("parallelize", help="write a decomposition plan document")
    p.add_argument("model")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--rule", default=None, help="also record mesh matrices for this rule")
    p.add_argument("--T", type=float, default=None, help="sample time for the mesh record")
    p.set_defaults(func=cmd_parallelize)

    p = sub.add_parser("simulate", help="run the serial and/or parallel engine")
    p.add_argument("model", help="model document or plan document")
    p.add_argument("--engine", choices=("serial", "parallel", "both"), default="both")
    p.add_argument("--rule", default="tustin")
    p.add_argument("--T", type=float, default=1e-5)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--input", default="step:1.0")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--per-channel", action="store_true", help="include per-channel columns")
    p.add_argument("--plot-script", action="store_true", help="emit a gnuplot script")
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="decomposition, order and equivalence checks")
    p.add_argument("model", help="model document or plan document")
    p.add_argument("--rule", default="tustin")
    p.add_argument("--T", type=float, default=1e-5)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--input", default="step:1.0")
    p.add_argument("--workers", type=int, default=3)
    p.add_argument("--pfd-tol", type=float, default=1e-8)
    p.add_argument("--trace-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time the serial and parallel stepping loops")
    p.add_argument("model", help="model document or plan document")
    p.add_argument("--rule", default="tustin")
    p.add_argument("--T", type=float, default=1e-5)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--input", default="step:1.0")
    p.add_argument("--workers", default="1,3", help="comma-separated worker counts")
    p.add_argument("-o", "--output", default=None, help="also write a JSON report")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LtiparError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
