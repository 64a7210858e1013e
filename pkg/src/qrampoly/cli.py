"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import random
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .circuit_ir import CircuitError, ToffoliDecomp, export_qasm, export_text, load_circuit, measure
from .ft_estimator import (
    EstimateError,
    SurfaceParams,
    compare_ratios,
    plan_distillation,
    qram_logical_costs,
    required_pout,
    rough_report,
    surface_estimate,
)
from .polyenc import EncodingError
from .qlut_synth import QlutConfig, QlutError, default_split, measured_ancillae, qlut_resources
from .qlut_synth import synthesize as synth_qlut_full
from .qram_synth import MAX_BITS, Mode, QramConfig, QramError, Variant, qram_resources, synthesize
from .revsim import grover, grover_success_exact, verify_phase, verify_read, verify_write
from .toffopt import OptError, optimize, parse_spec, verify_equiv
from .wordfile import WordFileError, parse_words

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

USAGE_ERRORS = (QramError, QlutError, EstimateError, OptError, EncodingError, CircuitError, WordFileError, OSError)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- manifest and output


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    tool: str = "qrampoly"
    version: str = __version__
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = run_timestamp()

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "version": self.version,
            "subcommand": self.subcommand,
            "config": self.config,
            "inputs": self.inputs,
            "timestamp": self.timestamp,
        }


def run_timestamp() -> str:
    """UTC ISO time; SOURCE_DATE_EPOCH pins it for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.replace(microsecond=0).isoformat()


def digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


class Run:
    """Collects input digests while a subcommand reads its files."""

    def __init__(self, args: argparse.Namespace, name: str):
        self.args = args
        self.name = name
        self.inputs: dict[str, str] = {}

    def read(self, path: str) -> str:
        data = Path(path).read_bytes()
        self.inputs[path] = digest(data)
        return data.decode()

    def manifest(self) -> RunManifest:
        skip = {"func", "command", "target"}
        config = {k: v for k, v in sorted(vars(self.args).items()) if k not in skip}
        return RunManifest(self.name, config, dict(sorted(self.inputs.items())))


def _flatten(d: Any, prefix: str = "") -> list[tuple[str, Any]]:
    """Dotted-key rows; dicts and lists of dicts are expanded, other values kept whole."""
    if isinstance(d, dict):
        items = d.items()
    elif isinstance(d, list) and d and all(isinstance(v, dict) for v in d):
        items = enumerate(d)
    else:
        return [(prefix, d)]
    rows = []
    for k, v in items:
        rows += _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    return rows


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    rows = _flatten(doc)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in rows:
            w.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])
        return buf.getvalue()
    return "".join(f"{k}: {json.dumps(v) if isinstance(v, (list, dict)) else v}\n" for k, v in rows)


def emit(run: Run, body: dict, text: str | None = None) -> None:
    """Write the report (manifest embedded) to --out or stdout."""
    args = run.args
    if text is None:
        text = render({"manifest": run.manifest().to_dict(), **body}, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def write_circuit(path: str | None, c) -> None:
    if path:
        Path(path).write_text(export_qasm(c) if path.endswith(".qasm") else export_text(c))


# ---------------------------------------------------------------- shared helpers


def _decomp(args) -> ToffoliDecomp:
    return ToffoliDecomp.from_name(args.decomp)


def _n(args) -> int:
    if args.n is None:
        raise UsageError("-n is required")
    return args.n


def _random_words(rng: random.Random, count: int, ell: int) -> list[int]:
    return [rng.randrange(1 << ell) for _ in range(count)]


# ---------------------------------------------------------------- synth


def cmd_synth_qram(args) -> int:
    run = Run(args, "synth qram")
    n = _n(args)
    if not 2 <= n <= MAX_BITS:
        raise UsageError(f"-n must be in [2, {MAX_BITS}] for synthesis, got {n}")
    cfg = QramConfig(n, args.ell, Mode(args.mode), Variant(args.variant), args.parallel_readout)
    synthesis = synthesize(cfg)
    c = synthesis.circuit
    decomp = _decomp(args)
    r = measure(c, decomp)
    enc = measure(synthesis.encoding_circuit(), decomp)
    formula = qram_resources(n, args.ell, cfg.variant, args.parallel_readout)
    summary = {
        "toffoli_pairs": r.toffoli_pair_count,
        "toffoli_count": r.toffoli_count,
        "toffoli_compute_count": r.toffoli_compute_count,
        "toffoli_depth": r.toffoli_depth,
        "encoding_toffoli_depth": enc.toffoli_depth,
        "cnot_pairs": r.cnot_pair_count,
        "non_memory_qubits": r.non_memory_qubits,
        "qubit_count": r.qubit_count,
        "t_count": r.t_count,
        "t_depth": r.t_depth,
    }
    write_circuit(args.circuit_out, c)
    emit(run, {"summary": summary, "measured": r.to_dict(), "formula": formula.to_dict()})
    return EXIT_OK


def _load_table(run: Run, args, n: int, ell: int) -> list[int]:
    if args.table:
        words = parse_words(run.read(args.table), ell, args.word_format)
        if len(words) != 1 << n:
            raise UsageError(f"table has {len(words)} words, expected {1 << n}")
        return words
    return _random_words(random.Random(args.seed), 1 << n, ell)


def _split(args) -> tuple[int, int]:
    if args.n1 is not None and args.n2 is not None:
        return args.n1, args.n2
    if args.n is not None and args.n1 is None and args.n2 is None:
        return default_split(args.n)
    if args.n is not None:
        n1 = args.n1 if args.n1 is not None else args.n - args.n2
        return n1, args.n - n1
    raise UsageError("give --n1 and --n2, or -n for the default split")


def cmd_synth_qlut(args) -> int:
    run = Run(args, "synth qlut")
    n1, n2 = _split(args)
    if n1 < 1 or n2 < 1:
        raise UsageError("both address groups need at least one bit")
    table = _load_table(run, args, n1 + n2, args.ell)
    cfg = QlutConfig(n1, n2, args.ell, table)
    synthesis = synth_qlut_full(cfg)
    c = synthesis.circuit
    r = measure(c, _decomp(args))
    f = qlut_resources(n1, n2, args.ell)
    summary = {
        "toffoli_count": r.toffoli_compute_count,
        "toffoli_depth": r.toffoli_compute_depth,
        "ancillae": measured_ancillae(c),
        "table_x_gates": sum(bin(w).count("1") for w in table),
        "t_count": r.t_count,
        "t_depth": r.t_depth,
    }
    write_circuit(args.circuit_out, c)
    emit(run, {"summary": summary, "measured": r.to_dict(), "formula": f.to_dict()})
    return EXIT_OK


# ---------------------------------------------------------------- verify


def _verify_target(run: Run, args):
    """A circuit from --circuit, or a freshly synthesized one; returns (target, n, ell)."""
    if args.circuit:
        c = load_circuit(run.read(args.circuit), lenient=True)
        for reg in ("address", "memory", "out"):
            if reg not in c.layout:
                raise UsageError(f"circuit has no '{reg}' register")
        return c, c.layout["address"].size, c.layout["out"].size
    n = _n(args)
    mode = {"read": Mode.READ, "write": Mode.WRITE, "phase": Mode.PHASE}[args.target]
    ell = 1 if mode is Mode.PHASE else args.ell
    return QramConfig(n, ell, mode, Variant(args.variant), args.parallel_readout), n, ell


def _memories(run: Run, args, n: int, ell: int) -> list[list[int]]:
    if args.memory:
        words = parse_words(run.read(args.memory), ell, args.word_format)
        if len(words) != 1 << n:
            raise UsageError(f"memory has {len(words)} words, expected {1 << n}")
        return [words]
    rng = random.Random(args.seed)
    return [_random_words(rng, 1 << n, ell) for _ in range(args.trials)]


def cmd_verify(args) -> int:
    run = Run(args, f"verify {args.target}")
    if args.target == "equiv":
        return _verify_equiv(run, args)
    target, n, ell = _verify_target(run, args)
    if isinstance(target, QramConfig):
        target = synthesize(target).circuit
    rng = random.Random(args.seed)
    results = []
    for mem in _memories(run, args, n, ell):
        if args.target == "read":
            v = verify_read(target, mem)
        elif args.target == "write":
            bus = args.bus if args.bus is not None else rng.randrange(1, 1 << ell)
            v = verify_write(target, mem, bus)
            v.extra["bus"] = bus
        else:
            v = verify_phase(target, mem)
        results.append(v)
        if not v.passed:
            break
    passed = all(v.passed for v in results)
    body = {"passed": passed, "n": n, "ell": ell, "trials": [v.to_dict() for v in results]}
    emit(run, body)
    return EXIT_OK if passed else EXIT_FAIL


def _verify_equiv(run: Run, args) -> int:
    if not args.spec:
        raise UsageError("verify equiv needs --spec")
    S = parse_spec(run.read(args.spec))
    n = _spec_n(S, args.n)
    if args.circuit:
        c = load_circuit(run.read(args.circuit), lenient=True)
    else:
        c = optimize(S, n).circuit
    v = verify_equiv(c, S, n)
    emit(run, {"passed": v.passed, "n": n, "verdict": v.to_dict()})
    return EXIT_OK if v.passed else EXIT_FAIL


def _spec_n(S, n: int | None) -> int:
    widths = {s.n for s in S}
    if len(widths) > 1:
        raise UsageError(f"mixed bit-string lengths in spec: {sorted(widths)}")
    if widths and n is not None and widths != {n}:
        raise UsageError(f"spec strings have length {widths.pop()}, -n says {n}")
    return widths.pop() if widths else (n or 1)


# ---------------------------------------------------------------- estimate


def _params(args) -> SurfaceParams:
    if args.paper_profile:
        return SurfaceParams()
    return SurfaceParams(
        p_in=args.p_in,
        p_g=args.p_g,
        t_cycle=args.t_cycle,
        distances=tuple(args.distances) if args.distances else None,
    )


def cmd_estimate(args) -> int:
    run = Run(args, "estimate")
    if args.tdepth is not None and args.tdepth <= 0:
        raise UsageError("--tdepth must be positive")
    if args.tcount is not None and args.tcount < 1:
        raise UsageError("--tcount must be >= 1")
    n = args.n if args.n is not None else (36 if args.paper_profile else None)
    if args.report == "rough":
        if n is None:
            raise UsageError("rough report needs -n")
        emit(run, {"rough": rough_report(n)})
        return EXIT_OK

    decomp = _decomp(args)
    if n is not None:
        t_count, t_depth = qram_logical_costs(n, args.ell, decomp)
        N = 1 << n
        clifford, logical = 7 * N, N
    else:
        t_count = t_depth = clifford = logical = None
    t_count = args.tcount if args.tcount is not None else t_count
    t_depth = args.tdepth if args.tdepth is not None else t_depth
    clifford = args.clifford_count if args.clifford_count is not None else clifford
    logical = args.logical_qubits if args.logical_qubits is not None else logical
    missing = [k for k, v in (("tcount", t_count), ("tdepth", t_depth), ("clifford-count", clifford), ("logical-qubits", logical)) if v is None]
    if missing:
        raise UsageError("give -n or all of --" + ", --".join(missing))

    params = _params(args)
    plan = plan_distillation(params, required_pout(t_count), use_rule=args.distance_rule == "rule" and not args.paper_profile)
    rep = surface_estimate(params, plan, t_count, t_depth, clifford, logical)
    body = {"surface": rep.to_dict()}
    if n is not None:
        body["ratios"] = compare_ratios(n).to_dict() if n >= 2 else None
    emit(run, body)
    return EXIT_OK


# ---------------------------------------------------------------- optimize


def cmd_optimize(args) -> int:
    run = Run(args, "optimize")
    S = parse_spec(run.read(args.spec)) if args.spec else []
    n = _spec_n(S, args.n)
    result = optimize(S, n)
    write_circuit(args.circuit_out, result.circuit)
    emit(run, {"optimize": result.to_dict()})
    return EXIT_OK if result.verdict.passed else EXIT_FAIL


# ---------------------------------------------------------------- grover


def cmd_grover(args) -> int:
    run = Run(args, "grover")
    n = _n(args)
    if not 2 <= n <= MAX_BITS:
        raise UsageError(f"-n must be in [2, {MAX_BITS}]")
    marked = sorted(set(args.marked))
    if not marked:
        raise UsageError("--marked needs at least one address")
    N = 1 << n
    k = len(marked)
    iters = args.iterations
    if iters is None:
        iters = max(0, math.floor(math.pi / 4 * math.sqrt(N / k)))
    probs = grover(n, marked, iters, args.variant)
    p_marked = float(sum(probs[m] for m in marked))
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["address", "probability"])
        for a, p in enumerate(probs):
            w.writerow([a, repr(float(p))])
        emit(run, {}, buf.getvalue())
    else:
        emit(
            run,
            {
                "grover": {
                    "n": n,
                    "marked": marked,
                    "iterations": iters,
                    "p_marked": p_marked,
                    "p_marked_closed_form": grover_success_exact(N, k, iters),
                    "probabilities": [float(p) for p in probs],
                }
            },
        )
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, default_format: str = "json") -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for random memories/tables (default 0)")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv", "text"), default=default_format)
    p.add_argument("--decomp", choices=("and-gadget", "unit-depth"), default="and-gadget")


def _qram_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-n", type=int, help="address bits")
    p.add_argument("-l", "--ell", type=int, default=1, help="word size in bits")
    p.add_argument("--variant", choices=[v.value for v in Variant], default="sequential")
    p.add_argument("--parallel-readout", action="store_true", help="parity ancillae for a depth-1 read/write layer")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qrampoly", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"qrampoly {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="build a circuit and report its resources")
    ssub = synth.add_subparsers(dest="target", required=True)
    q = ssub.add_parser("qram")
    _qram_flags(q)
    q.add_argument("--mode", choices=[m.value for m in Mode], default="read")
    q.add_argument("--circuit-out", help="circuit file (.qasm suffix selects QASM)")
    _common(q)
    q.set_defaults(func=cmd_synth_qram)
    t = ssub.add_parser("qlut")
    t.add_argument("-n", type=int, help="address bits (default split ceil/floor)")
    t.add_argument("--n1", type=int)
    t.add_argument("--n2", type=int)
    t.add_argument("-l", "--ell", type=int, default=1)
    t.add_argument("--table", help="one word per line, hex or binary (random from --seed if absent)")
    t.add_argument("--word-format", choices=("auto", "hex", "bin"), default="auto")
    t.add_argument("--circuit-out")
    _common(t)
    t.set_defaults(func=cmd_synth_qlut)

    ver = sub.add_parser("verify", help="simulate and check a circuit")
    vsub = ver.add_subparsers(dest="target", required=True)
    for name in ("read", "write", "phase", "equiv"):
        v = vsub.add_parser(name)
        _qram_flags(v)
        v.add_argument("--circuit", help="verify this circuit file instead of synthesizing")
        v.add_argument("--memory", help="memory words, one per line")
        v.add_argument("--word-format", choices=("auto", "hex", "bin"), default="auto")
        v.add_argument("--trials", type=int, default=5, help="random memories when --memory is absent")
        v.add_argument("--bus", type=int, help="word written in write mode (random nonzero if absent)")
        v.add_argument("--spec", help="bit strings for equiv")
        _common(v)
        v.set_defaults(func=cmd_verify)

    est = sub.add_parser("estimate", help="surface-code cost estimate")
    est.add_argument("-n", type=int)
    est.add_argument("-l", "--ell", type=int, default=1)
    est.add_argument("--paper-profile", action="store_true", help="pin every default parameter (n=36 unless -n)")
    est.add_argument("--report", choices=("full", "rough"), default="full")
    est.add_argument("--tcount", type=int)
    est.add_argument("--tdepth", type=int)
    est.add_argument("--clifford-count", type=int)
    est.add_argument("--logical-qubits", type=int)
    est.add_argument("--p-in", type=float, default=1e-4)
    est.add_argument("--p-g", type=float, default=1e-5)
    est.add_argument("--t-cycle", type=float, default=200e-9)
    est.add_argument("--distances", type=int, nargs="+", help="per-round distances, top round first")
    est.add_argument("--distance-rule", choices=("pinned", "rule"), default="pinned")
    _common(est)
    est.set_defaults(func=cmd_estimate)

    opt = sub.add_parser("optimize", help="Toffoli-optimize a group of multi-controlled NOTs")
    opt.add_argument("--spec", help="accepted bit strings, one per line")
    opt.add_argument("-n", type=int, help="string length (needed for an empty spec)")
    opt.add_argument("--circuit-out")
    _common(opt)
    opt.set_defaults(func=cmd_optimize)

    gr = sub.add_parser("grover", help="amplitude amplification with the phase-tag oracle")
    gr.add_argument("-n", type=int)
    gr.add_argument("--marked", type=int, nargs="+", default=[])
    gr.add_argument("--iterations", type=int)
    gr.add_argument("--variant", choices=[v.value for v in Variant], default="sequential")
    _common(gr, default_format="csv")
    gr.set_defaults(func=cmd_grover)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler: Callable[[argparse.Namespace], int] = args.func
    try:
        return handler(args)
    except UsageError as exc:
        print(f"qrampoly: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except USAGE_ERRORS as exc:
        print(f"qrampoly: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
