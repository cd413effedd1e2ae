"""Command-line entry point: ``ontodrift <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable, unparsable
or inconsistent input), 3 infeasible scenario.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import ontoformat
from .drift import DriftConfig, significant_drifts
from .embeddings import build_index, consistency_matrix, entailment_vector
from .errors import InfeasibleScenario, OntoDriftError
from .harness.evaluate import METHODS, EvalConfig, evaluate
from .harness.generate import ScenarioConfig, generate
from .learner import LinearModel, Loss, TrainConfig, WeightMode, predict, train
from .stream import Stream, Window, changes, entailments_of, parse_fact, sorted_facts

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# Input and output


def _read_text(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise OntoDriftError(f"cannot read {path}: {exc.strerror}") from None


def load_stream(args) -> Stream:
    if not args.stream and not args.ontology:
        raise UsageError("--stream or --ontology is required")
    doc = ontoformat.Document()
    if args.ontology:
        base = ontoformat.parse(_read_text(args.ontology))
        doc.tbox += base.tbox
        doc.abox += base.abox
        doc.snapshots += base.snapshots
    if args.stream:
        data = ontoformat.parse(_read_text(args.stream))
        doc.tbox += data.tbox
        doc.abox += data.abox
        if doc.snapshots and data.snapshots:
            raise UsageError("snapshots given in both --ontology and --stream")
        doc.snapshots += data.snapshots
    return Stream.from_document(doc)


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _render(args, payload: dict, rows: list, header: list, text_lines: list) -> str:
    if args.format == "json":
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    return "".join(line + "\n" for line in text_lines)


def _window(text: str) -> Window:
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            return Window(int(a), int(b))
        return Window.point(int(text))
    except ValueError:
        raise UsageError(f"bad window {text!r}; use START:END or T") from None


# --------------------------------------------------------------------------
# Commands


def cmd_reason(args) -> int:
    stream = load_stream(args)
    if args.snapshot is None:
        sat = stream.static_saturation()
    else:
        stream.check_window(Window.point(args.snapshot))
        sat = stream.snapshot_saturation(args.snapshot)
    if sat.inconsistent:
        print("error: ontology is inconsistent", file=sys.stderr)
        _emit(args, _render(args, {"consistent": False, "entailments": []}, [], ["entailment"], ["inconsistent"]))
        return EXIT_DATA
    facts = [str(g) for g in sorted_facts(entailments_of(sat))]
    payload = {"consistent": True, "snapshot": args.snapshot, "entailments": facts}
    _emit(args, _render(args, payload, [[f] for f in facts], ["entailment"], facts))
    return EXIT_OK


def cmd_diff(args) -> int:
    stream = load_stream(args)
    cs = changes(stream, _window(args.source), _window(args.target))
    parts = {"new": cs.new, "obsolete": cs.obsolete, "invariant": cs.invariant}
    payload = {k: [str(g) for g in sorted_facts(v)] for k, v in parts.items()}
    rows = [[k, g] for k in parts for g in payload[k]]
    lines = [f"{k}: {', '.join(payload[k]) or '-'}" for k in parts]
    _emit(args, _render(args, payload, rows, ["change", "entailment"], lines))
    return EXIT_OK


def cmd_drift(args) -> int:
    stream = load_stream(args)
    report = significant_drifts(stream, DriftConfig(args.epsilon, args.sigma_min))
    payload = report.to_json()
    rows, lines = [], []
    for d in payload["drifts"]:
        witness = " / ".join(d["abrupt_witness"] or [])
        rows.append([d["i"], d["j"], f"{d['significance']:.7f}", len(d["evidence"]), witness])
        lines.append(f"({d['i']},{d['j']}) significance={d['significance']:.7f} witness={witness or '-'}")
    _emit(args, _render(args, payload, rows, ["i", "j", "significance", "evidence", "witness"], lines or ["no drift"]))
    return EXIT_OK


def cmd_embed(args) -> int:
    stream = load_stream(args)
    if args.kind == "consistency":
        matrix = consistency_matrix(stream)
        payload = {"kind": "consistency", "vectors": [[float(v) for v in row] for row in matrix]}
        rows = [[t] + [f"{v:.6f}" for v in row] for t, row in enumerate(matrix)]
        header = ["snapshot"] + [f"c{j}" for j in range(len(stream))]
    else:
        index = build_index(stream)
        vectors = [entailment_vector(stream, t, index) for t in range(len(stream))]
        payload = {
            "kind": "entailment",
            "index": {"digest": index.digest, "manifest": index.manifest()},
            "vectors": [[int(b) for b in v.bits] for v in vectors],
        }
        rows = [[v.snapshot] + [int(b) for b in v.bits] for v in vectors]
        header = ["snapshot"] + index.manifest()
    lines = [" ".join(str(x) for x in row) for row in rows]
    _emit(args, _render(args, payload, rows, header, lines))
    return EXIT_OK


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epsilon=args.epsilon,
        sigma_min=args.sigma_min,
        kappa=args.kappa,
        budget=args.budget,
        weight_mode=WeightMode(args.mode),
        loss=Loss(args.loss),
        reg_alpha=args.alpha,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=args.seed,
        horizon=args.delta,
    )


def cmd_train(args) -> int:
    stream = load_stream(args)
    try:
        target = parse_fact(args.target)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model = train(stream, target, _train_config(args))
    _emit(args, model.dumps() + "\n")
    return EXIT_OK


def cmd_predict(args) -> int:
    stream = load_stream(args)
    model = LinearModel.loads(_read_text(args.model).decode("utf-8"))
    t = stream.n if args.snapshot is None else args.snapshot
    stream.check_window(Window.point(t))
    score, label = predict(model, entailment_vector(stream, t, model.index))
    payload = {"snapshot": t, "target": None if model.target is None else str(model.target),
               "score": score, "label": label}
    _emit(args, _render(args, payload, [[t, f"{score:.9g}", label]], ["snapshot", "score", "label"],
                        [f"snapshot {t}: score={score:.9g} label={label}"]))
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = ScenarioConfig(
        roads=args.roads,
        horizon_snapshots=args.snapshots,
        drift_fraction=args.drift_fraction,
        drift_severity=args.drift_severity,
        seed=args.seed,
        classes=args.classes,
    )
    stream = generate(cfg)
    _emit(args, ontoformat.serialize(stream.to_document()))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    stream = load_stream(args)
    methods = args.methods.split(",") if args.methods else list(METHODS)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise UsageError(f"unknown method(s): {', '.join(unknown)}")
    cfg = EvalConfig(
        target=args.target,
        classes=args.classes,
        split=args.split,
        horizon=args.delta,
        budget=args.budget,
        seed=args.seed,
        epsilon=args.epsilon,
        sigma_min=args.sigma_min,
    )
    report = evaluate(stream, cfg, methods)
    if args.format == "csv":
        _emit(args, report.to_csv())
        return EXIT_OK
    payload = report.to_json()
    lines = [f"{m}: accuracy={r.accuracy:.4f} ({r.correct}/{r.total})" for m, r in report.methods.items()]
    _emit(args, _render(args, payload, [], [], lines))
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ontodrift", description="Learning over ontology streams with semantic concept drift.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def command(name, func, help_text, inputs=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        if inputs:
            p.add_argument("--stream", metavar="FILE", help="stream file (*.stream)")
            p.add_argument("--ontology", metavar="FILE", help="TBox/ABox file (*.onto)")
        p.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
        p.add_argument("--format", choices=("json", "csv", "text"), default="json")
        return p

    def drift_flags(p, sigma_default=0.5):
        p.add_argument("--epsilon", type=float, default=1 / 3, metavar="R")
        p.add_argument("--sigma-min", type=float, default=sigma_default, metavar="R")

    p = command("reason", cmd_reason, "Saturate T u A (u S(t)) and list entailments.")
    p.add_argument("--snapshot", type=int, metavar="T")

    p = command("diff", cmd_diff, "New, obsolete and invariant entailments between two windows.")
    p.add_argument("--from", dest="source", required=True, metavar="A:B")
    p.add_argument("--to", dest="target", required=True, metavar="C:D")

    p = command("drift", cmd_drift, "Significant semantic concept drifts.")
    drift_flags(p)

    p = command("embed", cmd_embed, "Consistency or entailment vectors of all snapshots.")
    p.add_argument("--kind", choices=("consistency", "entailment"), default="consistency")

    p = command("train", cmd_train, "Train a drift-aware linear model for one target fact.")
    drift_flags(p)
    p.add_argument("--target", required=True, metavar="FACT", help="e.g. 'DisruptedRoad(r2)'")
    p.add_argument("--kappa", type=float, default=0.5, metavar="R")
    p.add_argument("--budget", type=int, default=100, metavar="N")
    p.add_argument("--mode", choices=[m.value for m in WeightMode], default="consistent")
    p.add_argument("--loss", choices=[l.value for l in Loss], default="log")
    p.add_argument("--alpha", type=float, default=1e-3, metavar="R")
    p.add_argument("--learning-rate", type=float, default=0.1, metavar="R")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--delta", type=int, default=1, metavar="INT")
    p.add_argument("--seed", type=int, default=0, metavar="INT")

    p = command("predict", cmd_predict, "Score a snapshot with a trained model.")
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--snapshot", type=int, metavar="T")

    p = command("generate", cmd_generate, "Generate a synthetic traffic stream.", inputs=False)
    p.add_argument("--roads", type=int, default=3)
    p.add_argument("--snapshots", type=int, default=200)
    p.add_argument("--drift-fraction", type=float, default=0.5, metavar="R")
    p.add_argument("--drift-severity", type=float, default=0.2, metavar="R")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--seed", type=int, default=0, metavar="INT")

    p = command("evaluate", cmd_evaluate, "Rolling evaluation of drift-aware learning and baselines.")
    drift_flags(p, sigma_default=0.2)
    p.add_argument("--methods", metavar="LIST", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--target", default="Delay{k}(target)", metavar="TEMPLATE")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--split", type=float, default=0.5, metavar="R")
    p.add_argument("--budget", type=int, default=EvalConfig.budget, metavar="N")
    p.add_argument("--delta", type=int, default=1, metavar="INT")
    p.add_argument("--seed", type=int, default=0, metavar="INT")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleScenario as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OntoDriftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
