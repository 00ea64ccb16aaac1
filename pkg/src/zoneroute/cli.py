"""Command-line interface: generate, split, estimate, train, predict, score, report.

Exit codes: 0 success, 2 usage or validation error, 3 data error, 4 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import Tour, zone_sequence_of
from .data import SplitSpec, SynthConfig, generate_synthetic, load_corpus, save_corpus, stratified_split
from .exceptions import (
    ArtifactError,
    CorpusFormatError,
    InvalidInputError,
    MissingLabelError,
    SizeExceededError,
    ZoneRouteError,
)
from .perceptron import STAGES, StructuredPerceptron, predict_tour
from .pipeline import TwoStageRouter, stop_examples, zone_examples
from .scoring import ScoreReport, score, zone_score
from .stops import order_index, order_stops, report_to_csv, violation_report
from .transitions import QualityWeights, TransitionMatrix
from .tsp import SolveBudget
from .zones import ZoneOrdering

logger = logging.getLogger("zoneroute")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def _read_artifact(path, kind: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ArtifactError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path} is not valid JSON ({exc.msg})") from None
    if not isinstance(data, dict) or data.get("kind") != kind:
        raise ArtifactError(f"{path} is not a {kind} artifact")
    return data


def _budget(args) -> SolveBudget:
    cap = args.iter_cap if args.iter_cap > 0 else None
    return SolveBudget(deadline=args.budget_secs, seed=args.seed, max_iter=cap)


def _weights_arg(text, length, name):
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise InvalidInputError(f"{name} must be comma-separated numbers") from None
    if len(values) != length:
        raise InvalidInputError(f"{name} needs {length} values, got {len(values)}")
    return values


def _load_weights(path, stage):
    data = _read_artifact(path, "weights")
    if data.get("stage") != stage:
        raise ArtifactError(f"{path} holds {data.get('stage')} weights, expected {stage}")
    return tuple(data["weights"])


def _load_matrix(path) -> TransitionMatrix:
    data = _read_artifact(path, "transition_matrix")
    try:
        return TransitionMatrix.from_dict(data)
    except InvalidInputError as exc:
        raise ArtifactError(f"{path}: {exc}") from None


def cmd_generate(args) -> None:
    cfg = SynthConfig(n_instances=args.n_instances, seed=args.seed)
    corpus = generate_synthetic(cfg)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} routes to {args.out}")


def cmd_split(args) -> None:
    spec = SplitSpec(args.test_fraction, args.seed)
    corpus = load_corpus(args.corpus)
    train, test = stratified_split(corpus, spec)
    out = Path(args.out)
    save_corpus(train, out / "train.jsonl")
    save_corpus(test, out / "test.jsonl")
    print(f"train {len(train)}  test {len(test)}")


def cmd_estimate(args) -> None:
    from .transitions import TransitionEstimator

    QualityWeights(args.v_high, args.v_medium, args.v_low)
    corpus = load_corpus(args.corpus)
    est = TransitionEstimator(args.v_high, args.v_medium, args.v_low, args.epsilon)
    est.fit(corpus.instances, zone_index=corpus.zone_index)
    config = {"v_high": args.v_high, "v_medium": args.v_medium, "v_low": args.v_low, "epsilon": args.epsilon,
              "corpus_sha256": _sha256(args.corpus)}
    payload = {"kind": "transition_matrix", "config": config, **est.transition_matrix_.to_dict()}
    _write(args.out, _dump(payload))
    print(f"wrote {len(est.zone_index_)}x{len(est.zone_index_)} transition matrix to {args.out}")


def _validation_scores(stage, weights_list, validation, matrix, budget):
    """Mean validation score for each weight snapshot."""
    problems = [u for u, _ in zone_examples(validation, matrix)] if stage == "zone" else []
    out = []
    for w in weights_list:
        rows = []
        if stage == "zone":
            for u, inst in zip(problems, validation):
                rows.append(zone_score(inst, u.ordering_of(predict_tour(u, w, budget))).score)
        else:
            for inst in validation:
                o = order_index(inst, ZoneOrdering(tuple(zone_sequence_of(inst))))
                rows.append(score(inst, order_stops(inst, o, w, budget)).score)
        out.append(float(np.mean(rows)) if rows else float("nan"))
    return out


def epoch_table(stage, trace, val_scores=None) -> str:
    n = len(trace.weights[0])
    head = ["epoch"] + [f"w{k}" for k in range(n)] + ["updates", "val_score"]
    lines = ["  ".join(f"{h:>9}" for h in head)]
    for e, w in enumerate(trace.weights):
        upd = trace.updates[e - 1] if e > 0 else "-"
        val = f"{val_scores[e]:.4f}" if val_scores else "-"
        cells = [str(e)] + [f"{x:.4f}" for x in w] + [str(upd), val]
        lines.append("  ".join(f"{c:>9}" for c in cells))
    return "\n".join(lines)


def cmd_train(args) -> None:
    default = STAGES[args.stage]
    init = _weights_arg(args.init, len(default), "--init") if args.init else default
    if args.stage == "zone" and not args.matrix:
        raise InvalidInputError("--matrix is required for the zone stage")
    model = StructuredPerceptron(args.stage, learning_rate=args.lr, epochs=args.epochs, init_weights=init,
                                 max_iter=args.iter_cap if args.iter_cap > 0 else None,
                                 budget_secs=args.budget_secs, seed=args.seed)
    budget = _budget(args)
    matrix = _load_matrix(args.matrix) if args.stage == "zone" else None
    corpus = load_corpus(args.corpus)
    examples = zone_examples(corpus, matrix) if args.stage == "zone" else stop_examples(corpus)
    model.fit([u for u, _ in examples], [x for _, x in examples], ids=[i.route_id for i in corpus])
    val = None
    if args.validation:
        val = _validation_scores(args.stage, model.trace_.weights, load_corpus(args.validation).instances,
                                 matrix, budget)
    config = {"stage": args.stage, "init": list(init), "lr": args.lr, "epochs": args.epochs,
              "iter_cap": args.iter_cap, "seed": args.seed, "corpus_sha256": _sha256(args.corpus)}
    if args.matrix:
        config["matrix_sha256"] = _sha256(args.matrix)
    payload = {"kind": "weights", "stage": args.stage, "weights": model.coef_.tolist(),
               "trace": model.trace_.to_dict(), "validation_scores": val, "config": config}
    _write(args.out, _dump(payload))
    print(epoch_table(args.stage, model.trace_, val))


def _predict_chunk(payload):
    router, instances = payload
    return router.predict(instances)


def _chunks(items, n):
    size = max(1, -(-len(items) // n))
    return [items[k:k + size] for k in range(0, len(items), size)]


def cmd_predict(args) -> None:
    zone_w = _load_weights(args.zone_weights, "zone") if args.zone_weights else STAGES["zone"]
    stop_w = _load_weights(args.stop_weights, "stop") if args.stop_weights else STAGES["stop"]
    _budget(args)
    matrix = _load_matrix(args.matrix)
    corpus = load_corpus(args.corpus)
    router = TwoStageRouter.from_parts(matrix, zone_w, stop_w, max_iter=args.iter_cap if args.iter_cap > 0 else None,
                                       budget_secs=args.budget_secs, seed=args.seed)
    instances = list(corpus)
    if args.jobs > 1 and len(instances) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            parts = pool.map(_predict_chunk, [(router, c) for c in _chunks(instances, args.jobs)])
            preds = [p for part in parts for p in part]
    else:
        preds = router.predict(instances)
    config = {"zone_weights": list(zone_w), "stop_weights": list(stop_w), "iter_cap": args.iter_cap,
              "seed": args.seed, "corpus_sha256": _sha256(args.corpus), "matrix_sha256": _sha256(args.matrix)}
    if args.iter_cap <= 0:
        config["budget_secs"] = args.budget_secs
    routes = [p.to_dict(inst) for p, inst in zip(preds, instances)]
    _write(args.out, _dump({"kind": "predictions", "config": config, "routes": routes}))
    print(f"wrote {len(routes)} predicted routes to {args.out}")


def cmd_score(args) -> None:
    corpus = load_corpus(args.corpus)
    data = _read_artifact(args.predictions, "predictions")
    predicted = {}
    for r in data.get("routes", []):
        predicted[r["route_id"]] = r
    rows = []
    for inst in corpus:
        if inst.route_id not in predicted:
            raise ArtifactError(f"no prediction for route {inst.route_id!r}")
        entry = predicted[inst.route_id]
        try:
            if args.level == "zone":
                rows.append(zone_score(inst, ZoneOrdering(tuple(entry["zones"]))))
            else:
                rows.append(score(inst, Tour(entry["order"])))
        except (KeyError, TypeError, InvalidInputError) as exc:
            raise ArtifactError(f"route {inst.route_id!r}: unusable prediction ({exc})") from None
    report = ScoreReport(rows)
    _write(args.out, report.to_csv())
    if args.summary:
        _write(args.summary, report.summary_json() + "\n")
    if args.histogram:
        _write(args.histogram, report.histogram_csv())
    for label, entry in report.summary().items():
        print(f"{label:>8}  n={entry['count']:<5d} mean score {entry['mean_score']:.4f}")


def cmd_report(args) -> None:
    corpus = load_corpus(args.corpus)
    text = report_to_csv(violation_report(corpus.instances))
    _write(args.out, text)
    sys.stdout.write(text)


def cmd_replicate(args) -> None:
    from .replication import ReplicationConfig, run_replication

    cfg = ReplicationConfig(synth=SynthConfig(seed=args.seed, n_instances=args.n_instances), split_seed=args.seed)
    result = run_replication(cfg)
    result.pop("seconds")
    _write(args.out, _dump(result))
    for name, value in result["zone_scores"].items():
        print(f"zone  {name:<16} {value:.4f}")
    for name, value in result["stop_scores"].items():
        print(f"stop  {name:<16} {value:.4f}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zoneroute", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, corpus=True, solver=False):
        if corpus:
            sp.add_argument("--corpus", required=True)
        sp.add_argument("--out", required=True)
        sp.add_argument("--seed", type=int, default=0)
        if solver:
            sp.add_argument("--iter-cap", type=int, default=50,
                            help="perturbation rounds per solve; 0 switches to the wall-clock budget")
            sp.add_argument("--budget-secs", type=float, default=30.0)

    sp = sub.add_parser("generate", help="write a synthetic corpus")
    common(sp, corpus=False)
    sp.add_argument("--n-instances", type=int, default=250)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("split", help="stratified train/test split into OUT/train.jsonl and OUT/test.jsonl")
    common(sp)
    sp.add_argument("--test-fraction", type=float, default=0.2)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("estimate", help="estimate the zone transition matrix")
    common(sp)
    sp.add_argument("--v-high", type=float, default=1.0)
    sp.add_argument("--v-medium", type=float, default=1.0)
    sp.add_argument("--v-low", type=float, default=1.0)
    sp.add_argument("--epsilon", type=float, default=1e-6)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("train", help="structured perceptron for one stage")
    common(sp, solver=True)
    sp.add_argument("--stage", choices=sorted(STAGES), required=True)
    sp.add_argument("--matrix")
    sp.add_argument("--init", help="comma-separated initial weights")
    sp.add_argument("--lr", type=float, default=1e-5)
    sp.add_argument("--epochs", type=int, default=1)
    sp.add_argument("--validation", help="corpus scored after every epoch")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="two-stage route prediction")
    common(sp, solver=True)
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--zone-weights")
    sp.add_argument("--stop-weights")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("score", help="score predictions against actual routes")
    common(sp)
    sp.add_argument("--predictions", required=True)
    sp.add_argument("--level", choices=("stop", "zone"), default="stop")
    sp.add_argument("--summary")
    sp.add_argument("--histogram")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("report", help="zone-order violation percentages by quality label")
    common(sp)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("replicate", help="compare all models on a synthetic corpus")
    common(sp, corpus=False)
    sp.add_argument("--n-instances", type=int, default=250)
    sp.set_defaults(func=cmd_replicate, seed=42)
    return p


def _validate(args) -> None:
    for name in ("epochs", "jobs", "n_instances"):
        if getattr(args, name, 1) < 1:
            raise InvalidInputError(f"--{name.replace('_', '-')} must be at least 1")
    if getattr(args, "lr", 1.0) <= 0:
        raise InvalidInputError("--lr must be positive")
    if getattr(args, "budget_secs", 1.0) <= 0:
        raise InvalidInputError("--budget-secs must be positive")
    if getattr(args, "iter_cap", 0) < 0:
        raise InvalidInputError("--iter-cap must be nonnegative")
    if args.seed < 0:
        raise InvalidInputError("--seed must be nonnegative")
    if hasattr(args, "test_fraction"):
        SplitSpec(args.test_fraction, args.seed)
    if hasattr(args, "v_high"):
        QualityWeights(args.v_high, args.v_medium, args.v_low)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _validate(args)
        args.func(args)
    except (CorpusFormatError, ArtifactError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvalidInputError, MissingLabelError, SizeExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ZoneRouteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        logger.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
