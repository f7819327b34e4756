"""Command-line pipeline: train, tag, extract, eval, errors.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure during
training.  All commands are deterministic given identical inputs, flags and
seed; with ``--jobs`` the per-sentence work is farmed out to processes but
output order always matches input order.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from . import __version__
from .corpus import (
    CorpusFormatError,
    Sentence,
    TagSequence,
    read_dictionary,
    read_emissions_many,
    read_relations,
    read_tagged_corpus,
    write_quadruples,
    write_relations,
    write_tagged_corpus,
)
from .crf import TaggerModel, load_model, save_model, viterbi_decode
from .encoder import external_emissions
from .evaluation import agreement_f1, classify_errors, entity_prf, relation_prf
from .tag2relation import match
from .tagscheme import tags_to_entities
from .trainer import NonFiniteLossError, TrainConfig, train

DICT_ENV = "RADSIGNS_DICT"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def build_parser(config_defaults: dict | None = None) -> argparse.ArgumentParser:
    """Build the argument parser.

    ``config_defaults`` (from ``--config``) overrides built-in defaults but
    is itself overridden by explicit flags.  Required path arguments must
    still be given on the command line.
    """
    parser = argparse.ArgumentParser(
        prog="radsigns",
        description="Extract {primary part, secondary part, degree, sign} "
        "quadruples from character-level report sentences.",
    )
    parser.add_argument("--version", action="version", version=f"radsigns {__version__}")
    parser.add_argument("--config", help="JSON file with default option values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a tagger and pick the dev-best epoch")
    p.add_argument("train_path", help="tagged training corpus (<char>\\t<tag>)")
    p.add_argument("dev_path", help="tagged development corpus")
    p.add_argument("--model-out", required=True)
    p.add_argument("--report-out", help="write the per-epoch report as JSON")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.5, help="first-epoch learning rate")
    p.add_argument("--lr-decayed", type=float, default=0.1)
    p.add_argument("--decay-epoch", type=int, default=2)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("tag", help="decode tags for input sentences")
    _add_decode_arguments(p)
    p.add_argument("--out", required=True, help="tagged corpus to write")

    p = sub.add_parser("extract", help="decode tags and emit relations/quadruples")
    _add_decode_arguments(p)
    p.add_argument("--dict", dest="dict_path", default=os.environ.get(DICT_ENV),
                   help=f"secondary-part dictionary (default: ${DICT_ENV})")
    p.add_argument("--out", required=True, help="quadruples JSONL to write")
    p.add_argument("--relations-out", help="relations JSONL to write")
    p.add_argument("--from-tags", action="store_true",
                   help="with tsv input, trust the file's tags instead of decoding")

    for name in ("eval", "errors"):
        p = sub.add_parser(
            name,
            help="score predictions against gold"
            if name == "eval"
            else "classify entity errors (eval --mode errors)",
        )
        p.add_argument("--pred", required=True)
        p.add_argument("--gold", required=True)
        if name == "eval":
            p.add_argument("--mode", choices=("entity", "relation", "agreement", "errors"),
                           default="entity")
            p.add_argument("--items", choices=("entity", "relation"), default="entity",
                           help="item type for agreement mode")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--report-out", help="write the report as JSON")
        p.add_argument("--confusion-csv", help="write the confusion matrix as CSV (errors mode)")

    if config_defaults:
        for action in sub.choices.values():
            known = {a.dest for a in action._actions}
            overrides = {k: v for k, v in config_defaults.items() if k in known}
            if overrides:
                action.set_defaults(**overrides)
    return parser


def _add_decode_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="input sentences")
    p.add_argument("--model", required=True)
    p.add_argument("--input-format", choices=("text", "tsv"), default="text",
                   help="text: one sentence per line; tsv: tagged corpus")
    p.add_argument("--no-constrain", dest="constrain", action="store_false",
                   help="decode without the BIO transition mask")
    p.add_argument("--emissions-file",
                   help="use precomputed emission blocks keyed by sentence id")
    p.add_argument("--jobs", type=int, default=1)


def _load_sentences(path, input_format: str) -> list[tuple[Sentence, TagSequence | None]]:
    if input_format == "tsv":
        return [(s, t) for s, t in read_tagged_corpus(path)]
    items: list[tuple[Sentence, TagSequence | None]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            text = line.rstrip("\n").rstrip("\r")
            if not text:
                continue
            items.append((Sentence.from_text(f"s{len(items) + 1}", text), None))
    return items


def _decode_one(model: TaggerModel, constrain: bool, emission_map, sentence: Sentence) -> TagSequence:
    if emission_map is None:
        return model.decode(sentence, constrain_bio=constrain)
    if sentence.id not in emission_map:
        raise CorpusFormatError(f"no emission block for sentence {sentence.id!r}")
    emissions = external_emissions(sentence, emission_map[sentence.id])
    return viterbi_decode(emissions, model.transitions, constrain_bio=constrain)


def _decode_all(model, sentences, constrain, emissions_file, jobs) -> list[TagSequence]:
    emission_map = None
    if emissions_file:
        emission_map = {m.sentence_id: m for m in read_emissions_many(emissions_file)}
    worker = partial(_decode_one, model, constrain, emission_map)
    if jobs > 1 and len(sentences) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, sentences, chunksize=16))
    return [worker(s) for s in sentences]


def _cmd_train(args) -> int:
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr_initial=args.lr,
        lr_decayed=args.lr_decayed,
        decay_epoch=args.decay_epoch,
        l2=args.l2,
        seed=args.seed,
    )
    corpus = read_tagged_corpus(args.train_path)
    # dev ids restart at s1; prefix them so the two corpora stay disjoint
    dev = [
        (Sentence(f"dev-{s.id}", s.chars, s.source_report_id),
         TagSequence(f"dev-{s.id}", t.tags))
        for s, t in read_tagged_corpus(args.dev_path)
    ]
    model, report = train(corpus, dev, config)
    for epoch, (loss, f1) in enumerate(zip(report.train_nll, report.dev_f1), 1):
        print(f"epoch {epoch} train_nll {loss:.4f} dev_f1 {f1:.2f}")
    print(
        f"selected epoch {report.selected_epoch + 1} "
        f"dev_f1 {report.dev_f1[report.selected_epoch]:.2f}"
    )
    save_model(model, args.model_out)
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    return EXIT_OK


def _cmd_tag(args) -> int:
    model = load_model(args.model)
    items = _load_sentences(args.input, args.input_format)
    sentences = [s for s, _ in items]
    decoded = _decode_all(model, sentences, args.constrain, args.emissions_file, args.jobs)
    write_tagged_corpus(list(zip(sentences, decoded)), args.out)
    return EXIT_OK


def _cmd_extract(args) -> int:
    if not args.dict_path:
        raise CorpusFormatError(
            f"a dictionary is required: pass --dict or set ${DICT_ENV}"
        )
    model = load_model(args.model)
    dictionary = read_dictionary(args.dict_path)
    items = _load_sentences(args.input, args.input_format)
    sentences = [s for s, _ in items]

    if args.from_tags:
        if args.input_format != "tsv":
            raise CorpusFormatError("--from-tags requires --input-format tsv")
        decoded = [t for _, t in items]
    else:
        decoded = _decode_all(model, sentences, args.constrain, args.emissions_file, args.jobs)

    all_quads, quad_ids = [], []
    all_relations, relation_ids = [], []
    for sentence, tags in zip(sentences, decoded):
        entities = tags_to_entities(sentence, tags)
        relations, quadruples = match(sentence, entities, dictionary)
        all_quads.extend(quadruples)
        quad_ids.extend(sentence.id for _ in quadruples)
        all_relations.extend(relations)
        relation_ids.extend(sentence.id for _ in relations)

    write_quadruples(all_quads, args.out, sentence_ids=quad_ids)
    if args.relations_out:
        write_relations(all_relations, args.relations_out, sentence_ids=relation_ids)
    return EXIT_OK


def _entities_by_sentence(path):
    pairs = read_tagged_corpus(path)
    return (
        {s.id: tags_to_entities(s, t) for s, t in pairs},
        [(s.id, s.text) for s, _ in pairs],
    )


def _check_aligned(pred_shape, gold_shape) -> None:
    if pred_shape != gold_shape:
        raise CorpusFormatError(
            "pred and gold corpora do not contain the same sentences"
        )


def _print_breakdown(label: str, breakdown, fmt: str) -> dict:
    report = {"mode": label, **breakdown.to_dict()}
    if fmt == "json":
        print(json.dumps(report, ensure_ascii=False))
    else:
        print(f"{label} overall {breakdown.overall}")
        for kind, scores in breakdown.by_kind.items():
            print(f"{label} {kind} {scores}")
    return report


def _cmd_eval(args, mode: str) -> int:
    fmt = args.format
    report: dict
    if mode in ("entity", "errors"):
        pred, pred_shape = _entities_by_sentence(args.pred)
        gold, gold_shape = _entities_by_sentence(args.gold)
        _check_aligned(pred_shape, gold_shape)
        if mode == "entity":
            report = _print_breakdown("entity", entity_prf(pred, gold), fmt)
        else:
            records, confusion, summary = classify_errors(pred, gold)
            report = {
                "mode": "errors",
                "summary": summary.to_dict(),
                "confusion": confusion.counts.tolist(),
                "records": len(records),
            }
            if fmt == "json":
                print(json.dumps(report, ensure_ascii=False))
            else:
                print(summary.format_text())
                print(confusion.to_csv())
            if args.confusion_csv:
                with open(args.confusion_csv, "w", encoding="utf-8") as fh:
                    fh.write(confusion.to_csv())
    elif mode == "relation":
        pred = read_relations(args.pred)
        gold = read_relations(args.gold)
        report = _print_breakdown("relation", relation_prf(pred, gold), fmt)
    else:  # agreement
        if args.items == "relation":
            annot_a, annot_b = read_relations(args.pred), read_relations(args.gold)
        else:
            (annot_a, a_shape) = _entities_by_sentence(args.pred)
            (annot_b, b_shape) = _entities_by_sentence(args.gold)
            _check_aligned(a_shape, b_shape)
        scores = agreement_f1(annot_a, annot_b)
        report = {"mode": "agreement", "overall": scores.to_dict()}
        if fmt == "json":
            print(json.dumps(report, ensure_ascii=False))
        else:
            print(f"agreement {scores}")

    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, ensure_ascii=False)
            fh.write("\n")
    return EXIT_OK


def _load_config_defaults(argv) -> dict | None:
    scanner = argparse.ArgumentParser(add_help=False)
    scanner.add_argument("--config")
    found, _ = scanner.parse_known_args(argv)
    if not found.config:
        return None
    with open(found.config, encoding="utf-8") as fh:
        values = json.load(fh)
    if not isinstance(values, dict):
        raise CorpusFormatError(f"{found.config}: config must be a JSON object")
    return values


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        config_defaults = _load_config_defaults(argv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser(config_defaults)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "tag":
            return _cmd_tag(args)
        if args.command == "extract":
            return _cmd_extract(args)
        if args.command == "eval":
            return _cmd_eval(args, args.mode)
        if args.command == "errors":
            return _cmd_eval(args, "errors")
        parser.error(f"unknown command {args.command!r}")
    except NonFiniteLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CorpusFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
