"""Command-line interface: stats, cluster, train, tag, eval subcommands.

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields

import numpy as np

from . import clustering, config as cfgmod, conll, crf, features, gazetteer, metrics
from .config import RunConfig, build_config, parse_config_file
from .errors import ConfigError, CrfSeqError, DataError

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this toolkit reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser, keys=None) -> None:
    for f in fields(RunConfig):
        if keys is not None and f.name not in keys:
            continue
        parser.add_argument(_flag(f.name), dest=f.name, metavar="VALUE", default=None)
    parser.add_argument("--config", dest="config", metavar="FILE", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crfseq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("corpus")
    p.add_argument("--format", choices=("human", "tsv"), default="human")
    _add_config_flags(p, keys={"columns", "bare_labels", "normalize", "seed", "threads"})

    p = sub.add_parser("cluster", help="k-means over a word embedding file")
    p.add_argument("embeddings")
    p.add_argument("out")
    _add_config_flags(p, keys={"k", "seed", "cluster_max_iter", "cluster_tol", "threads"})

    p = sub.add_parser("train", help="train a model from a config file")
    _add_config_flags(p)

    p = sub.add_parser("tag", help="label a corpus with a trained model")
    p.add_argument("model_path", metavar="model")
    p.add_argument("input")
    p.add_argument("output")
    _add_config_flags(
        p,
        keys={
            "columns", "bare_labels", "normalize", "bio_mask",
            "pos_lexicon", "pos_unknown_tag", "clusters", "gazetteers",
            "seed", "threads",
        },
    )

    p = sub.add_parser("eval", help="entity-level scores of predictions vs gold")
    p.add_argument("gold")
    p.add_argument("predicted", nargs="?", default=None)
    p.add_argument("--merged", action="store_true",
                   help="single file whose last column is the prediction")
    p.add_argument("--pred-columns", dest="pred_columns", metavar="VALUE", default=None,
                   help="column spec of the predicted file (default: same as --columns)")
    p.add_argument("--format", choices=("human", "tsv"), default="human")
    _add_config_flags(p, keys={"columns", "bare_labels", "normalize", "seed", "threads"})
    return parser


def _config_from_args(args) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {
        f.name: getattr(args, f.name)
        for f in fields(RunConfig)
        if getattr(args, f.name, None) is not None
    }
    return build_config(file_values, overrides)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _parse_corpus(path: str, cfg: RunConfig, columns=None) -> list[conll.Sentence]:
    return conll.parse_conll(
        _read(path),
        columns if columns is not None else cfg.columns,
        bare_labels=cfg.bare_labels,
        normalize=cfg.normalize,
        path=path,
    )


def _load_resources(cfg: RunConfig, feature_cfg: features.FeatureTemplateConfig):
    """(cluster_lookup, gazetteer_hits_fn) per the enabled feature families."""
    cluster_lookup = None
    if feature_cfg.use_cluster:
        cm = clustering.load_clusters(cfg.clusters)
        cluster_lookup = lambda word: clustering.assign_cluster(cm, word)  # noqa: E731
    hits_fn = None
    if feature_cfg.use_gazetteer:
        gaz = gazetteer.load_gazetteer(cfg.gazetteers)
        hits_fn = lambda sent: gazetteer.match_positions(gaz, sent)  # noqa: E731
    return cluster_lookup, hits_fn


def _apply_pos(sentences, cfg: RunConfig, feature_cfg) -> list[conll.Sentence]:
    if not feature_cfg.use_pos or not cfg.pos_lexicon:
        return sentences
    lexicon = features.load_pos_lexicon(cfg.pos_lexicon)
    return features.apply_pos_lexicon(sentences, lexicon, cfg.pos_unknown_tag)


def _encode_labels(sentences, schema: conll.LabelSchema) -> list[np.ndarray]:
    return [
        np.array([schema.id_of(tok.label) for tok in sent], dtype=np.int64)
        for sent in sentences
    ]


def _predict(model, sentences, cfg: RunConfig):
    feature_cfg = model.feature_config or features.FeatureTemplateConfig()
    cluster_lookup, hits_fn = _load_resources(cfg, feature_cfg)
    sentences = _apply_pos(sentences, cfg, feature_cfg)
    vectors = features.featurize(sentences, feature_cfg, model.index, cluster_lookup, hits_fn)
    predictions = []
    for fvs in vectors:
        path, _ = crf.viterbi(model, fvs, bio_mask=cfg.bio_mask)
        predictions.append([model.schema.label_of(i) for i in path])
    return sentences, predictions


def cmd_stats(args) -> int:
    cfg = _config_from_args(args)
    sentences = _parse_corpus(args.corpus, cfg)
    stats = conll.corpus_stats(sentences)
    sys.stdout.write(conll.stats_render(stats, args.format))
    return 0


def cmd_cluster(args) -> int:
    cfg = _config_from_args(args)
    table = clustering.load_embeddings(args.embeddings)
    model = clustering.kmeans(
        table, cfg.k, seed=cfg.seed, max_iter=cfg.cluster_max_iter, tol=cfg.cluster_tol
    )
    clustering.save_clusters(model, args.out)
    print(f"clustered {len(table)} words into {model.k} clusters")
    print(f"inertia {model.inertia!r} after {model.iterations} iterations")
    return 0


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    cfgmod.validate_for_train(cfg)
    feature_cfg = cfg.feature_config()

    train_sents = _parse_corpus(cfg.train, cfg)
    if not train_sents:
        raise DataError(f"training corpus {cfg.train} is empty")
    train_sents = [conll.validate_bio(s, cfg.bio) for s in train_sents]
    schema = (
        conll.LabelSchema(cfg.entity_types)
        if cfg.entity_types
        else conll.LabelSchema.from_corpus(train_sents)
    )
    train_sents = _apply_pos(train_sents, cfg, feature_cfg)
    cluster_lookup, hits_fn = _load_resources(cfg, feature_cfg)

    index, vectors = features.index_corpus(train_sents, feature_cfg, cluster_lookup, hits_fn)
    labels = _encode_labels(train_sents, schema)
    result = crf.train(
        list(zip(vectors, labels)),
        schema,
        index,
        cfg.train_config(),
        feature_config=feature_cfg,
        threads=cfg.effective_threads(),
    )
    crf.save_model(result.model, cfg.model)
    log_path = cfg.model + ".log"
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("".join(f"{i}\t{obj!r}\n" for i, obj in enumerate(result.objectives)))
    print(
        f"trained {len(index)} features x {len(schema)} labels in "
        f"{result.iterations} iterations (objective {result.objectives[-1]:.6f}, "
        f"{'converged' if result.converged else 'stopped'}); model: {cfg.model}"
    )
    if not result.converged:
        log.warning("optimizer message: %s (iteration log: %s)", result.message, log_path)

    if cfg.dev:
        dev_sents = [conll.validate_bio(s, cfg.bio) for s in _parse_corpus(cfg.dev, cfg)]
        dev_sents, predictions = _predict(result.model, dev_sents, cfg)
        report = metrics.evaluate(dev_sents, predictions)
        sys.stdout.write(metrics.report_render(report, "human"))
    return 0


def cmd_tag(args) -> int:
    cfg = _config_from_args(args)
    model = crf.load_model(args.model_path)
    feature_cfg = model.feature_config or features.FeatureTemplateConfig()
    columns = tuple(cfg.columns)
    cfgmod.validate_for_tag(cfg, feature_cfg, pos_column="pos" in columns)
    sentences = _parse_corpus(args.input, cfg, columns)
    if not sentences:
        raise DataError(f"input corpus {args.input} is empty")
    sentences, predictions = _predict(model, sentences, cfg)

    out_lines: list[str] = []
    for sent, pred in zip(sentences, predictions):
        for tok, label in zip(sent, pred):
            row = [tok.surface]
            if "pos" in columns:
                row.append(tok.pos if tok.pos is not None else "_")
            if "label" in columns and tok.label is not None:
                row.append(tok.label)
            row.append(label)
            out_lines.append("\t".join(row) + "\n")
        out_lines.append("\n")
    try:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write("".join(out_lines))
    except OSError as exc:
        raise DataError(f"cannot write {args.output}: {exc}") from exc
    print(f"tagged {len(sentences)} sentences -> {args.output}")
    return 0


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    columns = tuple(cfg.columns)
    if "label" not in columns:
        raise ConfigError(f"column spec {columns} has no 'label' column")
    if args.merged:
        if args.predicted is not None:
            raise ConfigError("--merged takes a single file")
        gold = _parse_corpus(args.gold, cfg, columns)
        pred_columns = tuple("-" if c == "label" else c for c in columns) + ("label",)
        pred_sents = _parse_corpus(args.gold, cfg, pred_columns)
    else:
        if args.predicted is None:
            raise ConfigError("eval needs a gold file and a predicted file (or --merged)")
        gold = _parse_corpus(args.gold, cfg, columns)
        pred_columns = (
            tuple(args.pred_columns.replace(",", " ").split())
            if args.pred_columns
            else columns
        )
        if "label" not in pred_columns:
            raise ConfigError(f"predicted column spec {pred_columns} has no 'label' column")
        pred_sents = _parse_corpus(args.predicted, cfg, pred_columns)
    predicted = [[tok.label for tok in sent] for sent in pred_sents]
    report = metrics.evaluate(gold, predicted)
    sys.stdout.write(metrics.report_render(report, args.format))
    return 0


_COMMANDS = {
    "stats": cmd_stats,
    "cluster": cmd_cluster,
    "train": cmd_train,
    "tag": cmd_tag,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="crfseq: %(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CrfSeqError as exc:
        print(f"crfseq: error: {exc}", file=sys.stderr)
        return exc.exit_code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
