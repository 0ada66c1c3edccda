# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import click
import functools
import logging
import os
import os.path
import sys

from click.exceptions import ClickException
from logging.handlers import TimedRotatingFileHandler

from .analysis import (
    export_representations,
    precision_at,
    retrieve,
    top_pairs_per_edge,
    top_pairs_per_module,
    topology_graph,
    topology_overlap,
    write_attribution,
    write_edge_list,
)
from .config import PROFILES, IniConfig, RunConfig
from .data import (
    SPLITS,
    SynthConfig,
    generate_synthetic,
    load_dataset,
    load_embeddings,
    save_dataset,
)
from .evaluation import evaluate, score_split, write_curve, write_summary
from .exceptions import (
    ConfigError,
    FormatError,
    NumericError,
    TMNError,
    VocabularyError,
)
from .model import (
    MODEL_KINDS,
    ModularNetConfig,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .training import ALL, TrainConfig, fit, write_epoch_log

logger = logging.getLogger("tmnet")

log_handler = None


class ToolError(ClickException):
    exit_code = 1


class BadConfigError(ToolError):
    exit_code = 2


class BadDataError(ToolError):
    exit_code = 3


class NumericFailure(ToolError):
    exit_code = 4


def translate_errors(func):
    """Turns toolkit errors into click exceptions carrying the exit code"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, VocabularyError) as e:
            raise BadConfigError(str(e)) from e
        except FormatError as e:
            raise BadDataError(str(e)) from e
        except NumericError as e:
            raise NumericFailure(str(e)) from e
        except (TMNError, OSError) as e:
            raise ToolError(str(e)) from e

    return wrapper


class NegativesType(click.ParamType):
    name = "negatives"

    def convert(self, value, param, ctx):
        if isinstance(value, int) or value == ALL:
            return value
        try:
            return int(value)
        except ValueError:
            self.fail(f"{value!r} is neither an integer nor '{ALL}'", param, ctx)


def setup_logging(config):
    global log_handler

    if log_handler is not None:
        logger.removeHandler(log_handler)

    if config["log_file"]:
        if config["log_rotate"]:
            log_handler = TimedRotatingFileHandler(config["log_file"], when="midnight")
        else:
            log_handler = logging.FileHandler(config["log_file"])
        log_handler.setFormatter(
            logging.Formatter("%(asctime)s [%(levelname)s] %(message)s")
        )
    else:
        log_handler = logging.StreamHandler()
        log_handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
    logger.addHandler(log_handler)
    if "log_level" in config:
        level = getattr(logging, str(config["log_level"]).upper(), logging.NOTSET)
        logger.setLevel(level)


def parse_pair(vocab, text):
    obj, sep, attr = text.partition(",")
    if not sep:
        raise ConfigError(f"Expected 'object,attribute', got '{text}'")
    return vocab.pair(obj.strip(), attr.strip())


def prepare_output(path):
    os.makedirs(path, exist_ok=True)
    return path


def load_for_checkpoint(ckpt, data):
    params = load_checkpoint(ckpt)
    dataset = load_dataset(data)
    if params.vocab != dataset.vocab:
        raise FormatError("Vocabulary differs from the checkpoint's", data)
    return params, dataset


def split_samples(dataset, split, data):
    if split not in dataset.samples:
        raise FormatError(f"No '{split}' samples", os.path.join(data, f"{split}.tsv"))
    return dataset.samples[split]


@click.group()
@click.option(
    "-c",
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Configuration file read after the default locations",
)
@click.option(
    "--profile",
    type=click.Choice(sorted(PROFILES)),
    help="Hyper-parameter preset of a reference dataset",
)
@click.pass_context
def cli(ctx, config_path, profile):
    """Task-driven modular networks for compositional zero-shot learning"""

    try:
        if ctx.obj is None or config_path:
            ctx.obj = IniConfig.from_common_locations(config_path, profile)
        elif profile:
            ctx.obj.apply_profile(profile)
    except ConfigError as e:
        raise BadConfigError(str(e)) from e
    setup_logging(ctx.obj.BASE)


@cli.command()
@click.option("-o", "--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int)
@click.option("--objects", type=int)
@click.option("--attributes", type=int)
@click.option("--latent-dim", type=int)
@click.option("--feature-dim", type=int)
@click.option("--samples-per-pair", type=int)
@click.option("--eval-samples-per-pair", type=int)
@click.option("--noise", type=float)
@click.option("--unseen-fraction", type=float)
@click.pass_obj
@translate_errors
def synth(config, out, **options):
    """Generates a synthetic dataset.

    Writes splits.tsv and the train, val and test feature files to OUT.
    """

    config.update("SYNTH", options)
    cfg = SynthConfig.from_section(config.SYNTH)
    dataset = generate_synthetic(cfg)
    save_dataset(prepare_output(out), dataset)
    RunConfig("synth", config, cfg.seed).write_manifest(out)

    counts = dataset.splits.counts()
    click.echo(
        "{} seen and {} unseen pairs, {} train samples written to {}".format(
            counts["train"], counts["test_unseen"], len(dataset.samples["train"]), out
        )
    )


@cli.command()
@click.option("-d", "--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(file_okay=False))
@click.option("--model", type=click.Choice(MODEL_KINDS))
@click.option("--layers", type=int)
@click.option("--modules", type=str, help="Modules per hidden layer, or a comma separated list")
@click.option("--module-dim", type=int)
@click.option("--gating-hidden", type=int)
@click.option("--embedding-dim", type=int)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), help="Word vector file")
@click.option(
    "--frozen-embeddings", is_flag=True, default=None, help="Do not train the pair embeddings"
)
@click.option("--lr-feat", type=float)
@click.option("--lr-gate", type=float)
@click.option("--batch", type=int)
@click.option("--negatives", type=NegativesType())
@click.option("--concept-drop", type=float)
@click.option("--epochs", type=int)
@click.option("--seed", type=int)
@click.pass_obj
@translate_errors
def train(config, data, out, frozen_embeddings, **options):
    """Trains a model on a dataset directory.

    Writes the best and last checkpoints, the epoch log and the run manifest
    to OUT.
    """

    model = {k: options.pop(k) for k in list(options) if k in config.MODEL}
    if frozen_embeddings:
        model["finetune_embeddings"] = False
    config.update("MODEL", model)
    config.update("TRAIN", options)

    dataset = load_dataset(data)
    vocab = dataset.vocab
    net = ModularNetConfig.from_section(config.MODEL, dataset.samples["train"].dim)
    train_cfg = TrainConfig.from_sections(config.TRAIN, config.MODEL)
    kind = config.MODEL["model"]

    table = None
    if config.MODEL["embeddings"]:
        table, _ = load_embeddings(config.MODEL["embeddings"], vocab)
    params = init_params(net, vocab, train_cfg.seed, kind, table)

    out = prepare_output(out)
    save_checkpoint(os.path.join(out, "last"), params)

    def save_last(log, current):
        save_checkpoint(os.path.join(out, "last"), current)

    best, logs = fit(kind, params, dataset, train_cfg, on_epoch=save_last)
    save_checkpoint(os.path.join(out, "best"), best)
    write_epoch_log(os.path.join(out, "epochs.tsv"), logs)
    RunConfig("train", config, train_cfg.seed).write_manifest(out)

    for log in logs:
        click.echo(f"{log.epoch}\t{log.loss:.4f}\t{log.train_acc:.4f}\t{log.val_auc:.4f}")


@cli.command("eval")
@click.option("--ckpt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-d", "--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(file_okay=False))
@click.option("--split", type=click.Choice(SPLITS[1:]), default="test", show_default=True)
@click.option("--topk", type=int)
@click.pass_obj
@translate_errors
def evaluate_command(config, ckpt, data, out, split, topk):
    """Evaluates a checkpoint with the calibration bias sweep.

    Writes one curve_k<K>.tsv per k and summary.tsv to OUT.
    """

    config.update("EVAL", {"topk": topk})
    params, dataset = load_for_checkpoint(ckpt, data)
    summary, curves = evaluate(score_split(params, dataset, split), config.EVAL["topk"])

    out = prepare_output(out)
    for k, curve in curves.items():
        write_curve(os.path.join(out, f"curve_k{k}.tsv"), curve)
    write_summary(os.path.join(out, "summary.tsv"), summary)
    RunConfig("eval", config).write_manifest(out)

    for name, value in summary.items():
        click.echo(f"{name}\t{value:.4f}")


@cli.command("inspect")
@click.option("--ckpt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-d", "--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(file_okay=False))
@click.option("--split", type=click.Choice(SPLITS[1:]), default="test", show_default=True)
@click.option("--pair", "pairs", multiple=True, help="'object,attribute', at most twice")
@click.option("--topn", type=int)
@click.option("--tolerance", type=float)
@click.option(
    "--global-max",
    is_flag=True,
    default=None,
    help="Threshold edges against the layer maximum",
)
@click.option("--max-samples", type=int)
@click.pass_obj
@translate_errors
def inspect_command(config, ckpt, data, out, split, pairs, global_max, **options):
    """Exports attribution tables, topologies and representations.

    Representations are computed for the first samples of the split only
    (see --max-samples).
    """

    if len(pairs) > 2:
        raise ConfigError("At most two --pair options are accepted")
    if global_max:
        options["per_destination"] = False
    config.update("EVAL", options)
    params, dataset = load_for_checkpoint(ckpt, data)
    settings = config.EVAL

    candidates, _ = dataset.splits.candidates(split)
    queried = [parse_pair(params.vocab, p) for p in pairs]
    samples = split_samples(dataset, split, data)
    samples = samples.subset(range(min(len(samples), settings["max_samples"])))

    out = prepare_output(out)
    if params.network.has_gates:
        vocab, n = params.vocab, min(settings["topn"], len(candidates))
        write_attribution(
            os.path.join(out, "attribution_edges.tsv"),
            top_pairs_per_edge(params, candidates, n),
            vocab,
        )
        write_attribution(
            os.path.join(out, "attribution_modules.tsv"),
            top_pairs_per_module(params, candidates, n),
            vocab,
        )
        export_representations(
            os.path.join(out, "gatings.tsv"), params, samples, candidates, "gatings"
        )
    elif queried:
        raise ConfigError(f"model '{params.kind}' has no gatings to draw")
    else:
        logger.warning("Model '%s' has no gatings, only exporting features", params.kind)

    export_representations(
        os.path.join(out, "features.tsv"), params, samples, candidates, "features"
    )
    export_representations(
        os.path.join(out, "scores.tsv"), params, samples, candidates, "scores"
    )

    graphs = [
        topology_graph(params, pair, settings["tolerance"], settings["per_destination"])
        for pair in queried
    ]
    for i, graph in enumerate(graphs, 1):
        write_edge_list(os.path.join(out, f"topology_{i}.tsv"), graph)
    if len(graphs) == 2:
        with open(os.path.join(out, "overlap.tsv"), "wt", encoding="utf-8", newline="\n") as f:
            f.write("layer\tsrc\tdst\n")
            for edge in topology_overlap(*graphs):
                f.write("{}\t{}\t{}\n".format(*edge))
        click.echo(f"{len(topology_overlap(*graphs))} edges shared by both pairs")

    RunConfig("inspect", config).write_manifest(out)


@cli.command("retrieve")
@click.option("--ckpt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-d", "--data", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(file_okay=False))
@click.option("--split", type=click.Choice(SPLITS[1:]), default="test", show_default=True)
@click.option("--pair", required=True, help="'object,attribute' to query")
@click.option("--topn", type=int)
@click.pass_obj
@translate_errors
def retrieve_command(config, ckpt, data, out, split, pair, topn):
    """Ranks the samples of a split for one pair"""

    config.update("EVAL", {"topn": topn})
    params, dataset = load_for_checkpoint(ckpt, data)
    query = parse_pair(params.vocab, pair)
    samples = split_samples(dataset, split, data)
    n = min(config.EVAL["topn"], len(samples))

    ranked = retrieve(params, query, samples, n)
    labels = dict(zip(samples.ids, samples.labels))
    out = prepare_output(out)
    with open(os.path.join(out, "retrieval.tsv"), "wt", encoding="utf-8", newline="\n") as f:
        f.write("rank\tsample_id\tobject\tattribute\n")
        for rank, sample_id in enumerate(ranked, 1):
            obj, attr = params.vocab.names(labels[sample_id])
            f.write(f"{rank}\t{sample_id}\t{obj}\t{attr}\n")
    RunConfig("retrieve", config).write_manifest(out)

    click.echo(
        "Precision@{} for '{}': {:.4f}".format(
            n, params.vocab.label(query), precision_at(ranked, samples, query)
        )
    )


def run(argv=None, config=None):
    """Runs one command, returns its exit code instead of exiting"""

    try:
        rv = cli.main(args=argv, prog_name="tmnet", standalone_mode=False, obj=config)
    except ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return rv if isinstance(rv, int) else 0


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
