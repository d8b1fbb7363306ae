"""Command-line entry point.

Subcommands: make-corpus, train-heads, restore, bench, se, graph.  Every
subcommand accepts ``--config FILE`` (JSON object of RunConfig fields);
explicit flags override the file.  Exit codes: 0 success, 2 configuration
error, 3 I/O error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .evidential import TYPE_ORDER, DegradationHeads, f1_score, train_heads
from .images import ImageError, load_image, save_image
from .pipeline.bench import bench
from .pipeline.config import ConfigError, RunConfig
from .pipeline.corpus import load_corpus, make_corpus
from .pipeline.restore import build_candidates, perceive, restore_one
from .restore_ops import path_label
from .seros import (
    Partition,
    build_graph,
    dump_graph,
    dump_partition,
    feature_vector,
    load_graph,
    load_partition,
    minimize_partition,
    two_d_se,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


class InputError(OSError):
    """A file exists but its contents cannot be parsed."""


def _parse_file(path, parser):
    text = Path(path).read_text()
    try:
        return parser(text)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


# ------------------------------------------------------------- arguments

# flag name -> RunConfig field, for the flags each subcommand exposes
_FLAGS = {
    "corpus_dir": ("--corpus-dir", str, "corpus directory"),
    "heads_path": ("--heads", str, "heads weights file"),
    "input_path": ("--input", str, "input image (PGM or PNG)"),
    "output_path": ("--output", str, "output path"),
    "report_dir": ("--report-dir", str, "directory for bench reports"),
    "zeta": ("--zeta", float, "gating threshold in (0, 1)"),
    "strategy": ("--strategy", str, "seros, rps, pea or fixed:<order>"),
    "strategies": ("--strategies", str, "comma-separated strategy list"),
    "seed": ("--seed", int, "64-bit seed"),
    "corpus_size": ("--corpus-size", int, "number of corpus images"),
    "class_mix": ("--class-mix", str, "mixed, single, double or triple"),
    "image_size": ("--image-size", int, "side of generated images"),
    "epochs": ("--epochs", int, "training epochs"),
    "workers": ("--workers", int, "parallel worker processes"),
}

_COMMAND_FIELDS = {
    "make-corpus": ("corpus_dir", "seed", "corpus_size", "class_mix", "image_size"),
    "train-heads": ("corpus_dir", "heads_path", "seed", "epochs"),
    "restore": ("input_path", "output_path", "heads_path", "zeta", "strategy", "seed"),
    "bench": ("corpus_dir", "heads_path", "report_dir", "zeta", "strategies", "seed", "workers"),
    "graph": ("input_path", "output_path", "heads_path", "zeta"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="segd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "make-corpus": "synthesize a clean/degraded corpus with recipe sidecars",
        "train-heads": "fit the type and evidence heads on a corpus",
        "restore": "restore one image",
        "bench": "run every strategy over a corpus and write reports",
        "graph": "dump the candidate similarity graph of one image",
    }
    for name, field_names in _COMMAND_FIELDS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="JSON config file")
        for f in field_names:
            flag, typ, text = _FLAGS[f]
            p.add_argument(flag, dest=f, type=typ, default=None, help=text)
        if name == "restore":
            p.add_argument("--diagnostics", help="write diagnostics JSON here")
    p = sub.add_parser("se", help="2D structural entropy of a graph file")
    p.add_argument("graph", help="graph file ('n <count> base 2' header, 'i j w' lines)")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--partition", help="partition file ('vertex part' lines)")
    grp.add_argument("--minimize", action="store_true", help="minimize over partitions first")
    p.add_argument("--dump-partition", help="write the partition used here")
    return parser


def load_config(args):
    overrides = {f: getattr(args, f, None) for f in _FLAGS}
    if getattr(args, "config", None):
        return RunConfig.from_file(args.config, **overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def _require(value, flag):
    if not value:
        raise ConfigError(f"{flag} is required")
    return value


def _load_heads(cfg):
    return _parse_file(cfg.heads_path, DegradationHeads.loads)


# ------------------------------------------------------------- commands


def cmd_make_corpus(cfg, args, out):
    manifest = make_corpus(cfg)
    counts = {}
    for rec in manifest["entries"]:
        counts[rec["class"]] = counts.get(rec["class"], 0) + 1
    print(f"wrote {manifest['size']} images to {cfg.corpus_dir} {json.dumps(counts, sort_keys=True)}", file=out)


def cmd_train_heads(cfg, args, out):
    if not (Path(cfg.corpus_dir) / "manifest.json").is_file():
        raise FileNotFoundError(f"no corpus manifest under {cfg.corpus_dir}")
    _, entries = load_corpus(cfg.corpus_dir)
    samples = [e.training_sample() for e in entries]
    try:
        heads = train_heads(samples, epochs=cfg.epochs, seed=cfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    Path(cfg.heads_path).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.heads_path).write_text(heads.dumps())
    truth = np.array([s.labels for s in samples], dtype=bool)
    pred = np.array([heads.predict(s.stats)[1].as_tuple() for s in samples], dtype=bool)
    f1 = {k.value: f1_score(truth[:, i], pred[:, i]) for i, k in enumerate(TYPE_ORDER)}
    print(f"final loss {heads.final_loss:.6f}; training F1 {json.dumps(f1, sort_keys=True)}", file=out)


def cmd_restore(cfg, args, out):
    src = _require(cfg.input_path, "--input")
    dst = _require(cfg.output_path, "--output")
    img = load_image(src)
    restored, diag = restore_one(img, _load_heads(cfg), cfg)
    save_image(dst, restored, bits=16 if Path(dst).suffix.lower() in (".pgm", ".png") else 8)
    diag.pop("graph", None)
    text = json.dumps(diag, sort_keys=True, default=float)
    if args.diagnostics:
        Path(args.diagnostics).write_text(text + "\n")
    print(f"wrote {dst}", file=out)


def cmd_bench(cfg, args, out):
    rows, paths = bench(cfg)
    out.write(paths["text"].read_text())


def cmd_graph(cfg, args, out):
    img = load_image(_require(cfg.input_path, "--input"))
    gates, strengths, _ = perceive(img, _load_heads(cfg), cfg.zeta)
    orders, images = build_candidates(img, gates, strengths)
    if len(images) < 2:
        raise ConfigError(f"only {len(images)} candidate path(s) are active; a graph needs two")
    graph = build_graph([feature_vector(im) for im in images])
    labels = "# vertices: " + " ".join(path_label(o) for o in orders) + "\n"
    text = labels + dump_graph(graph)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        out.write(text)


def cmd_se(args, out):
    graph = _parse_file(args.graph, load_graph)
    if args.partition:
        part = _parse_file(args.partition, load_partition)
        if part.n != graph.n:
            raise ConfigError(f"partition covers {part.n} vertices, graph has {graph.n}")
    elif args.minimize:
        part = minimize_partition(graph)
    else:
        part = Partition((tuple(range(graph.n)),))
    print(f"{two_d_se(graph, part):.17g}", file=out)
    if args.dump_partition:
        Path(args.dump_partition).write_text(dump_partition(part))


_COMMANDS = {
    "make-corpus": cmd_make_corpus,
    "train-heads": cmd_train_heads,
    "restore": cmd_restore,
    "bench": cmd_bench,
    "graph": cmd_graph,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "se":
            cmd_se(args, out)
        else:
            _COMMANDS[args.command](load_config(args), args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ImageError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
