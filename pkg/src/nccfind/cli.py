"""Command-line interface: induce, discover, evaluate, fuse, generate."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shutil
import sys
from pathlib import Path

from . import bible, corpus, discovery, synthgen
from .linker import ModelError, dump_links, induce_model, load_model
from .objectives import parse_objective, predictive_value_i, predictive_value_v

logger = logging.getLogger("nccfind")

# flags that can also come from a --config file; key -> (type, default)
CONFIG_KEYS = {
    "objective": (str, "i"),
    "phi": (int, None),
    "iterations": (int, 3),
    "two_sided": (bool, False),
    "max_gap": (int, None),
    "function_words": (str, None),
    "top_frequent": (int, None),
    "held_out": (float, None),
    "mode": (str, corpus.WORD),
    "workers": (int, 1),
    "out": (str, "out"),
    "rounds": (int, 3),
    "refresh": (bool, False),
    "lowercase": (bool, False),
    "pretokenized": (bool, False),
}

# word bitexts follow the usual setting; character data has no function words
MODE_DEFAULTS = {
    corpus.WORD: {"phi": 2, "max_gap": 2, "top_frequent": 100},
    corpus.CHARACTER: {"phi": 25, "max_gap": 0, "top_frequent": 0},
}


class CliError(Exception):
    pass


def _as_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise CliError(f"not a boolean: {value!r}")


def read_config(path: str | Path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise CliError(f"{path}:{lineno}: unknown or malformed setting {raw!r}")
        typ = CONFIG_KEYS[key][0]
        value = value.strip()
        try:
            out[key] = _as_bool(value) if typ is bool else typ(value)
        except ValueError:
            raise CliError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < command line."""
    cfg = {k: d for k, (_, d) in CONFIG_KEYS.items()}
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None and v is not False:
            cfg[key] = v
    mode = cfg["mode"]
    if mode not in MODE_DEFAULTS:
        raise CliError(f"unknown mode {mode!r}")
    for key, value in MODE_DEFAULTS[mode].items():
        if cfg[key] is None:
            cfg[key] = value
    if not 0 <= cfg["max_gap"] <= 2:
        raise CliError("--max-gap must be 0, 1 or 2")
    return cfg


def digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out: Path, command: str, cfg: dict, inputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg) if k != "workers"},
        "inputs": {str(p): digest(p) for p in inputs},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _check_inputs(paths) -> list[str]:
    missing = [p for p in paths if p is not None and not Path(p).is_file()]
    if missing:
        raise CliError(f"missing input file(s): {', '.join(map(str, missing))}")
    return [str(p) for p in paths if p is not None]


def _load(cfg: dict, source: str, target: str | None) -> corpus.Bitext:
    return corpus.load_bitext(
        source, target, cfg["mode"], pretokenized=cfg["pretokenized"], lowercase=cfg["lowercase"]
    )


# -- commands -----------------------------------------------------------------


def cmd_induce(args) -> int:
    cfg = resolve(args)
    inputs = _check_inputs([args.source, args.target])
    bitext = _load(cfg, args.source, args.target)
    model, links = induce_model(bitext, cfg["rounds"], cfg["workers"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "model.tsv")
    (out / "links.tsv").write_text(dump_links(links, bitext.source_vocab, bitext.target_vocab), encoding="utf-8")
    (out / "pv_i.tsv").write_text(predictive_value_i(model).dump(model), encoding="utf-8")
    (out / "pv_v.tsv").write_text(predictive_value_v(model).dump(model), encoding="utf-8")
    write_manifest(out, "induce", cfg, inputs)
    pv = predictive_value_i(model)
    print(f"links {model.total_links:.12g}  I {pv.total:.12g} nats ({pv.total / 0.6931471805599453:.6f} bits)")
    return 0


def discovery_config(cfg: dict) -> discovery.DiscoveryConfig:
    files = cfg["function_words"]
    fw_files = (None, None)
    if files:
        parts = files.split(",")
        fw_files = (parts[0] or None, (parts[1] or None) if len(parts) > 1 else None)
    return discovery.DiscoveryConfig(
        objective=parse_objective(cfg["objective"]),
        phi=cfg["phi"],
        max_iterations=cfg["iterations"],
        two_sided=cfg["two_sided"],
        max_gap=cfg["max_gap"],
        top_k=cfg["top_frequent"],
        function_word_files=fw_files,
        held_out_fraction=cfg["held_out"],
        rounds=cfg["rounds"],
        workers=cfg["workers"],
        refresh=cfg["refresh"],
    )


def cmd_discover(args) -> int:
    cfg = resolve(args)
    dc = discovery_config(cfg)
    dc.validate()
    inputs = _check_inputs([args.source, args.target, *[p for p in dc.function_word_files if p]])
    bitext = _load(cfg, args.source, args.target)
    out = Path(cfg["out"])
    if dc.max_iterations == 0:
        state, _ = discovery.DiscoveryState(), []
    else:
        state, _ = discovery.run(bitext, dc)
    discovery.write_outputs(state, out)
    write_manifest(out, "discover", cfg, inputs)
    n = sum(len(v) for v in state.ncc_lists.values())
    print(f"{n} NCCs validated in {state.iteration} iterations; outputs in {out}")
    return 0


def _run_models(run_dir: Path) -> list[Path]:
    models = sorted(run_dir.glob("iter[0-9][0-9][0-9]/base_model.tsv"))
    final = run_dir / "final_model.tsv"
    if final.is_file():
        models.append(final)
    return models


def cmd_evaluate(args) -> int:
    cfg = resolve(args)
    models = [Path(p) for p in args.models]
    if args.run:
        models = _run_models(Path(args.run)) + models
    if not models:
        raise CliError("no models to evaluate")
    nccs_path = args.nccs or (str(Path(args.run) / "nccs.tsv") if args.run else None)
    inputs = _check_inputs([*models, args.test_source, args.test_target, nccs_path])
    test = _load(cfg, args.test_source, args.test_target)
    nccs = {corpus.SOURCE: [], corpus.TARGET: []}
    if nccs_path:
        nccs = discovery.parse_ncc_list(Path(nccs_path).read_text(encoding="utf-8"))
    directions = [bible.FORWARD, bible.BACKWARD] if args.direction == "both" else [args.direction]
    rows = [bible.SCORE_HEADER]
    for k, path in enumerate(models):
        model = load_model(path)
        for direction in directions:
            side = corpus.SOURCE if direction == bible.FORWARD else corpus.TARGET
            known = [e for e in nccs[side] if e.validated_at <= k]
            score = bible.evaluate(model, test, known, direction, cfg["max_gap"])
            rows.append(bible.score_row(k, direction, score))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "scores.tsv").write_text("".join(rows), encoding="utf-8")
    write_manifest(out, "evaluate", cfg, inputs)
    sys.stdout.write("".join(rows))
    return 0


def cmd_fuse(args) -> int:
    cfg = resolve(args)
    _check_inputs([args.text, args.nccs])
    try:
        lists = discovery.parse_ncc_list(Path(args.nccs).read_text(encoding="utf-8"))
    except ValueError as e:
        raise CliError(f"malformed NCC list: {e}") from None
    side = discovery.LABEL_SIDES[args.side]
    entries = lists[side]
    out_path = Path(args.output) if args.output else Path(cfg["out"]) / Path(args.text).name
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if not entries:
        shutil.copyfile(args.text, out_path)
        return 0
    fuser = corpus.Fuser([e.pattern for e in entries], cfg["max_gap"])
    lines = []
    for raw in Path(args.text).read_text(encoding="utf-8").splitlines(keepends=True):
        body = raw.rstrip("\n")
        words = corpus.tokenize(body, pretokenized=cfg["pretokenized"], lowercase=cfg["lowercase"])
        fused = fuser.fuse_words(words)
        if all(isinstance(t, str) for t in fused):
            lines.append(raw)
            continue
        text = " ".join(t if isinstance(t, str) else t[0] for t in fused)
        lines.append(text + raw[len(body):])
    out_path.write_text("".join(lines), encoding="utf-8")
    return 0


def cmd_generate(args) -> int:
    spec = synthgen.GeneratorSpec(
        vocab_size=args.vocab_size,
        segment_count=args.segments,
        min_length=args.min_length,
        max_length=args.max_length,
        planted=args.planted,
        ncc_rate=args.ncc_rate,
        noise=args.noise,
        lexicon=args.lexicon,
        gapped=args.gapped,
        seed=args.seed,
    )
    bitext, planted = synthgen.generate(spec)
    synthgen.write_corpus(bitext, planted, args.out or "out")
    print(f"{len(bitext)} segment pairs, {len(planted)} planted NCCs -> {args.out or 'out'}")
    return 0


# -- parser -------------------------------------------------------------------


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--objective", choices=["i", "v", "I", "V"])
    p.add_argument("--phi", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--two-sided", dest="two_sided", action="store_true", default=None)
    p.add_argument("--max-gap", dest="max_gap", type=int, choices=[0, 1, 2])
    fw = p.add_mutually_exclusive_group()
    fw.add_argument("--function-words", dest="function_words", metavar="FILE[,FILE]",
                    help="function word list for the source side, optionally ',' and one for the target side")
    fw.add_argument("--top-frequent", dest="top_frequent", type=int, metavar="N")
    p.add_argument("--held-out", dest="held_out", type=float, metavar="FRACTION")
    p.add_argument("--mode", choices=[corpus.WORD, corpus.CHARACTER])
    p.add_argument("--workers", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--out")
    p.add_argument("--lowercase", action="store_true", default=None)
    p.add_argument("--pretokenized", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nccfind", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("induce", help="induce a translation model")
    p.add_argument("source")
    p.add_argument("target", nargs="?")
    _shared(p)
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("discover", help="run iterative NCC discovery")
    p.add_argument("source")
    p.add_argument("target", nargs="?")
    _shared(p)
    p.add_argument("--refresh", action="store_true", default=None,
                   help="induce and archive a final base model after the last iteration")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("evaluate", help="BiBLE scores of archived models")
    p.add_argument("models", nargs="*", help="model dumps, in iteration order from 0")
    p.add_argument("--run", help="discover output directory to take models and NCCs from")
    p.add_argument("--test", nargs=2, metavar=("SOURCE", "TARGET"), required=True)
    p.add_argument("--nccs", help="NCC list file")
    p.add_argument("--direction", choices=["forward", "backward", "both"], default="both")
    _shared(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fuse", help="fuse NCCs into a text file")
    p.add_argument("text")
    p.add_argument("--nccs", required=True)
    p.add_argument("--side", choices=["E", "F"], default="E")
    p.add_argument("-o", "--output")
    _shared(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("generate", help="write a synthetic bitext with planted NCCs")
    p.add_argument("--vocab-size", type=int, default=synthgen.GeneratorSpec.vocab_size)
    p.add_argument("--segments", type=int, default=synthgen.GeneratorSpec.segment_count)
    p.add_argument("--min-length", type=int, default=synthgen.GeneratorSpec.min_length)
    p.add_argument("--max-length", type=int, default=synthgen.GeneratorSpec.max_length)
    p.add_argument("--planted", type=int, default=synthgen.GeneratorSpec.planted)
    p.add_argument("--ncc-rate", type=float, default=synthgen.GeneratorSpec.ncc_rate)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--lexicon", choices=["bijective", "many_to_one"], default="bijective")
    p.add_argument("--gapped", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "test", None):
        args.test_source, args.test_target = args.test
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (CliError, corpus.CorpusError, ModelError, discovery.ConfigError,
            synthgen.SpecError, ValueError, OSError) as e:
        print(f"nccfind: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
