"""Command-line entry point: ``sensegen <subcommand> [options]``.

Settings resolve as built-in defaults < ``--config`` file < flags. Config
files hold JSON objects, one or more per line, keyed by option name
(``{"damping": 0.9, "lambda": 2.0}``). Data goes to files; diagnostics and
errors go to standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .align import Model1Aligner
from .corpus import (
    CorpusFormatError, corpus_stats, dump_key, format_stats_table, parse_bitext, parse_corpus, parse_key,
    serialize_bitext, serialize_corpus, write_pharaoh,
)
from .embedwsd import EmbeddingStore
from .evaluate import FreqModel, mcnemar, mfs_tag, pos_map, predict_freq, score, train_freq
from .fixtures import WorldSpec, generate_world
from .graphwsd import ConvergenceError, PprConfig, annotate_top1, disambiguate_corpus, write_distributions
from .lexkb import KBError, dump_kb, load_kb
from .pipelines import label_gen, label_prop, label_sync, sample_pairs
from .refine import SoftConstraintConfig

COMMON = {"seed": 0, "jobs": 1, "verbose": False}
PPR = {"damping": 0.85, "tolerance": 1e-8, "max_iterations": 1000, "per_word_teleport": False}
SOFT = {"lambda": 1.0, "use_frequency": False}
ALIGNER = {"realign": False, "iterations": 5, "copies": 1, "augment": True, "correct": True}

DEFAULTS = {
    "kb-validate": {"kb": None, "out": None},
    "align": {"bitext": None, "align_file": None, "kb": None, "out": None, "pharaoh": None,
              "table_fwd": None, "table_rev": None, **ALIGNER},
    "wsd-ppr": {"corpus": None, "kb": None, "out": None, "dist": None, **PPR},
    "label-prop": {"bitext": None, "align_file": None, "kb": None, "token_emb": None, "synset_emb": None,
                   "out": None, "report": None, "diagnostics": None, **ALIGNER},
    "label-sync": {"bitext": None, "align_file": None, "kb": None, "out_src": None, "out_tgt": None,
                   "out_bitext": None, "report": None, "diagnostics": None, **PPR, **SOFT, **ALIGNER},
    "label-gen": {"bitext": None, "align_file": None, "kb": None, "out": None, "report": None,
                  "diagnostics": None, "rerank": True, **PPR, **SOFT, **ALIGNER},
    "stats": {"corpus": None, "failed": 0, "out": None, "format": "text"},
    "score": {"pred": None, "gold": None, "corpus": None, "out": None, "format": "text"},
    "mfs": {"corpus": None, "kb": None, "out": None},
    "train-ref": {"corpus": None, "out": None},
    "predict-ref": {"model": None, "corpus": None, "kb": None, "backoff": True, "out": None},
    "mcnemar": {"pred_a": None, "pred_b": None, "gold": None, "out": None},
    "sample": {"bitext": None, "n": None, "out": None},
    "make-world": {"out_dir": None, "synsets": 50, "degree": 2, "sentences": 200, "test_sentences": 100,
                   "fraction": 1.0, "withheld": 0.2, "nn_agreement": 1.0, "langs": "en,it", "token_dim": 8},
}
REQUIRED = {
    "kb-validate": ["kb"],
    "align": ["bitext", "out"],
    "wsd-ppr": ["corpus", "kb", "out"],
    "label-prop": ["bitext", "kb", "out"],
    "label-sync": ["bitext", "kb"],
    "label-gen": ["bitext", "kb", "out"],
    "stats": ["corpus"],
    "score": ["pred", "gold"],
    "mfs": ["corpus", "kb", "out"],
    "train-ref": ["corpus", "out"],
    "predict-ref": ["model", "corpus", "out"],
    "mcnemar": ["pred_a", "pred_b", "gold"],
    "sample": ["bitext", "n", "out"],
    "make-world": ["out_dir"],
}
INPUTS = {"kb", "bitext", "align_file", "corpus", "token_emb", "synset_emb", "pred", "gold", "model",
          "pred_a", "pred_b"}
# settings that must not leak into reports (they do not affect results)
UNSNAPSHOTTED = {"jobs", "verbose", "config"}


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(message)


def _opt(p, *flags, **kw):
    kw.setdefault("default", argparse.SUPPRESS)
    p.add_argument(*flags, **kw)


def _flag_pair(p, name, dest, help_on, help_off):
    _opt(p, f"--{name}", dest=dest, action="store_true", help=help_on)
    _opt(p, f"--no-{name}", dest=dest, action="store_false", help=help_off)


def _add_ppr(p):
    _opt(p, "--damping", type=float, help="PageRank damping factor (default 0.85)")
    _opt(p, "--tolerance", type=float, help="L1 convergence tolerance (default 1e-8)")
    _opt(p, "--max-iterations", type=int, help="power-iteration cap (default 1000)")
    _flag_pair(p, "per-word-teleport", "per_word_teleport",
               "split teleport mass per context word", "split teleport mass per synset (default)")


def _add_soft(p):
    _opt(p, "--lambda", dest="lambda", type=float, help="SoftConstraint boost (default 1.0)")
    _flag_pair(p, "use-frequency", "use_frequency", "add the sense-frequency factor",
               "no frequency factor (default)")


def _add_aligner(p):
    _opt(p, "--realign", action="store_true", help="recompute alignments with the built-in aligner")
    _opt(p, "--iterations", type=int, help="Model 1 EM iterations (default 5)")
    _opt(p, "--copies", type=int, help="pseudo pairs per KB translation pair (default 1)")
    _flag_pair(p, "augment", "augment", "augment with KB translation pairs (default)", "skip augmentation")
    _flag_pair(p, "correct", "correct", "apply KB alignment correction (default)", "skip correction")


def _add_outputs(p, *names):
    for name in names:
        _opt(p, f"--{name}", dest=name.replace("-", "_"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _opt(common, "--config", help="JSON config file; flags override it")
    _opt(common, "--seed", type=int, help="random seed (default 0)")
    _opt(common, "--jobs", type=int, help="worker processes (default 1); output does not depend on it")
    _opt(common, "--verbose", action="store_true", help="print the resolved config to stderr")

    parser = argparse.ArgumentParser(prog="sensegen", description="Generate and evaluate sense-annotated corpora from bitexts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cmd(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    p = cmd("kb-validate", "validate a KB file and optionally write its canonical form")
    _add_outputs(p, "kb", "out")

    p = cmd("align", "word-align a bitext (Model 1 + grow-diag + KB correction)")
    _add_outputs(p, "bitext", "align-file", "kb", "out", "pharaoh", "table-fwd", "table-rev")
    _add_aligner(p)

    p = cmd("wsd-ppr", "tag a corpus with personalized PageRank WSD")
    _add_outputs(p, "corpus", "kb", "out", "dist")
    _add_ppr(p)

    p = cmd("label-prop", "project gold source annotations onto the target side")
    _add_outputs(p, "bitext", "align-file", "kb", "token-emb", "synset-emb", "out", "report", "diagnostics")
    _add_aligner(p)

    p = cmd("label-sync", "tag both sides of a bitext and synchronize them")
    _add_outputs(p, "bitext", "align-file", "kb", "out-src", "out-tgt", "out-bitext", "report", "diagnostics")
    _add_ppr(p)
    _add_soft(p)
    _add_aligner(p)

    p = cmd("label-gen", "tag the pivot side and generate target annotations")
    _add_outputs(p, "bitext", "align-file", "kb", "out", "report", "diagnostics")
    _add_ppr(p)
    _add_soft(p)
    _add_aligner(p)
    _flag_pair(p, "rerank", "rerank", "re-rank target candidates (default)", "keep the projected pivot argmax")

    p = cmd("stats", "annotation statistics of a corpus")
    _add_outputs(p, "corpus", "out")
    _opt(p, "--failed", type=int, help="failed alignments to report (default 0)")
    _opt(p, "--format", choices=["text", "jsonl"])

    p = cmd("score", "precision/recall/F1 of a key file against gold")
    _add_outputs(p, "pred", "gold", "corpus", "out")
    _opt(p, "--format", choices=["text", "jsonl"])

    p = cmd("mfs", "most-frequent-sense baseline key")
    _add_outputs(p, "corpus", "kb", "out")

    p = cmd("train-ref", "train the frequency reference classifier")
    _add_outputs(p, "corpus", "out")

    p = cmd("predict-ref", "predict with the frequency reference classifier")
    _add_outputs(p, "model", "corpus", "kb", "out")
    _flag_pair(p, "backoff", "backoff", "fall back to MFS for unseen words (default)", "no backoff")

    p = cmd("mcnemar", "McNemar's test between two prediction keys")
    _add_outputs(p, "pred-a", "pred-b", "gold", "out")

    p = cmd("sample", "seeded random sample of sentence pairs")
    _add_outputs(p, "bitext", "out")
    _opt(p, "--n", type=int, help="number of pairs to keep")

    p = cmd("make-world", "write a synthetic world (KB, bitexts, embeddings, gold keys)")
    _add_outputs(p, "out-dir")
    for name, typ in (("synsets", int), ("degree", int), ("sentences", int), ("test-sentences", int),
                      ("fraction", float), ("withheld", float), ("nn-agreement", float), ("token-dim", int)):
        _opt(p, f"--{name}", dest=name.replace("-", "_"), type=typ)
    _opt(p, "--langs", help="pivot,target language codes (default en,it)")
    return parser


def _read_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("missing-input", f"cannot read config {path}: {exc.strerror}") from None
    merged = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CliError("config", f"{path} line {lineno}: {exc.msg}") from None
        if not isinstance(rec, dict):
            raise CliError("config", f"{path} line {lineno}: expected a JSON object")
        merged.update({k.replace("-", "_") if k != "lambda" else k: v for k, v in rec.items()})
    return merged


def resolve(command: str, ns: argparse.Namespace) -> dict:
    cfg = {**COMMON, **DEFAULTS[command]}
    flags = {k: v for k, v in vars(ns).items() if k != "command"}
    if "config" in flags:
        file_cfg = _read_config(flags["config"])
        unknown = sorted(set(file_cfg) - set(cfg))
        if unknown:
            raise CliError("config", f"unknown config key(s) for {command}: {', '.join(unknown)}")
        cfg.update(file_cfg)
    cfg.update(flags)
    for name in REQUIRED[command]:
        if cfg.get(name) is None:
            raise CliError("usage", f"{command} needs --{name.replace('_', '-')}")
    for name in INPUTS:
        if cfg.get(name) is not None and not Path(cfg[name]).is_file():
            raise CliError("missing-input", f"--{name.replace('_', '-')}: no such file {cfg[name]}")
    if not isinstance(cfg["jobs"], int) or cfg["jobs"] < 1:
        raise CliError("config", "--jobs must be a positive integer")
    return cfg


def _snapshot(cfg: dict) -> dict:
    return {k: cfg[k] for k in sorted(cfg) if k not in UNSNAPSHOTTED}


def _ppr_cfg(cfg) -> PprConfig:
    return PprConfig(cfg["damping"], cfg["tolerance"], cfg["max_iterations"], cfg["per_word_teleport"])


def _soft_cfg(cfg) -> SoftConstraintConfig:
    return SoftConstraintConfig(cfg["lambda"], cfg["use_frequency"])


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _bitext(cfg):
    pairs = parse_bitext(cfg["bitext"], cfg.get("align_file"))
    if cfg.get("realign"):
        kb = load_kb(cfg["kb"]) if cfg.get("kb") else None
        aligner = Model1Aligner(cfg["iterations"], cfg["copies"], cfg["augment"], cfg["correct"], cfg["seed"])
        pairs = aligner.fit(pairs, kb=kb).transform(pairs)
    return pairs


def _emit_report(cfg, report) -> None:
    report.config = {**report.config, "run": _snapshot(cfg)}
    if cfg.get("report"):
        Path(cfg["report"]).write_text(report.summary(), encoding="utf-8")
    if cfg.get("diagnostics"):
        report.dump_diagnostics(cfg["diagnostics"])
    removed = ", ".join(f"{k}={v}" for k, v in sorted(report.removals.items())) or "none"
    print(f"{report.method}: {report.output_annotations} annotations kept, "
          f"{report.failed} failed, removed: {removed}", file=sys.stderr)


def run_kb_validate(cfg):
    kb = load_kb(cfg["kb"])
    n_edges = sum(len(s.edges) for s in kb.synsets.values()) // 2
    print(f"{cfg['kb']}: {len(kb)} synsets, {n_edges} edges, languages {sorted(kb.languages())}",
          file=sys.stderr)
    if cfg["out"]:
        dump_kb(kb, cfg["out"])


def run_align(cfg):
    kb = load_kb(cfg["kb"]) if cfg["kb"] else None
    pairs = parse_bitext(cfg["bitext"], cfg["align_file"])
    aligner = Model1Aligner(cfg["iterations"], cfg["copies"], cfg["augment"], cfg["correct"], cfg["seed"])
    out = aligner.fit(pairs, kb=kb).transform(pairs)
    serialize_bitext(out, cfg["out"])
    if cfg["pharaoh"]:
        write_pharaoh(out, cfg["pharaoh"])
    if cfg["table_fwd"]:
        aligner.table_fwd_.dump(cfg["table_fwd"])
    if cfg["table_rev"]:
        aligner.table_rev_.dump(cfg["table_rev"])


def run_wsd_ppr(cfg):
    kb = load_kb(cfg["kb"])
    sents = parse_corpus(cfg["corpus"])
    dists = disambiguate_corpus(sents, kb, _ppr_cfg(cfg), cfg["jobs"])
    serialize_corpus([annotate_top1(s, d) for s, d in zip(sents, dists)], cfg["out"])
    if cfg["dist"]:
        write_distributions(sents, dists, cfg["dist"])


def run_label_prop(cfg):
    kb = load_kb(cfg["kb"])
    tok = EmbeddingStore.load(cfg["token_emb"]) if cfg["token_emb"] else None
    syn = EmbeddingStore.load(cfg["synset_emb"]) if cfg["synset_emb"] else None
    if (tok is None) != (syn is None):
        raise CliError("usage", "--token-emb and --synset-emb must be given together")
    corpus, report = label_prop(_bitext(cfg), kb, tok, syn, n_jobs=cfg["jobs"])
    serialize_corpus(corpus, cfg["out"])
    _emit_report(cfg, report)


def run_label_sync(cfg):
    if not (cfg["out_src"] or cfg["out_tgt"] or cfg["out_bitext"]):
        raise CliError("usage", "label-sync needs at least one of --out-src, --out-tgt, --out-bitext")
    kb = load_kb(cfg["kb"])
    pairs, report = label_sync(_bitext(cfg), kb, _ppr_cfg(cfg), _soft_cfg(cfg), n_jobs=cfg["jobs"])
    if cfg["out_src"]:
        serialize_corpus([p.src for p in pairs], cfg["out_src"])
    if cfg["out_tgt"]:
        serialize_corpus([p.tgt for p in pairs], cfg["out_tgt"])
    if cfg["out_bitext"]:
        serialize_bitext(pairs, cfg["out_bitext"])
    _emit_report(cfg, report)


def run_label_gen(cfg):
    kb = load_kb(cfg["kb"])
    corpus, report = label_gen(
        _bitext(cfg), kb, _ppr_cfg(cfg), _soft_cfg(cfg), rerank=cfg["rerank"], n_jobs=cfg["jobs"]
    )
    serialize_corpus(corpus, cfg["out"])
    _emit_report(cfg, report)


def run_stats(cfg):
    sents = parse_corpus(cfg["corpus"])
    stats = corpus_stats(sents, cfg["failed"])
    lang = sents[0].lang if sents else "-"
    if cfg["format"] == "jsonl":
        text = json.dumps({"lang": lang, **stats.as_dict()}, separators=(",", ":")) + "\n"
    else:
        text = format_stats_table({lang: stats})
    _write_text(cfg["out"], text)


def run_score(cfg):
    pos_of = pos_map(parse_corpus(cfg["corpus"])) if cfg["corpus"] else None
    report = score(parse_key(cfg["pred"]), parse_key(cfg["gold"]), pos_of)
    if cfg["format"] == "jsonl":
        text = json.dumps(report.as_record(), separators=(",", ":")) + "\n"
    else:
        text = report.table()
    _write_text(cfg["out"], text)


def run_mfs(cfg):
    dump_key(mfs_tag(parse_corpus(cfg["corpus"]), load_kb(cfg["kb"])), cfg["out"])


def run_train_ref(cfg):
    train_freq(parse_corpus(cfg["corpus"])).dump(cfg["out"])


def run_predict_ref(cfg):
    if cfg["backoff"] and not cfg["kb"]:
        raise CliError("usage", "MFS backoff needs --kb (or pass --no-backoff)")
    kb = load_kb(cfg["kb"]) if cfg["kb"] else None
    key = predict_freq(FreqModel.load(cfg["model"]), parse_corpus(cfg["corpus"]), kb, cfg["backoff"])
    dump_key(key, cfg["out"])


def run_mcnemar(cfg):
    res = mcnemar(parse_key(cfg["pred_a"]), parse_key(cfg["pred_b"]), parse_key(cfg["gold"]))
    text = f"statistic {res.statistic:.6f}\np {res.p:.6g}\nb {res.b}\nc {res.c}\n"
    _write_text(cfg["out"], text)


def run_sample(cfg):
    if cfg["n"] < 0:
        raise CliError("config", "--n must be >= 0")
    serialize_bitext(sample_pairs(parse_bitext(cfg["bitext"]), cfg["n"], cfg["seed"]), cfg["out"])


def run_make_world(cfg):
    langs = tuple(x.strip() for x in cfg["langs"].split(","))
    spec = WorldSpec(
        seed=cfg["seed"], n_synsets=cfg["synsets"], degree=cfg["degree"], languages=langs,
        n_sentences=cfg["sentences"], fraction=cfg["fraction"], withheld=cfg["withheld"],
        nn_agreement=cfg["nn_agreement"], n_test_sentences=cfg["test_sentences"], token_dim=cfg["token_dim"],
    )
    paths = generate_world(spec).write(cfg["out_dir"])
    for name, path in paths.items():
        print(f"{name}: {path}", file=sys.stderr)


COMMANDS = {
    "kb-validate": run_kb_validate,
    "align": run_align,
    "wsd-ppr": run_wsd_ppr,
    "label-prop": run_label_prop,
    "label-sync": run_label_sync,
    "label-gen": run_label_gen,
    "stats": run_stats,
    "score": run_score,
    "mfs": run_mfs,
    "train-ref": run_train_ref,
    "predict-ref": run_predict_ref,
    "mcnemar": run_mcnemar,
    "sample": run_sample,
    "make-world": run_make_world,
}


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = resolve(ns.command, ns)
        if cfg["verbose"]:
            print(json.dumps({"command": ns.command, **cfg}, sort_keys=True), file=sys.stderr)
        COMMANDS[ns.command](cfg)
    except CliError as exc:
        return _fail(exc.kind, str(exc), 2 if exc.kind in ("usage", "config") else 1)
    except KBError as exc:
        return _fail("kb", str(exc), 1)
    except CorpusFormatError as exc:
        return _fail("format", str(exc), 1)
    except ConvergenceError as exc:
        return _fail("convergence", str(exc), 1)
    except (ValueError, TypeError) as exc:
        return _fail("invalid", str(exc), 1)
    except OSError as exc:
        return _fail("io", f"{exc.filename}: {exc.strerror}", 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
