"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import load_corpus, save_corpus
from .extractors import FILL_MODES
from .stats import (
    DensityCounts,
    MAP_TYPES,
    EmptyCorpusError,
    _entry,
    acr_table,
    compute_heatmap,
    compute_histogram,
    histogram_from_values,
    roundtrip_report,
)
from .streams import write_binary, write_jsonl
from .vocab import (
    CHANNELS,
    DEFAULT_VOCAB_SIZE,
    FrequencyCounter,
    build_vocabulary,
    dump_vocabulary,
    encode_sequence,
    overlay_frequencies,
    parse_vocabulary,
)
from .walker import WalkerConfig, generate_corpus

THREADS_ENV = "CVTOK_THREADS"
EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map(fn, items, threads: int):
    """Order-preserving map, optionally over a thread pool."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


def _config(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "func"}


def _emit(doc: dict, path: Path | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _load(path: Path):
    corpus = load_corpus(path)
    if not corpus:
        raise EmptyCorpusError(f"{path}: corpus is empty")
    return corpus


# -- subcommands ---------------------------------------------------------------------


def cmd_gen(args) -> int:
    overrides = dict(
        height=args.height, width=args.width, period=args.period, stride=args.stride,
        head=args.head, torso=args.torso, hole_free=not args.allow_holes,
    )
    if args.sequences < 1:
        raise ValueError("--sequences must be at least 1")
    WalkerConfig(frames=args.frames, **overrides).validate()
    corpus = generate_corpus(args.seed, args.sequences, args.frames, **overrides)
    save_corpus(corpus, args.output, args.format)
    frames = sum(len(s) for s in corpus)
    active = sum(f.popcount() for s in corpus for f in s)
    _emit({
        "sequences": len(corpus),
        "frames": frames,
        "silhouette_density": active / (frames * args.height * args.width),
        "config": _config(args),
    }, None)
    return EXIT_OK


def cmd_vocab(args) -> int:
    corpus = _load(args.corpus)
    h, w = corpus[0].height, corpus[0].width
    vocab = build_vocabulary(h * w, args.N, args.seed, height=h, width=w)
    counters = _map(lambda s: FrequencyCounter(vocab.pixels).update(s), corpus, args.threads)
    total = counters[0]
    for c in counters[1:]:
        total = total.merge(c)
    freq = total.table(vocab, args.f_min, args.normalization)
    args.output.write_text(dump_vocabulary(vocab, freq))
    _emit({
        "tokens": int(len(freq.token_ids)),
        "active_tokens": int(np.count_nonzero(freq.frequencies)),
        "frames": freq.frame_count,
        "mean_contour_frequency": freq.mean_contour_frequency,
        "config": _config(args),
    }, None)
    return EXIT_OK


def cmd_tokenize(args) -> int:
    vocab, freq = parse_vocabulary(args.vocab.read_text())
    corpus = _load(args.corpus)
    for seq in corpus:
        try:
            vocab.check_frame(seq.height, seq.width)
        except ValueError as exc:
            raise ValueError(f"sequence {seq.label!r}: {exc}") from None
    slot_coef = freq.slot_coefficients(vocab)
    encoded = _map(lambda s: (s.label, encode_sequence(s, vocab, freq, slot_coef)), corpus, args.threads)
    if args.format == "jsonl":
        with open(args.output, "w", encoding="utf-8", newline="\n") as out:
            n = write_jsonl(encoded, out)
    else:
        with open(args.output, "wb") as out:
            n = write_binary(encoded, out)
    tokens = sum(len(tf) for _, frames in encoded for tf in frames)
    _emit({"frames": n, "tokens": tokens, "config": _config(args)}, None)
    return EXIT_OK


def cmd_stats(args) -> int:
    corpus = _load(args.corpus)
    parts = _map(DensityCounts.of_sequence, corpus, args.threads)
    counts = parts[0]
    for p in parts[1:]:
        counts = counts.merge(p)
    entries = {m: _entry(counts, m) for m in MAP_TYPES}
    p_s = entries["silhouette"].density
    acr = {
        "corpus": {
            "silhouette": 1.0 if p_s > 0 else None,
            "contour": entries["contour"].density / p_s if p_s > 0 else None,
            "velocity": entries["velocity"].density / p_s if p_s > 0 else None,
        }
    }
    if args.reference_densities:
        acr["reference"] = acr_table(json.loads(args.reference_densities.read_text()))
    rt = roundtrip_report(corpus, args.mode)
    report = {
        "densities": {m: entries[m].to_dict() for m in MAP_TYPES},
        "acr": acr,
        "roundtrip": rt.to_dict(),
        "config": _config(args),
    }

    if args.vocab or args.histogram_csv:
        if args.vocab:
            vocab, freq = parse_vocabulary(args.vocab.read_text())
        else:
            h, w = corpus[0].height, corpus[0].width
            vocab = build_vocabulary(h * w, DEFAULT_VOCAB_SIZE, 0, height=h, width=w)
            counter = FrequencyCounter(vocab.pixels)
            for seq in corpus:
                counter.update(seq)
            freq = counter.table(vocab)
        hists = [compute_histogram(freq, ch, args.bins) for ch in CHANNELS]
        if args.overlay:
            low = hists[0].edges[0]
            hists.append(histogram_from_values(overlay_frequencies(args.overlay.read_text()), args.bins, "overlay", low))
        if args.histogram_csv:
            args.histogram_csv.write_text(
                hists[0].to_csv() + "".join(h.to_csv().split("\n", 1)[1] for h in hists[1:])
            )
        report["histograms"] = {
            h.tag: {"edges": h.edges.tolist(), "counts": h.counts.tolist(), "zero": h.zero_count}
            for h in hists
        }

    if args.heatmap_dir:
        args.heatmap_dir.mkdir(parents=True, exist_ok=True)
        for m in MAP_TYPES:
            hm = compute_heatmap(corpus, m, args.heatmap_normalization)
            (args.heatmap_dir / f"{m}.pgm").write_bytes(hm.to_pgm(args.heatmap_bits))
            (args.heatmap_dir / f"{m}.csv").write_text(hm.to_csv())

    _emit(report, args.output)
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    corpus = _load(args.corpus)
    rt = roundtrip_report(corpus, args.mode)
    _emit({"roundtrip": rt.to_dict(), "config": _config(args)}, args.output)
    return EXIT_OK if rt.mismatched_pixels <= args.max_mismatch else EXIT_INVALID


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cvtok", description="Contour-velocity tokenizer for binary silhouettes.",
                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help, func):
        p = sub.add_parser(name, help=help, description=help, allow_abbrev=False)
        p.set_defaults(func=func)
        return p

    def threads(p):
        p.add_argument("--threads", type=int, default=_default_threads(),
                       help=f"worker threads (default from ${THREADS_ENV}, else 1); output does not depend on it")

    g = add("gen", "generate a synthetic walker corpus", cmd_gen)
    g.add_argument("output", type=Path, help="output corpus directory")
    g.add_argument("--seed", type=int, default=0, help="corpus seed (default 0)")
    g.add_argument("--frames", type=int, default=30, help="frames per sequence (default 30)")
    g.add_argument("--sequences", type=int, default=1, help="number of sequences (default 1)")
    g.add_argument("--height", type=int, default=64, help="frame height in pixels (default 64)")
    g.add_argument("--width", type=int, default=44, help="frame width in pixels (default 44)")
    g.add_argument("--period", type=int, default=WalkerConfig.period, help="gait period in frames")
    g.add_argument("--stride", type=int, default=WalkerConfig.stride, help="foot swing amplitude in pixels")
    g.add_argument("--head", type=float, default=WalkerConfig.head, help="head diameter as a fraction of body height")
    g.add_argument("--torso", type=float, default=WalkerConfig.torso, help="torso length as a fraction of body height")
    g.add_argument("--allow-holes", action="store_true", help="do not enforce hole-free frames")
    g.add_argument("--format", choices=("silb", "pgm"), default="silb", help="corpus layout (default silb)")

    v = add("vocab", "build a vocabulary file with token frequencies and coefficients", cmd_vocab)
    v.add_argument("corpus", type=Path, help="training corpus (directory or .silb file)")
    v.add_argument("-o", "--output", type=Path, required=True, help="vocabulary JSON to write")
    v.add_argument("--N", type=int, default=DEFAULT_VOCAB_SIZE, help=f"vocabulary size (default {DEFAULT_VOCAB_SIZE})")
    v.add_argument("--seed", type=int, default=0, help="token permutation seed; 0 is the identity layout")
    v.add_argument("--f-min", type=float, default=None, help="frequency floor (default 1/frames)")
    v.add_argument("--normalization", choices=("mean", "median"), default="mean",
                   help="reference contour frequency for the coefficients (default mean)")
    threads(v)

    t = add("tokenize", "encode a corpus into token streams", cmd_tokenize)
    t.add_argument("corpus", type=Path, help="corpus to encode")
    t.add_argument("--vocab", type=Path, required=True, help="vocabulary JSON from 'vocab'")
    t.add_argument("-o", "--output", type=Path, required=True, help="token stream file to write")
    t.add_argument("--format", choices=("jsonl", "binary"), default="jsonl", help="stream format (default jsonl)")
    threads(t)

    s = add("stats", "token densities, compression rates, histograms and heatmaps", cmd_stats)
    s.add_argument("corpus", type=Path, help="corpus to analyse")
    s.add_argument("-o", "--output", type=Path, default=None, help="report JSON (default stdout)")
    s.add_argument("--mode", choices=FILL_MODES, default="exterior-fill", help="reconstruction mode for the roundtrip section")
    s.add_argument("--reference-densities", type=Path, default=None,
                   help='JSON {dataset: {"silhouette": p, "contour": p, "velocity": p}} for the ACR section')
    s.add_argument("--vocab", type=Path, default=None, help="vocabulary JSON whose frequencies feed the histograms")
    s.add_argument("--histogram-csv", type=Path, default=None, help="write token-frequency histograms as CSV")
    s.add_argument("--bins", type=int, default=20, help="histogram bins (default 20)")
    s.add_argument("--overlay", type=Path, default=None, help="vocabulary-format frequency file to overlay (e.g. text tokens)")
    s.add_argument("--heatmap-dir", type=Path, default=None, help="write <map>.pgm and <map>.csv heatmaps here")
    s.add_argument("--heatmap-bits", type=int, choices=(8, 16), default=8, help="PGM sample depth (default 8)")
    s.add_argument("--heatmap-normalization", choices=("raw", "contour-range"), default="contour-range",
                   help="heatmap scaling (default contour-range)")
    threads(s)

    r = add("roundtrip", "check that silhouettes are recovered from their contours", cmd_roundtrip)
    r.add_argument("corpus", type=Path, help="corpus to check")
    r.add_argument("--mode", choices=FILL_MODES, default="exterior-fill", help="reconstruction mode")
    r.add_argument("--max-mismatch", type=int, default=0, help="allowed mismatched pixels before exiting 1 (default 0)")
    r.add_argument("-o", "--output", type=Path, default=None, help="report JSON (default stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"cvtok: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"cvtok: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
