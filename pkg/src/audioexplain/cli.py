"""Command line entry point: ``audioexplain explain`` and ``audioexplain evaluate``.

Exit codes: 0 success, 1 usage error, 2 transcriber error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from itertools import groupby
from statistics import fmean

from .audio import Audio, WavError, apply_mask, frame_grid, read_wav, write_wav
from .causal import CausalConfig
from .explain import METHODS, Explanation, InsufficientExplanationError, consistency, explain
from .mutation import MutationConfig
from .similarity import ClassifierConfig, ProviderError
from .testkit import ToyAsrSpec, ToyTranscriber
from .transcriber import HttpEmbeddingProvider, HttpTranscriber, TranscriberError, TranscriptionCache

log = logging.getLogger("audioexplain")

EXIT_USAGE, EXIT_TRANSCRIBER, EXIT_IO = 1, 2, 3
TOKEN_ENV = "AUDIOEXPLAIN_TOKEN"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _atomic_write(path: str, data: bytes):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment, keys use flag names."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            out[key.replace("-", "_")] = value.strip("'\"")
    return out


def _add_engine_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file setting any flag; explicit flags win")
    p.add_argument("--metric", choices=("semantic", "wer"), default="semantic")
    p.add_argument("--threshold", type=float, help="similarity threshold (default 0.5 semantic, 0 wer)")
    p.add_argument("--rate", type=int, default=16000, help="expected sample rate in Hz (default 16000)")
    p.add_argument("--frame-length", type=int, default=512, help="samples per frame (default 512)")
    p.add_argument("--mutants", type=int, default=100, help="mutant set size (default 100)")
    p.add_argument("--alpha", type=float, default=0.05, help="initial masked fraction (default 0.05)")
    p.add_argument("--mu", type=float, default=0.01, help="masked fraction step (default 0.01)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=3, help="causal partitionings (default 3)")
    p.add_argument("--superframes", type=int, default=4, help="initial causal superframes (default 4)")
    p.add_argument("--budget", type=int, default=100, help="causal mutants per level (default 100)")
    p.add_argument("--depth", type=int, default=6, help="causal refinement depth limit (default 6)")
    p.add_argument("--sigma", type=float, default=0.25, help="surrogate kernel width (default 0.25)")
    p.add_argument("--lam", type=float, default=1e-3, help="surrogate ridge strength (default 1e-3)")
    p.add_argument("--embed-endpoint", help="sentence-embedding service for the semantic metric")
    p.add_argument("--cache", help="JSON-lines transcription cache file")
    p.add_argument("--concurrency", type=int, default=4, help="transcriptions in flight (default 4)")
    p.add_argument("--timeout", type=float, default=30.0, help="HTTP timeout in seconds (default 30)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="audioexplain", description="Explain ASR transcriptions by their causal audio frames.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    ex = sub.add_parser("explain", help="explain one audio file")
    ex.add_argument("--audio", required=True, help="16-bit mono PCM WAV file")
    ex.add_argument("--method", choices=METHODS, default="sfl")
    src = ex.add_mutually_exclusive_group()
    src.add_argument("--toy-spec", help="toy transcriber JSON spec")
    src.add_argument("--endpoint", help=f"HTTP transcriber URL (bearer token from ${TOKEN_ENV})")
    ex.add_argument("--out", help="explanation JSON path (default stdout)")
    ex.add_argument("--masked-wav", help="write the explanation audio (other frames silenced)")
    ex.add_argument("--plot-csv", help="write per-sample amplitude and explanation flag")
    _add_engine_flags(ex)

    ev = sub.add_parser("evaluate", help="batch size and consistency report from a manifest")
    ev.add_argument("--manifest", required=True, help="JSON manifest of audio files and transcribers")
    ev.add_argument("--out", help="report JSON path (default stdout)")
    ev.add_argument("--table", help="aligned text table path (default stderr)")
    ev.add_argument("--jobs", type=int, default=1, help="items evaluated concurrently")
    _add_engine_flags(ev)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    early, _ = pre.parse_known_args(argv)
    subparsers = parser._subparsers._group_actions[0].choices
    if early.config and early.command in subparsers:
        values = read_config(early.config)
        sub = subparsers[early.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"{early.config}: unknown config keys: {', '.join(unknown)}")
        for action in sub._actions:
            if action.dest in values:
                action.required = False
        sub.set_defaults(**values)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        parser.exit(EXIT_USAGE)
    for action in subparsers[args.command]._actions:
        value = getattr(args, action.dest, None)
        if action.choices and value is not None and value not in action.choices:
            raise UsageError(f"invalid value {value!r} for {action.dest}; choose from {', '.join(action.choices)}")
    if args.threshold is None:
        args.threshold = 0.0 if args.metric == "wer" else 0.5
    return args


def _classifier(args) -> ClassifierConfig:
    try:
        return ClassifierConfig(args.metric, args.threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _provider(args):
    if args.metric == "semantic" and args.embed_endpoint:
        return HttpEmbeddingProvider(args.embed_endpoint, os.environ.get(TOKEN_ENV), args.timeout)
    return None


def _transcriber(toy_spec: str | None, endpoint: str | None, args, base: str = ".", name: str | None = None):
    if toy_spec:
        path = os.path.join(base, toy_spec)
        try:
            spec = ToyAsrSpec.load(path)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{path}: invalid toy spec: {exc}") from exc
        return ToyTranscriber(spec, args.frame_length, id=name and f"toy:{name}")
    if endpoint:
        return HttpTranscriber(endpoint, os.environ.get(TOKEN_ENV), args.timeout, id=name)
    raise UsageError("a transcriber is required: pass --toy-spec or --endpoint")


def _load_audio(path: str, rate: int) -> Audio:
    with open(path, "rb") as fh:
        audio = read_wav(fh.read())
    if audio.sample_rate != rate:
        raise UsageError(f"{path}: sample rate {audio.sample_rate} Hz, expected {rate} Hz (no resampling)")
    return audio


def _run_one(transcriber, audio: Audio, method: str, args, cache) -> Explanation:
    return explain(
        transcriber,
        audio,
        method,
        _classifier(args),
        frame_length=args.frame_length,
        seed=args.seed,
        mutation=MutationConfig(args.alpha, args.mu, args.mutants, args.seed),
        causal=CausalConfig(args.runs, args.superframes, args.budget, args.depth, args.seed),
        sigma=args.sigma,
        lam=args.lam,
        provider=_provider(args),
        cache=cache,
        concurrency=args.concurrency,
    )


def plot_csv(audio: Audio, e: Explanation) -> str:
    buf = io.StringIO()
    buf.write("sample,time_s,amplitude,in_explanation\n")
    keep = set(e.frames)
    for i, v in enumerate(audio.samples.tolist()):
        buf.write(f"{i},{i / audio.sample_rate:.6f},{v},{int(i // e.frame_length in keep)}\n")
    return buf.getvalue()


def cmd_explain(args) -> int:
    audio = _load_audio(args.audio, args.rate)
    transcriber = _transcriber(args.toy_spec, args.endpoint, args)
    cache = TranscriptionCache(args.cache) if args.cache else None
    e = _run_one(transcriber, audio, args.method, args, cache)
    payload = e.to_json().encode()
    if args.out:
        _atomic_write(args.out, payload)
    else:
        sys.stdout.write(payload.decode())
    if args.masked_wav:
        grid = frame_grid(audio, args.frame_length)
        _atomic_write(args.masked_wav, write_wav(apply_mask(audio, grid, e.mask())))
    if args.plot_csv:
        _atomic_write(args.plot_csv, plot_csv(audio, e).encode())
    log.info("%s: %d/%d frames (%.3f)", args.method, len(e.frames), e.n_frames, e.size_ratio)
    return 0


def _manifest(path: str) -> tuple[dict, str]:
    with open(path, encoding="utf-8") as fh:
        m = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    items = m.get("items") or []
    if not items:
        raise UsageError(f"{path}: manifest lists no items")
    if not m.get("transcribers"):
        raise UsageError(f"{path}: manifest lists no transcribers")
    ref = m.get("reference") or sorted(m["transcribers"])[0]
    if ref not in m["transcribers"]:
        raise UsageError(f"{path}: reference {ref!r} is not a listed transcriber")
    m["reference"] = ref
    m["items"] = [{"audio": i} if isinstance(i, str) else i for i in items]
    return m, base


def table(rows: list[list[str]]) -> str:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return "".join("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() + "\n" for r in rows)


def cmd_evaluate(args) -> int:
    m, base = _manifest(args.manifest)
    methods = m.get("methods") or list(METHODS)
    metrics = m.get("metrics") or [args.metric]
    names = sorted(m["transcribers"])
    cache = TranscriptionCache(args.cache) if args.cache else None
    transcribers = {
        n: _transcriber(cfg.get("toy_spec"), cfg.get("endpoint"), args, base, name=n)
        for n, cfg in m["transcribers"].items()
    }

    jobs = []
    for idx, item in enumerate(m["items"]):
        for name in names:
            for method in methods:
                for metric in metrics:
                    jobs.append((idx, item["audio"], name, method, metric))

    def run(job):
        idx, audio_path, name, method, metric = job
        sub = argparse.Namespace(**vars(args))
        sub.metric = metric
        sub.threshold = args.threshold if metric == args.metric else (0.0 if metric == "wer" else 0.5)
        rec = {"item": idx, "audio": audio_path, "transcriber": name, "method": method, "metric": metric}
        try:
            audio = _load_audio(os.path.join(base, audio_path), args.rate)
            e = _run_one(transcribers[name], audio, method, sub, cache)
        except (OSError, WavError, UsageError, TranscriberError, ProviderError, InsufficientExplanationError) as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
            return rec, None
        rec.update(n_frames=e.n_frames, explanation_frames=list(e.frames), size_ratio=e.size_ratio)
        return rec, e

    with ThreadPoolExecutor(max(1, args.jobs)) as pool:
        results = list(pool.map(run, jobs))

    records = [r for r, _ in results]
    by_key = {(r["item"], r["transcriber"], r["method"], r["metric"]): e for r, e in results}
    pairs = []
    for idx in range(len(m["items"])):
        for method in methods:
            for metric in metrics:
                ref = by_key.get((idx, m["reference"], method, metric))
                for name in names:
                    other = by_key.get((idx, name, method, metric))
                    if name == m["reference"] or ref is None or other is None:
                        continue
                    pairs.append(
                        {"item": idx, "method": method, "metric": metric, "reference": m["reference"],
                         "other": name, "consistency": consistency(ref, other)}
                    )

    ok = [r for r in records if "error" not in r]
    key = lambda r: (r["method"], r["metric"], r["transcriber"])
    size_cells = [
        {"method": k[0], "metric": k[1], "transcriber": k[2], "n": len(g), "mean_size": fmean(r["size_ratio"] for r in g)}
        for k, g in ((k, list(g)) for k, g in groupby(sorted(ok, key=key), key=key))
    ]
    ckey = lambda p: (p["method"], p["metric"], p["other"])
    cons_cells = [
        {"method": k[0], "metric": k[1], "reference": m["reference"], "other": k[2], "n": len(g),
         "mean_consistency": fmean(p["consistency"] for p in g)}
        for k, g in ((k, list(g)) for k, g in groupby(sorted(pairs, key=ckey), key=ckey))
    ]
    report = {
        "reference": m["reference"],
        "settings": {k: getattr(args, k) for k in ("frame_length", "mutants", "alpha", "mu", "seed", "runs", "threshold")},
        "items": records,
        "consistency": pairs,
        "aggregate": {"size": size_cells, "consistency": cons_cells},
        "failures": len(records) - len(ok),
    }
    payload = (json.dumps(report, indent=2, sort_keys=True) + "\n").encode()
    if args.out:
        _atomic_write(args.out, payload)
    else:
        sys.stdout.write(payload.decode())

    rows = [["method", "metric", "transcriber", "n", "mean_size", "mean_consistency"]]
    cons_lookup = {(c["method"], c["metric"], c["other"]): c["mean_consistency"] for c in cons_cells}
    for c in size_cells:
        cons = cons_lookup.get((c["method"], c["metric"], c["transcriber"]))
        rows.append([c["method"], c["metric"], c["transcriber"], str(c["n"]), f"{c['mean_size']:.3f}",
                     "ref" if c["transcriber"] == m["reference"] else ("-" if cons is None else f"{cons:.3f}")])
    text = table(rows)
    if args.table:
        _atomic_write(args.table, text.encode())
    else:
        sys.stderr.write(text)
    for r in records:
        if "error" in r:
            log.error("item %d (%s, %s, %s): %s", r["item"], r["transcriber"], r["method"], r["metric"], r["error"])
    return EXIT_TRANSCRIBER if report["failures"] else 0


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"audioexplain: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"audioexplain: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return cmd_explain(args) if args.command == "explain" else cmd_evaluate(args)
    except UsageError as exc:
        print(f"audioexplain: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TranscriberError, ProviderError, InsufficientExplanationError) as exc:
        print(f"audioexplain: transcriber error: {exc}", file=sys.stderr)
        return EXIT_TRANSCRIBER
    except (OSError, WavError, json.JSONDecodeError) as exc:
        print(f"audioexplain: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
