"""Command-line surface: corpus creation, search runs, candidate-set
analysis, and low-pass construction.

Exit codes are a stable scripting contract: 0 success, 2 usage or
validation failure, 3 bridge unavailable, 4 runtime failure mid-search.
Logs go to stderr; stdout and output files carry machine-readable results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis as ana
from .bridge_client import BridgeConnection, BridgeGenerator, ExternalVerifier
from .dsp import AudioBuffer, StftParams, load_wav, make_lowres, save_wav, stft
from .errors import (
    BridgeProtocolError,
    BridgeUnavailableError,
    DimensionError,
    ParameterError,
    SearchRuntimeError,
    UnsupportedCodecError,
    WavFormatError,
)
from .generators import SyntheticGenerator, SyntheticGenParams, make_test_corpus
from .search import SearchConfig, run_search
from .verifiers import (
    Condition,
    ConditionKind,
    EnsembleVerifier,
    OracleLsdVerifier,
    Verifier,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BRIDGE = 3
EXIT_RUNTIME = 4

SEARCH_DEFAULTS = {
    "algorithm": "random",
    "budget": 120,
    "k": 2,
    "lambda_param": 0.99,
    "seed": 0,
    "generator": "synthetic",
    "cutoff": 4000.0,
    "sigma": 0.5,
    "grid": "8x8",
    "rolloff": -3.0,
    "window": 2048,
    "hop": 512,
    "parallelism": os.cpu_count() or 1,
    "perturb_mode": "spherical",
    "bridge_cmd": None,
    "keep_all": False,
}

_CONDITION_KEYS = {
    "text": ConditionKind.REFERENCE_TEXT,
    "transcript": ConditionKind.TRANSCRIPT,
    "speaker": ConditionKind.SPEAKER_PROMPT,
    "audio": ConditionKind.REFERENCE_AUDIO,
}


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _split_members(body: str) -> list[str]:
    """Split ensemble members on top-level commas, respecting quotes."""
    members, depth, quoted, start = [], 0, False, 0
    for i, ch in enumerate(body):
        if ch == '"':
            quoted = not quoted
        elif not quoted:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                members.append(body[start:i])
                start = i + 1
    members.append(body[start:])
    return [m.strip() for m in members if m.strip()]


def parse_verifier_expr(expr: str) -> dict:
    """Parse the verifier mini-language into a plain tree.

    Grammar: ``lsd:PATH`` | ``extern:NAME[?key=value]`` |
    ``ensemble(member,member,...)``.
    """
    expr = expr.strip()
    if expr.startswith("ensemble(") and expr.endswith(")"):
        members = [parse_verifier_expr(m) for m in _split_members(expr[len("ensemble(") : -1])]
        if len(members) < 2:
            raise ParameterError("ensemble(...) needs at least 2 members")
        return {"backend": "ensemble", "members": members}
    if expr.startswith("lsd:"):
        path = expr[len("lsd:") :].strip().strip('"')
        if not path:
            raise ParameterError("lsd: requires a reference path, e.g. lsd:ref.wav")
        return {"backend": "oracle_lsd", "reference": path}
    if expr.startswith("extern:"):
        rest = expr[len("extern:") :].strip()
        name, _, query = rest.partition("?")
        if not name:
            raise ParameterError("extern: requires a verifier name")
        condition = {"kind": "none", "payload": None}
        if query:
            key, _, value = query.partition("=")
            kind = _CONDITION_KEYS.get(key.strip())
            if kind is None:
                raise ParameterError(
                    f"unknown condition key {key!r}; expected one of {sorted(_CONDITION_KEYS)}"
                )
            condition = {"kind": kind.value, "payload": value.strip().strip('"')}
        return {"backend": "external", "name": name, "condition": condition}
    raise ParameterError(
        f"cannot parse verifier {expr!r}; expected lsd:PATH, extern:NAME, or ensemble(...)"
    )


def _tree_needs_bridge(tree: dict) -> bool:
    if tree["backend"] == "external":
        return True
    return any(_tree_needs_bridge(m) for m in tree.get("members", []))


def build_verifier(tree: dict, stft_params: StftParams, connection=None) -> Verifier:
    backend = tree["backend"]
    if backend == "oracle_lsd":
        path = tree["reference"]
        reference = load_wav(path)
        return OracleLsdVerifier(reference, stft_params, reference_path=str(path))
    if backend == "external":
        if connection is None:
            raise BridgeUnavailableError(
                f"verifier {tree['name']!r} needs a bridge; set --bridge-cmd or SRSEARCH_BRIDGE_CMD"
            )
        cond = tree.get("condition", {"kind": "none", "payload": None})
        return ExternalVerifier(
            connection, tree["name"], Condition(ConditionKind(cond["kind"]), cond["payload"])
        )
    if backend == "ensemble":
        members = [build_verifier(m, stft_params, connection) for m in tree["members"]]
        return EnsembleVerifier(members)
    raise ParameterError(f"unknown verifier backend {backend!r}")


def _merged_options(args: argparse.Namespace, defaults: dict) -> tuple[dict, dict]:
    """Explicit flags beat --config values; --config beats built-in defaults."""
    config = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config = json.load(fh)
        unknown = set(config) - set(defaults) - {"verifier"}
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    for key, default in defaults.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
        elif key in config:
            merged[key] = config[key]
        else:
            merged[key] = default
    return merged, config


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        t, f = text.lower().split("x")
        return int(t), int(f)
    except ValueError as exc:
        raise ParameterError(f"grid must look like 8x8, got {text!r}") from exc


def cmd_corpus(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    items = make_test_corpus(
        count=args.count,
        seed=args.seed,
        sample_rate_hz=args.rate,
        duration_s=args.duration,
        cutoff_hz=args.cutoff,
    )
    index = []
    for i, (hr, lr) in enumerate(items):
        hr_name, lr_name = f"hr_{i:04d}.wav", f"lr_{i:04d}.wav"
        save_wav(hr, out / hr_name, codec="float32")
        save_wav(lr, out / lr_name, codec="float32")
        index.append({"hr": hr_name, "lr": lr_name})
    doc = {
        "schema_version": 1,
        "count": args.count,
        "seed": args.seed,
        "sample_rate_hz": args.rate,
        "duration_s": args.duration,
        "cutoff_hz": args.cutoff,
        "items": index,
    }
    (out / "corpus.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    _log(f"wrote {2 * len(items)} WAV files to {out}")
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    opts, config = _merged_options(args, SEARCH_DEFAULTS)
    lr = load_wav(args.input)
    stft_params = StftParams(window_len=opts["window"], hop_len=opts["hop"])

    # The verifier tree comes from the flag expression or, for complex
    # runs, from --config (either an expression string or a parsed tree).
    verifier_source = args.verifier if args.verifier is not None else config.get("verifier")
    if verifier_source is None:
        raise ParameterError("--verifier is required (e.g. lsd:ref.wav)")
    tree = (
        parse_verifier_expr(verifier_source)
        if isinstance(verifier_source, str)
        else verifier_source
    )
    if not isinstance(tree, dict) or "backend" not in tree:
        raise ParameterError(
            "config 'verifier' must be an expression string or a tree object with 'backend'"
        )

    bridge_cmd = opts["bridge_cmd"] or os.environ.get("SRSEARCH_BRIDGE_CMD")
    needs_bridge = _tree_needs_bridge(tree) or opts["generator"] == "bridge"
    connection = None
    if needs_bridge:
        if not bridge_cmd:
            raise BridgeUnavailableError(
                "a bridge generator/verifier was requested but no bridge command is "
                "configured (use --bridge-cmd or SRSEARCH_BRIDGE_CMD)"
            )
        connection = BridgeConnection(bridge_cmd)

    try:
        if opts["generator"] == "synthetic":
            grid = _parse_grid(opts["grid"])
            gen_params = SyntheticGenParams(
                cutoff_hz=float(opts["cutoff"]),
                envelope_grid=grid,
                sigma=float(opts["sigma"]),
                base_rolloff_db_per_octave=float(opts["rolloff"]),
                stft=stft_params,
            )
            generator = SyntheticGenerator(gen_params, sample_rate_hz=lr.sample_rate_hz)
        elif opts["generator"] == "bridge":
            generator = BridgeGenerator(connection)
        else:
            raise ParameterError(f"unknown generator {opts['generator']!r}")

        verifier = build_verifier(tree, stft_params, connection)
        config = SearchConfig(
            algorithm=opts["algorithm"],
            budget_n=int(opts["budget"]),
            neighbors_k=int(opts["k"]),
            lambda_param=float(opts["lambda_param"]),
            master_seed=int(opts["seed"]),
            parallelism=int(opts["parallelism"]),
            perturb_mode=opts["perturb_mode"],
        )

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        result = run_search(lr, generator, verifier, config, keep_candidates=opts["keep_all"])

        manifest = result.manifest
        save_wav(result.selected_audio, out / "selected.wav", codec="float32")
        manifest.candidates[manifest.selected_index].artifact_path = "selected.wav"
        if opts["keep_all"] and result.candidate_audio is not None:
            cand_dir = out / "candidates"
            cand_dir.mkdir(exist_ok=True)
            for record, audio in zip(manifest.candidates, result.candidate_audio):
                rel = f"candidates/cand_{record.index:04d}.wav"
                save_wav(audio, out / rel, codec="float32")
                record.artifact_path = rel
            manifest.candidates[manifest.selected_index].artifact_path = "selected.wav"
        (out / "manifest.json").write_text(manifest.to_json() + "\n")

        selected = manifest.candidates[manifest.selected_index]
        score = selected.scores[verifier.name]
        print(
            f"selected index={manifest.selected_index} score={score.value:.6f} "
            f"verifier={verifier.name}"
        )
        return EXIT_OK
    finally:
        if connection is not None:
            connection.close()


def _load_candidate_buffers(args: argparse.Namespace) -> list[AudioBuffer]:
    if args.candidates:
        paths = sorted(Path(args.candidates).glob("*.wav"))
        return [load_wav(p) for p in paths]
    if args.manifest:
        manifest_path = Path(args.manifest)
        doc = json.loads(manifest_path.read_text())
        base = manifest_path.parent
        buffers = []
        for record in doc.get("candidates", []):
            rel = record.get("artifact_path")
            if rel:
                buffers.append(load_wav(base / rel))
        return buffers
    raise ParameterError("provide --candidates DIR or --manifest PATH")


def cmd_analyze(args: argparse.Namespace) -> int:
    buffers = _load_candidate_buffers(args)
    if len(buffers) < 2:
        raise ParameterError(f"analysis needs at least 2 candidates, found {len(buffers)}")
    stft_params = StftParams(window_len=args.window, hop_len=args.hop)
    shortest = min(len(b) for b in buffers)
    specs = tuple(
        stft(AudioBuffer(b.samples[:shortest], b.sample_rate_hz), stft_params) for b in buffers
    )
    candidate_set = ana.CandidateSet(specs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    variance = ana.search_space_variance(candidate_set)
    doc = {
        "schema_version": 1,
        "search_space_variance": variance,
        "num_candidates": len(buffers),
        "stft": {"window_len": args.window, "hop_len": args.hop},
    }
    (out / "range.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")

    umap = ana.uncertainty_map(candidate_set)
    rendered = ana.clip_for_render(umap, percentile=args.clip_percentile)
    ana.export_map(rendered, out / "uncertainty.pgm", fmt="pgm")
    ana.export_map(rendered, out / "uncertainty.csv", fmt="csv")
    _log(f"variance={variance:.6f} over {len(buffers)} candidates -> {out}")
    return EXIT_OK


def cmd_lowres(args: argparse.Namespace) -> int:
    hr = load_wav(args.input)
    lr = make_lowres(hr, args.cutoff)
    save_wav(lr, args.output, codec=args.codec)
    _log(f"low-passed {args.input} at {args.cutoff} Hz -> {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srsearch",
        description="Verifier-guided inference-time search for audio super-resolution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus", help="write a deterministic synthetic (HR, LR) corpus")
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=int, default=24000)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--cutoff", type=float, default=4000.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("search", help="run a budgeted candidate search on one LR input")
    p.add_argument("input", help="low-resolution input WAV")
    p.add_argument("--verifier", help='e.g. lsd:ref.wav or ensemble(lsd:ref.wav,extern:clap?text="...")')
    p.add_argument("--algorithm", choices=["random", "zero_order"])
    p.add_argument("--budget", type=int, help="total candidate budget N (default 120)")
    p.add_argument("--k", type=int, help="zero-order neighborhood size K (default 2)")
    p.add_argument("--lambda", dest="lambda_param", type=float, help="zero-order mixing (default 0.99)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--generator", choices=["synthetic", "bridge"])
    p.add_argument("--cutoff", type=float, help="synthetic generator cutoff Hz")
    p.add_argument("--sigma", type=float, help="synthetic envelope noise scale")
    p.add_argument("--grid", help="synthetic envelope grid, e.g. 8x8")
    p.add_argument("--rolloff", type=float, help="synthetic rolloff dB/octave")
    p.add_argument("--window", type=int, help="STFT window length (default 2048)")
    p.add_argument("--hop", type=int, help="STFT hop length (default 512)")
    p.add_argument("--parallelism", type=int, help="worker count (default: cores)")
    p.add_argument("--perturb-mode", dest="perturb_mode", choices=["spherical", "euclidean"])
    p.add_argument("--bridge-cmd", dest="bridge_cmd", help="bridge launch command")
    p.add_argument("--keep-all", dest="keep_all", action="store_true", default=None)
    p.add_argument("--config", help="JSON file of option values (flags win)")
    p.add_argument("--out", "-o", required=True, help="output directory")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("analyze", help="range + uncertainty analysis of a candidate set")
    p.add_argument("--candidates", help="directory of candidate WAV files")
    p.add_argument("--manifest", help="manifest.json with kept candidate artifacts")
    p.add_argument("--window", type=int, default=2048)
    p.add_argument("--hop", type=int, default=512)
    p.add_argument("--clip-percentile", dest="clip_percentile", type=float, default=90.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("lowres", help="low-pass an input WAV at a cutoff")
    p.add_argument("input")
    p.add_argument("--cutoff", type=float, required=True)
    p.add_argument("--codec", choices=["pcm16", "float32"], default="float32")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_lowres)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ParameterError,
        DimensionError,
        WavFormatError,
        UnsupportedCodecError,
        FileNotFoundError,
        IsADirectoryError,
        NotADirectoryError,
        json.JSONDecodeError,
    ) as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    except BridgeUnavailableError as exc:
        _log(f"bridge unavailable: {exc}")
        return EXIT_BRIDGE
    except (SearchRuntimeError, BridgeProtocolError) as exc:
        _log(f"runtime failure: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
