"""capkit command line: transcribe / analyze / serve / simulate.

Exit codes: 0 success, 1 usage error, 2 runtime error. ``--out -`` and
``--report -`` write to stdout. ``--config FILE`` supplies defaults from a
JSON object whose keys mirror the pipeline/simulation/network settings in
snake_case; explicit flags win. Set CAPKIT_LOG to change the log level.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from . import __version__
from .audio import (
    AudioFormatError,
    PipelineConfig,
    chunk_stream,
    compute_dbfs,
    read_transcripts,
    read_wav,
)
from .lexicons import LexiconError, Lexicons, bundled_lexicons, load_lexicons
from .pipeline import ScriptedTranscriber, transcribe_ordered
from .sim import SimConfig
from .simulate import ScriptError, load_script, report_json, run_simulation
from .textproc import build_caption_specs

logger = logging.getLogger(__name__)

DEFAULT_STUB_LINES = Path(__file__).parent / "data" / "stub_lines.txt"

# config-file keys and the merged settings they feed
_PIPELINE_KEYS = {"chunk_ms": int, "workers": int, "sample_rate": int}
_SIM_KEYS = {
    "tick_hz": int,
    "ttl_s": (int, float),
    "charge_max_s": (int, float),
    "v_shoot_min": (int, float),
    "v_shoot_max": (int, float),
    "gravity": (int, float),
    "spawn_offset": list,
    "spawn_forward": (int, float),
    "explosion_replicas": int,
    "explosion_speed": (int, float),
    "explosion_lifetime_s": (int, float),
    "orbit_radius": (int, float),
    "orbit_rate": (int, float),
    "arena_half_extent": (int, float),
    "scale_min": (int, float),
    "scale_max": (int, float),
}
_NET_KEYS = {"bind": str, "seed": int, "lexicon_dir": str, "clients": int}
KNOWN_KEYS = {**_PIPELINE_KEYS, **_SIM_KEYS, **_NET_KEYS}


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems exit 1, not argparse's 2
        raise UsageError(message)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    for key, value in raw.items():
        if key not in KNOWN_KEYS:
            raise ConfigError(f"config key {key!r}: unknown setting")
        want = KNOWN_KEYS[key]
        if isinstance(value, bool) or not isinstance(value, want):
            raise ConfigError(f"config key {key!r}: expected {want}, got {value!r}")
    return raw


def _merged(args: argparse.Namespace, config: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return config.get(key, default)


def _sim_config(config: dict, tick_hz: int | None) -> SimConfig:
    kwargs = {k: config[k] for k in _SIM_KEYS if k in config}
    if tick_hz is not None:
        kwargs["tick_hz"] = tick_hz
    if "spawn_offset" in kwargs:
        kwargs["spawn_offset"] = tuple(float(v) for v in kwargs["spawn_offset"])
    try:
        return SimConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"simulation settings: {exc}")


def _lexicons(args: argparse.Namespace, config: dict) -> Lexicons:
    directory = _merged(args, config, "lexicon_dir", None)
    return load_lexicons(directory) if directory else bundled_lexicons()


def _open_out(path: str):
    if path == "-":
        return nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_transcribe(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    chunk_ms = int(_merged(args, config, "chunk_ms", 1000))
    workers = int(_merged(args, config, "workers", 4))
    source = Path(args.input)
    if source.suffix.lower() == ".jsonl":
        with open(source, encoding="utf-8") as fh:
            transcripts = read_transcripts(fh)
    else:
        samples, rate = read_wav(source)
        cfg = PipelineConfig(chunk_ms=chunk_ms, workers=workers, sample_rate=rate)
        stub = ScriptedTranscriber.from_file(args.stub_script or DEFAULT_STUB_LINES)
        transcripts = list(transcribe_ordered(chunk_stream(samples, cfg), stub, cfg))
    with _open_out(args.out) as out:
        if args.emit == "transcripts":
            for t in transcripts:
                out.write(t.to_json() + "\n")
        else:
            lex = _lexicons(args, config)
            for t in transcripts:
                for spec in build_caption_specs(t, args.speaker, lex):
                    out.write(spec.to_json() + "\n")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    chunk_ms = int(_merged(args, config, "chunk_ms", 1000))
    samples, rate = read_wav(args.input)
    cfg = PipelineConfig(chunk_ms=chunk_ms, workers=1, sample_rate=rate)
    print(f"# {args.input}: {samples.size} samples at {rate} Hz "
          f"({samples.size / rate:.3f} s), chunk {chunk_ms} ms")
    print(f"{'seq':>5}  {'samples':>8}  {'dbfs':>10}")
    for fragment in chunk_stream(samples, cfg):
        level = compute_dbfs(fragment)
        text = "-inf" if level == float("-inf") else f"{level:.3f}"
        print(f"{fragment.seq:>5}  {fragment.samples.size:>8}  {text:>10}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve_forever

    config = load_config(args.config)
    bind = _merged(args, config, "bind", "127.0.0.1:8765")
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise UsageError(f"--bind must be HOST:PORT, got {bind!r}")
    seed = int(_merged(args, config, "seed", 0))
    sim_cfg = _sim_config(config, args.tick_hz)
    lex = _lexicons(args, config)
    print(f"capkit session on ws://{host}:{port_text} "
          f"(tick {sim_cfg.tick_hz} Hz, seed {seed})")
    try:
        asyncio.run(
            serve_forever(host, int(port_text), sim_config=sim_cfg, lexicons=lex, seed=seed)
        )
    except KeyboardInterrupt:
        print("interrupted, shutting down")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    n_clients = int(_merged(args, config, "clients", 2))
    seed = int(_merged(args, config, "seed", 0))
    sim_cfg = _sim_config(config, None)
    script = load_script(args.script)
    report = run_simulation(
        n_clients,
        script,
        seed,
        sim_config=sim_cfg,
        lexicons=_lexicons(args, config),
        script_name=str(args.script),
    )
    text = report_json(report)
    if args.report == "-":
        sys.stdout.write(text)
    else:
        Path(args.report).write_text(text, encoding="utf-8")
        print(
            f"simulate: clients={report['clients']} ticks={report['ticks']} "
            f"accepted={report['intents']['accepted']} rejected={report['intents']['rejected']} "
            f"converged={str(report['converged']).lower()} -> {args.report}"
        )
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="capkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"capkit {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("transcribe", help="audio/transcripts -> caption specs (or transcripts)")
    p.add_argument("--input", required=True, help="WAV (PCM 16-bit mono) or transcript .jsonl")
    p.add_argument("--chunk-ms", type=int, dest="chunk_ms")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", default="-", help="output path, - for stdout")
    p.add_argument("--emit", choices=("specs", "transcripts"), default="specs")
    p.add_argument("--speaker", default="local", help="avatar id stamped on emitted specs")
    p.add_argument("--stub-script", help="lines file for the scripted transcriber (WAV input)")
    p.add_argument("--lexicon-dir", dest="lexicon_dir")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_transcribe)

    p = sub.add_parser("analyze", help="per-fragment dBFS table for a WAV file")
    p.add_argument("--input", required=True)
    p.add_argument("--chunk-ms", type=int, dest="chunk_ms")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("serve", help="host a live WebSocket session")
    p.add_argument("--bind", help="HOST:PORT (default 127.0.0.1:8765)")
    p.add_argument("--tick-hz", type=int, dest="tick_hz")
    p.add_argument("--seed", type=int)
    p.add_argument("--lexicon-dir", dest="lexicon_dir")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("simulate", help="run a scripted multi-client session in-process")
    p.add_argument("--clients", type=int)
    p.add_argument("--script", required=True, help="newline-delimited intent records")
    p.add_argument("--seed", type=int)
    p.add_argument("--report", default="-", help="report path, - for stdout")
    p.add_argument("--lexicon-dir", dest="lexicon_dir")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("CAPKIT_LOG", "WARNING").upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "fn", None) is None:
            parser.print_help(sys.stderr)
            return 1
        return args.fn(args)
    except UsageError as exc:
        print(f"capkit: usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ScriptError, LexiconError, AudioFormatError, ValueError, OSError) as exc:
        print(f"capkit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
