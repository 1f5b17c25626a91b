"""Scripted multi-client sessions run in-process, in lockstep, for replay tests.

A script is newline-delimited JSON, one record per line:

    {"tick": 5, "client": "c2", "intent": {"kind": "submit_transcript",
        "transcript": {"seq": 0, "text": "happy cake", "dbfs": -15.0}}}
    {"tick": 7, "client": "c1", "intent": {"kind": "intent", "action": "grab",
        "target": {"live_index": 0}, "hand": "R"}}

Targets may name a caption id directly, pick the k-th live caption
(``{"live_index": k}``), or pick a caption the sender holds
(``{"held": true, "pick": n}``); attach targets may reference an avatar by
joined-client index (``{"client_index": j}``). Records whose selector finds
nothing are counted as skipped. Every message crosses a JSON encode/decode
boundary, so the harness exercises the real wire format.

The run report carries the server hash, each client's reconstructed-world
hash, and the convergence verdict; nothing in it depends on wall-clock time,
so identical inputs produce byte-identical reports.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import protocol
from .audio import dbfs_to_jsonable
from .lexicons import Lexicons
from .server import SessionCore
from .sim import Held, SimConfig, hash_hex, hash_snapshot

logger = logging.getLogger(__name__)

IDLE_TICKS = 5  # quiet ticks after the last scripted record before the verdict


class ScriptError(ValueError):
    """Malformed simulation script; message names the offending record."""


class ClientMirror:
    """Client-side replica of the world, rebuilt purely from wire messages."""

    def __init__(self) -> None:
        self.client_id: str | None = None
        self.avatar_id: str | None = None
        self.tick = -1
        self.captions: dict[str, dict] = {}
        self.avatars: dict[str, dict] = {}
        self.config: dict = {}

    def apply(self, msg: dict) -> None:
        kind = msg.get("kind")
        if kind == "welcome":
            self.client_id = msg["client_id"]
            self.avatar_id = msg["avatar_id"]
            self.config = msg.get("config", {})
            self._load(msg["snapshot"])
        elif kind == "snapshot":
            if msg["tick"] >= self.tick:
                self._load(msg)
        elif kind == "delta":
            if msg["tick"] <= self.tick:
                return  # stale
            for rec in msg["created"]:
                self.captions[rec["id"]] = rec
            for rec in msg["updated"]:
                self.captions[rec["id"]] = rec
            for cid in msg["removed"]:
                self.captions.pop(cid, None)
            for rec in msg["avatars_added"]:
                self.avatars[rec["id"]] = rec
            for aid in msg["avatars_removed"]:
                self.avatars.pop(aid, None)
            self.tick = msg["tick"]

    def _load(self, snapshot: dict) -> None:
        self.tick = snapshot["tick"]
        self.captions = {rec["id"]: rec for rec in snapshot["captions"]}
        self.avatars = {rec["id"]: rec for rec in snapshot["avatars"]}

    def snapshot(self) -> dict:
        return {
            "tick": self.tick,
            "captions": [self.captions[cid] for cid in sorted(self.captions)],
            "avatars": [self.avatars[aid] for aid in sorted(self.avatars)],
        }

    def state_hash(self) -> int:
        return hash_snapshot(self.snapshot())


# ---------------------------------------------------------------------------
# Scripts


def load_script(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScriptError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            validate_record(rec, where=f"{path}:{lineno}")
            records.append(rec)
    return records


def validate_record(rec: dict, where: str = "record") -> None:
    if not isinstance(rec, dict):
        raise ScriptError(f"{where}: record must be an object")
    for key in ("tick", "client", "intent"):
        if key not in rec:
            raise ScriptError(f"{where}: missing key {key!r}")
    if not isinstance(rec["tick"], int) or rec["tick"] < 0:
        raise ScriptError(f"{where}: key 'tick' must be a non-negative integer")
    if not isinstance(rec["intent"], dict) or "kind" not in rec["intent"]:
        raise ScriptError(f"{where}: key 'intent' must be an object with a 'kind'")


def save_script(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


_WORD_POOL = [
    "happy", "terrible", "cake", "hello", "wow", "shocked", "nevertheless",
    "table", "dog", "sun", "gloomy", "amazing", "bruh", "thrilled", "lonely",
    "severe", "bird", "tree", "party", "overwhelmed", "fantastic", "rain",
    "meeting", "surprised", "hola", "awful", "book", "computer", "urgent",
]

_ACTIONS = [
    ("submit", 32), ("grab", 16), ("release", 12), ("touch", 8),
    ("stretch", 7), ("shake", 5), ("shoot", 8), ("attach", 7), ("delete", 5),
]


def make_random_script(n_records: int, n_clients: int, seed: int) -> list[dict]:
    """Generate a plausible mixed workload; includes intentionally doomed intents."""
    rng = random.Random(seed)
    actions = [name for name, weight in _ACTIONS for _ in range(weight)]
    records = []
    tick = 1
    seq_per_client = {i: 0 for i in range(n_clients)}
    for _ in range(n_records):
        tick += rng.choice((0, 0, 1, 1, 1, 2))
        ci = rng.randrange(n_clients)
        client = f"c{ci + 1}"
        action = rng.choice(actions)
        if action == "submit":
            words = rng.sample(_WORD_POOL, rng.randint(1, 3))
            body = {
                "kind": "submit_transcript",
                "transcript": {
                    "seq": seq_per_client[ci],
                    "text": " ".join(words),
                    "dbfs": round(rng.uniform(-55.0, -5.0), 1),
                },
            }
            seq_per_client[ci] += 1
        else:
            # half the object intents aim at own held captions, half at whatever
            # is live (often someone else's: exercises the reject paths)
            if action in ("grab", "touch"):
                target = {"live_index": rng.randrange(30)}
            elif rng.random() < 0.5:
                target = {"held": True, "pick": rng.randrange(4)}
            else:
                target = {"live_index": rng.randrange(30)}
            body = {"kind": "intent", "action": action, "target": target}
            if action == "grab":
                body["hand"] = rng.choice(("L", "R"))
            elif action == "release":
                speed = rng.choice((0.2, 1.5, 3.0, 5.0))
                body["velocity"] = [round(rng.uniform(-1, 1) * speed, 3) for _ in range(3)]
            elif action == "stretch":
                body["factor"] = round(rng.uniform(0.3, 2.5), 3)
                body["both_hands"] = rng.random() > 0.1
            elif action == "shoot":
                z = rng.uniform(-1.0, 1.0)
                angle = rng.uniform(0.0, 2.0 * math.pi)
                r = math.sqrt(max(0.0, 1.0 - z * z))
                body["direction"] = [r * math.cos(angle), z, r * math.sin(angle)]
                body["charge_s"] = round(rng.uniform(0.0, 4.0), 2)
            elif action == "attach":
                body["avatar"] = {"client_index": rng.randrange(n_clients)}
                body["site"] = rng.choice(("head", "body"))
        records.append({"tick": tick, "client": client, "intent": body})
    return records


# ---------------------------------------------------------------------------
# Lockstep runner


@dataclass
class _ScriptedClient:
    label: str
    client_id: str
    avatar_id: str
    mirror: ClientMirror
    next_nonce: int = 0


def _resolve_target(core: SessionCore, selector, avatar_id: str) -> str | None:
    if isinstance(selector, str):
        return selector
    if not isinstance(selector, dict):
        return None
    if "id" in selector:
        return str(selector["id"])
    if selector.get("held"):
        held = [
            cid
            for cid in sorted(core.world.captions)
            if isinstance(core.world.captions[cid].phase, Held)
            and core.world.captions[cid].phase.by == avatar_id
        ]
        if not held:
            return None
        return held[int(selector.get("pick", 0)) % len(held)]
    if "live_index" in selector:
        live = sorted(core.world.captions)
        if not live:
            return None
        return live[int(selector["live_index"]) % len(live)]
    return None


def _wire(msg: dict) -> dict:
    # round-trip through the wire encoding so mirrors see exactly what a
    # remote client would
    return json.loads(protocol.encode(msg))


def run_simulation(
    n_clients: int,
    script: list[dict],
    seed: int,
    sim_config: SimConfig | None = None,
    lexicons: Lexicons | None = None,
    script_name: str = "<inline>",
) -> dict:
    """Drive a session with scripted clients; returns the convergence report."""
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    core = SessionCore(sim_config=sim_config, lexicons=lexicons, seed=seed)
    clients: dict[str, _ScriptedClient] = {}
    for i in range(n_clients):
        label = f"c{i + 1}"
        client_id, msg = core.connect(label)
        if client_id is None:
            raise RuntimeError(f"join failed for {label}: {msg}")
        mirror = ClientMirror()
        mirror.apply(_wire(msg))
        clients[label] = _ScriptedClient(
            label=label, client_id=client_id, avatar_id=mirror.avatar_id, mirror=mirror
        )

    for rec in script:
        validate_record(rec)
        if rec["client"] not in clients:
            raise ScriptError(
                f"record at tick {rec['tick']} names unknown client {rec['client']!r} "
                f"(have c1..c{n_clients})"
            )

    by_tick: dict[int, list[dict]] = {}
    for rec in script:
        by_tick.setdefault(rec["tick"], []).append(rec)
    last_tick = max(by_tick) if by_tick else 0

    counts = {"sent": 0, "accepted": 0, "rejected": 0, "skipped": 0}

    def deliver(client: _ScriptedClient, msg: dict, parse_cache: dict) -> None:
        # the server hands equal-ack clients the same message object; parse it once
        parsed = parse_cache.get(id(msg))
        if parsed is None:
            parsed = parse_cache[id(msg)] = _wire(msg)
        client.mirror.apply(parsed)
        core.handle(client.client_id, {"kind": "ack", "tick": client.mirror.tick})

    by_client_id = {c.client_id: c for c in clients.values()}
    for tick in range(0, last_tick + IDLE_TICKS + 1):
        for rec in by_tick.get(tick, ()):
            client = clients[rec["client"]]
            msg = _build_message(core, clients, client, rec["intent"])
            if msg is None:
                counts["skipped"] += 1
                continue
            counts["sent"] += 1
            for reply in core.handle(client.client_id, _wire(msg)):
                if reply.get("kind") == "ack":
                    counts["accepted"] += 1
                elif reply.get("kind") == "reject":
                    counts["rejected"] += 1
        outbound = core.advance_tick()
        parse_cache: dict = {}
        for client_id, messages in outbound.items():
            client = by_client_id[client_id]
            for msg in messages:
                deliver(client, msg, parse_cache)

    server_hash = core.state_hash()
    client_hashes = {label: c.mirror.state_hash() for label, c in clients.items()}
    converged = all(h == server_hash for h in client_hashes.values())
    if not converged:
        logger.warning("divergence: server %s clients %s", hash_hex(server_hash), client_hashes)
    return {
        "protocol": protocol.VERSION,
        "script": script_name,
        "seed": seed,
        "clients": n_clients,
        "ticks": core.world.tick,
        "intents": counts,
        "captions_spawned": core.world.total_spawned,
        "captions_removed": core.world.total_removed,
        "server_hash": hash_hex(server_hash),
        "client_hashes": {label: hash_hex(h) for label, h in sorted(client_hashes.items())},
        "converged": converged,
    }


def _build_message(
    core: SessionCore,
    clients: dict[str, _ScriptedClient],
    client: _ScriptedClient,
    body: dict,
) -> dict | None:
    kind = body.get("kind")
    nonce = client.next_nonce
    if kind == "submit_transcript":
        transcript = dict(body["transcript"])
        transcript["dbfs"] = dbfs_to_jsonable(transcript["dbfs"])
        client.next_nonce += 1
        return {
            "v": protocol.VERSION,
            "kind": "submit_transcript",
            "nonce": nonce,
            "transcript": transcript,
        }
    if kind == "intent":
        intent = {k: v for k, v in body.items() if k not in ("kind", "target")}
        cid = _resolve_target(core, body.get("target"), client.avatar_id)
        if cid is None:
            return None
        intent["id"] = cid
        if intent.get("action") == "attach":
            avatar_sel = intent.get("avatar")
            if isinstance(avatar_sel, dict) and "client_index" in avatar_sel:
                labels = sorted(clients, key=lambda lb: int(lb[1:]))
                target = labels[int(avatar_sel["client_index"]) % len(labels)]
                intent["avatar"] = clients[target].avatar_id
        client.next_nonce += 1
        return {"v": protocol.VERSION, "kind": "intent", "nonce": nonce, "intent": intent}
    raise ScriptError(f"unknown intent kind {kind!r}")


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
