"""Authoritative session: joins, intents, transcript-driven spawning, replication.

``SessionCore`` is sans-IO and single-writer: callers feed it decoded
messages in arrival order and pump ``advance_tick`` at the simulation rate;
it returns the outbound messages per client. The WebSocket front end
(:func:`serve_forever`) and the in-process simulation harness both drive the
same core, so wire behavior and test behavior cannot drift apart.

Replication model: each client acknowledges the last tick it applied; a
delta re-sends everything created/changed/removed since that tick, as full
entity records. A client that falls more than ``snapshot_resync_ticks``
behind gets a complete snapshot instead.
"""

from __future__ import annotations

import asyncio
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

from . import protocol
from .audio import Transcript
from .lexicons import Lexicons, bundled_lexicons
from .protocol import ProtocolError
from .sim import Avatar, SimConfig, SimError, StepEvents, Vec3, WorldState
from .textproc import build_caption_specs

logger = logging.getLogger(__name__)

SNAPSHOT_RESYNC_TICKS = 90

# Joining avatars stand on a ring facing the center; captions spawn toward it.
RING_RADIUS = 2.0
RING_SLOTS = 8
HEAD_HEIGHT = 1.7
CHEST_HEIGHT = 1.4
HAND_SPAN = 0.35


@dataclass
class ClientSession:
    client_id: str
    avatar_id: str
    name: str
    last_acked_tick: int
    last_nonce: int = -1


@dataclass
class Counters:
    accepted: int = 0
    rejected: int = 0
    spawned_captions: int = 0
    transcripts: int = 0


def _ring_avatar(avatar_id: str, index: int) -> Avatar:
    slot = index % RING_SLOTS
    ring = RING_RADIUS + 0.5 * (index // RING_SLOTS)
    angle = 2.0 * math.pi * slot / RING_SLOTS
    x, z = ring * math.cos(angle), ring * math.sin(angle)
    yaw = angle + math.pi  # face the center of the ring
    right = Vec3(math.cos(yaw - math.pi / 2.0), 0.0, math.sin(yaw - math.pi / 2.0))
    chest = Vec3(x, CHEST_HEIGHT, z)
    return Avatar(
        id=avatar_id,
        head_position=Vec3(x, HEAD_HEIGHT, z),
        chest_position=chest,
        hand_l=chest - right.scaled(HAND_SPAN),
        hand_r=chest + right.scaled(HAND_SPAN),
        facing_yaw=yaw,
    )


class SessionCore:
    """Authoritative state plus per-client replication bookkeeping."""

    def __init__(
        self,
        sim_config: SimConfig | None = None,
        lexicons: Lexicons | None = None,
        seed: int = 0,
        snapshot_resync_ticks: int = SNAPSHOT_RESYNC_TICKS,
    ):
        self.world = WorldState(sim_config, seed=seed)
        self.lexicons = lexicons or bundled_lexicons()
        self.resync_ticks = snapshot_resync_ticks
        self.clients: dict[str, ClientSession] = {}
        self.counters = Counters()
        self._names: set[str] = set()
        self._serial = 0
        # replication bookkeeping: ticks are "first tick whose state shows it"
        self._created: dict[str, int] = {}
        self._modified: dict[str, int] = {}
        self._removed_log: deque[tuple[int, str]] = deque()
        self._avatar_added: dict[str, int] = {}
        self._avatar_removed_log: deque[tuple[int, str]] = deque()

    # -- connection lifecycle ------------------------------------------------

    def connect(self, name: str) -> tuple[Optional[str], dict]:
        """Admit a new client; returns (client_id, welcome) or (None, reject)."""
        if not isinstance(name, str) or not name.strip():
            return None, protocol.reject(None, protocol.R_BAD_MESSAGE, "join needs a name")
        if name in self._names:
            return None, protocol.reject(None, protocol.R_NAME_TAKEN, f"name {name!r} in use")
        self._serial += 1
        client_id = f"c{self._serial}"
        avatar_id = f"a{self._serial}"
        avatar = _ring_avatar(avatar_id, self._serial - 1)
        self.world.add_avatar(avatar)
        self._avatar_added[avatar_id] = self.world.tick + 1
        self._names.add(name)
        session = ClientSession(
            client_id=client_id,
            avatar_id=avatar_id,
            name=name,
            last_acked_tick=self.world.tick,
        )
        self.clients[client_id] = session
        logger.info("client %s joined as %s (avatar %s)", name, client_id, avatar_id)
        msg = protocol.welcome(
            tick=self.world.tick,
            client_id=client_id,
            avatar_id=avatar_id,
            snapshot=self.world.snapshot(),
            config={
                "sim": self.world.cfg.to_dict(),
                "snapshot_resync_ticks": self.resync_ticks,
            },
        )
        return client_id, msg

    def disconnect(self, client_id: str) -> None:
        session = self.clients.pop(client_id, None)
        if session is None:
            return
        self._names.discard(session.name)
        events = self.world.remove_avatar(session.avatar_id)
        self._record(events)
        self._avatar_added.pop(session.avatar_id, None)
        self._avatar_removed_log.append((self.world.tick + 1, session.avatar_id))
        logger.info("client %s (%s) left", session.name, client_id)

    # -- inbound traffic ------------------------------------------------------

    def handle(self, client_id: str, msg: dict) -> list[dict]:
        """Apply one decoded client message; returns immediate replies."""
        kind = msg.get("kind")
        session = self.clients.get(client_id)
        if session is None:
            return [protocol.reject(msg.get("nonce"), protocol.R_NOT_JOINED, "join first")]
        if kind == "ack":
            tick = msg.get("tick")
            if isinstance(tick, int) and not isinstance(tick, bool):
                session.last_acked_tick = max(session.last_acked_tick, tick)
            return []
        if kind == "leave":
            self.disconnect(client_id)
            return []
        if kind == "submit_transcript":
            return self._handle_submit(session, msg)
        if kind == "intent":
            return self._handle_intent(session, msg)
        return [protocol.reject(msg.get("nonce"), protocol.R_BAD_MESSAGE, f"unknown kind {kind!r}")]

    def _handle_submit(self, session: ClientSession, msg: dict) -> list[dict]:
        try:
            nonce = protocol.require_nonce(msg)
        except ProtocolError as exc:
            self.counters.rejected += 1
            return [protocol.reject(None, exc.reason, str(exc))]
        try:
            body = protocol.require(msg, "transcript", dict)
            transcript = Transcript.from_json(protocol.encode(body))
        except (ProtocolError, ValueError) as exc:
            self.counters.rejected += 1
            return [protocol.reject(nonce, protocol.R_BAD_VALUE, str(exc))]
        session.last_nonce = nonce
        applied_tick = self.world.tick + 1
        specs = build_caption_specs(transcript, session.avatar_id, self.lexicons)
        ids = []
        for spec in specs:
            cid = self.world.spawn_caption(spec, session.avatar_id)
            self._created[cid] = applied_tick
            ids.append(cid)
        self.counters.accepted += 1
        self.counters.transcripts += 1
        self.counters.spawned_captions += len(ids)
        logger.debug("%s submitted %r -> %d captions", session.client_id, transcript.text, len(ids))
        return [protocol.ack(nonce, applied_tick, ids=ids)]

    def _handle_intent(self, session: ClientSession, msg: dict) -> list[dict]:
        try:
            nonce = protocol.require_nonce(msg)
        except ProtocolError as exc:
            self.counters.rejected += 1
            return [protocol.reject(None, exc.reason, str(exc))]
        try:
            body = protocol.require(msg, "intent", dict)
            events = self._apply_intent(session, body)
        except (ProtocolError, SimError) as exc:
            self.counters.rejected += 1
            logger.debug("%s intent rejected (%s): %s", session.client_id, exc.reason, exc)
            return [protocol.reject(nonce, exc.reason, str(exc))]
        session.last_nonce = nonce
        self.counters.accepted += 1
        applied_tick = self.world.tick + 1
        if events is not None:
            self._record(events)
        return [protocol.ack(nonce, applied_tick)]

    def _apply_intent(self, session: ClientSession, body: dict) -> StepEvents | None:
        action = body.get("action")
        if action not in protocol.INTENT_ACTIONS:
            raise ProtocolError(f"unknown action {action!r}", protocol.R_BAD_MESSAGE)
        cid = protocol.require(body, "id", str)
        world = self.world
        me = session.avatar_id
        applied_tick = world.tick + 1
        logger.info("intent %s %s from %s", action, cid, session.client_id)
        if action == "touch":
            world.touch(cid, me)
        elif action == "grab":
            world.grab(cid, me, protocol.require(body, "hand", str))
        elif action == "release":
            world.release(cid, me, Vec3.from_list(protocol.require(body, "velocity", (list, tuple))))
        elif action == "stretch":
            if body.get("both_hands") is not True:
                raise ProtocolError("stretch requires both_hands", protocol.R_BAD_VALUE)
            world.stretch(cid, me, _number(body, "factor"))
        elif action == "shake":
            world.shake(cid, me)
        elif action == "shoot":
            direction = Vec3.from_list(protocol.require(body, "direction", (list, tuple)))
            world.shoot(cid, me, direction, _number(body, "charge_s"))
        elif action == "attach":
            world.attach(cid, me, protocol.require(body, "avatar", str), protocol.require(body, "site", str))
        elif action == "delete":
            events = world.delete(cid, me)
            return events
        self._modified[cid] = applied_tick
        return None

    # -- replication ----------------------------------------------------------

    def _record(self, events: StepEvents, tick: int | None = None) -> None:
        if tick is None:
            tick = self.world.tick + 1  # between ticks: visible from the next state
        for cid in events.spawned:
            self._created[cid] = tick
        for cid in events.changed:
            self._modified[cid] = tick
        for cid, _reason in events.removed:
            self._removed_log.append((tick, cid))
            self._created.pop(cid, None)
            self._modified.pop(cid, None)

    def advance_tick(self) -> dict[str, list[dict]]:
        """Step the simulation once and build each client's outbound traffic."""
        events = self.world.step()
        tick = self.world.tick
        self._record(events, tick=tick)
        horizon = tick - self.resync_ticks - 30
        while self._removed_log and self._removed_log[0][0] < horizon:
            self._removed_log.popleft()
        while self._avatar_removed_log and self._avatar_removed_log[0][0] < horizon:
            self._avatar_removed_log.popleft()
        # entities older than every delta-eligible client's ack can be skipped
        # once instead of per client; stale clients get snapshots anyway
        delta_acks = [
            s.last_acked_tick
            for s in self.clients.values()
            if tick - s.last_acked_tick <= self.resync_ticks
        ]
        min_acked = min(delta_acks) if delta_acks else tick
        candidates = [
            (cid, self._created.get(cid, 0), self._modified.get(cid, 0))
            for cid in sorted(self.world.captions)
            if max(self._created.get(cid, 0), self._modified.get(cid, 0)) > min_acked
        ]
        dict_cache: dict[str, dict] = {}
        # clients with the same ack receive the identical payload; build it once
        groups: dict[object, dict] = {}
        out: dict[str, list[dict]] = {}
        for client_id, session in self.clients.items():
            acked = session.last_acked_tick
            key = "snapshot" if tick - acked > self.resync_ticks else acked
            msg = groups.get(key)
            if msg is None:
                msg = groups[key] = self._replication_msg(session, tick, candidates, dict_cache)
            out[client_id] = [msg]
        return out

    def _replication_msg(
        self,
        session: ClientSession,
        tick: int,
        candidates: list[tuple[str, int, int]],
        dict_cache: dict[str, dict],
    ) -> dict:
        acked = session.last_acked_tick
        if tick - acked > self.resync_ticks:
            logger.debug("%s fell %d ticks behind; resyncing", session.client_id, tick - acked)
            return protocol.snapshot_msg(self.world.snapshot())

        def wire(cid: str) -> dict:
            rec = dict_cache.get(cid)
            if rec is None:
                rec = dict_cache[cid] = self.world.captions[cid].to_dict()
            return rec

        created, updated = [], []
        for cid, created_at, modified_at in candidates:
            if created_at > acked:
                created.append(wire(cid))
            elif modified_at > acked:
                updated.append(wire(cid))
        # removals of captions the client never saw are harmless no-ops there
        removed = sorted({cid for (t, cid) in self._removed_log if t > acked})
        avatars_added = [
            self.world.avatars[aid].to_dict()
            for aid in sorted(self.world.avatars)
            if self._avatar_added.get(aid, 0) > acked
        ]
        avatars_removed = sorted({aid for (t, aid) in self._avatar_removed_log if t > acked})
        return protocol.delta_msg(tick, created, updated, removed, avatars_added, avatars_removed)

    # -- reports ---------------------------------------------------------------

    def state_hash(self) -> int:
        return self.world.state_hash()


def _number(body: dict, key: str) -> float:
    value = protocol.require(body, key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError(f"field {key!r} must be a number", protocol.R_BAD_VALUE)
    return float(value)


# ---------------------------------------------------------------------------
# WebSocket front end


async def serve_forever(
    host: str,
    port: int,
    sim_config: SimConfig | None = None,
    lexicons: Lexicons | None = None,
    seed: int = 0,
    ready: Optional[asyncio.Event] = None,
) -> None:
    """Host a session over WebSocket until cancelled.

    All state changes happen on the tick task; connection readers only parse
    frames and enqueue them, preserving arrival order.
    """
    from websockets.asyncio.server import serve

    core = SessionCore(sim_config=sim_config, lexicons=lexicons, seed=seed)
    inbound: asyncio.Queue = asyncio.Queue()
    sockets: dict[str, object] = {}

    async def handler(ws) -> None:
        client_id: Optional[str] = None
        joined = asyncio.get_running_loop().create_future()
        try:
            async for frame in ws:
                try:
                    msg = protocol.decode(frame)
                except ProtocolError as exc:
                    await ws.send(protocol.encode(protocol.reject(None, exc.reason, str(exc))))
                    continue
                if client_id is None:
                    if msg.get("kind") != "join":
                        await ws.send(
                            protocol.encode(
                                protocol.reject(msg.get("nonce"), protocol.R_NOT_JOINED, "join first")
                            )
                        )
                        continue
                    await inbound.put(("join", ws, msg, joined))
                    client_id = await joined  # None when the join was rejected
                    if client_id is None:
                        joined = asyncio.get_running_loop().create_future()
                    continue
                await inbound.put(("msg", client_id, msg, None))
        finally:
            if client_id is not None:
                await inbound.put(("leave", client_id, None, None))

    async def send_safe(ws, payload: str) -> None:
        try:
            await ws.send(payload)
        except Exception:
            pass  # reader side will enqueue the leave

    async def tick_loop() -> None:
        dt = core.world.cfg.dt
        loop = asyncio.get_running_loop()
        next_due = loop.time() + dt
        while True:
            while True:
                try:
                    kind, target, msg, reply = inbound.get_nowait()
                except asyncio.QueueEmpty:
                    break
                if kind == "join":
                    ws = target
                    client_id, response = core.connect(msg.get("name"))
                    if client_id is not None:
                        sockets[client_id] = ws
                    if reply is not None and not reply.done():
                        reply.set_result(client_id)
                    await send_safe(ws, protocol.encode(response))
                elif kind == "msg":
                    for response in core.handle(target, msg):
                        ws = sockets.get(target)
                        if ws is not None:
                            await send_safe(ws, protocol.encode(response))
                elif kind == "leave":
                    core.disconnect(target)
                    sockets.pop(target, None)
            for client_id, messages in core.advance_tick().items():
                ws = sockets.get(client_id)
                if ws is None:
                    continue
                for response in messages:
                    await send_safe(ws, protocol.encode(response))
            await asyncio.sleep(max(0.0, next_due - loop.time()))
            next_due += dt

    async with serve(handler, host, port):
        logger.info("session listening on ws://%s:%d (tick %d Hz, seed %d)",
                    host, port, core.world.cfg.tick_hz, core.world.seed)
        if ready is not None:
            ready.set()
        await tick_loop()
