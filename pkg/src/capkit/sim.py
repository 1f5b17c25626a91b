"""Deterministic fixed-timestep world simulation for interactive captions.

A caption entity is born in front of its speaker with a short time-to-live.
Touching or grabbing it lifts the TTL; from a grab it can be placed, thrown,
stretched, shaken, shot in a straight line, attached to an avatar, or
deleted. Flying captions explode into short-lived replicas when they hit
another caption or an avatar.

Everything is driven by one seeded RNG owned by the world, so a given seed
plus a given intent script replays to the identical state, tick for tick.
Coordinates are meters with +y up; gravity affects thrown captions only.

State hashing
-------------
``hash_snapshot`` computes a 64-bit FNV-1a over a canonical byte encoding of
a snapshot (the same wire form the replication layer ships), so server and
clients can compare worlds bit-exactly:

* stream starts with the ASCII header line ``capkit/1 hash\\n``;
* ``tick <n>\\n`` with the tick in decimal ASCII;
* captions sorted by id, then avatars sorted by id; each field in the fixed
  order given in ``_hash_caption`` / ``_hash_avatar``;
* strings as UTF-8 bytes, integers as decimal ASCII, booleans as ``0``/``1``,
  absent optionals as ``-``; every such token is terminated by byte 0x1F;
* every float as its IEEE-754 double in big-endian (8 raw bytes), no
  terminator.

FNV-1a 64: offset basis 14695981039346656037, prime 1099511628211.
"""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .textproc import CaptionSpec, MotionKind

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_SEP = b"\x1f"

THROW_SPEED_MIN = 0.5  # m/s; release slower than this places instead of throwing


class SimError(Exception):
    """Base for rejected operations; ``reason`` is the wire-level reject code."""

    reason = "bad_value"


class UnknownIdError(SimError):
    reason = "unknown_id"


class NotHolderError(SimError):
    reason = "not_holder"


class AlreadyHeldError(SimError):
    reason = "already_held"


class BadValueError(SimError):
    reason = "bad_value"


@dataclass(frozen=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise BadValueError(f"non-finite vector ({self.x}, {self.y}, {self.z})")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.z]

    @classmethod
    def from_list(cls, xs) -> "Vec3":
        if not (isinstance(xs, (list, tuple)) and len(xs) == 3):
            raise BadValueError(f"vector must be a 3-element array, got {xs!r}")
        return cls(float(xs[0]), float(xs[1]), float(xs[2]))


ZERO = Vec3(0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Lifecycle phases


@dataclass(frozen=True)
class FreshTTL:
    kind = "fresh"
    expires_at_tick: int


@dataclass(frozen=True)
class Persistent:
    kind = "persistent"


@dataclass(frozen=True)
class Held:
    kind = "held"
    by: str
    hand: str  # "L" | "R"


@dataclass(frozen=True)
class Attached:
    kind = "attached"
    to: str
    site: str  # "head" | "body"
    orbit_angle: float = 0.0


@dataclass(frozen=True)
class Flying:
    kind = "flying"
    mode: str  # "thrown" | "shot"
    by: str  # avatar that launched it (collision grace applies to them)
    since_tick: int
    expires_at_tick: Optional[int] = None  # set for explosion replicas
    replica: bool = False  # replicas never explode again

    THROWN = "thrown"
    SHOT = "shot"


Phase = Union[FreshTTL, Persistent, Held, Attached, Flying]

REMOVED = "removed"  # terminal; removed entities leave the world map


@dataclass
class Effects:
    shivering: bool = False
    blinking: bool = False


@dataclass
class CaptionEntity:
    """A live caption in the world: design + pose + kinematics + phase."""

    id: str
    spec: CaptionSpec
    position: Vec3
    phase: Phase
    scale: float = 1.0
    velocity: Vec3 = ZERO
    effects: Effects = field(default_factory=Effects)

    @property
    def radius(self) -> float:
        return 0.2 * self.scale

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "spec": self.spec.to_dict(),
            "position": self.position.to_list(),
            "scale": self.scale,
            "velocity": self.velocity.to_list(),
            "phase": phase_to_dict(self.phase),
            "effects": {"shivering": self.effects.shivering, "blinking": self.effects.blinking},
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "CaptionEntity":
        eff = rec.get("effects", {})
        return cls(
            id=str(rec["id"]),
            spec=CaptionSpec.from_dict(rec["spec"]),
            position=Vec3.from_list(rec["position"]),
            phase=phase_from_dict(rec["phase"]),
            scale=float(rec["scale"]),
            velocity=Vec3.from_list(rec["velocity"]),
            effects=Effects(bool(eff.get("shivering")), bool(eff.get("blinking"))),
        )


def phase_to_dict(p: Phase) -> dict:
    if isinstance(p, FreshTTL):
        return {"kind": p.kind, "expires_at_tick": p.expires_at_tick}
    if isinstance(p, Persistent):
        return {"kind": p.kind}
    if isinstance(p, Held):
        return {"kind": p.kind, "by": p.by, "hand": p.hand}
    if isinstance(p, Attached):
        return {"kind": p.kind, "to": p.to, "site": p.site, "orbit_angle": p.orbit_angle}
    if isinstance(p, Flying):
        return {
            "kind": p.kind,
            "mode": p.mode,
            "by": p.by,
            "since_tick": p.since_tick,
            "expires_at_tick": p.expires_at_tick,
            "replica": p.replica,
        }
    raise BadValueError(f"unknown phase {p!r}")


def phase_from_dict(rec: dict) -> Phase:
    kind = rec.get("kind")
    if kind == "fresh":
        return FreshTTL(expires_at_tick=int(rec["expires_at_tick"]))
    if kind == "persistent":
        return Persistent()
    if kind == "held":
        return Held(by=str(rec["by"]), hand=str(rec["hand"]))
    if kind == "attached":
        return Attached(to=str(rec["to"]), site=str(rec["site"]), orbit_angle=float(rec["orbit_angle"]))
    if kind == "flying":
        expires = rec.get("expires_at_tick")
        return Flying(
            mode=str(rec["mode"]),
            by=str(rec["by"]),
            since_tick=int(rec["since_tick"]),
            expires_at_tick=None if expires is None else int(expires),
            replica=bool(rec.get("replica")),
        )
    raise BadValueError(f"unknown phase kind {kind!r}")


@dataclass
class Avatar:
    id: str
    head_position: Vec3
    chest_position: Vec3
    hand_l: Vec3
    hand_r: Vec3
    head_radius: float = 0.15
    facing_yaw: float = 0.0  # radians; 0 faces +x, pi/2 faces +z

    def __post_init__(self) -> None:
        if self.chest_position.y >= self.head_position.y:
            raise BadValueError(f"avatar {self.id}: chest must be below head")

    @property
    def facing(self) -> Vec3:
        return Vec3(math.cos(self.facing_yaw), 0.0, math.sin(self.facing_yaw))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "head": self.head_position.to_list(),
            "chest": self.chest_position.to_list(),
            "hand_l": self.hand_l.to_list(),
            "hand_r": self.hand_r.to_list(),
            "head_radius": self.head_radius,
            "facing_yaw": self.facing_yaw,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "Avatar":
        return cls(
            id=str(rec["id"]),
            head_position=Vec3.from_list(rec["head"]),
            chest_position=Vec3.from_list(rec["chest"]),
            hand_l=Vec3.from_list(rec["hand_l"]),
            hand_r=Vec3.from_list(rec["hand_r"]),
            head_radius=float(rec["head_radius"]),
            facing_yaw=float(rec["facing_yaw"]),
        )


@dataclass(frozen=True)
class SimConfig:
    tick_hz: int = 30
    ttl_s: float = 5.0
    charge_max_s: float = 3.0
    v_shoot_min: float = 2.0
    v_shoot_max: float = 12.0
    gravity: float = 9.81
    spawn_offset: tuple[float, float, float] = (0.25, 0.15, 0.25)  # half-ranges
    spawn_forward: float = 0.5  # meters in front of the chest
    explosion_replicas: int = 6
    explosion_speed: float = 3.0
    explosion_lifetime_s: float = 1.5
    orbit_radius: float = 0.6
    orbit_rate: float = math.pi  # rad/s
    arena_half_extent: float = 10.0
    scale_min: float = 0.1
    scale_max: float = 10.0

    def __post_init__(self) -> None:
        if self.v_shoot_min >= self.v_shoot_max:
            raise ValueError("v_shoot_min must be < v_shoot_max")
        positive = [
            ("tick_hz", self.tick_hz),
            ("ttl_s", self.ttl_s),
            ("charge_max_s", self.charge_max_s),
            ("v_shoot_min", self.v_shoot_min),
            ("gravity", self.gravity),
            ("explosion_replicas", self.explosion_replicas),
            ("explosion_speed", self.explosion_speed),
            ("explosion_lifetime_s", self.explosion_lifetime_s),
            ("orbit_radius", self.orbit_radius),
            ("orbit_rate", self.orbit_rate),
            ("arena_half_extent", self.arena_half_extent),
        ]
        for name, value in positive:
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_hz

    @property
    def ttl_ticks(self) -> int:
        return round(self.ttl_s * self.tick_hz)

    @property
    def explosion_lifetime_ticks(self) -> int:
        return round(self.explosion_lifetime_s * self.tick_hz)

    @property
    def self_hit_grace_ticks(self) -> int:
        # thrower-vs-own-avatar collision grace: first 0.5 s of flight
        return round(0.5 * self.tick_hz)

    def to_dict(self) -> dict:
        return {
            "tick_hz": self.tick_hz,
            "ttl_s": self.ttl_s,
            "charge_max_s": self.charge_max_s,
            "v_shoot_min": self.v_shoot_min,
            "v_shoot_max": self.v_shoot_max,
            "gravity": self.gravity,
            "spawn_offset": list(self.spawn_offset),
            "spawn_forward": self.spawn_forward,
            "explosion_replicas": self.explosion_replicas,
            "explosion_speed": self.explosion_speed,
            "explosion_lifetime_s": self.explosion_lifetime_s,
            "orbit_radius": self.orbit_radius,
            "orbit_rate": self.orbit_rate,
            "arena_half_extent": self.arena_half_extent,
            "scale_min": self.scale_min,
            "scale_max": self.scale_max,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "SimConfig":
        kwargs = dict(rec)
        if "spawn_offset" in kwargs:
            kwargs["spawn_offset"] = tuple(float(v) for v in kwargs["spawn_offset"])
        return cls(**kwargs)


@dataclass
class StepEvents:
    """What one tick (or one explosion) did to the world."""

    spawned: list[str] = field(default_factory=list)
    removed: list[tuple[str, str]] = field(default_factory=list)  # (id, reason)
    changed: set[str] = field(default_factory=set)


class WorldState:
    """Authoritative session state; exactly one writer advances it.

    All mutating operations validate first and raise a :class:`SimError`
    subclass without touching state on rejection. ``log_transitions`` turns
    on phase-transition recording (id, tick, from, to) for verification.
    """

    def __init__(
        self,
        cfg: SimConfig | None = None,
        seed: int = 0,
        log_transitions: bool = False,
    ):
        self.cfg = cfg or SimConfig()
        self.tick = 0
        self.captions: dict[str, CaptionEntity] = {}
        self.avatars: dict[str, Avatar] = {}
        self.rng = random.Random(seed)
        self.seed = seed
        self.log_transitions = log_transitions
        self.transition_log: list[tuple[str, int, str, str]] = []
        self._serial = 0
        # lifetime counters for the conservation ledger
        self.total_spawned = 0
        self.total_removed = 0

    # -- bookkeeping --------------------------------------------------------

    def _new_id(self) -> str:
        self._serial += 1
        return f"k{self._serial:08d}"

    def _caption(self, caption_id: str) -> CaptionEntity:
        try:
            return self.captions[caption_id]
        except KeyError:
            raise UnknownIdError(f"unknown caption {caption_id!r}") from None

    def _avatar(self, avatar_id: str) -> Avatar:
        try:
            return self.avatars[avatar_id]
        except KeyError:
            raise UnknownIdError(f"unknown avatar {avatar_id!r}") from None

    def _set_phase(self, entity: CaptionEntity, new_phase: Phase) -> None:
        if self.log_transitions:
            self.transition_log.append((entity.id, self.tick, entity.phase.kind, new_phase.kind))
        entity.phase = new_phase

    def _remove(self, caption_id: str, reason: str, events: StepEvents) -> None:
        entity = self.captions.pop(caption_id)
        if self.log_transitions:
            self.transition_log.append((caption_id, self.tick, entity.phase.kind, REMOVED))
        events.removed.append((caption_id, reason))
        events.changed.discard(caption_id)
        self.total_removed += 1

    def _holder_entity(self, caption_id: str, caller: str) -> CaptionEntity:
        entity = self._caption(caption_id)
        if not isinstance(entity.phase, Held) or entity.phase.by != caller:
            raise NotHolderError(f"{caller!r} does not hold {caption_id!r}")
        return entity

    # -- avatars ------------------------------------------------------------

    def add_avatar(self, avatar: Avatar) -> None:
        if avatar.id in self.avatars:
            raise BadValueError(f"avatar {avatar.id!r} already present")
        self.avatars[avatar.id] = avatar

    def remove_avatar(self, avatar_id: str) -> StepEvents:
        """Drop an avatar; held captions fall persistent, attached ones vanish."""
        self._avatar(avatar_id)
        events = StepEvents()
        for cid in sorted(self.captions):
            entity = self.captions.get(cid)
            if entity is None:
                continue
            if isinstance(entity.phase, Held) and entity.phase.by == avatar_id:
                self._set_phase(entity, Persistent())
                entity.velocity = ZERO
                events.changed.add(cid)
            elif isinstance(entity.phase, Attached) and entity.phase.to == avatar_id:
                self._remove(cid, "avatar_left", events)
        del self.avatars[avatar_id]
        return events

    # -- spawning -----------------------------------------------------------

    def spawn_caption(self, spec: CaptionSpec, speaker: str) -> str:
        """Create a fresh caption in front of the speaker with a randomized offset.

        RNG draw order: x offset, y offset, z offset (uniform over the
        configured half-ranges).
        """
        avatar = self._avatar(speaker)
        ox, oy, oz = self.cfg.spawn_offset
        offset = Vec3(
            self.rng.uniform(-ox, ox),
            self.rng.uniform(-oy, oy),
            self.rng.uniform(-oz, oz),
        )
        position = avatar.chest_position + avatar.facing.scaled(self.cfg.spawn_forward) + offset
        cid = self._new_id()
        entity = CaptionEntity(
            id=cid,
            spec=spec,
            position=position,
            phase=FreshTTL(expires_at_tick=self.tick + self.cfg.ttl_ticks),
            effects=Effects(shivering=spec.motion is MotionKind.SHIVERING),
        )
        self.captions[cid] = entity
        if self.log_transitions:
            self.transition_log.append((cid, self.tick, "spawn", entity.phase.kind))
        self.total_spawned += 1
        return cid

    # -- interactions -------------------------------------------------------

    def touch(self, caption_id: str, avatar_id: str) -> None:
        """First interaction lifts the TTL; touching anything else is a no-op."""
        self._avatar(avatar_id)
        entity = self._caption(caption_id)
        if isinstance(entity.phase, FreshTTL):
            self._set_phase(entity, Persistent())

    def grab(self, caption_id: str, avatar_id: str, hand: str) -> None:
        self._avatar(avatar_id)
        entity = self._caption(caption_id)
        if hand not in ("L", "R"):
            raise BadValueError(f"hand must be 'L' or 'R', got {hand!r}")
        if isinstance(entity.phase, Held):
            raise AlreadyHeldError(f"{caption_id!r} already held by {entity.phase.by!r}")
        if isinstance(entity.phase, Flying):
            raise BadValueError("cannot grab a caption in flight")
        self._set_phase(entity, Held(by=avatar_id, hand=hand))
        entity.velocity = ZERO

    def release(self, caption_id: str, caller: str, hand_velocity: Vec3) -> None:
        """Fast release throws the caption; a slow one just places it."""
        entity = self._holder_entity(caption_id, caller)
        if hand_velocity.norm() > THROW_SPEED_MIN:
            self._set_phase(entity, Flying(mode=Flying.THROWN, by=caller, since_tick=self.tick))
            entity.velocity = hand_velocity
        else:
            self._set_phase(entity, Persistent())
            entity.velocity = ZERO

    def stretch(self, caption_id: str, caller: str, factor: float) -> float:
        """Resize a held caption; returns the clamped new scale."""
        entity = self._holder_entity(caption_id, caller)
        if not math.isfinite(factor) or factor <= 0:
            raise BadValueError(f"stretch factor must be > 0, got {factor}")
        entity.scale = min(max(entity.scale * factor, self.cfg.scale_min), self.cfg.scale_max)
        return entity.scale

    def shake(self, caption_id: str, caller: str) -> None:
        entity = self._holder_entity(caption_id, caller)
        entity.effects.shivering = True
        entity.effects.blinking = True

    def shoot(self, caption_id: str, caller: str, direction: Vec3, charge_s: float) -> float:
        """Launch a held caption on a straight, gravity-free line.

        Speed grows linearly with charge time: v_shoot_min at zero charge up
        to v_shoot_max at charge_max_s (longer holds are clamped). Returns
        the launch speed.
        """
        entity = self._holder_entity(caption_id, caller)
        if not math.isfinite(charge_s):
            raise BadValueError(f"charge must be finite, got {charge_s}")
        if abs(direction.norm() - 1.0) > 1e-6:
            raise BadValueError(f"direction must be a unit vector, |d|={direction.norm():.9f}")
        charge = min(max(charge_s, 0.0), self.cfg.charge_max_s)
        speed = self.cfg.v_shoot_min + (charge / self.cfg.charge_max_s) * (
            self.cfg.v_shoot_max - self.cfg.v_shoot_min
        )
        self._set_phase(entity, Flying(mode=Flying.SHOT, by=caller, since_tick=self.tick))
        entity.velocity = direction.scaled(speed)
        return speed

    def attach(self, caption_id: str, caller: str, target_avatar: str, site: str) -> None:
        """Pin a held caption to an avatar's head, or set it orbiting the body."""
        entity = self._holder_entity(caption_id, caller)
        avatar = self._avatar(target_avatar)
        if site not in ("head", "body"):
            raise BadValueError(f"site must be 'head' or 'body', got {site!r}")
        if site == "head":
            self._set_phase(entity, Attached(to=target_avatar, site="head"))
            entity.position = _head_pin(avatar)
        else:
            rel = entity.position - avatar.chest_position
            horizontal = math.hypot(rel.x, rel.z)
            angle = math.atan2(rel.z, rel.x) if horizontal > 1e-9 else 0.0
            self._set_phase(entity, Attached(to=target_avatar, site="body", orbit_angle=angle))
            entity.position = _orbit_point(avatar, angle, self.cfg.orbit_radius)
        entity.velocity = ZERO

    def delete(self, caption_id: str, caller: str) -> StepEvents:
        entity = self._holder_entity(caption_id, caller)
        events = StepEvents()
        self._remove(entity.id, "deleted", events)
        return events

    def explode(self, caption_id: str, impact_point: Vec3, now: int | None = None) -> StepEvents:
        """Replace a flying caption with half-scale replicas bursting outward.

        RNG draw order per replica: z in [-1, 1], then angle in [0, 2*pi);
        the replica flies along (r*cos(angle), z, r*sin(angle)) with
        r = sqrt(1 - z^2), at exactly explosion_speed. Replicas are shot-mode
        fliers with a fixed lifetime and never explode themselves.
        """
        entity = self._caption(caption_id)
        if not isinstance(entity.phase, Flying):
            raise BadValueError(f"{caption_id!r} is not flying")
        if now is None:
            now = self.tick
        events = StepEvents()
        launcher = entity.phase.by
        spec = entity.spec
        replica_scale = min(max(entity.scale * 0.5, self.cfg.scale_min), self.cfg.scale_max)
        self._remove(caption_id, "exploded", events)
        for _ in range(self.cfg.explosion_replicas):
            z = self.rng.uniform(-1.0, 1.0)
            angle = self.rng.uniform(0.0, 2.0 * math.pi)
            r = math.sqrt(max(0.0, 1.0 - z * z))
            direction = Vec3(r * math.cos(angle), z, r * math.sin(angle))
            rid = self._new_id()
            replica = CaptionEntity(
                id=rid,
                spec=spec,
                position=impact_point,
                phase=Flying(
                    mode=Flying.SHOT,
                    by=launcher,
                    since_tick=now,
                    expires_at_tick=now + self.cfg.explosion_lifetime_ticks,
                    replica=True,
                ),
                scale=replica_scale,
                velocity=direction.scaled(self.cfg.explosion_speed),
                effects=Effects(
                    shivering=entity.effects.shivering, blinking=entity.effects.blinking
                ),
            )
            self.captions[rid] = replica
            if self.log_transitions:
                self.transition_log.append((rid, self.tick, "spawn", "flying"))
            events.spawned.append(rid)
            self.total_spawned += 1
        return events

    # -- ticking ------------------------------------------------------------

    def step(self) -> StepEvents:
        """Advance one tick.

        Order: TTL expiry, flight integration (semi-implicit: thrown
        captions get gravity applied to velocity before the position
        update), attachment updates, collision explosions, replica expiry,
        arena bounds cull; finally the tick counter increments.
        """
        cfg = self.cfg
        dt = cfg.dt
        t_new = self.tick + 1
        events = StepEvents()
        # one sorted pass fixes the processing order for this tick; entities
        # removed mid-step are skipped, replicas born mid-step (phase 4) are
        # only eligible for the bounds cull below
        order = sorted(self.captions)

        # (1) unclaimed fresh captions expire
        for cid in order:
            entity = self.captions.get(cid)
            if entity is None:
                continue
            if isinstance(entity.phase, FreshTTL) and t_new >= entity.phase.expires_at_tick:
                self._remove(cid, "ttl", events)

        # (2) flight integration
        for cid in order:
            entity = self.captions.get(cid)
            if entity is None:
                continue
            if isinstance(entity.phase, Flying):
                if entity.phase.mode == Flying.THROWN:
                    entity.velocity = Vec3(
                        entity.velocity.x,
                        entity.velocity.y - cfg.gravity * dt,
                        entity.velocity.z,
                    )
                entity.position = entity.position + entity.velocity.scaled(dt)
                events.changed.add(cid)

        # (3) attached captions track their avatar
        for cid in order:
            entity = self.captions.get(cid)
            if entity is None:
                continue
            if isinstance(entity.phase, Attached):
                avatar = self.avatars.get(entity.phase.to)
                if avatar is None:
                    continue  # cannot happen via the public API; avatars detach on leave
                if entity.phase.site == "head":
                    entity.position = _head_pin(avatar)
                else:
                    angle = entity.phase.orbit_angle + cfg.orbit_rate / cfg.tick_hz
                    entity.phase = replace(entity.phase, orbit_angle=angle)
                    entity.position = _orbit_point(avatar, angle, cfg.orbit_radius)
                events.changed.add(cid)

        # (4) collisions: non-replica fliers explode on captions and avatars
        to_explode: list[str] = []
        for cid in order:
            entity = self.captions.get(cid)
            if entity is None:
                continue
            if not isinstance(entity.phase, Flying) or entity.phase.replica:
                continue
            if self._collides(entity, t_new):
                to_explode.append(cid)
        for cid in to_explode:
            impact = self.captions[cid].position
            sub = self.explode(cid, impact, now=t_new)
            events.spawned.extend(sub.spawned)
            events.removed.extend(sub.removed)
            events.changed.discard(cid)

        # (5) replica lifetime (replicas born this tick cannot expire yet)
        for cid in order:
            entity = self.captions.get(cid)
            if entity is None:
                continue
            if (
                isinstance(entity.phase, Flying)
                and entity.phase.expires_at_tick is not None
                and t_new >= entity.phase.expires_at_tick
            ):
                self._remove(cid, "expired", events)

        # (6) arena bounds, including any replicas born above
        half = cfg.arena_half_extent
        for cid in sorted(self.captions):
            p = self.captions[cid].position
            if max(abs(p.x), abs(p.y), abs(p.z)) > half:
                self._remove(cid, "out_of_bounds", events)

        self.tick = t_new
        return events

    def _collides(self, entity: CaptionEntity, t_new: int) -> bool:
        # existence check only, so iteration order is irrelevant
        pos = entity.position
        radius = entity.radius
        for oid, other in self.captions.items():
            if oid == entity.id:
                continue
            dx = pos.x - other.position.x
            dy = pos.y - other.position.y
            dz = pos.z - other.position.z
            reach = radius + other.radius
            if dx * dx + dy * dy + dz * dz <= reach * reach:
                return True
        in_grace = (t_new - entity.phase.since_tick) <= self.cfg.self_hit_grace_ticks
        launcher = entity.phase.by
        for aid, avatar in self.avatars.items():
            if in_grace and aid == launcher:
                continue
            head = avatar.head_position
            dx = pos.x - head.x
            dy = pos.y - head.y
            dz = pos.z - head.z
            reach = radius + avatar.head_radius
            if dx * dx + dy * dy + dz * dz <= reach * reach:
                return True
        return False

    # -- snapshots & hashing -------------------------------------------------

    def snapshot(self) -> dict:
        """Wire-form copy of the whole world (lists sorted by id)."""
        return {
            "tick": self.tick,
            "captions": [self.captions[cid].to_dict() for cid in sorted(self.captions)],
            "avatars": [self.avatars[aid].to_dict() for aid in sorted(self.avatars)],
        }

    def state_hash(self) -> int:
        return hash_snapshot(self.snapshot())


def _head_pin(avatar: Avatar) -> Vec3:
    return avatar.head_position + Vec3(0.0, avatar.head_radius, 0.0)


def _orbit_point(avatar: Avatar, angle: float, radius: float) -> Vec3:
    return avatar.chest_position + Vec3(radius * math.cos(angle), 0.0, radius * math.sin(angle))


# ---------------------------------------------------------------------------
# Canonical hashing


def _fnv(h: int, data: bytes) -> int:
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


class _Hasher:
    def __init__(self) -> None:
        self.h = FNV_OFFSET

    def token(self, value) -> None:
        """Strings UTF-8, ints decimal, bools 0/1, None '-'; 0x1F-terminated."""
        if value is None:
            data = b"-"
        elif isinstance(value, bool):
            data = b"1" if value else b"0"
        elif isinstance(value, int):
            data = str(value).encode()
        else:
            data = str(value).encode("utf-8")
        self.h = _fnv(self.h, data + _SEP)

    def f64(self, value) -> None:
        """IEEE-754 double, big-endian, raw 8 bytes."""
        self.h = _fnv(self.h, struct.pack(">d", float(value)))

    def vec(self, xs) -> None:
        for v in xs:
            self.f64(v)


def _hash_caption(hh: _Hasher, rec: dict) -> None:
    hh.token("C")
    hh.token(rec["id"])
    spec = rec["spec"]
    for key in ("id", "word", "size", "typeface", "emoji", "ornament", "bubble", "motion", "speaker"):
        hh.token(spec[key])
    hh.token(int(spec["seq"]))
    hh.vec(spec["color"])
    hh.vec(rec["position"])
    hh.f64(rec["scale"])
    hh.vec(rec["velocity"])
    phase = rec["phase"]
    hh.token(phase["kind"])
    if phase["kind"] == "fresh":
        hh.token(int(phase["expires_at_tick"]))
    elif phase["kind"] == "held":
        hh.token(phase["by"])
        hh.token(phase["hand"])
    elif phase["kind"] == "attached":
        hh.token(phase["to"])
        hh.token(phase["site"])
        hh.f64(phase["orbit_angle"])
    elif phase["kind"] == "flying":
        hh.token(phase["mode"])
        hh.token(phase["by"])
        hh.token(int(phase["since_tick"]))
        expires = phase.get("expires_at_tick")
        hh.token(None if expires is None else int(expires))
        hh.token(bool(phase.get("replica")))
    effects = rec["effects"]
    hh.token(bool(effects["shivering"]))
    hh.token(bool(effects["blinking"]))


def _hash_avatar(hh: _Hasher, rec: dict) -> None:
    hh.token("A")
    hh.token(rec["id"])
    hh.vec(rec["head"])
    hh.vec(rec["chest"])
    hh.vec(rec["hand_l"])
    hh.vec(rec["hand_r"])
    hh.f64(rec["head_radius"])
    hh.f64(rec["facing_yaw"])


def hash_snapshot(snapshot: dict) -> int:
    """64-bit FNV-1a over the canonical encoding of a wire-form snapshot."""
    hh = _Hasher()
    hh.h = _fnv(hh.h, b"capkit/1 hash\n")
    hh.h = _fnv(hh.h, b"tick " + str(int(snapshot["tick"])).encode() + b"\n")
    for rec in sorted(snapshot["captions"], key=lambda r: r["id"]):
        _hash_caption(hh, rec)
    for rec in sorted(snapshot["avatars"], key=lambda r: r["id"]):
        _hash_avatar(hh, rec)
    return hh.h


def hash_hex(value: int) -> str:
    return f"{value:016x}"
