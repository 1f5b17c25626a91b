#!/usr/bin/env python3
"""Play with captions in the simulated world: TTL, grab, throw, shoot, explode.

Run from the repository root:  python demos/03_interactions.py
"""

from capkit import Avatar, SimConfig, Vec3, WorldState, bundled_lexicons
from capkit.audio import Transcript
from capkit.textproc import build_caption_specs

lex = bundled_lexicons()
world = WorldState(SimConfig(), seed=2024)
world.add_avatar(Avatar(
    id="alice", head_position=Vec3(0, 1.7, 0), chest_position=Vec3(0, 1.4, 0),
    hand_l=Vec3(-0.3, 1.4, 0), hand_r=Vec3(0.3, 1.4, 0), facing_yaw=0.0,
))
world.add_avatar(Avatar(
    id="bob", head_position=Vec3(4, 1.7, 0), chest_position=Vec3(4, 1.4, 0),
    hand_l=Vec3(3.7, 1.4, 0), hand_r=Vec3(4.3, 1.4, 0), facing_yaw=3.14159,
))


def say(avatar, text, dbfs):
    ids = []
    for spec in build_caption_specs(Transcript(seq=world.tick, text=text, dbfs=dbfs), avatar, lex):
        ids.append(world.spawn_caption(spec, avatar))
    return ids


def run(ticks, label=""):
    removed = []
    for _ in range(ticks):
        removed += world.step().removed
    status = f" ({len(removed)} removed: {removed})" if removed else ""
    print(f"  ... {ticks} ticks -> tick {world.tick}{status}")


print("alice speaks; captions appear in front of her chest with random offsets")
ids = say("alice", "happy birthday cake", -15.0)
for cid in ids:
    e = world.captions[cid]
    print(f"  {cid} {e.spec.word!r:<10} at ({e.position.x:+.2f}, {e.position.y:+.2f}, "
          f"{e.position.z:+.2f}) phase={e.phase.kind}")

print("\nuntouched captions live 5 seconds (150 ticks at 30 Hz)")
run(149)
print(f"  still alive: {sorted(world.captions)}")
run(1)
print(f"  after tick 150: {sorted(world.captions) or 'none'}")

print("\ntouching or grabbing a caption makes it persistent")
(kept,) = say("alice", "keeper", -20.0)
world.touch(kept, "alice")
run(200)
print(f"  {kept} survives: {kept in world.captions}")
world.grab(kept, "alice", "L")
world.delete(kept, "alice")
print(f"  ...until alice deletes it while holding: {kept in world.captions}")

print("\ngrab + fast release = a throw with gravity")
(ball,) = say("alice", "ball", -20.0)
world.grab(ball, "alice", "R")
world.release(ball, "alice", Vec3(2.0, 3.0, 0.0))
y0 = world.captions[ball].position.y
run(20)
print(f"  height {y0:.2f} -> {world.captions[ball].position.y:.2f} m "
      f"(up, over the apex, and back down)")

print("\nshoot charges up to 3 s: speed runs 2..12 m/s, always a straight line")
(bullet,) = say("alice", "zap", -20.0)
world.grab(bullet, "alice", "R")
aim = world.avatars["bob"].head_position - world.captions[bullet].position
aim = aim.scaled(1.0 / aim.norm())
speed = world.shoot(bullet, "alice", aim, charge_s=3.0)
print(f"  full charge -> {speed:.0f} m/s toward bob's head")
hit = None
for _ in range(60):
    events = world.step()
    for cid, reason in events.removed:
        if cid == bullet:
            hit = reason
            print(f"  tick {world.tick}: {bullet} {reason}; "
                  f"{len(events.spawned)} half-scale replicas burst out")
    if hit:
        break
run(50, "replicas expire")
print(f"  live captions now: {sorted(world.captions)}")

print("\nattach pins a caption to a head, or orbits it around a body")
(tag,) = say("alice", "winner", -20.0)
world.grab(tag, "alice", "L")
world.attach(tag, "alice", "bob", "head")
print(f"  {tag} rides at {world.captions[tag].position} above bob's head")
(halo,) = say("alice", "hero", -20.0)
world.grab(halo, "alice", "L")
world.attach(halo, "alice", "bob", "body")
a0 = world.captions[halo].phase.orbit_angle
run(30)
print(f"  {halo} orbit angle advanced {world.captions[halo].phase.orbit_angle - a0:.3f} rad in 1 s")

print(f"\nledger: spawned={world.total_spawned} removed={world.total_removed} "
      f"live={len(world.captions)} (spawned - removed == live)")
