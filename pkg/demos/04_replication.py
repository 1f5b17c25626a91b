#!/usr/bin/env python3
"""Authoritative replication: joins, intents, deltas, and convergence checks.

Run from the repository root:  python demos/04_replication.py
"""

from capkit.server import SessionCore
from capkit.sim import hash_hex
from capkit.simulate import ClientMirror, make_random_script, run_simulation, report_json

print("=" * 72)
print("1. A session core with two clients, by hand")
print("=" * 72)

core = SessionCore(seed=11)
mirrors = {}
for name in ("ada", "bob"):
    client_id, welcome = core.connect(name)
    mirrors[client_id] = ClientMirror()
    mirrors[client_id].apply(welcome)
    print(f"  {name} joined as {client_id}, avatar {welcome['avatar_id']}, "
          f"snapshot tick {welcome['snapshot']['tick']}")

[ack] = core.handle("c1", {"kind": "submit_transcript", "nonce": 0,
                           "transcript": {"seq": 0, "text": "hello happy cake", "dbfs": -14.0}})
print(f"  ada submits a transcript -> ack at tick {ack['tick']}, spawned {ack['ids']}")

out = core.advance_tick()
for client_id, messages in out.items():
    for msg in messages:
        mirrors[client_id].apply(msg)
    delta = messages[0]
    words = [e["spec"]["word"] for e in delta["created"]]
    print(f"  {client_id} received delta tick={delta['tick']} created={words}")

server_hash = hash_hex(core.state_hash())
print(f"  server hash {server_hash}")
for client_id, mirror in mirrors.items():
    print(f"  {client_id} mirror hash {hash_hex(mirror.state_hash())} "
          f"(match={hash_hex(mirror.state_hash()) == server_hash})")

print()
print("=" * 72)
print("2. Rejections echo the nonce and a reason")
print("=" * 72)
cid = ack["ids"][0]
core.handle("c1", {"kind": "intent", "nonce": 1, "intent": {"action": "grab", "id": cid, "hand": "L"}})
[reply] = core.handle("c2", {"kind": "intent", "nonce": 0,
                             "intent": {"action": "grab", "id": cid, "hand": "R"}})
print(f"  bob grabs ada's held caption -> {reply['kind']} "
      f"nonce={reply['nonce']} reason={reply['reason']}")

print()
print("=" * 72)
print("3. A scripted 4-client session, end to end")
print("=" * 72)
script = make_random_script(200, 4, seed=5)
report = run_simulation(4, script, seed=5, script_name="demo-random-5")
print(report_json(report))
