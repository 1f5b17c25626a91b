"""Wire protocol: one JSON object per WebSocket text frame, version capkit/1.

Client -> server kinds: join, submit_transcript, intent, ack, leave.
Server -> client kinds: welcome, snapshot, delta, ack, reject.

Every intent and transcript submission carries a client-local monotonically
increasing ``nonce``; the server's ack/reject echoes it. Outbound server
messages are stamped with the tick they describe. Deltas deliberately carry
no per-viewer rotation: facing the viewer is a client-local transform.
"""

from __future__ import annotations

import json
from typing import Any

VERSION = "capkit/1"

CLIENT_KINDS = {"join", "submit_transcript", "intent", "ack", "leave"}
SERVER_KINDS = {"welcome", "snapshot", "delta", "ack", "reject"}

INTENT_ACTIONS = {"touch", "grab", "release", "stretch", "shake", "shoot", "attach", "delete"}

# Reject reason codes
R_BAD_MESSAGE = "bad_message"
R_NAME_TAKEN = "name_taken"
R_NOT_JOINED = "not_joined"
R_UNKNOWN_ID = "unknown_id"
R_NOT_HOLDER = "not_holder"
R_ALREADY_HELD = "already_held"
R_BAD_VALUE = "bad_value"


class ProtocolError(ValueError):
    """Malformed or out-of-contract message; maps to a reject."""

    def __init__(self, message: str, reason: str = R_BAD_MESSAGE):
        super().__init__(message)
        self.reason = reason


def encode(msg: dict) -> str:
    return json.dumps(msg, ensure_ascii=False, separators=(",", ":"))


def decode(frame: str | bytes) -> dict:
    try:
        msg = json.loads(frame)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolError(f"frame is not valid JSON: {exc}") from exc
    if not isinstance(msg, dict):
        raise ProtocolError("frame must be a JSON object")
    version = msg.get("v")
    if version is not None and version != VERSION:
        raise ProtocolError(f"unsupported protocol version {version!r}")
    kind = msg.get("kind")
    if not isinstance(kind, str):
        raise ProtocolError("message has no kind")
    return msg


def require(msg: dict, key: str, types: type | tuple = object) -> Any:
    if key not in msg:
        raise ProtocolError(f"message missing {key!r}")
    value = msg[key]
    if not isinstance(value, types):
        raise ProtocolError(f"field {key!r} has wrong type")
    return value


def require_nonce(msg: dict) -> int:
    nonce = require(msg, "nonce")
    if not isinstance(nonce, int) or isinstance(nonce, bool) or nonce < 0:
        raise ProtocolError("nonce must be a non-negative integer")
    return nonce


# -- constructors for server -> client traffic ------------------------------


def welcome(tick: int, client_id: str, avatar_id: str, snapshot: dict, config: dict) -> dict:
    return {
        "v": VERSION,
        "kind": "welcome",
        "tick": tick,
        "client_id": client_id,
        "avatar_id": avatar_id,
        "snapshot": snapshot,
        "config": config,
    }


def snapshot_msg(snapshot: dict) -> dict:
    return {
        "v": VERSION,
        "kind": "snapshot",
        "tick": snapshot["tick"],
        "captions": snapshot["captions"],
        "avatars": snapshot["avatars"],
    }


def delta_msg(
    tick: int,
    created: list[dict],
    updated: list[dict],
    removed: list[str],
    avatars_added: list[dict],
    avatars_removed: list[str],
) -> dict:
    return {
        "v": VERSION,
        "kind": "delta",
        "tick": tick,
        "created": created,
        "updated": updated,
        "removed": removed,
        "avatars_added": avatars_added,
        "avatars_removed": avatars_removed,
    }


def ack(nonce: int, tick: int, ids: list[str] | None = None) -> dict:
    msg = {"v": VERSION, "kind": "ack", "nonce": nonce, "tick": tick}
    if ids is not None:
        msg["ids"] = ids
    return msg


def reject(nonce: int | None, reason: str, detail: str = "") -> dict:
    return {"v": VERSION, "kind": "reject", "nonce": nonce, "reason": reason, "detail": detail}
