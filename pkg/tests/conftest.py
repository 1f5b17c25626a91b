from __future__ import annotations

import pytest

from capkit.lexicons import bundled_lexicons
from capkit.sim import Avatar, SimConfig, Vec3, WorldState
from capkit.textproc import CaptionSpec, MotionKind, Size, Typeface


@pytest.fixture(scope="session")
def lex():
    return bundled_lexicons()


def make_avatar(avatar_id: str = "a1", x: float = 0.0, z: float = 0.0, yaw: float = 0.0) -> Avatar:
    return Avatar(
        id=avatar_id,
        head_position=Vec3(x, 1.7, z),
        chest_position=Vec3(x, 1.4, z),
        hand_l=Vec3(x - 0.3, 1.4, z),
        hand_r=Vec3(x + 0.3, 1.4, z),
        facing_yaw=yaw,
    )


def make_world(seed: int = 0, avatars: int = 1, log_transitions: bool = False, **cfg) -> WorldState:
    world = WorldState(SimConfig(**cfg) if cfg else None, seed=seed, log_transitions=log_transitions)
    for i in range(avatars):
        world.add_avatar(make_avatar(f"a{i + 1}", x=2.0 * i))
    return world


def make_spec(
    word: str = "cake",
    speaker: str = "a1",
    seq: int = 0,
    k: int = 0,
    motion: MotionKind | None = None,
) -> CaptionSpec:
    return CaptionSpec(
        id=f"{speaker}:{seq}:{k}",
        word=word,
        color=(1.0, 1.0, 1.0),
        size=Size.MEDIUM,
        typeface=Typeface.CASUAL,
        emoji=None,
        ornament=None,
        bubble=None,
        motion=motion,
        speaker=speaker,
        seq=seq,
    )
