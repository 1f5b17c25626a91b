import type { AvatarWire, CaptionSpecWire, EntityWire } from "../src/protocol.js";

export function makeSpec(overrides: Partial<CaptionSpecWire> = {}): CaptionSpecWire {
  return {
    id: "a1:0:0",
    word: "cake",
    color: [1, 1, 1],
    size: "medium",
    typeface: "casual",
    emoji: null,
    ornament: null,
    bubble: null,
    motion: null,
    speaker: "a1",
    seq: 0,
    ...overrides,
  };
}

export function makeEntity(
  id: string,
  overrides: Partial<EntityWire> = {},
  spec: Partial<CaptionSpecWire> = {},
): EntityWire {
  return {
    id,
    spec: makeSpec(spec),
    position: [0, 1.4, 0],
    scale: 1,
    velocity: [0, 0, 0],
    phase: { kind: "fresh", expires_at_tick: 150 },
    effects: { shivering: false, blinking: false },
    ...overrides,
  };
}

export function makeAvatar(id: string, x = 0, z = 0): AvatarWire {
  return {
    id,
    head: [x, 1.7, z],
    chest: [x, 1.4, z],
    hand_l: [x - 0.3, 1.4, z],
    hand_r: [x + 0.3, 1.4, z],
    head_radius: 0.15,
    facing_yaw: 0,
  };
}
