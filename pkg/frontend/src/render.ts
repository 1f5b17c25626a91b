// World -> draw commands (pure and testable), plus the canvas painter.
//
// Top-down view: world x maps to screen x, world z to screen y, and the
// caption's height (world y) lifts the sprite a little. Facing the viewer is
// trivially satisfied in 2D. Shivering renders as positional jitter and
// blinking as a 4 Hz color flash; both derive from the passed clock so
// frames are reproducible.

import type { AvatarWire, EntityWire } from "./protocol.js";
import type { ClientWorld } from "./world.js";

export interface View {
  centerX: number;
  centerZ: number;
  pxPerMeter: number;
  width: number;
  height: number;
}

export interface CaptionCmd {
  kind: "caption";
  id: string;
  x: number;
  y: number;
  word: string;
  fontPx: number;
  fontFamily: string;
  color: string;
  alpha: number;
  emoji: string | null;
  ornament: string | null;
  bubble: "rounded" | "spiky" | null;
  heldByMe: boolean;
}

export interface AvatarCmd {
  kind: "avatar";
  id: string;
  x: number;
  y: number;
  headPx: number;
  bodyPx: number;
  isSelf: boolean;
}

export type SceneCmd = CaptionCmd | AvatarCmd;

export const BLINK_HZ = 4;
const SIZE_PX = { small: 14, medium: 22, large: 34 } as const;
const SERIF = "Georgia, 'Times New Roman', serif";
const CASUAL = "'Comic Sans MS', 'Comic Neue', cursive, sans-serif";

const EMOJI_GLYPHS = { smiling: "\u{1F60A}", sad: "\u{1F622}", embarrassed: "\u{1F633}" } as const;

const ORNAMENT_GLYPHS: Record<string, string> = {
  apple: "\u{1F34E}", building: "\u{1F3E2}", bicycle: "\u{1F6B2}", bread: "\u{1F35E}",
  bird: "\u{1F426}", cake: "\u{1F370}", car: "\u{1F697}", cat: "\u{1F431}",
  clock: "\u{1F550}", dog: "\u{1F436}", food: "\u{1F37D}", sun: "☀️",
  rain: "\u{1F327}", book: "\u{1F4D6}", phone: "\u{1F4F1}", computer: "\u{1F4BB}",
  tree: "\u{1F333}", flower: "\u{1F338}",
};

export function cssColor(rgb: [number, number, number]): string {
  const [r, g, b] = rgb.map((v) => Math.round(v * 255));
  return `rgb(${r},${g},${b})`;
}

export function toScreen(view: View, wx: number, wz: number): [number, number] {
  return [
    view.width / 2 + (wx - view.centerX) * view.pxPerMeter,
    view.height / 2 + (wz - view.centerZ) * view.pxPerMeter,
  ];
}

export function toWorld(view: View, px: number, py: number): [number, number] {
  return [
    view.centerX + (px - view.width / 2) / view.pxPerMeter,
    view.centerZ + (py - view.height / 2) / view.pxPerMeter,
  ];
}

function jitter(id: string, nowMs: number): [number, number] {
  let seed = 0;
  for (let i = 0; i < id.length; i++) seed = (seed * 31 + id.charCodeAt(i)) | 0;
  const phase = nowMs / 16 + seed;
  return [Math.sin(phase) * 2, Math.cos(phase * 1.3) * 2];
}

export function captionCmd(
  entity: EntityWire,
  view: View,
  nowMs: number,
  myAvatar: string | null,
  override?: { x: number; z: number },
): CaptionCmd {
  const spec = entity.spec;
  const wx = override ? override.x : entity.position[0];
  const wz = override ? override.z : entity.position[2];
  let [x, y] = toScreen(view, wx, wz);
  y -= (entity.position[1] - 1.4) * view.pxPerMeter * 0.3; // height cue
  if (entity.effects.shivering) {
    const [jx, jy] = jitter(entity.id, nowMs);
    x += jx;
    y += jy;
  }
  let color = cssColor(spec.color);
  if (entity.effects.blinking) {
    const flashOn = Math.floor((nowMs * BLINK_HZ * 2) / 1000) % 2 === 0;
    if (flashOn) {
      color = spec.color[0] > 0.9 && spec.color[1] > 0.9 ? "rgb(255,208,64)" : "rgb(255,255,255)";
    }
  }
  const replica = entity.phase.kind === "flying" && entity.phase.replica === true;
  return {
    kind: "caption",
    id: entity.id,
    x,
    y,
    word: spec.word,
    fontPx: SIZE_PX[spec.size] * entity.scale,
    fontFamily: spec.typeface === "formal" ? SERIF : CASUAL,
    color,
    alpha: replica ? 0.7 : 1.0,
    emoji: spec.emoji ? EMOJI_GLYPHS[spec.emoji] : null,
    ornament: spec.ornament ? (ORNAMENT_GLYPHS[spec.ornament] ?? "◆") : null,
    bubble: spec.bubble,
    heldByMe: entity.phase.kind === "held" && entity.phase.by === myAvatar,
  };
}

export function avatarCmd(avatar: AvatarWire, view: View, myAvatar: string | null): AvatarCmd {
  const [x, y] = toScreen(view, avatar.chest[0], avatar.chest[2]);
  return {
    kind: "avatar",
    id: avatar.id,
    x,
    y,
    headPx: avatar.head_radius * view.pxPerMeter,
    bodyPx: 0.45 * view.pxPerMeter,
    isSelf: avatar.id === myAvatar,
  };
}

export function buildScene(
  world: ClientWorld,
  view: View,
  nowMs: number,
  heldOverride?: { id: string; x: number; z: number },
): SceneCmd[] {
  const cmds: SceneCmd[] = [];
  for (const id of [...world.avatars.keys()].sort()) {
    cmds.push(avatarCmd(world.avatars.get(id)!, view, world.avatarId));
  }
  for (const id of [...world.captions.keys()].sort()) {
    const entity = world.captions.get(id)!;
    const override = heldOverride && heldOverride.id === id ? heldOverride : undefined;
    cmds.push(captionCmd(entity, view, nowMs, world.avatarId, override));
  }
  return cmds;
}

// ---------------------------------------------------------------------------
// Canvas painter (not exercised by the node tests)

export function paint(ctx: CanvasRenderingContext2D, view: View, cmds: SceneCmd[]): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, view.width, view.height);
  for (const cmd of cmds) {
    if (cmd.kind === "avatar") paintAvatar(ctx, cmd);
    else paintCaption(ctx, cmd);
  }
}

function paintAvatar(ctx: CanvasRenderingContext2D, cmd: AvatarCmd): void {
  ctx.save();
  ctx.globalAlpha = 0.9;
  ctx.fillStyle = cmd.isSelf ? "#2f6f4f" : "#3f4f6f";
  ctx.beginPath();
  ctx.arc(cmd.x, cmd.y, cmd.bodyPx, 0, Math.PI * 2);
  ctx.fill();
  ctx.fillStyle = cmd.isSelf ? "#5fcf8f" : "#7f9fcf";
  ctx.beginPath();
  ctx.arc(cmd.x, cmd.y, cmd.headPx, 0, Math.PI * 2);
  ctx.fill();
  ctx.fillStyle = "#cfd8e3";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(cmd.id, cmd.x, cmd.y - cmd.bodyPx - 4);
  ctx.restore();
}

function paintCaption(ctx: CanvasRenderingContext2D, cmd: CaptionCmd): void {
  ctx.save();
  ctx.globalAlpha = cmd.alpha;
  ctx.font = `${Math.max(8, cmd.fontPx)}px ${cmd.fontFamily}`;
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  const label = cmd.emoji ? `${cmd.word} ${cmd.emoji}` : cmd.word;
  const width = ctx.measureText(label).width;
  const padX = cmd.fontPx * 0.45;
  const padY = cmd.fontPx * 0.35;
  if (cmd.bubble !== null) {
    ctx.strokeStyle = cmd.color;
    ctx.lineWidth = 2;
    if (cmd.bubble === "rounded") {
      ctx.beginPath();
      ctx.roundRect(cmd.x - width / 2 - padX, cmd.y - cmd.fontPx / 2 - padY,
                    width + 2 * padX, cmd.fontPx + 2 * padY, cmd.fontPx * 0.4);
      ctx.stroke();
    } else {
      paintSpiky(ctx, cmd.x, cmd.y, width / 2 + padX, cmd.fontPx / 2 + padY);
    }
  }
  if (cmd.heldByMe) {
    ctx.strokeStyle = "#ffffff";
    ctx.setLineDash([4, 3]);
    ctx.strokeRect(cmd.x - width / 2 - padX - 3, cmd.y - cmd.fontPx / 2 - padY - 3,
                   width + 2 * padX + 6, cmd.fontPx + 2 * padY + 6);
    ctx.setLineDash([]);
  }
  ctx.fillStyle = cmd.color;
  ctx.fillText(label, cmd.x, cmd.y);
  if (cmd.ornament !== null) {
    ctx.font = `${Math.max(10, cmd.fontPx * 0.8)}px sans-serif`;
    ctx.fillText(cmd.ornament, cmd.x + width / 2 + padX + cmd.fontPx * 0.5, cmd.y);
  }
  ctx.restore();
}

function paintSpiky(
  ctx: CanvasRenderingContext2D, cx: number, cy: number, rx: number, ry: number,
): void {
  const spikes = 12;
  ctx.beginPath();
  for (let i = 0; i <= spikes * 2; i++) {
    const angle = (Math.PI * i) / spikes;
    const bump = i % 2 === 0 ? 1.25 : 0.95;
    const px = cx + Math.cos(angle) * rx * bump;
    const py = cy + Math.sin(angle) * ry * bump;
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  }
  ctx.closePath();
  ctx.stroke();
}
