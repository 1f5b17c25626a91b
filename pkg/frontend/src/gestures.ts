// Pointer/keyboard gestures -> intents. Pure state machine: feed it events in
// world coordinates, it hands back at most one intent body per gesture; the
// session stamps each with a fresh nonce.
//
// drag = grab (the server keeps the caption where it was; the local render
// may cosmetically track the pointer), release with speed = throw, wheel
// while holding = stretch, hold Space then release = shoot with the hold
// time as charge, drop on an avatar hotspot = attach, X while holding =
// delete, rapid jiggle while holding = shake.

import type { IntentBody } from "./protocol.js";

export interface DropTarget {
  avatarId: string;
  site: "head" | "body";
}

interface Sample {
  x: number;
  z: number;
  t: number; // ms
}

const VELOCITY_WINDOW_MS = 120;
const MAX_THROW_SPEED = 20; // m/s, sanity clamp on pointer-velocity estimates
const JIGGLE_REVERSALS = 4;
const JIGGLE_WINDOW_MS = 600;
const CHARGE_MAX_S = 3; // server clamps too; clamping here keeps the UX honest
export const STRETCH_STEP = 1.1;

export class GestureController {
  heldId: string | null = null;
  private samples: Sample[] = [];
  private chargeStartMs: number | null = null;
  private lastDx = 0;
  private reversals: { t: number }[] = [];
  private shakeSentThisHold = false;

  /** Pointer pressed at world (x, z); grabs the caption under it, if any. */
  pointerDown(captionId: string | null, x: number, z: number, t: number): IntentBody | null {
    this.samples = [{ x, z, t }];
    this.reversals = [];
    this.lastDx = 0;
    if (captionId === null || this.heldId !== null) return null;
    this.heldId = captionId;
    this.shakeSentThisHold = false;
    return { action: "grab", id: captionId, hand: "R" };
  }

  /** Pointer moved; may emit one shake per hold when jiggled rapidly. */
  pointerMove(x: number, z: number, t: number): IntentBody | null {
    const prev = this.samples[this.samples.length - 1];
    this.samples.push({ x, z, t });
    while (this.samples.length > 2 && t - this.samples[0].t > VELOCITY_WINDOW_MS) {
      this.samples.shift();
    }
    if (this.heldId === null || prev === undefined) return null;
    const dx = x - prev.x;
    if (dx !== 0) {
      if (this.lastDx !== 0 && Math.sign(dx) !== Math.sign(this.lastDx)) {
        this.reversals.push({ t });
        this.reversals = this.reversals.filter((r) => t - r.t <= JIGGLE_WINDOW_MS);
        if (!this.shakeSentThisHold && this.reversals.length >= JIGGLE_REVERSALS) {
          this.shakeSentThisHold = true;
          return { action: "shake", id: this.heldId };
        }
      }
      this.lastDx = dx;
    }
    return null;
  }

  /** Pointer released: attach when over an avatar hotspot, else release/throw. */
  pointerUp(x: number, z: number, t: number, drop: DropTarget | null): IntentBody | null {
    const held = this.heldId;
    if (held === null) return null;
    this.heldId = null;
    this.chargeStartMs = null;
    if (drop !== null) {
      return { action: "attach", id: held, avatar: drop.avatarId, site: drop.site };
    }
    const [vx, vz] = this.pointerVelocity(x, z, t);
    return { action: "release", id: held, velocity: [vx, 0, vz] };
  }

  /** Wheel while holding: one stretch intent per wheel event. */
  wheel(deltaY: number): IntentBody | null {
    if (this.heldId === null || deltaY === 0) return null;
    const factor = deltaY < 0 ? STRETCH_STEP : 1 / STRETCH_STEP;
    return { action: "stretch", id: this.heldId, factor, both_hands: true };
  }

  /** Charge key pressed (hold to power the shot). */
  chargeDown(t: number): void {
    if (this.heldId !== null && this.chargeStartMs === null) {
      this.chargeStartMs = t;
    }
  }

  /** Charge key released: shoot the held caption toward the aim point. */
  chargeUp(t: number, aimX: number, aimZ: number, capX: number, capZ: number): IntentBody | null {
    const started = this.chargeStartMs;
    this.chargeStartMs = null;
    const held = this.heldId;
    if (held === null || started === null) return null;
    const charge = Math.min(CHARGE_MAX_S, Math.max(0, (t - started) / 1000));
    let dx = aimX - capX;
    let dz = aimZ - capZ;
    const norm = Math.hypot(dx, dz);
    if (norm < 1e-9) {
      dx = 1;
      dz = 0;
    } else {
      dx /= norm;
      dz /= norm;
    }
    this.heldId = null; // the caption is flying now
    return { action: "shoot", id: held, direction: [dx, 0, dz], charge_s: charge };
  }

  /** Delete key while holding. */
  deleteKey(): IntentBody | null {
    const held = this.heldId;
    if (held === null) return null;
    this.heldId = null;
    return { action: "delete", id: held };
  }

  /** Plain click (no drag) on a caption keeps it alive without grabbing. */
  touch(captionId: string): IntentBody {
    return { action: "touch", id: captionId };
  }

  private pointerVelocity(x: number, z: number, t: number): [number, number] {
    const first = this.samples.find((s) => t - s.t <= VELOCITY_WINDOW_MS) ?? this.samples[0];
    if (first === undefined || t - first.t <= 0) return [0, 0];
    const dt = (t - first.t) / 1000;
    let vx = (x - first.x) / dt;
    let vz = (z - first.z) / dt;
    const speed = Math.hypot(vx, vz);
    if (speed > MAX_THROW_SPEED) {
      vx *= MAX_THROW_SPEED / speed;
      vz *= MAX_THROW_SPEED / speed;
    }
    return [vx, vz];
  }
}
