import { describe, expect, it } from "vitest";

import { GestureController, STRETCH_STEP } from "../src/gestures.js";
import type { IntentBody } from "../src/protocol.js";

function drag(g: GestureController, id: string): IntentBody | null {
  return g.pointerDown(id, 0, 0, 1000);
}

describe("GestureController", () => {
  it("drag produces exactly one grab, release exactly one release", () => {
    const g = new GestureController();
    const intents: IntentBody[] = [];
    const push = (body: IntentBody | null) => body && intents.push(body);
    push(g.pointerDown("k1", 0, 0, 1000));
    for (let i = 1; i <= 10; i++) push(g.pointerMove(i * 0.05, 0, 1000 + i * 16));
    push(g.pointerUp(0.55, 0, 1176, null));
    const actions = intents.map((b) => b.action);
    expect(actions.filter((a) => a === "grab")).toHaveLength(1);
    expect(actions.filter((a) => a === "release")).toHaveLength(1);
    expect(actions).toEqual(["grab", "release"]);
  });

  it("release velocity points along the drag and stays in the horizontal plane", () => {
    const g = new GestureController();
    g.pointerDown("k1", 0, 0, 0);
    g.pointerMove(0.2, 0.1, 50);
    g.pointerMove(0.4, 0.2, 100);
    const release = g.pointerUp(0.4, 0.2, 100, null)!;
    const [vx, vy, vz] = release.velocity as [number, number, number];
    expect(vx).toBeGreaterThan(1);
    expect(vy).toBe(0);
    expect(vz).toBeGreaterThan(0.5);
  });

  it("slow release still emits one release (the server decides place-vs-throw)", () => {
    const g = new GestureController();
    g.pointerDown("k1", 0, 0, 0);
    g.pointerMove(0.001, 0, 100);
    const release = g.pointerUp(0.001, 0, 200, null)!;
    expect(release.action).toBe("release");
    const [vx, , vz] = release.velocity as [number, number, number];
    expect(Math.hypot(vx, vz)).toBeLessThan(0.5);
  });

  it("drop on an avatar hotspot attaches instead of releasing", () => {
    const g = new GestureController();
    g.pointerDown("k1", 0, 0, 0);
    const up = g.pointerUp(2, 0, 100, { avatarId: "a2", site: "head" })!;
    expect(up).toEqual({ action: "attach", id: "k1", avatar: "a2", site: "head" });
  });

  it("wheel while holding stretches, one intent per event", () => {
    const g = new GestureController();
    drag(g, "k1");
    const grow = g.wheel(-120)!;
    const shrink = g.wheel(120)!;
    expect(grow.factor).toBeCloseTo(STRETCH_STEP);
    expect(shrink.factor).toBeCloseTo(1 / STRETCH_STEP);
    expect(grow.both_hands).toBe(true);
    expect(g.wheel(0)).toBeNull();
  });

  it("wheel without holding does nothing", () => {
    const g = new GestureController();
    expect(g.wheel(-120)).toBeNull();
  });

  it("charge + release shoots with the hold time, clamped to 3 s", () => {
    const g = new GestureController();
    drag(g, "k1");
    g.chargeDown(1000);
    const shot = g.chargeUp(6200, 5, 0, 0, 0)!;
    expect(shot.action).toBe("shoot");
    expect(shot.charge_s).toBe(3);
    expect(shot.direction).toEqual([1, 0, 0]);
    expect(g.heldId).toBeNull(); // the caption is flying; the hold is over
  });

  it("short charge passes the measured duration", () => {
    const g = new GestureController();
    drag(g, "k1");
    g.chargeDown(1000);
    const shot = g.chargeUp(2500, 0, 7, 0, 0)!;
    expect(shot.charge_s).toBeCloseTo(1.5);
    expect(shot.direction).toEqual([0, 0, 1]);
  });

  it("rapid jiggle while holding emits exactly one shake per hold", () => {
    const g = new GestureController();
    const intents: IntentBody[] = [];
    const push = (body: IntentBody | null) => body && intents.push(body);
    push(g.pointerDown("k1", 0, 0, 0));
    let t = 0;
    for (let i = 0; i < 12; i++) {
      t += 40;
      push(g.pointerMove(i % 2 === 0 ? 0.1 : -0.1, 0, t));
    }
    const shakes = intents.filter((b) => b.action === "shake");
    expect(shakes).toHaveLength(1);
    expect(shakes[0].id).toBe("k1");
  });

  it("x deletes the held caption once", () => {
    const g = new GestureController();
    drag(g, "k1");
    expect(g.deleteKey()).toEqual({ action: "delete", id: "k1" });
    expect(g.deleteKey()).toBeNull();
  });

  it("pointer up without a hold does nothing", () => {
    const g = new GestureController();
    expect(g.pointerUp(0, 0, 10, null)).toBeNull();
  });

  it("touch helper emits a touch intent", () => {
    const g = new GestureController();
    expect(g.touch("k9")).toEqual({ action: "touch", id: "k9" });
  });
});
