// Browser entry point: joins a session and wires canvas + inputs to it.
//   http://host/?ws=ws://127.0.0.1:8765&name=ada

import { GestureController, type DropTarget } from "./gestures.js";
import { openMicMeter, type MicMeter } from "./mic.js";
import { buildScene, paint, toScreen, toWorld, type View } from "./render.js";
import { JoinError, Session } from "./session.js";
import { ClientWorld } from "./world.js";

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner") as HTMLDivElement;
const sayInput = document.getElementById("say") as HTMLInputElement;
const sayButton = document.getElementById("send") as HTMLButtonElement;
const micButton = document.getElementById("mic") as HTMLButtonElement;
const levelSpan = document.getElementById("level") as HTMLSpanElement;

const view: View = {
  centerX: 0,
  centerZ: 0,
  pxPerMeter: 60,
  width: canvas.width,
  height: canvas.height,
};

const params = new URLSearchParams(location.search);
const wsUrl = params.get("ws") ?? `ws://${location.hostname}:8765`;

let session: Session | null = null;
const gestures = new GestureController();
let mic: MicMeter | null = null;
let micPeak = -Infinity;
let pointerWorld: [number, number] = [0, 0];
let dragging = false;

function showBanner(text: string, retry = false): void {
  banner.textContent = text;
  banner.style.display = "block";
  if (retry) {
    const button = document.createElement("button");
    button.textContent = "retry";
    button.onclick = () => {
      banner.style.display = "none";
      void join();
    };
    banner.append(" ", button);
  }
}

async function join(): Promise<void> {
  const name =
    params.get("name") ?? window.prompt("display name?") ?? `guest${Math.floor(Math.random() * 1000)}`;
  try {
    session = await Session.connect(wsUrl, name, (url) => new WebSocket(url), {});
    banner.style.display = "none";
  } catch (err) {
    if (err instanceof JoinError && err.reason === "name_taken") {
      showBanner(`name "${name}" is taken; pick another in the URL (?name=...)`);
    } else {
      showBanner(`cannot reach ${wsUrl}`, true);
    }
  }
}

function hitCaption(world: ClientWorld, px: number, py: number): string | null {
  let best: string | null = null;
  let bestDist = 36; // px pick radius
  for (const [id, entity] of world.captions) {
    const [x, y] = toScreen(view, entity.position[0], entity.position[2]);
    const d = Math.hypot(px - x, py - y);
    if (d < bestDist) {
      best = id;
      bestDist = d;
    }
  }
  return best;
}

function hitAvatar(world: ClientWorld, px: number, py: number): DropTarget | null {
  for (const [id, avatar] of world.avatars) {
    const [x, y] = toScreen(view, avatar.chest[0], avatar.chest[2]);
    const d = Math.hypot(px - x, py - y);
    if (d <= avatar.head_radius * view.pxPerMeter) return { avatarId: id, site: "head" };
    if (d <= 0.45 * view.pxPerMeter) return { avatarId: id, site: "body" };
  }
  return null;
}

function sendIntent(body: ReturnType<GestureController["pointerDown"]>): void {
  if (body !== null && session !== null) session.sendIntent(body);
}

canvas.addEventListener("pointerdown", (ev) => {
  if (session === null) return;
  dragging = true;
  const [wx, wz] = toWorld(view, ev.offsetX, ev.offsetY);
  pointerWorld = [wx, wz];
  const target = ev.shiftKey ? null : hitCaption(session.world, ev.offsetX, ev.offsetY);
  if (ev.shiftKey) {
    const touched = hitCaption(session.world, ev.offsetX, ev.offsetY);
    if (touched !== null) sendIntent(gestures.touch(touched));
    return;
  }
  sendIntent(gestures.pointerDown(target, wx, wz, ev.timeStamp));
});

canvas.addEventListener("pointermove", (ev) => {
  const [wx, wz] = toWorld(view, ev.offsetX, ev.offsetY);
  pointerWorld = [wx, wz];
  if (!dragging) return;
  sendIntent(gestures.pointerMove(wx, wz, ev.timeStamp));
});

canvas.addEventListener("pointerup", (ev) => {
  if (!dragging) return;
  dragging = false;
  if (session === null) return;
  const [wx, wz] = toWorld(view, ev.offsetX, ev.offsetY);
  const drop = gestures.heldId !== null ? hitAvatar(session.world, ev.offsetX, ev.offsetY) : null;
  sendIntent(gestures.pointerUp(wx, wz, ev.timeStamp, drop));
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  sendIntent(gestures.wheel(ev.deltaY));
});

window.addEventListener("keydown", (ev) => {
  if (ev.code === "Space" && !ev.repeat) {
    ev.preventDefault();
    gestures.chargeDown(ev.timeStamp);
  } else if (ev.code === "KeyX") {
    sendIntent(gestures.deleteKey());
  }
});

window.addEventListener("keyup", (ev) => {
  if (ev.code !== "Space" || session === null) return;
  const held = gestures.heldId !== null ? session.world.captions.get(gestures.heldId) : undefined;
  const [cx, cz] = held ? [held.position[0], held.position[2]] : pointerWorld;
  sendIntent(gestures.chargeUp(ev.timeStamp, pointerWorld[0], pointerWorld[1], cx, cz));
});

function submit(): void {
  const text = sayInput.value.trim();
  if (text === "" || session === null) return; // empty submit is a no-op
  const dbfs = mic !== null && micPeak > -Infinity ? micPeak : -18;
  session.submitText(text, dbfs);
  sayInput.value = "";
  micPeak = -Infinity;
}

sayButton.addEventListener("click", submit);
sayInput.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") submit();
});

micButton.addEventListener("click", () => {
  if (mic !== null) {
    mic.stop();
    mic = null;
    micButton.textContent = "mic: off";
    levelSpan.textContent = "";
    return;
  }
  openMicMeter().then(
    (meter) => {
      mic = meter;
      micButton.textContent = "mic: on";
    },
    () => showBanner("microphone unavailable; captions use a default loudness"),
  );
});

function frame(now: number): void {
  if (session !== null) {
    if (mic !== null) {
      const level = mic.levelDbfs();
      micPeak = Math.max(micPeak - 0.3, level); // slow-decay peak for the next submit
      levelSpan.textContent = level === -Infinity ? "-inf dBFS" : `${level.toFixed(1)} dBFS`;
    }
    const held = gestures.heldId;
    const override =
      held !== null && dragging ? { id: held, x: pointerWorld[0], z: pointerWorld[1] } : undefined;
    paint(ctx, view, buildScene(session.world, view, now, override));
  }
  requestAnimationFrame(frame);
}

void join();
requestAnimationFrame(frame);
