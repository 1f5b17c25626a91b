// capkit/1 wire types and message builders. One JSON object per WS text frame.

export const VERSION = "capkit/1";

export type Vec3Wire = [number, number, number];

export interface CaptionSpecWire {
  id: string;
  word: string;
  color: [number, number, number];
  size: "small" | "medium" | "large";
  typeface: "formal" | "casual";
  emoji: "smiling" | "sad" | "embarrassed" | null;
  ornament: string | null;
  bubble: "rounded" | "spiky" | null;
  motion: "shivering" | null;
  speaker: string;
  seq: number;
}

export interface PhaseWire {
  kind: "fresh" | "persistent" | "held" | "attached" | "flying";
  expires_at_tick?: number | null;
  by?: string;
  hand?: string;
  to?: string;
  site?: string;
  orbit_angle?: number;
  mode?: "thrown" | "shot";
  since_tick?: number;
  replica?: boolean;
}

export interface EntityWire {
  id: string;
  spec: CaptionSpecWire;
  position: Vec3Wire;
  scale: number;
  velocity: Vec3Wire;
  phase: PhaseWire;
  effects: { shivering: boolean; blinking: boolean };
}

export interface AvatarWire {
  id: string;
  head: Vec3Wire;
  chest: Vec3Wire;
  hand_l: Vec3Wire;
  hand_r: Vec3Wire;
  head_radius: number;
  facing_yaw: number;
}

export interface SnapshotWire {
  tick: number;
  captions: EntityWire[];
  avatars: AvatarWire[];
}

export interface WelcomeMsg {
  kind: "welcome";
  tick: number;
  client_id: string;
  avatar_id: string;
  snapshot: SnapshotWire;
  config: Record<string, unknown>;
}

export interface SnapshotMsg extends SnapshotWire {
  kind: "snapshot";
}

export interface DeltaMsg {
  kind: "delta";
  tick: number;
  created: EntityWire[];
  updated: EntityWire[];
  removed: string[];
  avatars_added: AvatarWire[];
  avatars_removed: string[];
}

export interface AckMsg {
  kind: "ack";
  nonce: number;
  tick: number;
  ids?: string[];
}

export interface RejectMsg {
  kind: "reject";
  nonce: number | null;
  reason: string;
  detail: string;
}

export type ServerMessage = WelcomeMsg | SnapshotMsg | DeltaMsg | AckMsg | RejectMsg;

const SERVER_KINDS = new Set(["welcome", "snapshot", "delta", "ack", "reject"]);

export class ProtocolError extends Error {}

export function decodeServer(frame: string): ServerMessage {
  let msg: unknown;
  try {
    msg = JSON.parse(frame);
  } catch {
    throw new ProtocolError(`frame is not valid JSON`);
  }
  if (typeof msg !== "object" || msg === null || Array.isArray(msg)) {
    throw new ProtocolError("frame must be a JSON object");
  }
  const record = msg as Record<string, unknown>;
  if (record.v !== undefined && record.v !== VERSION) {
    throw new ProtocolError(`unsupported protocol version ${String(record.v)}`);
  }
  if (typeof record.kind !== "string" || !SERVER_KINDS.has(record.kind)) {
    throw new ProtocolError(`unexpected server message kind ${String(record.kind)}`);
  }
  return record as unknown as ServerMessage;
}

export function encode(msg: Record<string, unknown>): string {
  return JSON.stringify(msg);
}

/** Client-local monotonically increasing nonce, one per outbound intent/submit. */
export class NonceSource {
  private next_ = 0;
  next(): number {
    return this.next_++;
  }
}

export function joinMsg(name: string): Record<string, unknown> {
  return { v: VERSION, kind: "join", name };
}

export function ackMsg(tick: number): Record<string, unknown> {
  return { v: VERSION, kind: "ack", tick };
}

export function submitTranscriptMsg(
  nonce: number,
  seq: number,
  text: string,
  dbfs: number,
): Record<string, unknown> {
  return {
    v: VERSION,
    kind: "submit_transcript",
    nonce,
    transcript: { seq, text, dbfs: dbfs === -Infinity ? "-inf" : dbfs },
  };
}

export interface IntentBody {
  action: "touch" | "grab" | "release" | "stretch" | "shake" | "shoot" | "attach" | "delete";
  id: string;
  [key: string]: unknown;
}

export function intentMsg(nonce: number, body: IntentBody): Record<string, unknown> {
  return { v: VERSION, kind: "intent", nonce, intent: body };
}
