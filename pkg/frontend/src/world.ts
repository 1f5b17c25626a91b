// Client-side replica of the session world, rebuilt purely from server messages.
// Deltas apply monotonically by tick; anything stale is dropped. The client
// keeps no state beyond this mirror, so a reconnect + snapshot reproduces the
// same scene.

import type {
  AckMsg,
  AvatarWire,
  DeltaMsg,
  EntityWire,
  RejectMsg,
  ServerMessage,
  SnapshotWire,
} from "./protocol.js";

export interface PendingIntent {
  action: string;
  sentAt: number; // ms timestamp, informational
}

export class ClientWorld {
  clientId: string | null = null;
  avatarId: string | null = null;
  tick = -1;
  captions = new Map<string, EntityWire>();
  avatars = new Map<string, AvatarWire>();
  config: Record<string, unknown> = {};
  pendingIntents = new Map<number, PendingIntent>();
  lastAck: AckMsg | null = null;
  lastReject: RejectMsg | null = null;

  apply(msg: ServerMessage): void {
    switch (msg.kind) {
      case "welcome":
        this.clientId = msg.client_id;
        this.avatarId = msg.avatar_id;
        this.config = msg.config;
        this.loadSnapshot(msg.snapshot);
        break;
      case "snapshot":
        if (msg.tick >= this.tick) {
          this.loadSnapshot(msg);
        }
        break;
      case "delta":
        this.applyDelta(msg);
        break;
      case "ack":
        this.lastAck = msg;
        this.pendingIntents.delete(msg.nonce);
        break;
      case "reject":
        this.lastReject = msg;
        if (msg.nonce !== null) this.pendingIntents.delete(msg.nonce);
        break;
    }
  }

  private loadSnapshot(snapshot: SnapshotWire): void {
    this.tick = snapshot.tick;
    this.captions = new Map(snapshot.captions.map((e) => [e.id, e]));
    this.avatars = new Map(snapshot.avatars.map((a) => [a.id, a]));
  }

  private applyDelta(msg: DeltaMsg): void {
    if (msg.tick <= this.tick) return; // stale
    for (const entity of msg.created) this.captions.set(entity.id, entity);
    for (const entity of msg.updated) this.captions.set(entity.id, entity);
    for (const id of msg.removed) this.captions.delete(id);
    for (const avatar of msg.avatars_added) this.avatars.set(avatar.id, avatar);
    for (const id of msg.avatars_removed) this.avatars.delete(id);
    this.tick = msg.tick;
  }

  trackIntent(nonce: number, action: string, now: number): void {
    this.pendingIntents.set(nonce, { action, sentAt: now });
  }

  /** Canonical content view for equality checks (reconnect reproducibility). */
  contentKey(): string {
    const captions = [...this.captions.keys()].sort().map((id) => this.captions.get(id));
    const avatars = [...this.avatars.keys()].sort().map((id) => this.avatars.get(id));
    return JSON.stringify({ tick: this.tick, captions, avatars });
  }
}
