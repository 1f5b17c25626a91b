// One live connection to a capkit session. Applies every server message to
// the ClientWorld, auto-acks replication traffic, and stamps outbound
// intents/submissions with fresh nonces. The WebSocket constructor is
// injectable so tests can drive the same code from node.

import {
  ackMsg,
  decodeServer,
  encode,
  intentMsg,
  joinMsg,
  NonceSource,
  ProtocolError,
  submitTranscriptMsg,
  type IntentBody,
  type ServerMessage,
} from "./protocol.js";
import { ClientWorld } from "./world.js";

export interface WsLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "message" | "close" | "error", fn: (ev: any) => void): void;
}

export type WsFactory = (url: string) => WsLike;

export interface SessionHandlers {
  onChange?: (world: ClientWorld) => void;
  onMessage?: (msg: ServerMessage) => void;
  onClose?: () => void;
}

export class JoinError extends Error {
  constructor(public reason: string, detail: string) {
    super(detail || reason);
  }
}

export class Session {
  readonly world = new ClientWorld();
  private readonly nonces = new NonceSource();
  private submitSeq = 0;

  private constructor(
    private readonly ws: WsLike,
    private readonly handlers: SessionHandlers,
  ) {}

  /** Connect, join under `name`, and resolve once the welcome arrives. */
  static connect(
    url: string,
    name: string,
    factory: WsFactory,
    handlers: SessionHandlers = {},
  ): Promise<Session> {
    return new Promise((resolve, reject) => {
      const ws = factory(url);
      const session = new Session(ws, handlers);
      let settled = false;
      ws.addEventListener("open", () => {
        ws.send(encode(joinMsg(name)));
      });
      ws.addEventListener("message", (ev: { data: unknown }) => {
        let msg: ServerMessage;
        try {
          msg = decodeServer(String(ev.data));
        } catch (err) {
          if (err instanceof ProtocolError) return; // ignore frames we cannot read
          throw err;
        }
        if (!settled) {
          if (msg.kind === "welcome") {
            settled = true;
            session.handleMessage(msg);
            resolve(session);
            return;
          }
          if (msg.kind === "reject") {
            settled = true;
            ws.close();
            reject(new JoinError(msg.reason, msg.detail));
            return;
          }
        }
        session.handleMessage(msg);
      });
      ws.addEventListener("close", () => {
        if (!settled) {
          settled = true;
          reject(new JoinError("unreachable", "server closed the connection"));
        }
        handlers.onClose?.();
      });
      ws.addEventListener("error", () => {
        if (!settled) {
          settled = true;
          reject(new JoinError("unreachable", "could not reach the server"));
        }
      });
    });
  }

  private handleMessage(msg: ServerMessage): void {
    this.world.apply(msg);
    if (msg.kind === "delta" || msg.kind === "snapshot") {
      this.ws.send(encode(ackMsg(this.world.tick)));
    }
    this.handlers.onMessage?.(msg);
    this.handlers.onChange?.(this.world);
  }

  /** Submit spoken/typed text; returns the nonce. */
  submitText(text: string, dbfs = -18): number {
    const nonce = this.nonces.next();
    this.ws.send(encode(submitTranscriptMsg(nonce, this.submitSeq++, text, dbfs)));
    return nonce;
  }

  /** Send one intent with a fresh nonce; returns the nonce. */
  sendIntent(body: IntentBody, now = Date.now()): number {
    const nonce = this.nonces.next();
    this.world.trackIntent(nonce, body.action, now);
    this.ws.send(encode(intentMsg(nonce, body)));
    return nonce;
  }

  leave(): void {
    this.ws.send(encode({ v: "capkit/1", kind: "leave" }));
    this.ws.close();
  }
}
