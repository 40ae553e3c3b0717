/**
 * Teleop session client: a small state machine over the WebSocket protocol.
 *
 * UI state is a pure function of the last `spec`/`state` messages plus local
 * input — the client never simulates. The socket is injected so tests can
 * drive the machine without a network.
 */
import {
  encodeClientMessage,
  parseServerMessage,
  type ClientMessage,
  type ErrorMessage,
  type FrameMessage,
  type SpecMessage,
  type StateMessage,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface SessionView {
  status: ConnectionStatus;
  spec: SpecMessage | null;
  state: StateMessage | null;
  frame: FrameMessage | null;
  recording: boolean;
  lastError: ErrorMessage | null;
  lastSavedEpisode: string | null;
}

/** Minimal socket surface; satisfied by a browser WebSocket. */
export interface SocketLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
}

const OPEN = 1;

export class TeleopClient {
  readonly view: SessionView = {
    status: "connecting",
    spec: null,
    state: null,
    frame: null,
    recording: false,
    lastError: null,
    lastSavedEpisode: null,
  };

  private listeners = new Set<(view: SessionView) => void>();

  constructor(private socket: SocketLike) {
    socket.onopen = () => {
      this.view.status = "connected";
      this.send({ type: "hello" });
      this.notify();
    };
    socket.onclose = () => {
      this.view.status = "disconnected";
      this.notify();
    };
    socket.onmessage = (ev) => this.receive(ev.data);
  }

  onChange(fn: (view: SessionView) => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this.view);
  }

  /** Validate and send; returns false when the socket is not open. */
  send(msg: ClientMessage): boolean {
    if (this.socket.readyState !== OPEN) return false;
    this.socket.send(encodeClientMessage(msg));
    return true;
  }

  reset(seed: number): boolean {
    return this.send({ type: "reset", seed });
  }

  record(cmd: "start" | "stop" | "save"): boolean {
    return this.send({ type: "record", cmd });
  }

  /** Feed one raw server frame through the state machine. */
  receive(raw: string): void {
    const msg = parseServerMessage(raw);
    if (msg === null) return; // unknown/invalid frames are ignored, not fatal
    switch (msg.type) {
      case "spec":
        this.view.spec = msg;
        break;
      case "state":
        this.view.state = msg;
        this.view.recording = msg.recording;
        break;
      case "frame":
        this.view.frame = msg;
        break;
      case "record":
        if (msg.cmd === "saved") {
          this.view.recording = false;
          this.view.lastSavedEpisode = msg.episode ?? null;
        } else {
          this.view.recording = msg.recording ?? this.view.recording;
        }
        break;
      case "error":
        this.view.lastError = msg;
        break;
    }
    this.notify();
  }

  close(): void {
    this.socket.close();
  }
}
