import { describe, expect, it } from "vitest";
import { TeleopClient, type SocketLike } from "./client.js";

class FakeSocket implements SocketLike {
  readyState = 0;
  sent: string[] = [];
  closed = false;
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;

  open(): void {
    this.readyState = 1;
    this.onopen?.();
  }

  serverSend(msg: unknown): void {
    this.onmessage?.({ data: JSON.stringify(msg) });
  }

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.readyState = 3;
    this.onclose?.();
  }
}

const SPEC = {
  type: "spec",
  task: { name: "needle_lift", num_arms: 1, horizon: 300 },
  rig: {},
  rate_hz: 6,
  control_rate_hz: 30,
  limits: { max_step_translation: 0.005, max_step_rotation: 0.1 },
};

function stateMsg(step: number, needleY = 0): unknown {
  return {
    type: "state",
    step_count: step,
    success: false,
    recording: false,
    proprio: [0, 0, 0.05, 1, 0, 0, 0, 1],
    objects: { needle: { position: [0, needleY, 0], orientation: [1, 0, 0, 0] } },
    arms: [{ position: [0, 0, 0.05], orientation: [1, 0, 0, 0], jaw: 1, attached: null }],
  };
}

describe("teleop client state machine", () => {
  it("sends hello on open and displays the task from the spec reply", () => {
    const sock = new FakeSocket();
    const client = new TeleopClient(sock);
    expect(client.view.status).toBe("connecting");
    sock.open();
    expect(client.view.status).toBe("connected");
    expect(JSON.parse(sock.sent[0])).toEqual({ type: "hello" });
    sock.serverSend(SPEC);
    expect(client.view.spec?.task.name).toBe("needle_lift");
  });

  it("updates the scene view from state messages (no client-side simulation)", () => {
    const sock = new FakeSocket();
    const client = new TeleopClient(sock);
    sock.open();
    sock.serverSend(stateMsg(1, 0.0));
    expect(client.view.state?.objects.needle.position[1]).toBe(0);
    sock.serverSend(stateMsg(2, 0.03));
    expect(client.view.state?.step_count).toBe(2);
    expect(client.view.state?.objects.needle.position[1]).toBeCloseTo(0.03);
  });

  it("enters a disconnected state without crashing when the server closes", () => {
    const sock = new FakeSocket();
    const client = new TeleopClient(sock);
    sock.open();
    sock.close();
    expect(client.view.status).toBe("disconnected");
    // Sends are refused, not thrown.
    expect(client.reset(0)).toBe(false);
  });

  it("tracks recording state through record acks and save", () => {
    const sock = new FakeSocket();
    const client = new TeleopClient(sock);
    sock.open();
    client.record("start");
    sock.serverSend({ type: "record", cmd: "start", recording: true });
    expect(client.view.recording).toBe(true);
    sock.serverSend({
      type: "record",
      cmd: "saved",
      episode: "episode_000003",
      length: 80,
      success: true,
    });
    expect(client.view.recording).toBe(false);
    expect(client.view.lastSavedEpisode).toBe("episode_000003");
  });

  it("surfaces server errors but keeps the session alive", () => {
    const sock = new FakeSocket();
    const client = new TeleopClient(sock);
    sock.open();
    sock.serverSend({ type: "error", code: "bad_message", msg: "jaw must be 0 or 1" });
    expect(client.view.lastError?.code).toBe("bad_message");
    expect(client.view.status).toBe("connected");
    sock.serverSend(stateMsg(5));
    expect(client.view.state?.step_count).toBe(5);
  });

  it("ignores malformed frames silently", () => {
    const sock = new FakeSocket();
    const client = new TeleopClient(sock);
    sock.open();
    client.receive("{{{");
    client.receive(JSON.stringify({ type: "mystery" }));
    expect(client.view.state).toBeNull();
    expect(client.view.status).toBe("connected");
  });
});
