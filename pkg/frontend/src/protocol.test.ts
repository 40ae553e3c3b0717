import { describe, expect, it } from "vitest";
import {
  encodeClientMessage,
  parseServerMessage,
  ClientMessage,
} from "./protocol.js";

const SPEC_MSG = JSON.stringify({
  type: "spec",
  task: { name: "needle_lift", num_arms: 1, horizon: 300, needle_name: "N1" },
  rig: { cameras: [] },
  rate_hz: 6,
  control_rate_hz: 30,
  limits: { max_step_translation: 0.005, max_step_rotation: 0.1 },
});

const STATE_MSG = JSON.stringify({
  type: "state",
  step_count: 3,
  success: false,
  recording: true,
  proprio: [0, 0, 0.05, 1, 0, 0, 0, 1],
  objects: {
    needle: { position: [0.01, -0.02, 0.001], orientation: [1, 0, 0, 0] },
  },
  arms: [
    {
      position: [0, 0, 0.05],
      orientation: [1, 0, 0, 0],
      jaw: 1,
      attached: null,
    },
  ],
});

describe("server message parsing", () => {
  it("accepts a spec message and surfaces the limits", () => {
    const msg = parseServerMessage(SPEC_MSG);
    expect(msg?.type).toBe("spec");
    if (msg?.type === "spec") {
      expect(msg.task.name).toBe("needle_lift");
      expect(msg.limits.max_step_translation).toBeCloseTo(0.005);
    }
  });

  it("accepts a state message with exact pose round trip", () => {
    const msg = parseServerMessage(STATE_MSG);
    expect(msg?.type).toBe("state");
    if (msg?.type === "state") {
      expect(msg.objects.needle.position).toEqual([0.01, -0.02, 0.001]);
      expect(msg.arms[0].attached).toBeNull();
    }
  });

  it("accepts frame, record ack, and error messages", () => {
    expect(
      parseServerMessage(
        JSON.stringify({ type: "frame", camera: "top", step_count: 0, png: "aGk=" }),
      )?.type,
    ).toBe("frame");
    expect(
      parseServerMessage(
        JSON.stringify({
          type: "record",
          cmd: "saved",
          episode: "episode_000007",
          length: 120,
          success: true,
        }),
      )?.type,
    ).toBe("record");
    expect(
      parseServerMessage(JSON.stringify({ type: "error", code: "busy", msg: "x" }))?.type,
    ).toBe("error");
  });

  it("rejects junk without throwing", () => {
    expect(parseServerMessage("not json")).toBeNull();
    expect(parseServerMessage("42")).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "mystery" }))).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "state" }))).toBeNull();
  });
});

describe("client message encoding", () => {
  it("round-trips a valid action", () => {
    const msg = {
      type: "action",
      dpos: [0, 0.002, 0],
      drot: [0, 0, 0],
      jaw: 0,
      arm: 0,
    } as const;
    expect(JSON.parse(encodeClientMessage(msg))).toEqual(msg);
  });

  it("refuses out-of-schema actions", () => {
    expect(() =>
      encodeClientMessage({
        type: "action",
        dpos: [0, 0],
        drot: [0, 0, 0],
        jaw: 0,
        arm: 0,
      } as never),
    ).toThrow();
    expect(() =>
      encodeClientMessage({
        type: "action",
        dpos: [0, 0, 0],
        drot: [0, 0, 0],
        jaw: 0.5,
        arm: 0,
      } as never),
    ).toThrow();
    expect(ClientMessage.safeParse({ type: "reset", seed: -1 }).success).toBe(false);
  });
});
