import { describe, expect, it } from "vitest";
import { clampDelta, defaultMapping, InputState } from "./input.js";

const LIMITS = { max_step_translation: 0.005, max_step_rotation: 0.1 };

describe("input mapping", () => {
  it("no input yields a hold message with zero deltas", () => {
    const input = new InputState();
    const msg = input.tick(LIMITS);
    expect(msg).toEqual({ type: "action", dpos: [0, 0, 0], drot: [0, 0, 0], jaw: 0, arm: 0 });
  });

  it("forward key at 2 mm scale emits dpos (0, 2mm, 0)", () => {
    const mapping = defaultMapping();
    mapping.translationScale = 0.002;
    const input = new InputState(mapping);
    input.keyDown("KeyW");
    const msg = input.tick(LIMITS);
    expect(msg.dpos[0]).toBeCloseTo(0, 12);
    expect(msg.dpos[1]).toBeCloseTo(0.002, 12);
    expect(msg.dpos[2]).toBeCloseTo(0, 12);
    input.keyUp("KeyW");
    expect(input.tick(LIMITS).dpos).toEqual([0, 0, 0]);
  });

  it("jaw toggle is edge-triggered and involutive", () => {
    const input = new InputState();
    expect(input.tick(LIMITS).jaw).toBe(0);
    input.keyDown("Space");
    expect(input.tick(LIMITS).jaw).toBe(1);
    // held key (auto-repeat) does not re-toggle
    input.keyDown("Space");
    expect(input.tick(LIMITS).jaw).toBe(1);
    input.keyUp("Space");
    input.keyDown("Space");
    expect(input.tick(LIMITS).jaw).toBe(0);
  });

  it("arm select switches target and ignores arms the task lacks", () => {
    const twoArm = new InputState(defaultMapping(), 2);
    twoArm.keyDown("Digit2");
    expect(twoArm.tick(LIMITS).arm).toBe(1);
    const oneArm = new InputState(defaultMapping(), 1);
    oneArm.keyDown("Digit2");
    expect(oneArm.tick(LIMITS).arm).toBe(0);
  });

  it("never emits deltas above the advertised clamps, even at huge scales", () => {
    const mapping = defaultMapping();
    mapping.translationScale = 1.0;
    mapping.rotationScale = 10.0;
    const input = new InputState(mapping);
    for (const k of ["KeyW", "KeyD", "KeyE", "KeyI", "KeyU"]) input.keyDown(k);
    const msg = input.tick(LIMITS);
    expect(Math.hypot(...msg.dpos)).toBeLessThanOrEqual(LIMITS.max_step_translation + 1e-12);
    expect(Math.hypot(...msg.drot)).toBeLessThanOrEqual(LIMITS.max_step_rotation + 1e-12);
  });

  it("clampDelta preserves direction and leaves small vectors alone", () => {
    expect(clampDelta([0.001, 0, 0], 0.005)).toEqual([0.001, 0, 0]);
    const clamped = clampDelta([3, 4, 0], 0.005);
    expect(Math.hypot(...clamped)).toBeCloseTo(0.005, 12);
    expect(clamped[1] / clamped[0]).toBeCloseTo(4 / 3, 12);
    expect(clampDelta([0, 0, 0], 0.005)).toEqual([0, 0, 0]);
  });

  it("reset restores jaw/arm to the server's post-reset assumption", () => {
    const input = new InputState(defaultMapping(), 2);
    input.keyDown("Space");
    input.keyDown("Digit2");
    input.onReset();
    const msg = input.tick(LIMITS);
    expect(msg.jaw).toBe(0);
    expect(msg.arm).toBe(0);
  });
});
