import { describe, expect, it } from "vitest";
import type { StateMessage } from "./protocol.js";
import {
  DEFAULT_VIEWPORT,
  glyphKind,
  quatHeading,
  sceneGlyphs,
  worldToCanvas,
} from "./scene.js";

function state(objects: StateMessage["objects"]): StateMessage {
  return {
    type: "state",
    step_count: 0,
    success: false,
    recording: false,
    proprio: [],
    objects,
    arms: [
      { position: [0.05, 0, 0.08], orientation: [1, 0, 0, 0], jaw: 1, attached: null },
    ],
  };
}

describe("scene view model", () => {
  it("maps world origin to canvas center with +y up", () => {
    const vp = DEFAULT_VIEWPORT;
    expect(worldToCanvas([0, 0, 0], vp)).toEqual([vp.width / 2, vp.height / 2]);
    const [, yUp] = worldToCanvas([0, 0.1, 0], vp);
    expect(yUp).toBeLessThan(vp.height / 2);
    const [xRight] = worldToCanvas([0.1, 0, 0], vp);
    expect(xRight).toBeGreaterThan(vp.width / 2);
  });

  it("derives planar heading from quaternions", () => {
    expect(quatHeading([1, 0, 0, 0])).toBeCloseTo(0, 12);
    // 90° about z: q = (cos45°, 0, 0, sin45°)
    const s = Math.SQRT1_2;
    expect(quatHeading([s, 0, 0, s])).toBeCloseTo(Math.PI / 2, 9);
  });

  it("keys glyph primitives by object id", () => {
    expect(glyphKind("needle")).toBe("needle");
    expect(glyphKind("block")).toBe("block");
    expect(glyphKind("peg_3")).toBe("peg");
    expect(glyphKind("tissue_flap")).toBe("pad");
    expect(glyphKind("widget")).toBe("generic");
  });

  it("a moved needle produces a moved glyph (pure function of state)", () => {
    const before = sceneGlyphs(
      state({ needle: { position: [0, 0, 0], orientation: [1, 0, 0, 0] } }),
    );
    const after = sceneGlyphs(
      state({ needle: { position: [0.02, 0.04, 0.01], orientation: [1, 0, 0, 0] } }),
    );
    const n0 = before.find((g) => g.id === "needle")!;
    const n1 = after.find((g) => g.id === "needle")!;
    expect(n1.x).toBeGreaterThan(n0.x);
    expect(n1.y).toBeLessThan(n0.y);
    expect(n1.z).toBeCloseTo(0.01);
    // identical input -> identical glyphs
    expect(before).toEqual(
      sceneGlyphs(state({ needle: { position: [0, 0, 0], orientation: [1, 0, 0, 0] } })),
    );
  });

  it("includes arm glyphs with jaw state", () => {
    const glyphs = sceneGlyphs(state({}));
    const arm = glyphs.find((g) => g.id === "arm0")!;
    expect(arm.kind).toBe("arm");
    expect(arm.jawOpen).toBe(true);
  });
});
