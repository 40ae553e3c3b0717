/**
 * Canvas scene view: object poses arrive in `state` messages and are drawn
 * as simple primitives keyed by object id (top-down orthographic view of the
 * tabletop; height shown as glyph scale). The glyph list is a pure function
 * of the last state, so it is unit-testable without a canvas.
 */
import type { StateMessage } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  /** workspace half-extent in meters mapped to half the canvas */
  extent: number;
  /** workspace center in world coordinates */
  center: [number, number];
}

export const DEFAULT_VIEWPORT: Viewport = {
  width: 480,
  height: 480,
  extent: 0.18,
  center: [0, 0],
};

export type GlyphKind = "needle" | "block" | "pad" | "peg" | "generic" | "arm";

export interface Glyph {
  id: string;
  kind: GlyphKind;
  /** canvas pixels */
  x: number;
  y: number;
  /** world z in meters, drives glyph scale */
  z: number;
  /** planar heading in radians derived from the orientation quaternion */
  heading: number;
  /** arm glyphs only */
  jawOpen?: boolean;
  attached?: string | null;
}

export function worldToCanvas(
  p: [number, number, number] | number[],
  vp: Viewport,
): [number, number] {
  const sx = vp.width / (2 * vp.extent);
  const sy = vp.height / (2 * vp.extent);
  // +y (away from the operator) points up on screen.
  return [
    vp.width / 2 + (p[0] - vp.center[0]) * sx,
    vp.height / 2 - (p[1] - vp.center[1]) * sy,
  ];
}

/** Rotation of the body x-axis about world z, from a unit quaternion (w,x,y,z). */
export function quatHeading(q: number[]): number {
  const [w, x, y, z] = q;
  // First column of the rotation matrix = rotated x-axis.
  const m00 = 1 - 2 * (y * y + z * z);
  const m10 = 2 * (x * y + z * w);
  return Math.atan2(m10, m00);
}

export function glyphKind(objectId: string): GlyphKind {
  if (objectId.includes("needle")) return "needle";
  if (objectId.includes("block")) return "block";
  if (objectId.includes("peg")) return "peg";
  if (objectId.includes("pad") || objectId.includes("tissue")) return "pad";
  return "generic";
}

export function sceneGlyphs(state: StateMessage, vp: Viewport = DEFAULT_VIEWPORT): Glyph[] {
  const glyphs: Glyph[] = [];
  for (const [id, pose] of Object.entries(state.objects)) {
    const [x, y] = worldToCanvas(pose.position, vp);
    glyphs.push({
      id,
      kind: glyphKind(id),
      x,
      y,
      z: pose.position[2],
      heading: quatHeading(pose.orientation),
    });
  }
  state.arms.forEach((arm, i) => {
    const [x, y] = worldToCanvas(arm.position, vp);
    glyphs.push({
      id: `arm${i}`,
      kind: "arm",
      x,
      y,
      z: arm.position[2],
      heading: quatHeading(arm.orientation),
      jawOpen: arm.jaw > 0.5,
      attached: arm.attached,
    });
  });
  return glyphs;
}

const COLORS: Record<GlyphKind, string> = {
  needle: "#d9d9d9",
  block: "#e0a030",
  peg: "#707070",
  pad: "#c06060",
  generic: "#90a0c0",
  arm: "#40c0a0",
};

function glyphRadius(z: number): number {
  // Objects grow slightly as they are lifted off the table.
  return 8 + Math.max(0, Math.min(z, 0.1)) * 60;
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  state: StateMessage,
  vp: Viewport = DEFAULT_VIEWPORT,
): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  ctx.fillStyle = "#1b2330";
  ctx.fillRect(0, 0, vp.width, vp.height);

  for (const g of sceneGlyphs(state, vp)) {
    const r = glyphRadius(g.z);
    ctx.save();
    ctx.translate(g.x, g.y);
    ctx.rotate(-g.heading);
    ctx.strokeStyle = COLORS[g.kind];
    ctx.fillStyle = COLORS[g.kind];
    ctx.lineWidth = 2;
    switch (g.kind) {
      case "needle":
        ctx.beginPath();
        ctx.arc(0, 0, r, 0, Math.PI);
        ctx.stroke();
        break;
      case "block":
        ctx.fillRect(-r / 1.4, -r / 1.4, r * 1.4, r * 1.4);
        break;
      case "peg":
        ctx.beginPath();
        ctx.arc(0, 0, 4, 0, 2 * Math.PI);
        ctx.fill();
        break;
      case "pad":
        ctx.fillRect(-r * 1.5, -r, r * 3, r * 2);
        break;
      case "generic":
        ctx.beginPath();
        ctx.arc(0, 0, r, 0, 2 * Math.PI);
        ctx.fill();
        break;
      case "arm": {
        const gap = g.jawOpen ? 6 : 1;
        ctx.beginPath();
        ctx.moveTo(-r, -gap);
        ctx.lineTo(0, -gap / 2);
        ctx.moveTo(-r, gap);
        ctx.lineTo(0, gap / 2);
        ctx.stroke();
        if (g.attached) {
          ctx.beginPath();
          ctx.arc(0, 0, 3, 0, 2 * Math.PI);
          ctx.fill();
        }
        break;
      }
    }
    ctx.restore();
    ctx.fillStyle = "#8892a6";
    ctx.font = "10px sans-serif";
    ctx.fillText(g.id, g.x + 10, g.y - 10);
  }
}
