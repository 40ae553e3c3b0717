/**
 * Keyboard-to-action mapping: held keys integrate into per-tick 6-DoF
 * deltas, the jaw toggles edge-triggered, and an arm selector switches the
 * addressed arm for two-arm tasks. Emitted deltas are clamped to the limits
 * the server advertised in its `spec` message, after scaling.
 */
import type { ActionMessage } from "./protocol.js";

export interface InputMapping {
  /** key -> translation axis direction, +y is "forward" away from the operator */
  translationKeys: Record<string, [number, number, number]>;
  /** key -> rotation axis direction (roll/pitch/yaw) */
  rotationKeys: Record<string, [number, number, number]>;
  jawToggleKey: string;
  armSelectKeys: Record<string, number>;
  /** meters moved per tick while a translation key is held */
  translationScale: number;
  /** radians per tick while a rotation key is held */
  rotationScale: number;
}

export function defaultMapping(): InputMapping {
  return {
    translationKeys: {
      KeyW: [0, 1, 0],
      KeyS: [0, -1, 0],
      KeyA: [-1, 0, 0],
      KeyD: [1, 0, 0],
      KeyE: [0, 0, 1],
      KeyQ: [0, 0, -1],
    },
    rotationKeys: {
      KeyJ: [1, 0, 0],
      KeyL: [-1, 0, 0],
      KeyI: [0, 1, 0],
      KeyK: [0, -1, 0],
      KeyU: [0, 0, 1],
      KeyO: [0, 0, -1],
    },
    jawToggleKey: "Space",
    armSelectKeys: { Digit1: 0, Digit2: 1 },
    translationScale: 0.002,
    rotationScale: 0.05,
  };
}

export interface Limits {
  max_step_translation: number;
  max_step_rotation: number;
}

/** Scale a delta down (never up) so its norm fits the per-step clamp. */
export function clampDelta(v: [number, number, number], max: number): [number, number, number] {
  const norm = Math.hypot(v[0], v[1], v[2]);
  if (norm <= max || norm === 0) return v;
  const s = max / norm;
  return [v[0] * s, v[1] * s, v[2] * s];
}

/**
 * Tracks held keys and toggle state between ticks. `tick()` produces the
 * action message for the current input; no input yields a hold (zero deltas),
 * which still advances the lockstep simulation.
 */
export class InputState {
  private held = new Set<string>();
  private jawCommand: 0 | 1 = 0; // 0 = open, matching a fresh reset
  private arm = 0;

  constructor(
    private mapping: InputMapping = defaultMapping(),
    private numArms = 1,
  ) {}

  keyDown(code: string): void {
    if (this.held.has(code)) return; // auto-repeat is not an edge
    this.held.add(code);
    if (code === this.mapping.jawToggleKey) {
      this.jawCommand = this.jawCommand === 0 ? 1 : 0;
    }
    const arm = this.mapping.armSelectKeys[code];
    if (arm !== undefined && arm < this.numArms) this.arm = arm;
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  /** Drop all held keys (window blur); toggle state is kept. */
  clearHeld(): void {
    this.held.clear();
  }

  get selectedArm(): number {
    return this.arm;
  }

  get jaw(): 0 | 1 {
    return this.jawCommand;
  }

  /** Reset toggle/arm state to what the server assumes after `reset`. */
  onReset(): void {
    this.jawCommand = 0;
    this.arm = 0;
  }

  tick(limits: Limits): ActionMessage {
    let dpos: [number, number, number] = [0, 0, 0];
    let drot: [number, number, number] = [0, 0, 0];
    for (const code of this.held) {
      const t = this.mapping.translationKeys[code];
      if (t) {
        dpos = [
          dpos[0] + t[0] * this.mapping.translationScale,
          dpos[1] + t[1] * this.mapping.translationScale,
          dpos[2] + t[2] * this.mapping.translationScale,
        ];
      }
      const r = this.mapping.rotationKeys[code];
      if (r) {
        drot = [
          drot[0] + r[0] * this.mapping.rotationScale,
          drot[1] + r[1] * this.mapping.rotationScale,
          drot[2] + r[2] * this.mapping.rotationScale,
        ];
      }
    }
    return {
      type: "action",
      dpos: clampDelta(dpos, limits.max_step_translation),
      drot: clampDelta(drot, limits.max_step_rotation),
      jaw: this.jawCommand,
      arm: this.arm,
    };
  }
}
