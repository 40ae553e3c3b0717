/**
 * Message schemas for the teleoperation WebSocket protocol.
 *
 * The server speaks JSON text frames and advances the simulation only when
 * the client sends an `action` message (lockstep). Every outbound message is
 * validated against these schemas before it is sent.
 */
import { z } from "zod";

const vec3 = z.tuple([z.number(), z.number(), z.number()]);
const quat = z.tuple([z.number(), z.number(), z.number(), z.number()]);

export const PoseSchema = z.object({
  position: vec3,
  orientation: quat,
});
export type Pose = z.infer<typeof PoseSchema>;

// ---------------------------------------------------------------------------
// Client -> server

export const HelloMessage = z.object({ type: z.literal("hello") });

export const ActionMessage = z.object({
  type: z.literal("action"),
  dpos: vec3,
  drot: vec3,
  jaw: z.union([z.literal(0), z.literal(1)]),
  arm: z.number().int().nonnegative(),
});
export type ActionMessage = z.infer<typeof ActionMessage>;

export const RecordMessage = z.object({
  type: z.literal("record"),
  cmd: z.enum(["start", "stop", "save"]),
});

export const ResetMessage = z.object({
  type: z.literal("reset"),
  seed: z.number().int().nonnegative(),
});

export const ClientMessage = z.discriminatedUnion("type", [
  HelloMessage,
  ActionMessage,
  RecordMessage,
  ResetMessage,
]);
export type ClientMessage = z.infer<typeof ClientMessage>;

// ---------------------------------------------------------------------------
// Server -> client

export const SpecMessage = z.object({
  type: z.literal("spec"),
  task: z.object({
    name: z.string(),
    num_arms: z.number().int().positive(),
    horizon: z.number().int().positive(),
  }).passthrough(),
  rig: z.object({}).passthrough(),
  rate_hz: z.number().positive(),
  control_rate_hz: z.number().positive(),
  limits: z.object({
    max_step_translation: z.number().positive(),
    max_step_rotation: z.number().positive(),
  }),
});
export type SpecMessage = z.infer<typeof SpecMessage>;

export const StateMessage = z.object({
  type: z.literal("state"),
  step_count: z.number().int().nonnegative(),
  success: z.boolean(),
  recording: z.boolean(),
  proprio: z.array(z.number()),
  objects: z.record(PoseSchema),
  arms: z.array(
    PoseSchema.extend({
      jaw: z.number(),
      attached: z.string().nullable(),
    }),
  ),
});
export type StateMessage = z.infer<typeof StateMessage>;

export const FrameMessage = z.object({
  type: z.literal("frame"),
  camera: z.string(),
  step_count: z.number().int().nonnegative(),
  png: z.string(),
});
export type FrameMessage = z.infer<typeof FrameMessage>;

export const RecordAckMessage = z.object({
  type: z.literal("record"),
  cmd: z.enum(["start", "stop", "saved"]),
  recording: z.boolean().optional(),
  episode: z.string().optional(),
  length: z.number().int().optional(),
  success: z.boolean().optional(),
});
export type RecordAckMessage = z.infer<typeof RecordAckMessage>;

export const ErrorMessage = z.object({
  type: z.literal("error"),
  code: z.string(),
  msg: z.string(),
});
export type ErrorMessage = z.infer<typeof ErrorMessage>;

export const ServerMessage = z.discriminatedUnion("type", [
  SpecMessage,
  StateMessage,
  FrameMessage,
  RecordAckMessage,
  ErrorMessage,
]);
export type ServerMessage = z.infer<typeof ServerMessage>;

/** Parse an incoming frame; returns null for anything that fails the schema. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  const res = ServerMessage.safeParse(data);
  return res.success ? res.data : null;
}

/** Serialize an outbound message, refusing anything that fails the schema. */
export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(ClientMessage.parse(msg));
}
