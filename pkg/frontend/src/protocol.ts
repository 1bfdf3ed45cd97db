// Wire types for the bridge server's WebSocket JSON protocol, plus the
// guards that keep a misbehaving stream from reaching the renderer.

export const SCHEMA_VERSION = 1;

const TWO_PI = 2 * Math.PI;

export interface StateFrame {
  v: number;
  type: "state";
  tick: number;
  t: number;
  phi_t: number;
  phi_r: number;
  K: number;
  alpha: number;
  target: [number, number]; // [lateral, progress] in meters
  hands: [number, number]; // [left, right] progress in meters
  q: number[];
  cost: number;
}

export interface NoticeFrame {
  v: number;
  type: "error" | "reject";
  tick: number;
  reason: string;
}

export type ServerFrame = StateFrame | NoticeFrame;

export type ControlKind =
  | "grab_target"
  | "move_target"
  | "release_target"
  | "switch_task"
  | "set_coupling"
  | "reset";

export interface ControlMessage {
  kind: ControlKind;
  tick: number; // last tick seen by the client when it sent this
  payload: Record<string, unknown>;
}

/** Wrap an angle to (-pi, pi], mapping -pi to +pi. */
export function wrapAngle(x: number): number {
  let w = x - TWO_PI * Math.round(x / TWO_PI);
  if (w <= -Math.PI) w += TWO_PI;
  if (w > Math.PI) w -= TWO_PI;
  return w;
}

/** Signed phase lead of the robot over the target. */
export function phaseLead(frame: Pick<StateFrame, "phi_r" | "phi_t">): number {
  return wrapAngle(frame.phi_r - frame.phi_t);
}

/** The anticipation indicator: robot phase strictly ahead of the target. */
export function isAnticipating(
  frame: Pick<StateFrame, "phi_r" | "phi_t">,
): boolean {
  return phaseLead(frame) > 0;
}

export type ParseResult =
  | { ok: true; frame: ServerFrame }
  | { ok: false; reason: string };

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isPair(v: unknown): v is [number, number] {
  return Array.isArray(v) && v.length === 2 && v.every(isFiniteNumber);
}

/** Validate one incoming websocket message. Never throws. */
export function parseFrame(raw: string): ParseResult {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return { ok: false, reason: "frame is not valid JSON" };
  }
  if (doc === null || typeof doc !== "object" || Array.isArray(doc)) {
    return { ok: false, reason: "frame is not an object" };
  }
  const frame = doc as Record<string, unknown>;
  if (frame.v !== SCHEMA_VERSION) {
    return { ok: false, reason: `unsupported schema version ${frame.v}` };
  }
  if (frame.type === "error" || frame.type === "reject") {
    if (typeof frame.reason !== "string" || !isFiniteNumber(frame.tick)) {
      return { ok: false, reason: "malformed notice frame" };
    }
    return { ok: true, frame: frame as unknown as NoticeFrame };
  }
  if (frame.type !== "state") {
    return { ok: false, reason: `unknown frame type ${frame.type}` };
  }
  const numeric: (keyof StateFrame)[] = ["tick", "t", "phi_t", "phi_r", "K", "alpha", "cost"];
  for (const key of numeric) {
    if (!isFiniteNumber(frame[key])) {
      return { ok: false, reason: `state frame field ${key} is not a finite number` };
    }
  }
  if (!isPair(frame.target) || !isPair(frame.hands)) {
    return { ok: false, reason: "state frame target/hands must be 2-vectors" };
  }
  if (!Array.isArray(frame.q) || !frame.q.every(isFiniteNumber)) {
    return { ok: false, reason: "state frame q must be a numeric array" };
  }
  return { ok: true, frame: frame as unknown as StateFrame };
}
