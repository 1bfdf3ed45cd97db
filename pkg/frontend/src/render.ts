// Scene construction and canvas drawing. `sceneFromFrame` is pure: frame
// in, screen positions out. The fixture-replay test pins its output, so
// the world-to-screen mapping cannot drift silently.

import {
  DEFAULT_VIEWPORT,
  ScreenPoint,
  Viewport,
  worldToScreen,
} from "./mapping.js";
import { StateFrame, isAnticipating, phaseLead, wrapAngle } from "./protocol.js";

// Cosmetic world geometry: where the tether hangs from and how far the
// paddles sit from the centerline. The server only streams progress
// heights for the hands.
export const STRING_PIVOT = { x: 0, y: 0.45 };
export const HAND_LATERAL = 0.55;

export interface DialReadout {
  phiTarget: number;
  phiRobot: number;
  lead: number;
  anticipating: boolean;
  K: number;
  alpha: number;
}

export interface Scene {
  tick: number;
  target: ScreenPoint;
  leftHand: ScreenPoint;
  rightHand: ScreenPoint;
  stringFrom: ScreenPoint;
  dials: DialReadout;
}

export function sceneFromFrame(
  frame: StateFrame,
  view: Viewport = DEFAULT_VIEWPORT,
): Scene {
  return {
    tick: frame.tick,
    target: worldToScreen(view, { x: frame.target[0], y: frame.target[1] }),
    leftHand: worldToScreen(view, { x: -HAND_LATERAL, y: frame.hands[0] }),
    rightHand: worldToScreen(view, { x: HAND_LATERAL, y: frame.hands[1] }),
    stringFrom: worldToScreen(view, STRING_PIVOT),
    dials: {
      phiTarget: wrapAngle(frame.phi_t),
      phiRobot: wrapAngle(frame.phi_r),
      lead: phaseLead(frame),
      anticipating: isAnticipating(frame),
      K: frame.K,
      alpha: frame.alpha,
    },
  };
}

const PADDLE_HALF_WIDTH = 34;
const TARGET_RADIUS = 12;
const DIAL_RADIUS = 42;

function drawDial(
  ctx: CanvasRenderingContext2D,
  cx: number,
  cy: number,
  angle: number,
  label: string,
  color: string,
): void {
  ctx.strokeStyle = "#555";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.arc(cx, cy, DIAL_RADIUS, 0, 2 * Math.PI);
  ctx.stroke();
  // needle: angle 0 points right, positive counter-clockwise (screen y down)
  ctx.strokeStyle = color;
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(
    cx + DIAL_RADIUS * Math.cos(angle),
    cy - DIAL_RADIUS * Math.sin(angle),
  );
  ctx.stroke();
  ctx.fillStyle = "#ccc";
  ctx.font = "12px sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(label, cx, cy + DIAL_RADIUS + 16);
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  scene: Scene,
  view: Viewport = DEFAULT_VIEWPORT,
  dragClamped = false,
): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.fillStyle = "#14161a";
  ctx.fillRect(0, 0, view.width, view.height);

  // anticipation wash behind everything
  if (scene.dials.anticipating) {
    ctx.fillStyle = "rgba(80, 200, 120, 0.08)";
    ctx.fillRect(0, 0, view.width, view.height);
  }

  // tether
  ctx.strokeStyle = "#777";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(scene.stringFrom.x, scene.stringFrom.y);
  ctx.lineTo(scene.target.x, scene.target.y);
  ctx.stroke();

  // paddles
  ctx.strokeStyle = "#8ab4f8";
  ctx.lineWidth = 6;
  for (const hand of [scene.leftHand, scene.rightHand]) {
    ctx.beginPath();
    ctx.moveTo(hand.x - PADDLE_HALF_WIDTH, hand.y);
    ctx.lineTo(hand.x + PADDLE_HALF_WIDTH, hand.y);
    ctx.stroke();
  }

  // target
  ctx.fillStyle = dragClamped ? "#ff7043" : "#ffd54f";
  ctx.beginPath();
  ctx.arc(scene.target.x, scene.target.y, TARGET_RADIUS, 0, 2 * Math.PI);
  ctx.fill();

  // phase dials, top right
  const dialY = 70;
  drawDial(ctx, view.width - 170, dialY, scene.dials.phiTarget, "phi target", "#ffd54f");
  drawDial(ctx, view.width - 70, dialY, scene.dials.phiRobot, "phi robot", "#8ab4f8");
  if (scene.dials.anticipating) {
    ctx.fillStyle = "#50c878";
    ctx.font = "13px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText("anticipating", view.width - 120, dialY + DIAL_RADIUS + 34);
  }
  ctx.fillStyle = "#ccc";
  ctx.font = "12px monospace";
  ctx.textAlign = "left";
  ctx.fillText(
    `K=${scene.dials.K.toFixed(1)} alpha=${scene.dials.alpha.toFixed(2)} ` +
      `lead=${scene.dials.lead.toFixed(2)} tick=${scene.tick}`,
    12,
    view.height - 14,
  );
}
