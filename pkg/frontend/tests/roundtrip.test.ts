// End-to-end contract against the real simulation server: a scripted
// client grabs the ball, drags it on a 1 Hz sinusoid with 0.3 m
// peak-to-peak swing, and checks that (a) a move is reflected in the
// state stream within two ticks and (b) the robot phase leads the target
// phase through the approach half of the drag cycles.

import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { StateFrame, phaseLead } from "../src/protocol";
import { ServerHandle, framesUntil, startBallServer } from "./helpers";

const PORT = 8762;

let server: ServerHandle;

beforeAll(async () => {
  server = await startBallServer(PORT);
});

afterAll(async () => {
  await server.stop();
});

const isState = (f: unknown): f is StateFrame =>
  typeof f === "object" && f !== null && (f as StateFrame).type === "state";

function openSocket(): Promise<WebSocket> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(server.url);
    ws.once("open", () => resolve(ws));
    ws.once("error", reject);
  });
}

const send = (ws: WebSocket, kind: string, tick: number, payload = {}) =>
  ws.send(JSON.stringify({ kind, tick, payload }));

describe("server round trip", () => {
  it("reflects a dragged position within two ticks", async () => {
    const ws = await openSocket();
    try {
      const warmup = await framesUntil(ws, (fs) => fs.filter(isState).length >= 3);
      let lastTick = warmup.filter(isState).at(-1)!.tick;

      send(ws, "grab_target", lastTick);
      const afterGrab = await framesUntil(ws, (fs) => fs.filter(isState).length >= 1);
      lastTick = afterGrab.filter(isState).at(-1)!.tick;

      const targetY = 1.25;
      send(ws, "move_target", lastTick, { position: [0.1, targetY] });
      const frames = await framesUntil(ws, (fs) =>
        fs.some((f) => isState(f) && Math.abs(f.target[1] - targetY) < 1e-6),
      );
      const echoed = frames.find(
        (f): f is StateFrame => isState(f) && Math.abs(f.target[1] - targetY) < 1e-6,
      )!;
      expect(echoed.tick - lastTick).toBeLessThanOrEqual(2);
      expect(echoed.tick).toBeGreaterThan(lastTick);

      send(ws, "release_target", echoed.tick);
      send(ws, "reset", echoed.tick);
    } finally {
      ws.close();
    }
  }, 60_000);

  it("anticipates the target through the approach half-cycles of a 1 Hz drag", async () => {
    const ws = await openSocket();
    try {
      const collected: StateFrame[] = [];
      let driving = false;
      let t0 = 0;

      const done = new Promise<void>((resolve, reject) => {
        const timer = setTimeout(
          () => reject(new Error(`drag run stalled at ${collected.length} frames`)),
          45_000,
        );
        ws.on("message", (data) => {
          const frame = JSON.parse(String(data));
          if (!isState(frame)) return; // rejects would surface via assertions below
          collected.push(frame);
          if (!driving) return;
          if (frame.t - t0 >= 6.0) {
            clearTimeout(timer);
            resolve();
            return;
          }
          // one coalesced move per received frame, like the UI does
          const y = 1.0 + 0.15 * Math.sin(2 * Math.PI * (frame.t - t0));
          send(ws, "move_target", frame.tick, { position: [0.0, y] });
        });
      });

      await framesUntil(ws, (fs) => fs.filter(isState).length >= 2);
      const start = collected.at(-1)!;
      send(ws, "grab_target", start.tick);
      t0 = start.t;
      driving = true;
      await done;
      send(ws, "release_target", collected.at(-1)!.tick);

      const dragFrames = collected.filter((f) => f.t > t0 && f.t - t0 < 6.0);
      expect(dragFrames.length).toBeGreaterThan(120); // ~30 Hz for 6 s

      // ticks never stall or repeat while we drive it
      for (let i = 1; i < dragFrames.length; i++) {
        expect(dragFrames[i]!.tick).toBeGreaterThan(dragFrames[i - 1]!.tick);
      }

      // approach = the descending half of each drag cycle: sin falling,
      // i.e. cycle phase in [0.25, 0.75)
      const halves: StateFrame[][] = [];
      for (let k = 0; k < 6; k++) {
        const half = dragFrames.filter((f) => {
          const u = f.t - t0 - k;
          return u >= 0.25 && u < 0.75;
        });
        if (half.length > 0) halves.push(half);
      }
      expect(halves.length).toBeGreaterThanOrEqual(5);

      const active = halves.filter((half) => {
        const leading = half.filter((f) => phaseLead(f) > 0).length;
        return leading > half.length / 2;
      });
      expect(active.length / halves.length).toBeGreaterThanOrEqual(0.6);
    } finally {
      ws.close();
    }
  }, 80_000);
});
