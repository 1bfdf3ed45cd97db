import { describe, expect, it } from "vitest";

import { DEFAULT_VIEWPORT } from "../src/mapping";
import { DragController } from "../src/pointer";
import { ControlMessage } from "../src/protocol";

const CENTER = { x: 400, y: 300 }; // world (0, 0.75) under the default viewport

function harness() {
  const sent: ControlMessage[] = [];
  const drag = new DragController(DEFAULT_VIEWPORT, (msg) => sent.push(msg));
  return { sent, drag };
}

const kinds = (sent: ControlMessage[]) => sent.map((m) => m.kind);
const moves = (sent: ControlMessage[]) =>
  sent.filter((m) => m.kind === "move_target");

describe("DragController", () => {
  it("press then release sends grab, the final position, then release", () => {
    const { sent, drag } = harness();
    drag.press(CENTER);
    drag.release();
    expect(kinds(sent)).toEqual(["grab_target", "move_target", "release_target"]);
    const move = moves(sent)[0]!;
    expect(move.payload.position).toEqual([0, 0.75]);
  });

  it("coalesces a burst of drags into one move per tick", () => {
    const { sent, drag } = harness();
    drag.press(CENTER);
    for (let i = 0; i < 10; i++) {
      drag.drag({ x: 400, y: 300 - i * 10 });
    }
    drag.onTick(7);
    expect(moves(sent)).toHaveLength(1);
    const move = moves(sent)[0]!;
    expect(move.tick).toBe(7);
    // last drag wins: screen y=210 -> world y = -1.5 + (390/600)*4.5
    const [, y] = move.payload.position as [number, number];
    expect(y).toBeCloseTo(-1.5 + (390 / 600) * 4.5, 12);

    drag.onTick(8); // nothing pending: no extra move
    expect(moves(sent)).toHaveLength(1);
  });

  it("a fast pointer stream never exceeds one move per tick", () => {
    const { sent, drag } = harness();
    drag.press(CENTER);
    let tick = 0;
    for (let burst = 0; burst < 5; burst++) {
      for (let i = 0; i < 4; i++) {
        drag.drag({ x: 400 + i, y: 300 - burst * 5 - i });
      }
      drag.onTick(++tick);
    }
    drag.release();
    // 5 ticks -> 5 moves; release had nothing left to flush
    expect(moves(sent)).toHaveLength(5);
    expect(kinds(sent).at(-1)).toBe("release_target");
  });

  it("clamps out-of-bounds drags and flags them", () => {
    const { sent, drag } = harness();
    drag.press(CENTER);
    drag.drag({ x: 400, y: -100 }); // above the canvas -> world y 3.75
    expect(drag.clamped).toBe(true);
    drag.onTick(1);
    const move = moves(sent).at(-1)!;
    expect(move.payload.position).toEqual([0, 3]);

    drag.drag(CENTER);
    expect(drag.clamped).toBe(false);
  });

  it("ignores drag and release while nothing is grabbed", () => {
    const { sent, drag } = harness();
    drag.drag(CENTER);
    drag.onTick(1);
    drag.release();
    expect(sent).toEqual([]);
  });

  it("release flushes the pending position before release_target", () => {
    const { sent, drag } = harness();
    drag.press(CENTER);
    drag.onTick(1); // flush press position
    drag.drag({ x: 400, y: 500 }); // pending, no tick arrives
    drag.release();
    const tail = kinds(sent).slice(-2);
    expect(tail).toEqual(["move_target", "release_target"]);
    const last = moves(sent).at(-1)!;
    const [, y] = last.payload.position as [number, number];
    expect(y).toBeCloseTo(-1.5 + (100 / 600) * 4.5, 12);
  });

  it("stamps messages with the last tick seen", () => {
    const { sent, drag } = harness();
    drag.onTick(41);
    drag.press(CENTER);
    expect(sent[0]!.tick).toBe(41);
  });
});
