// Pointer-to-message translation. Press grabs, dragging stores the latest
// clamped world position, and each simulation tick flushes at most one
// move_target: the sim runs at 30 Hz and a 120 Hz pointer stream must not
// flood the queue. Release flushes the final position first so the
// server's release-velocity estimate sees the end of the stroke.

import {
  ScreenPoint,
  Viewport,
  WorldPoint,
  clampToWorkspace,
  screenToWorld,
} from "./mapping.js";
import { ControlMessage } from "./protocol.js";

export type SendFn = (msg: ControlMessage) => void;

export class DragController {
  private grabbed = false;
  private pending: WorldPoint | null = null;
  private lastTick = 0;
  /** True while the latest drag position had to be pulled into bounds. */
  clamped = false;

  constructor(
    private readonly view: Viewport,
    private readonly send: SendFn,
  ) {}

  get isGrabbed(): boolean {
    return this.grabbed;
  }

  press(p: ScreenPoint): void {
    this.grabbed = true;
    this.pending = null;
    this.clamped = false;
    this.send({ kind: "grab_target", tick: this.lastTick, payload: {} });
    this.drag(p);
  }

  drag(p: ScreenPoint): void {
    if (!this.grabbed) return;
    const world = screenToWorld(this.view, p);
    const { point, clamped } = clampToWorkspace(this.view.world, world);
    this.pending = point;
    this.clamped = clamped;
  }

  release(): void {
    if (!this.grabbed) return;
    this.flush();
    this.grabbed = false;
    this.clamped = false;
    this.send({ kind: "release_target", tick: this.lastTick, payload: {} });
  }

  /** Call once per received state frame; sends at most one move. */
  onTick(tick: number): void {
    this.lastTick = tick;
    this.flush();
  }

  private flush(): void {
    if (!this.grabbed || this.pending === null) return;
    this.send({
      kind: "move_target",
      tick: this.lastTick,
      payload: { position: [this.pending.x, this.pending.y] },
    });
    this.pending = null;
  }
}
