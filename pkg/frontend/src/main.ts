// Entry point: wire the canvas, pointer, and websocket together. The
// simulation is authoritative; this file only sends ControlMessages and
// paints whatever state comes back.

import { DEFAULT_VIEWPORT } from "./mapping.js";
import { DragController } from "./pointer.js";
import { ControlMessage } from "./protocol.js";
import { drawScene, sceneFromFrame } from "./render.js";
import { ViewStore } from "./store.js";

const params = new URLSearchParams(window.location.search);
const serverUrl =
  params.get("server") ?? `ws://${window.location.hostname || "127.0.0.1"}:8700/ws`;

const view = DEFAULT_VIEWPORT;
const canvas = document.getElementById("scene") as HTMLCanvasElement;
canvas.width = view.width;
canvas.height = view.height;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;
const bannerEl = document.getElementById("banner")!;
const noticesEl = document.getElementById("notices")!;

const store = new ViewStore();
let socket: WebSocket | null = null;
let retryMs = 500;

function sendMessage(msg: ControlMessage): void {
  if (socket !== null && socket.readyState === WebSocket.OPEN) {
    socket.send(JSON.stringify(msg));
  }
}

const drag = new DragController(view, sendMessage);

function connect(): void {
  store.status = "connecting";
  socket = new WebSocket(serverUrl);
  socket.addEventListener("open", () => {
    store.status = "open";
    retryMs = 500;
  });
  socket.addEventListener("message", (ev) => {
    const frame = store.ingest(String(ev.data));
    if (frame !== null) drag.onTick(frame.tick);
  });
  socket.addEventListener("close", () => {
    store.status = "closed";
    if (!store.paused) setTimeout(connect, retryMs);
    retryMs = Math.min(retryMs * 2, 8000);
  });
}

function canvasPoint(ev: PointerEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * view.width,
    y: ((ev.clientY - rect.top) / rect.height) * view.height,
  };
}

canvas.addEventListener("pointerdown", (ev) => {
  canvas.setPointerCapture(ev.pointerId);
  drag.press(canvasPoint(ev));
});
canvas.addEventListener("pointermove", (ev) => drag.drag(canvasPoint(ev)));
canvas.addEventListener("pointerup", () => drag.release());
canvas.addEventListener("pointercancel", () => drag.release());

document.getElementById("reset")!.addEventListener("click", () => {
  sendMessage({ kind: "reset", tick: store.latest?.tick ?? 0, payload: {} });
});

const taskSelect = document.getElementById("task") as HTMLSelectElement;
taskSelect.addEventListener("change", () => {
  sendMessage({
    kind: "switch_task",
    tick: store.latest?.tick ?? 0,
    payload: { task: taskSelect.value },
  });
});

const couplingForm = document.getElementById("coupling") as HTMLFormElement;
couplingForm.addEventListener("submit", (ev) => {
  ev.preventDefault();
  const k = Number((document.getElementById("k-input") as HTMLInputElement).value);
  const alpha = Number(
    (document.getElementById("alpha-input") as HTMLInputElement).value,
  );
  sendMessage({
    kind: "set_coupling",
    tick: store.latest?.tick ?? 0,
    payload: { K: k, alpha },
  });
});

function paint(): void {
  if (store.paused) {
    bannerEl.textContent = store.banner;
    bannerEl.classList.remove("hidden");
    return; // rendering stays paused on schema mismatch
  }
  if (store.latest !== null) {
    drawScene(ctx, sceneFromFrame(store.latest, view), view, drag.clamped);
  }
  statusEl.textContent =
    `${store.status} | frames ${store.framesSeen}` +
    (store.latest !== null ? ` | t=${store.latest.t.toFixed(2)}s` : "");
  noticesEl.textContent = store.notices
    .map((n) => `[${n.type} @ ${n.tick}] ${n.reason}`)
    .join("\n");
  requestAnimationFrame(paint);
}

connect();
requestAnimationFrame(paint);
