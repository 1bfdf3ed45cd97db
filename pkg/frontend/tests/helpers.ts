// Boots the real bridge server (the Python package this client talks to)
// for integration tests. Tests are skipped-with-failure rather than
// silently green if the server cannot start.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import WebSocket from "ws";

export const FIXTURES = resolve(__dirname, "..", "fixtures");

export interface ServerHandle {
  url: string;
  proc: ChildProcess;
  stop(): Promise<void>;
}

export async function startBallServer(port: number): Promise<ServerHandle> {
  const out = mkdtempSync(join(tmpdir(), "disturbance-ui-"));
  const proc = spawn(
    "python3",
    [
      "-m",
      "phaseprim.cli",
      "serve",
      "--config",
      join(FIXTURES, "serve.ball.json"),
      "--portrait",
      join(FIXTURES, "ball-portrait.json"),
      "--policy",
      join(FIXTURES, "ball-policy.json"),
      "--port",
      String(port),
      "--out",
      out,
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  let stderr = "";
  proc.stderr?.on("data", (chunk) => {
    stderr += String(chunk);
  });

  const url = `ws://127.0.0.1:${port}/ws`;
  const deadline = Date.now() + 30_000;
  for (;;) {
    if (proc.exitCode !== null) {
      throw new Error(`server exited early (${proc.exitCode}): ${stderr}`);
    }
    try {
      await probe(url);
      break;
    } catch {
      if (Date.now() > deadline) {
        proc.kill();
        throw new Error(`server never came up on ${url}: ${stderr}`);
      }
      await sleep(250);
    }
  }
  return {
    url,
    proc,
    stop: async () => {
      proc.kill("SIGTERM");
      await new Promise<void>((done) => {
        proc.once("exit", () => done());
        setTimeout(() => {
          proc.kill("SIGKILL");
          done();
        }, 3000);
      });
    },
  };
}

function probe(url: string): Promise<void> {
  return new Promise((resolveProbe, rejectProbe) => {
    const ws = new WebSocket(url);
    ws.once("open", () => {
      ws.close();
      resolveProbe();
    });
    ws.once("error", (err) => rejectProbe(err));
  });
}

export function sleep(ms: number): Promise<void> {
  return new Promise((done) => setTimeout(done, ms));
}

/** Collect frames from a socket until `stop` returns true or timeout. */
export function framesUntil(
  ws: WebSocket,
  stop: (frames: unknown[]) => boolean,
  timeoutMs = 20_000,
): Promise<unknown[]> {
  return new Promise((resolveFrames, rejectFrames) => {
    const frames: unknown[] = [];
    const timer = setTimeout(() => {
      ws.off("message", onMessage);
      rejectFrames(new Error(`timed out after ${frames.length} frames`));
    }, timeoutMs);
    function onMessage(data: WebSocket.RawData): void {
      frames.push(JSON.parse(String(data)));
      if (stop(frames)) {
        clearTimeout(timer);
        ws.off("message", onMessage);
        resolveFrames(frames);
      }
    }
    ws.on("message", onMessage);
  });
}
