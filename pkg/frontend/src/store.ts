// Client-side state. The renderer reads only `latest` (a latest-frame
// buffer: frames arriving faster than the paint rate overwrite it), so
// rendering never backs up behind the socket.

import { NoticeFrame, StateFrame, parseFrame } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

const MAX_NOTICES = 6;

export class ViewStore {
  latest: StateFrame | null = null;
  status: ConnectionStatus = "connecting";
  /** Set on schema mismatch; rendering pauses until the page reloads. */
  banner: string | null = null;
  notices: NoticeFrame[] = [];
  framesSeen = 0;

  get paused(): boolean {
    return this.banner !== null;
  }

  /** Feed one raw websocket message; returns the state frame if it was one. */
  ingest(raw: string): StateFrame | null {
    if (this.paused) return null;
    const result = parseFrame(raw);
    if (!result.ok) {
      this.banner = `protocol error: ${result.reason}`;
      return null;
    }
    if (result.frame.type === "state") {
      this.latest = result.frame;
      this.framesSeen += 1;
      return result.frame;
    }
    this.notices = [result.frame, ...this.notices].slice(0, MAX_NOTICES);
    return null;
  }
}
