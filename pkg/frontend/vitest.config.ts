import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // The round-trip suite boots the real simulation server and drives it
    // for several seconds of wall-clock time.
    testTimeout: 90_000,
    hookTimeout: 60_000,
  },
});
