import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the integration suite boots the Python API and drives a full run
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
