import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    outDir: "dist",
  },
  server: {
    proxy: {
      // during development the Python API runs separately
      "/api": "http://127.0.0.1:8470",
    },
  },
  test: {
    environment: "node",
    testTimeout: 60000,
    hookTimeout: 60000,
  },
});
