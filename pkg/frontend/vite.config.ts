/// <reference types="vitest/config" />
import { defineConfig } from 'vite';

export default defineConfig({
  server: {
    proxy: {
      // Dev server forwards API calls to a locally running design service.
      '/api': `http://127.0.0.1:${process.env.GUIDECAD_PORT ?? 8000}`,
    },
  },
  test: {
    environment: 'node',
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
