import { defineConfig } from 'vite';

export default defineConfig({
  build: { outDir: 'dist' },
  test: {
    environment: 'jsdom',
    testTimeout: 180_000,
    hookTimeout: 60_000,
    pool: 'forks',
  },
});
