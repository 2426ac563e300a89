import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { ChildProcess, spawn, spawnSync } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { AddressInfo, createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { ApiError, DesignApi, Vec3 } from '../src/api';
import { parseStl } from '../src/stl';

const PYTHON = process.env.GUIDECAD_PYTHON ?? 'python3';

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once('error', reject);
    probe.listen(0, '127.0.0.1', () => {
      const port = (probe.address() as AddressInfo).port;
      probe.close(() => resolve(port));
    });
  });
}

async function waitForHealth(base: string): Promise<void> {
  for (let attempt = 0; attempt < 120; attempt++) {
    try {
      const response = await fetch(`${base}/health`);
      if (response.ok) return;
    } catch {
      // server still starting
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error('design service never became healthy');
}

function ringPoint(step: number, count: number): Vec3 {
  const angle = (2 * Math.PI * step) / count;
  const r = 10 / Math.SQRT2;
  return [r * Math.cos(angle), r * Math.sin(angle), r];
}

describe('design service round trip', () => {
  let server: ChildProcess;
  let workdir: string;
  let api: DesignApi;
  let stderr = '';

  beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), 'guidecad-ui-'));
    const fixture = spawnSync(PYTHON, [
      '-m',
      'guidecad.cli',
      'fixtures',
      'hemisphere',
      '--out',
      join(workdir, 'hemisphere.stl'),
    ]);
    if (fixture.status !== 0) {
      throw new Error(`fixture export failed: ${fixture.stderr}`);
    }
    const port = await freePort();
    server = spawn(PYTHON, ['-m', 'guidecad.cli', 'serve', '--port', String(port)], {
      stdio: ['ignore', 'ignore', 'pipe'],
    });
    server.stderr?.on('data', (chunk: Buffer) => {
      stderr += chunk;
    });
    api = new DesignApi(`http://127.0.0.1:${port}/api/v1`);
    await waitForHealth(`http://127.0.0.1:${port}/api/v1`).catch((error) => {
      throw new Error(`${error}\nserver log:\n${stderr}`);
    });
  });

  afterAll(() => {
    server?.kill();
    rmSync(workdir, { recursive: true, force: true });
  });

  it('uploads anatomy, edits a contour, and downloads a printable template', async () => {
    const stl = readFileSync(join(workdir, 'hemisphere.stl'));
    const session = await api.createSession(stl);
    expect(session.id).toBeTruthy();
    expect(session.triangle_count).toBeGreaterThan(0);

    const pointCount = 6;
    for (let i = 0; i < pointCount; i++) {
      const started = Date.now();
      const state = await api.updatePoints(session.id, { op: 'add', point: ringPoint(i, pointCount) });
      expect(Date.now() - started).toBeLessThan(500);
      expect(state.count).toBe(i + 1);
      expect(state.closed).toBe(i + 1 >= 3);
      if (state.closed) expect(state.points.length).toBeGreaterThan(state.count);
    }

    const moved = await api.updatePoints(session.id, { op: 'move', index: 0, point: ringPoint(0.5, pointCount) });
    expect(moved.count).toBe(pointCount);
    expect(moved.closed).toBe(true);

    const inner = await api.previewInner(session.id);
    expect(inner.indices.length / 3).toBeGreaterThan(0);
    for (let i = 2; i < inner.vertices.length; i += 3) {
      expect(inner.vertices[i]).toBeGreaterThan(0);
    }

    const result = await api.generate(session.id, {
      axes: [
        {
          entry: [0, 0, 10],
          direction: [0, 0, 1],
          inner_radius: 1.5,
          outer_radius: 3.0,
          length: 6.0,
        },
      ],
    });
    expect(result.closed).toBe(true);
    expect(result.euler_characteristic).toBe(0);
    expect(result.timings.length).toBe(7);
    expect(result.timings.at(-1)?.stage).toContain('Boolean');

    const payload = await api.templatePayload(session.id);
    expect(payload.indices.length / 3).toBe(result.triangle_count);

    const download = await api.downloadTemplateStl(session.id);
    expect(parseStl(download).triangleCount).toBe(result.triangle_count);
  });

  it('surfaces structured errors', async () => {
    const missing = await api.getContour('no-such-session').catch((error) => error);
    expect(missing).toBeInstanceOf(ApiError);
    expect((missing as ApiError).status).toBe(404);

    const stl = readFileSync(join(workdir, 'hemisphere.stl'));
    const session = await api.createSession(stl);
    const bad = await api
      .updatePoints(session.id, { op: 'move', index: 0, point: [0, 0, 10] })
      .catch((error) => error);
    expect(bad).toBeInstanceOf(ApiError);
    expect((bad as ApiError).status).toBe(422);
    expect((bad as ApiError).detail?.kind).toBeTruthy();
  });
});
