import { describe, expect, it } from 'vitest';
import { parseStl, stlToGeometry } from '../src/stl';

const TRIANGLE = [0, 0, 0, 1, 0, 0, 0, 1, 0];

function binaryStl(triangles: number[][]): ArrayBuffer {
  const buffer = new ArrayBuffer(84 + triangles.length * 50);
  new DataView(buffer).setUint32(80, triangles.length, true);
  triangles.forEach((tri, t) => {
    const view = new DataView(buffer, 84 + t * 50);
    for (let i = 0; i < 9; i++) view.setFloat32(12 + i * 4, tri[i], true);
  });
  return buffer;
}

function asciiStl(triangles: number[][]): ArrayBuffer {
  const lines = ['solid part'];
  for (const tri of triangles) {
    lines.push('  facet normal 0 0 1', '    outer loop');
    for (let v = 0; v < 3; v++) {
      lines.push(`      vertex ${tri[v * 3]} ${tri[v * 3 + 1]} ${tri[v * 3 + 2]}`);
    }
    lines.push('    endloop', '  endfacet');
  }
  lines.push('endsolid part');
  return new TextEncoder().encode(lines.join('\n')).buffer as ArrayBuffer;
}

describe('parseStl', () => {
  it('reads binary files', () => {
    const mesh = parseStl(binaryStl([TRIANGLE]));
    expect(mesh.triangleCount).toBe(1);
    expect(Array.from(mesh.positions)).toEqual(TRIANGLE);
  });

  it('reads ascii files', () => {
    const mesh = parseStl(asciiStl([TRIANGLE, TRIANGLE.map((x) => x + 1)]));
    expect(mesh.triangleCount).toBe(2);
    expect(mesh.positions[9]).toBeCloseTo(1);
  });

  it('treats a binary file whose header starts with "solid" as binary', () => {
    const buffer = binaryStl([TRIANGLE]);
    const bytes = new Uint8Array(buffer);
    const header = 'solid from a cad export';
    for (let i = 0; i < header.length; i++) bytes[i] = header.charCodeAt(i);
    expect(Array.from(parseStl(buffer).positions)).toEqual(TRIANGLE);
  });

  it('rejects truncated binary files', () => {
    expect(() => parseStl(binaryStl([TRIANGLE]).slice(0, 100))).toThrow();
  });

  it('builds renderable geometry', () => {
    const geometry = stlToGeometry(parseStl(binaryStl([TRIANGLE])));
    expect(geometry.getAttribute('position').count).toBe(3);
    expect(geometry.getAttribute('normal')).toBeDefined();
  });
});
