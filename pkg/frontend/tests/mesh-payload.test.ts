import { describe, expect, it } from 'vitest';
import { decodeMeshPayload, payloadToGeometry } from '../src/mesh-payload';

function encode(vertices: number[], indices: number[]): ArrayBuffer {
  const buffer = new ArrayBuffer(16 + vertices.length * 4 + indices.length * 4);
  const bytes = new Uint8Array(buffer);
  const magic = 'GCMESH1\n';
  for (let i = 0; i < magic.length; i++) bytes[i] = magic.charCodeAt(i);
  const view = new DataView(buffer);
  view.setUint32(8, vertices.length / 3, true);
  view.setUint32(12, indices.length / 3, true);
  new Float32Array(buffer, 16, vertices.length).set(vertices);
  new Uint32Array(buffer, 16 + vertices.length * 4, indices.length).set(indices);
  return buffer;
}

const QUAD_VERTICES = [0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0];
const QUAD_INDICES = [0, 1, 2, 0, 2, 3];

describe('decodeMeshPayload', () => {
  it('round-trips vertices and indices', () => {
    const payload = decodeMeshPayload(encode(QUAD_VERTICES, QUAD_INDICES));
    expect(Array.from(payload.vertices)).toEqual(QUAD_VERTICES);
    expect(Array.from(payload.indices)).toEqual(QUAD_INDICES);
  });

  it('rejects a bad magic', () => {
    const buffer = encode(QUAD_VERTICES, QUAD_INDICES);
    new Uint8Array(buffer)[0] = 0x58;
    expect(() => decodeMeshPayload(buffer)).toThrow(/magic/);
  });

  it('rejects truncated payloads', () => {
    const buffer = encode(QUAD_VERTICES, QUAD_INDICES);
    expect(() => decodeMeshPayload(buffer.slice(0, 40))).toThrow(/truncated/);
  });

  it('builds an indexed geometry with normals', () => {
    const geometry = payloadToGeometry(decodeMeshPayload(encode(QUAD_VERTICES, QUAD_INDICES)));
    expect(geometry.getAttribute('position').count).toBe(4);
    expect(geometry.getIndex()?.count).toBe(6);
    const normals = geometry.getAttribute('normal');
    expect(normals.getZ(0)).toBeCloseTo(1, 5);
  });
});
