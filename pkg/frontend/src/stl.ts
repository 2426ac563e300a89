import { BufferAttribute, BufferGeometry } from 'three';

export interface StlMesh {
  /** Non-indexed triangle soup, 9 floats per triangle. */
  positions: Float32Array;
  triangleCount: number;
}

function isAscii(buffer: ArrayBuffer): boolean {
  const bytes = new Uint8Array(buffer, 0, Math.min(buffer.byteLength, 512));
  const head = new TextDecoder().decode(bytes);
  if (!head.trimStart().toLowerCase().startsWith('solid')) return false;
  // Binary files may also start with "solid"; trust the size check.
  if (buffer.byteLength >= 84) {
    const declared = new DataView(buffer).getUint32(80, true);
    if (buffer.byteLength === 84 + declared * 50) return false;
  }
  return head.includes('facet');
}

function parseAscii(text: string): StlMesh {
  const coords: number[] = [];
  const vertexLine = /vertex\s+([^\s]+)\s+([^\s]+)\s+([^\s]+)/g;
  let match: RegExpExecArray | null;
  while ((match = vertexLine.exec(text)) !== null) {
    coords.push(Number(match[1]), Number(match[2]), Number(match[3]));
  }
  if (coords.length === 0 || coords.length % 9 !== 0) {
    throw new Error(`ASCII STL has ${coords.length / 3} vertices, not a multiple of 3`);
  }
  if (coords.some((c) => !Number.isFinite(c))) {
    throw new Error('ASCII STL contains a non-numeric coordinate');
  }
  return { positions: new Float32Array(coords), triangleCount: coords.length / 9 };
}

function parseBinary(buffer: ArrayBuffer): StlMesh {
  if (buffer.byteLength < 84) throw new Error('binary STL shorter than its header');
  const view = new DataView(buffer);
  const count = view.getUint32(80, true);
  if (buffer.byteLength < 84 + count * 50) {
    throw new Error(`binary STL truncated: ${count} triangles declared`);
  }
  const positions = new Float32Array(count * 9);
  for (let t = 0; t < count; t++) {
    const base = 84 + t * 50 + 12; // skip the normal
    for (let c = 0; c < 9; c++) {
      positions[t * 9 + c] = view.getFloat32(base + c * 4, true);
    }
  }
  return { positions, triangleCount: count };
}

export function parseStl(buffer: ArrayBuffer): StlMesh {
  return isAscii(buffer) ? parseAscii(new TextDecoder().decode(buffer)) : parseBinary(buffer);
}

export function stlToGeometry(mesh: StlMesh): BufferGeometry {
  const geometry = new BufferGeometry();
  geometry.setAttribute('position', new BufferAttribute(mesh.positions, 3));
  geometry.computeVertexNormals();
  return geometry;
}
