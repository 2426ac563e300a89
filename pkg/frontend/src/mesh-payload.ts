import { BufferAttribute, BufferGeometry } from 'three';

const MAGIC = 'GCMESH1\n';
const HEADER_BYTES = MAGIC.length + 8;

export interface MeshPayload {
  vertices: Float32Array;
  indices: Uint32Array;
}

/** Decode the service's binary mesh transfer format. */
export function decodeMeshPayload(buffer: ArrayBuffer): MeshPayload {
  const bytes = new Uint8Array(buffer);
  for (let i = 0; i < MAGIC.length; i++) {
    if (bytes[i] !== MAGIC.charCodeAt(i)) {
      throw new Error('bad mesh payload magic');
    }
  }
  const view = new DataView(buffer);
  const vertexCount = view.getUint32(MAGIC.length, true);
  const triangleCount = view.getUint32(MAGIC.length + 4, true);
  const need = HEADER_BYTES + vertexCount * 12 + triangleCount * 12;
  if (buffer.byteLength < need) {
    throw new Error(`mesh payload truncated: ${buffer.byteLength} bytes, need ${need}`);
  }
  // Header is 16 bytes, so both views land on 4-byte boundaries.
  const vertices = new Float32Array(buffer, HEADER_BYTES, vertexCount * 3);
  const indices = new Uint32Array(buffer, HEADER_BYTES + vertexCount * 12, triangleCount * 3);
  return { vertices, indices };
}

export function payloadToGeometry(payload: MeshPayload): BufferGeometry {
  const geometry = new BufferGeometry();
  geometry.setAttribute('position', new BufferAttribute(payload.vertices, 3));
  geometry.setIndex(new BufferAttribute(payload.indices, 1));
  geometry.computeVertexNormals();
  return geometry;
}
