import { describe, expect, it } from 'vitest';
import {
  DoubleSide,
  Mesh,
  MeshStandardMaterial,
  PerspectiveCamera,
  SphereGeometry,
  Vector3,
} from 'three';
import { pickMarker, pickSurfacePoint } from '../src/picking';

function frontCamera(): PerspectiveCamera {
  const camera = new PerspectiveCamera(45, 1, 0.01, 100);
  camera.position.set(0, 0, 5);
  camera.lookAt(0, 0, 0);
  camera.updateMatrixWorld(true);
  camera.updateProjectionMatrix();
  return camera;
}

function unitSphere(): Mesh {
  const mesh = new Mesh(
    new SphereGeometry(1, 64, 32),
    new MeshStandardMaterial({ side: DoubleSide }),
  );
  mesh.updateMatrixWorld(true);
  return mesh;
}

describe('pickSurfacePoint', () => {
  it('returns the nearest surface hit, not the back face', () => {
    const point = pickSurfacePoint(frontCamera(), 0, 0, unitSphere());
    expect(point).not.toBeNull();
    expect(point!.z).toBeCloseTo(1, 2);
    expect(Math.hypot(point!.x, point!.y)).toBeLessThan(1e-6);
  });

  it('returns null when the ray misses', () => {
    expect(pickSurfacePoint(frontCamera(), 0.9, 0.9, unitSphere())).toBeNull();
  });
});

describe('pickMarker', () => {
  const markers = [new Vector3(0, 0, 1), new Vector3(0.5, 0.5, 0.5)];

  function ndcOf(camera: PerspectiveCamera, marker: Vector3): [number, number] {
    const projected = marker.clone().project(camera);
    return [projected.x, projected.y];
  }

  it('finds the marker under the cursor', () => {
    const camera = frontCamera();
    const [x, y] = ndcOf(camera, markers[1]);
    expect(pickMarker(camera, x, y, markers, 800, 800)).toBe(1);
  });

  it('honours the pixel radius', () => {
    const camera = frontCamera();
    const [x, y] = ndcOf(camera, markers[0]);
    const offset = (2 * 40) / 800;
    expect(pickMarker(camera, x + offset, y, markers, 800, 800, 12)).toBeNull();
    expect(pickMarker(camera, x + offset, y, markers, 800, 800, 60)).toBe(0);
  });

  it('returns null far from every marker', () => {
    expect(pickMarker(frontCamera(), -0.95, -0.95, markers, 800, 800)).toBeNull();
  });
});
