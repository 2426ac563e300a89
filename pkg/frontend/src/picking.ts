import { Camera, Mesh, Raycaster, Vector2, Vector3 } from 'three';

const raycaster = new Raycaster();
const ndc = new Vector2();

/**
 * Cast a ray from the camera through normalized device coordinates and
 * return the front-most hit on the mesh, or null for a miss.
 */
export function pickSurfacePoint(camera: Camera, x: number, y: number, mesh: Mesh): Vector3 | null {
  ndc.set(x, y);
  raycaster.setFromCamera(ndc, camera);
  const hits = raycaster.intersectObject(mesh, false);
  return hits.length > 0 ? hits[0].point.clone() : null;
}

/**
 * Index of the marker nearest the click in screen space, or null when
 * none is within the pixel radius. Coordinates are NDC like the pick.
 */
export function pickMarker(
  camera: Camera,
  x: number,
  y: number,
  markers: Vector3[],
  width: number,
  height: number,
  pixelRadius = 12,
): number | null {
  const clickX = ((x + 1) / 2) * width;
  const clickY = ((1 - y) / 2) * height;
  let best: number | null = null;
  let bestDistance = pixelRadius;
  markers.forEach((marker, index) => {
    const projected = marker.clone().project(camera);
    if (projected.z > 1) return; // behind the camera
    const sx = ((projected.x + 1) / 2) * width;
    const sy = ((1 - projected.y) / 2) * height;
    const distance = Math.hypot(sx - clickX, sy - clickY);
    if (distance <= bestDistance) {
      bestDistance = distance;
      best = index;
    }
  });
  return best;
}
