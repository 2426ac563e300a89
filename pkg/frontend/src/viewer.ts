import {
  AmbientLight,
  BufferGeometry,
  Color,
  DirectionalLight,
  DoubleSide,
  Group,
  Line,
  LineBasicMaterial,
  LineLoop,
  Mesh,
  MeshLambertMaterial,
  PerspectiveCamera,
  Scene,
  SphereGeometry,
  Vector3,
  WebGLRenderer,
} from 'three';
import { OrbitControls } from 'three/examples/jsm/controls/OrbitControls.js';
import { pickMarker, pickSurfacePoint } from './picking';

const ANATOMY = new MeshLambertMaterial({ color: 0xd8cfc0, side: DoubleSide });
const INNER = new MeshLambertMaterial({ color: 0x4f9bd9, side: DoubleSide, transparent: true, opacity: 0.85 });
const TEMPLATE = new MeshLambertMaterial({ color: 0x64c27d, side: DoubleSide });
const MARKER = new MeshLambertMaterial({ color: 0xe04f4f });
const MARKER_ACTIVE = new MeshLambertMaterial({ color: 0xffb04f });
const CONTOUR = new LineBasicMaterial({ color: 0xe04f4f });

/** Scene wrapper: anatomy mesh, contour overlay, previews, and picking. */
export class Viewer {
  readonly scene = new Scene();
  readonly camera = new PerspectiveCamera(45, 1, 0.01, 5000);

  private renderer: WebGLRenderer | null = null;
  private controls: OrbitControls | null = null;
  private anatomy: Mesh | null = null;
  private inner: Mesh | null = null;
  private template: Mesh | null = null;
  private contour: Line | null = null;
  private markers = new Group();
  private markerRadius = 1;

  constructor() {
    this.scene.background = new Color(0x1c1f24);
    this.scene.add(new AmbientLight(0xffffff, 0.45));
    const key = new DirectionalLight(0xffffff, 1.1);
    key.position.set(1, 1, 2);
    this.scene.add(key);
    this.scene.add(this.markers);
    this.camera.position.set(0, -30, 20);
    this.camera.up.set(0, 0, 1);
  }

  mount(canvas: HTMLCanvasElement): void {
    this.renderer = new WebGLRenderer({ canvas, antialias: true });
    this.controls = new OrbitControls(this.camera, canvas);
    const render = () => {
      requestAnimationFrame(render);
      this.controls?.update();
      this.resize(canvas);
      this.renderer?.render(this.scene, this.camera);
    };
    render();
  }

  private resize(canvas: HTMLCanvasElement): void {
    const width = canvas.clientWidth;
    const height = canvas.clientHeight;
    if (canvas.width !== width || canvas.height !== height) {
      this.renderer?.setSize(width, height, false);
      this.camera.aspect = width / Math.max(1, height);
      this.camera.updateProjectionMatrix();
    }
  }

  setAnatomy(geometry: BufferGeometry): void {
    if (this.anatomy) this.scene.remove(this.anatomy);
    this.anatomy = new Mesh(geometry, ANATOMY);
    this.scene.add(this.anatomy);

    geometry.computeBoundingSphere();
    const sphere = geometry.boundingSphere;
    if (sphere) {
      this.markerRadius = sphere.radius / 60;
      this.controls?.target.copy(sphere.center);
      const distance = sphere.radius * 2.8;
      this.camera.position
        .copy(sphere.center)
        .add(new Vector3(0, -distance, distance * 0.7));
      this.camera.lookAt(sphere.center);
    }
    this.clearPreviews();
    this.setContour([], false);
    this.setMarkers([]);
  }

  setInner(geometry: BufferGeometry | null): void {
    if (this.inner) this.scene.remove(this.inner);
    this.inner = geometry ? new Mesh(geometry, INNER) : null;
    if (this.inner) this.scene.add(this.inner);
  }

  setTemplate(geometry: BufferGeometry | null): void {
    if (this.template) this.scene.remove(this.template);
    this.template = geometry ? new Mesh(geometry, TEMPLATE) : null;
    if (this.template) this.scene.add(this.template);
  }

  clearPreviews(): void {
    this.setInner(null);
    this.setTemplate(null);
  }

  setContour(points: number[][], closed: boolean): void {
    if (this.contour) this.scene.remove(this.contour);
    this.contour = null;
    if (points.length < 2) return;
    const geometry = new BufferGeometry().setFromPoints(
      points.map(([x, y, z]) => new Vector3(x, y, z)),
    );
    this.contour = closed ? new LineLoop(geometry, CONTOUR) : new Line(geometry, CONTOUR);
    this.scene.add(this.contour);
  }

  setMarkers(controls: number[][], activeIndex: number | null = null): void {
    this.markers.clear();
    controls.forEach(([x, y, z], index) => {
      const ball = new Mesh(
        new SphereGeometry(this.markerRadius, 12, 8),
        index === activeIndex ? MARKER_ACTIVE : MARKER,
      );
      ball.position.set(x, y, z);
      this.markers.add(ball);
    });
  }

  markerPositions(): Vector3[] {
    return this.markers.children.map((child) => child.position.clone());
  }

  pickSurface(x: number, y: number): Vector3 | null {
    return this.anatomy ? pickSurfacePoint(this.camera, x, y, this.anatomy) : null;
  }

  pickMarkerIndex(x: number, y: number, width: number, height: number): number | null {
    return pickMarker(this.camera, x, y, this.markerPositions(), width, height);
  }

  setRotateEnabled(enabled: boolean): void {
    if (this.controls) this.controls.enabled = enabled;
  }
}
