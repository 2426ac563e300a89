import { ApiError, DesignApi, DrillAxis, Vec3 } from './api';
import { ContourSync } from './contour-sync';
import { payloadToGeometry } from './mesh-payload';
import { parseStl, stlToGeometry } from './stl';
import { Viewer } from './viewer';

const api = new DesignApi();
const viewer = new Viewer();

const canvas = document.getElementById('canvas') as HTMLCanvasElement;
const fileInput = document.getElementById('file') as HTMLInputElement;
const summary = document.getElementById('summary') as HTMLElement;
const status = document.getElementById('status') as HTMLElement;
const thickness = document.getElementById('thickness') as HTMLInputElement;
const spacing = document.getElementById('spacing') as HTMLInputElement;
const samplingStep = document.getElementById('sampling-step') as HTMLInputElement;
const axesInput = document.getElementById('axes') as HTMLTextAreaElement;
const previewButton = document.getElementById('preview') as HTMLButtonElement;
const generateButton = document.getElementById('generate') as HTMLButtonElement;
const downloadLink = document.getElementById('download') as HTMLAnchorElement;
const timings = document.getElementById('timings') as HTMLElement;

let sessionId: string | null = null;
let controls: number[][] = [];
let dragIndex: number | null = null;

viewer.mount(canvas);

function report(error: unknown): void {
  if (error instanceof ApiError) {
    const stage = error.detail?.stage ? `[${error.detail.stage}] ` : '';
    status.textContent = `error: ${stage}${error.message}`;
  } else {
    status.textContent = `error: ${String(error)}`;
  }
}

const sync = new ContourSync(
  (edit) => {
    if (!sessionId) throw new Error('load a mesh first');
    return api.updatePoints(sessionId, edit);
  },
  (state) => {
    controls = state.controls;
    viewer.setContour(state.points, state.closed);
    viewer.setMarkers(controls, dragIndex);
    viewer.clearPreviews();
    status.textContent = state.closed
      ? `closed contour, ${state.count} control points`
      : `open preview, ${state.count} control points`;
  },
  report,
);

fileInput.addEventListener('change', async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  try {
    const buffer = await file.arrayBuffer();
    viewer.setAnatomy(stlToGeometry(parseStl(buffer)));
    controls = [];
    const session = await api.createSession(buffer);
    sessionId = session.id;
    summary.textContent =
      `${session.triangle_count} triangles, ${session.vertex_count} vertices`;
    status.textContent = 'click the surface to place contour points';
    downloadLink.hidden = true;
    timings.textContent = '';
  } catch (error) {
    report(error);
  }
});

function eventNdc(event: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * 2 - 1,
    y: -(((event.clientY - rect.top) / rect.height) * 2 - 1),
  };
}

canvas.addEventListener('pointerdown', (event) => {
  if (!sessionId || event.button !== 0) return;
  const { x, y } = eventNdc(event);
  const rect = canvas.getBoundingClientRect();
  dragIndex = viewer.pickMarkerIndex(x, y, rect.width, rect.height);
  if (dragIndex !== null) {
    viewer.setRotateEnabled(false);
    viewer.setMarkers(controls, dragIndex);
  }
});

canvas.addEventListener('pointermove', (event) => {
  if (dragIndex === null || !sessionId) return;
  const { x, y } = eventNdc(event);
  const hit = viewer.pickSurface(x, y);
  if (!hit) return;
  controls[dragIndex] = [hit.x, hit.y, hit.z];
  viewer.setMarkers(controls, dragIndex);
  sync.submit({ op: 'move', index: dragIndex, point: [hit.x, hit.y, hit.z] });
});

canvas.addEventListener('pointerup', (event) => {
  if (!sessionId) return;
  if (dragIndex !== null) {
    dragIndex = null;
    viewer.setRotateEnabled(true);
    viewer.setMarkers(controls, null);
    return;
  }
  if (event.button !== 0) return;
  const { x, y } = eventNdc(event);
  const hit = viewer.pickSurface(x, y);
  if (!hit) return; // off-mesh clicks are a no-op
  const point: Vec3 = [hit.x, hit.y, hit.z];
  controls.push(point);
  viewer.setMarkers(controls, null);
  sync.submit({ op: 'add', point });
});

canvas.addEventListener('dblclick', (event) => {
  if (!sessionId) return;
  const { x, y } = eventNdc(event);
  const rect = canvas.getBoundingClientRect();
  const index = viewer.pickMarkerIndex(x, y, rect.width, rect.height);
  if (index === null) return;
  controls.splice(index, 1);
  viewer.setMarkers(controls, null);
  sync.submit({ op: 'delete', index });
});

async function pushParams(): Promise<void> {
  if (!sessionId) return;
  try {
    await api.setParams(sessionId, {
      thickness: Number(thickness.value),
      spacing: spacing.value === '' ? null : Number(spacing.value),
      sampling_step: Number(samplingStep.value),
    });
    viewer.clearPreviews();
    status.textContent = 'parameters updated';
  } catch (error) {
    report(error);
  }
}

for (const input of [thickness, spacing, samplingStep]) {
  input.addEventListener('change', pushParams);
}

function parseAxes(text: string): DrillAxis[] {
  const axes: DrillAxis[] = [];
  for (const line of text.split('\n')) {
    const bare = line.split('#')[0].trim();
    if (!bare) continue;
    const numbers = bare.split(/\s+/).map(Number);
    if (numbers.length !== 9 || numbers.some((n) => !Number.isFinite(n))) {
      throw new Error(`axis line needs 9 numbers: "${bare}"`);
    }
    axes.push({
      entry: [numbers[0], numbers[1], numbers[2]],
      direction: [numbers[3], numbers[4], numbers[5]],
      inner_radius: numbers[6],
      outer_radius: numbers[7],
      length: numbers[8],
    });
  }
  return axes;
}

previewButton.addEventListener('click', async () => {
  if (!sessionId) return;
  try {
    status.textContent = 'segmenting...';
    viewer.setInner(payloadToGeometry(await api.previewInner(sessionId)));
    status.textContent = 'inner surface ready';
  } catch (error) {
    report(error);
  }
});

generateButton.addEventListener('click', async () => {
  if (!sessionId) return;
  try {
    const axes = parseAxes(axesInput.value);
    status.textContent = 'generating...';
    const result = await api.generate(sessionId, { axes });
    viewer.setTemplate(payloadToGeometry(await api.templatePayload(sessionId)));
    timings.textContent = result.timings
      .map((row) => `${row.stage}\t${row.seconds.toFixed(3)}`)
      .join('\n');
    downloadLink.href = api.templateStlUrl(sessionId);
    downloadLink.hidden = false;
    status.textContent = `template ready: ${result.triangle_count} triangles, ` +
      `euler ${result.euler_characteristic}`;
  } catch (error) {
    report(error);
  }
});
