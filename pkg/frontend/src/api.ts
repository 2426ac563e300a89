import { decodeMeshPayload, MeshPayload } from './mesh-payload';

export type Vec3 = [number, number, number];

export interface MeshSummary {
  vertex_count: number;
  triangle_count: number;
  bounds: { min: number[]; max: number[] };
}

export interface SessionSummary extends MeshSummary {
  id: string;
}

export interface PointEdit {
  op: 'add' | 'move' | 'delete';
  index?: number;
  point?: Vec3;
}

export interface ContourState {
  count: number;
  closed: boolean;
  points: number[][];
  controls: number[][];
}

export interface TemplateParams {
  thickness?: number;
  spacing?: number | null;
  sampling_step?: number;
  k_neighbors?: number;
  tube_segments?: number;
  weld_epsilon?: number | null;
  seed_point?: number[] | null;
}

export interface DrillAxis {
  entry: Vec3;
  direction: Vec3;
  inner_radius: number;
  outer_radius: number;
  length: number;
}

export interface StageTiming {
  stage: string;
  seconds: number;
}

export interface GenerateResult extends MeshSummary {
  timings: StageTiming[];
  closed: boolean;
  euler_characteristic: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: { message?: string; kind?: string; stage?: string } | null,
  ) {
    super(detail?.message ?? `request failed with status ${status}`);
  }
}

async function errorDetail(response: Response): Promise<ApiError> {
  try {
    const body = await response.json();
    return new ApiError(response.status, body.detail ?? body);
  } catch {
    return new ApiError(response.status, null);
  }
}

export class DesignApi {
  constructor(private readonly base: string = '/api/v1') {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await fetch(`${this.base}${path}`, init);
    if (!response.ok) throw await errorDetail(response);
    return response;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    return (await this.request(path, init)).json() as Promise<T>;
  }

  createSession(stl: ArrayBuffer | Uint8Array): Promise<SessionSummary> {
    return this.json('/sessions', {
      method: 'POST',
      headers: { 'content-type': 'application/octet-stream' },
      body: stl as BodyInit,
    });
  }

  updatePoints(id: string, edit: PointEdit): Promise<ContourState> {
    return this.json(`/sessions/${id}/points`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(edit),
    });
  }

  getContour(id: string): Promise<ContourState> {
    return this.json(`/sessions/${id}/points`);
  }

  setParams(id: string, params: TemplateParams): Promise<TemplateParams> {
    return this.json(`/sessions/${id}/params`, {
      method: 'PUT',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(params),
    });
  }

  async previewInner(id: string): Promise<MeshPayload> {
    const response = await this.request(`/sessions/${id}/inner`);
    return decodeMeshPayload(await response.arrayBuffer());
  }

  generate(
    id: string,
    body: { axes?: DrillAxis[]; params?: TemplateParams },
  ): Promise<GenerateResult> {
    return this.json(`/sessions/${id}/generate`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  async templatePayload(id: string): Promise<MeshPayload> {
    const response = await this.request(`/sessions/${id}/template`);
    return decodeMeshPayload(await response.arrayBuffer());
  }

  async downloadTemplateStl(id: string): Promise<ArrayBuffer> {
    const response = await this.request(`/sessions/${id}/template.stl`);
    return response.arrayBuffer();
  }

  templateStlUrl(id: string): string {
    return `${this.base}/sessions/${id}/template.stl`;
  }
}
