"""HTTP design service for the interactive template workflow.

Sessions hold one anatomy mesh plus the user's contour control points.
The client edits points one at a time and receives the re-projected
contour polyline after every edit; the segmented inner surface and the
generated template are computed on demand and cached until the points
or parameters change. Sessions live in memory and expire after an idle
timeout; nothing is persisted.

Mesh payloads returned to the client use a compact indexed binary
format instead of echoing STL::

    magic   8 bytes  b"GCMESH1\\n"
    counts  2 * uint32 LE   vertex count V, triangle count T
    data    V * 3 float32 LE vertices, then T * 3 uint32 LE indices
"""

import io
import struct
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .contour import ControlPointSet, build_contour, validate_loop
from .errors import ContractError, GuidecadError, StageError
from .mesh import TriangleMesh
from .pipeline import TemplateParams, generate_template
from .segmentation import closest_vertices, segment_by_contour
from .stl import load_stl, write_stl
from .tubes import DrillAxis

MESH_MAGIC = b"GCMESH1\n"


def encode_mesh_payload(mesh):
    """Serialize a mesh into the binary transfer format."""
    header = MESH_MAGIC + struct.pack("<II", len(mesh.vertices), len(mesh.triangles))
    vertices = np.ascontiguousarray(mesh.vertices, dtype="<f4")
    triangles = np.ascontiguousarray(mesh.triangles, dtype="<u4")
    return header + vertices.tobytes() + triangles.tobytes()


def decode_mesh_payload(data):
    """Inverse of :func:`encode_mesh_payload`; returns raw (vertices, triangles).

    Arrays come back as stored (float32 positions), so round-tripped
    coordinates are quantized; no topology checks are applied.
    """
    if data[: len(MESH_MAGIC)] != MESH_MAGIC:
        raise ContractError("bad mesh payload magic")
    nv, nt = struct.unpack_from("<II", data, len(MESH_MAGIC))
    off = len(MESH_MAGIC) + 8
    vertices = np.frombuffer(data, dtype="<f4", count=nv * 3, offset=off).reshape(-1, 3)
    off += nv * 12
    triangles = np.frombuffer(data, dtype="<u4", count=nt * 3, offset=off).reshape(-1, 3)
    return vertices.astype(np.float64), triangles.astype(np.int64)


@dataclass
class DesignSession:
    mesh: TriangleMesh
    points: ControlPointSet = field(default_factory=lambda: ControlPointSet(np.zeros((0, 3))))
    params: TemplateParams = field(default_factory=TemplateParams)
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_used: float = 0.0
    # Derived state, dropped whenever points or params change.
    contour: object = None
    inner_payload: bytes = None
    template: TriangleMesh = None
    timings: object = None

    def invalidate(self):
        self.contour = None
        self.inner_payload = None
        self.template = None
        self.timings = None

    @property
    def scale(self):
        lo, hi = self.mesh.bounds()
        return float(np.linalg.norm(hi - lo))


class SessionStore:
    """In-memory sessions with idle expiry, pruned on every access."""

    def __init__(self, ttl=3600.0, clock=time.monotonic):
        self.ttl = ttl
        self.clock = clock
        self._lock = threading.Lock()
        self._sessions = {}

    def create(self, mesh):
        session = DesignSession(mesh=mesh)
        session.last_used = self.clock()
        sid = uuid.uuid4().hex
        with self._lock:
            self._prune()
            self._sessions[sid] = session
        return sid, session

    def get(self, sid):
        with self._lock:
            self._prune()
            session = self._sessions.get(sid)
            if session is None:
                raise HTTPException(status_code=404, detail={"message": f"unknown session {sid}"})
            session.last_used = self.clock()
            return session

    def remove(self, sid):
        with self._lock:
            return self._sessions.pop(sid, None) is not None

    def _prune(self):
        cutoff = self.clock() - self.ttl
        for sid in [s for s, sess in self._sessions.items() if sess.last_used < cutoff]:
            del self._sessions[sid]


class PointEdit(BaseModel):
    op: str = Field(pattern="^(add|move|delete)$")
    index: int = None
    point: list[float] = None


class AxisSpec(BaseModel):
    entry: list[float]
    direction: list[float]
    inner_radius: float
    outer_radius: float
    length: float


class ParamSpec(BaseModel):
    thickness: float = 2.5
    spacing: float = None
    sampling_step: int = 10
    k_neighbors: int = 8
    tube_segments: int = 64
    weld_epsilon: float = None
    seed_point: list[float] = None


class GenerateRequest(BaseModel):
    axes: list[AxisSpec] = Field(default_factory=list)
    params: ParamSpec = None


def _fail(exc, **extra):
    detail = {"kind": type(exc).__name__, "message": str(exc)}
    detail.update(extra)
    raise HTTPException(status_code=422, detail=detail) from exc


def _coerce3(values, what):
    if values is None or len(values) != 3:
        raise HTTPException(
            status_code=422, detail={"message": f"{what} must be three numbers"}
        )
    return np.asarray(values, dtype=np.float64)


def _params_from_spec(spec):
    try:
        return TemplateParams(
            thickness=spec.thickness,
            spacing=spec.spacing,
            sampling_step=spec.sampling_step,
            k_neighbors=spec.k_neighbors,
            tube_segments=spec.tube_segments,
            weld_epsilon=spec.weld_epsilon,
            seed_point=None if spec.seed_point is None else _coerce3(spec.seed_point, "seed_point"),
        )
    except GuidecadError as err:
        _fail(err)


def _params_payload(params):
    seed = params.seed_point
    return {
        "thickness": params.thickness,
        "spacing": params.spacing,
        "sampling_step": params.sampling_step,
        "k_neighbors": params.k_neighbors,
        "tube_segments": params.tube_segments,
        "weld_epsilon": params.weld_epsilon,
        "seed_point": None if seed is None else seed.tolist(),
    }


def _mesh_summary(mesh):
    lo, hi = mesh.bounds()
    return {
        "vertex_count": len(mesh.vertices),
        "triangle_count": len(mesh.triangles),
        "bounds": {"min": lo.tolist(), "max": hi.tolist()},
    }


def _contour_of(session):
    """Current contour preview; caches the closed loop once it exists."""
    pts = session.points.points
    if len(pts) < 3:
        return {"count": len(pts), "closed": False, "points": pts.tolist()}
    if session.contour is None:
        session.contour = build_contour(pts, session.mesh, session.params.grid_spacing)
    loop = session.contour
    return {"count": len(pts), "closed": True, "points": loop.points.tolist()}


def create_app(ttl=3600.0, clock=time.monotonic):
    """Build the service app; sessions idle longer than ``ttl`` expire."""
    app = FastAPI(title="guidecad design service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(ttl=ttl, clock=clock)
    app.state.store = store

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/v1/sessions", status_code=201)
    async def create_session(request: Request):
        data = await request.body()
        if not data:
            raise HTTPException(status_code=422, detail={"message": "empty request body"})
        try:
            mesh = load_stl(io.BytesIO(data))
        except GuidecadError as err:
            _fail(err)
        sid, _ = store.create(mesh)
        return {"id": sid, **_mesh_summary(mesh)}

    @app.delete("/api/v1/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        if not store.remove(sid):
            raise HTTPException(status_code=404, detail={"message": f"unknown session {sid}"})
        return Response(status_code=204)

    @app.get("/api/v1/sessions/{sid}/points")
    def get_points(sid: str):
        session = store.get(sid)
        with session.lock:
            preview = _contour_of(session)
            preview["controls"] = session.points.points.tolist()
            return preview

    @app.post("/api/v1/sessions/{sid}/points")
    def update_points(sid: str, edit: PointEdit):
        session = store.get(sid)
        with session.lock:
            try:
                if edit.op == "add":
                    point = _coerce3(edit.point, "point")
                    session.points = session.points.add(point, index=edit.index)
                elif edit.op == "move":
                    if edit.index is None:
                        raise HTTPException(
                            status_code=422, detail={"message": "move requires an index"}
                        )
                    point = _coerce3(edit.point, "point")
                    session.points = session.points.move(edit.index, point)
                else:
                    if edit.index is None:
                        raise HTTPException(
                            status_code=422, detail={"message": "delete requires an index"}
                        )
                    session.points = session.points.delete(edit.index)
            except GuidecadError as err:
                _fail(err)
            session.invalidate()
            preview = _contour_of(session)
            preview["controls"] = session.points.points.tolist()
            return preview

    @app.put("/api/v1/sessions/{sid}/params")
    def set_params(sid: str, spec: ParamSpec):
        session = store.get(sid)
        with session.lock:
            session.params = _params_from_spec(spec)
            session.invalidate()
            return _params_payload(session.params)

    @app.get("/api/v1/sessions/{sid}/params")
    def get_params(sid: str):
        session = store.get(sid)
        with session.lock:
            return _params_payload(session.params)

    @app.get("/api/v1/sessions/{sid}/inner")
    def preview_inner(sid: str):
        session = store.get(sid)
        with session.lock:
            if session.inner_payload is None:
                if len(session.points) < 3:
                    raise HTTPException(
                        status_code=422,
                        detail={
                            "message": f"contour needs at least 3 points, got {len(session.points)}"
                        },
                    )
                params = session.params
                try:
                    _contour_of(session)
                    loop = session.contour
                    validate_loop(
                        loop,
                        session.mesh,
                        surface_tolerance=1e-6 * session.scale,
                        hole_clearance=params.thickness,
                    )
                    seed = None
                    if params.seed_point is not None:
                        seed = int(
                            closest_vertices(session.mesh, params.seed_point[None, :])[0]
                        )
                    seg = segment_by_contour(
                        session.mesh, loop.points, seed_vertex=seed, k=params.k_neighbors
                    )
                except GuidecadError as err:
                    _fail(err)
                session.inner_payload = encode_mesh_payload(seg.region)
            return Response(
                content=session.inner_payload, media_type="application/octet-stream"
            )

    @app.post("/api/v1/sessions/{sid}/generate")
    def generate(sid: str, req: GenerateRequest):
        session = store.get(sid)
        with session.lock:
            if req.params is not None:
                session.params = _params_from_spec(req.params)
                session.invalidate()
            try:
                axes = [
                    DrillAxis(
                        entry=_coerce3(spec.entry, "entry"),
                        direction=_coerce3(spec.direction, "direction"),
                        inner_radius=spec.inner_radius,
                        outer_radius=spec.outer_radius,
                        length=spec.length,
                    )
                    for spec in req.axes
                ]
                template, timings = generate_template(
                    session.mesh, session.points, session.params, axes=axes
                )
            except StageError as err:
                _fail(err, stage=err.stage)
            except GuidecadError as err:
                _fail(err)
            session.template = template
            session.timings = timings
            return {
                "timings": [
                    {"stage": name, "seconds": seconds} for name, seconds in timings.rows()
                ],
                "closed": template.is_closed(),
                "euler_characteristic": template.euler_characteristic(),
                **_mesh_summary(template),
            }

    @app.get("/api/v1/sessions/{sid}/template")
    def template_payload(sid: str):
        session = store.get(sid)
        with session.lock:
            if session.template is None:
                raise HTTPException(
                    status_code=404, detail={"message": "no template generated yet"}
                )
            return Response(
                content=encode_mesh_payload(session.template),
                media_type="application/octet-stream",
            )

    @app.get("/api/v1/sessions/{sid}/template.stl")
    def template_stl(sid: str):
        session = store.get(sid)
        with session.lock:
            if session.template is None:
                raise HTTPException(
                    status_code=404, detail={"message": "no template generated yet"}
                )
            buffer = io.BytesIO()
            write_stl(session.template, buffer)
            return Response(
                content=buffer.getvalue(),
                media_type="model/stl",
                headers={"Content-Disposition": 'attachment; filename="template.stl"'},
            )

    return app
