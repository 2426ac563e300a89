"""Design service: sessions, live contour updates, caching, downloads."""

import io
import struct

import numpy as np
import pytest
from fastapi.testclient import TestClient

from guidecad.fixtures import make_uv_hemisphere, make_uv_sphere
from guidecad.service import MESH_MAGIC, create_app, decode_mesh_payload, encode_mesh_payload
from guidecad.stl import load_stl, write_stl


def stl_bytes(mesh):
    buffer = io.BytesIO()
    write_stl(mesh, buffer)
    return buffer.getvalue()


def ring_points(radius, z, n=8):
    ang = 2.0 * np.pi * np.arange(n) / n
    return np.stack([radius * np.cos(ang), radius * np.sin(ang), np.full(n, z)], axis=1)


@pytest.fixture(scope="module")
def hemisphere_stl():
    return stl_bytes(make_uv_hemisphere(radius=1.0, n_lat=12, n_lon=32))


@pytest.fixture
def client():
    with TestClient(create_app()) as c:
        yield c


@pytest.fixture
def session(client, hemisphere_stl):
    resp = client.post(
        "/api/v1/sessions",
        content=hemisphere_stl,
        headers={"content-type": "application/octet-stream"},
    )
    assert resp.status_code == 201
    return resp.json()["id"]


def add_points(client, sid, points):
    resp = None
    for p in points:
        resp = client.post(
            f"/api/v1/sessions/{sid}/points", json={"op": "add", "point": list(p)}
        )
        assert resp.status_code == 200
    return resp.json()


def unit_scale_params(client, sid, **extra):
    """The default 2.5 mm thickness suits anatomy; shrink it for the unit fixture."""
    body = {"thickness": 0.2, "spacing": 0.05}
    body.update(extra)
    resp = client.put(f"/api/v1/sessions/{sid}/params", json=body)
    assert resp.status_code == 200


def test_upload_summary(client, hemisphere_stl):
    mesh = load_stl(io.BytesIO(hemisphere_stl))
    resp = client.post("/api/v1/sessions", content=hemisphere_stl)
    assert resp.status_code == 201
    body = resp.json()
    assert body["triangle_count"] == len(mesh.triangles)
    assert body["vertex_count"] == len(mesh.vertices)
    assert body["bounds"]["max"][2] == pytest.approx(1.0)
    assert "vertices" not in body


def test_upload_rejects_garbage(client):
    resp = client.post("/api/v1/sessions", content=b"not an stl")
    assert resp.status_code == 422
    assert "message" in resp.json()["detail"]


def test_upload_rejects_non_manifold(client):
    v = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=np.float64
    )
    t = np.array([[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    buffer = io.BytesIO()
    n = np.zeros(3)
    buffer.write(b"\0" * 80 + struct.pack("<I", len(t)))
    for tri in t:
        buffer.write(np.concatenate([n, v[tri].ravel()]).astype("<f4").tobytes())
        buffer.write(b"\0\0")
    resp = client.post("/api/v1/sessions", content=buffer.getvalue())
    assert resp.status_code == 422
    detail = resp.json()["detail"]
    assert "non-manifold edge" in detail["message"]
    assert "(0, 1)" in detail["message"]


def test_unknown_session_is_404(client):
    assert client.get("/api/v1/sessions/feed/points").status_code == 404
    assert client.post(
        "/api/v1/sessions/feed/points", json={"op": "add", "point": [0, 0, 1]}
    ).status_code == 404
    assert client.get("/api/v1/sessions/feed/inner").status_code == 404


def test_contour_closes_at_three_points(client, session):
    r = 1.0 / np.sqrt(2.0)
    pts = ring_points(r, r, n=4)

    first = add_points(client, session, pts[:1])
    assert first["closed"] is False
    assert first["count"] == 1
    assert first["points"] == first["controls"]

    second = add_points(client, session, pts[1:2])
    assert second["closed"] is False and second["count"] == 2

    third = add_points(client, session, pts[2:3])
    assert third["closed"] is True and third["count"] == 3
    assert len(third["points"]) > 3  # resampled, not just the controls

    # Every control appears on the returned loop (interpolation).
    loop = np.asarray(third["points"])
    for ctrl in np.asarray(third["controls"]):
        assert np.linalg.norm(loop - ctrl, axis=1).min() < 1e-6


def test_move_and_delete(client, session):
    r = 1.0 / np.sqrt(2.0)
    add_points(client, session, ring_points(r, r, n=4))

    moved = client.post(
        f"/api/v1/sessions/{session}/points",
        json={"op": "move", "index": 0, "point": [0.8, 0.0, 0.6]},
    ).json()
    assert moved["closed"] is True
    assert np.allclose(moved["controls"][0], [0.8, 0.0, 0.6])

    for _ in range(2):
        resp = client.post(
            f"/api/v1/sessions/{session}/points", json={"op": "delete", "index": 0}
        )
    assert resp.json()["closed"] is False
    assert resp.json()["count"] == 2


def test_bad_edits_are_422(client, session):
    bad = [
        {"op": "move", "index": 5, "point": [0, 0, 1]},
        {"op": "move", "point": [0, 0, 1]},
        {"op": "delete"},
        {"op": "add", "point": [1, 2]},
        {"op": "frobnicate", "point": [0, 0, 1]},
    ]
    for edit in bad:
        resp = client.post(f"/api/v1/sessions/{session}/points", json=edit)
        assert resp.status_code == 422, edit


def test_inner_preview_payload(client, session):
    r = 1.0 / np.sqrt(2.0)
    unit_scale_params(client, session)
    add_points(client, session, ring_points(r, r))
    resp = client.get(f"/api/v1/sessions/{session}/inner")
    assert resp.status_code == 200
    assert resp.content.startswith(MESH_MAGIC)
    vertices, triangles = decode_mesh_payload(resp.content)
    assert len(triangles) > 0
    # Polar cap: all vertices above the contour plane, on (or chordally
    # just inside) the unit sphere.
    assert vertices[:, 2].min() > r - 0.05
    assert np.allclose(np.linalg.norm(vertices, axis=1), 1.0, atol=6e-3)


def test_inner_requires_closed_contour(client, session):
    add_points(client, session, [[0.0, 0.0, 1.0]])
    resp = client.get(f"/api/v1/sessions/{session}/inner")
    assert resp.status_code == 422
    assert "3 points" in resp.json()["detail"]["message"]


def test_preview_never_stale_after_edits(client, session):
    r = 1.0 / np.sqrt(2.0)
    unit_scale_params(client, session)
    add_points(client, session, ring_points(r, r))
    before = client.get(f"/api/v1/sessions/{session}/inner").content
    cached = client.get(f"/api/v1/sessions/{session}/inner").content
    assert cached == before

    # Lift the whole contour; the cap shrinks, so the payload must change.
    high = ring_points(np.sin(np.radians(30.0)), np.cos(np.radians(30.0)))
    for i, p in enumerate(high):
        client.post(
            f"/api/v1/sessions/{session}/points",
            json={"op": "move", "index": i, "point": list(p)},
        )
        after = client.get(f"/api/v1/sessions/{session}/inner")
        assert after.status_code == 200
    small_v, small_t = decode_mesh_payload(after.content)
    _, big_t = decode_mesh_payload(before)
    assert len(small_t) < len(big_t)
    assert small_v[:, 2].min() > np.cos(np.radians(30.0)) - 0.05


def test_params_change_invalidates_preview(client, session):
    r = 1.0 / np.sqrt(2.0)
    unit_scale_params(client, session, spacing=0.1)
    add_points(client, session, ring_points(r, r))
    coarse = client.get(f"/api/v1/sessions/{session}/inner")
    assert coarse.status_code == 200

    resp = client.put(
        f"/api/v1/sessions/{session}/params", json={"thickness": 0.2, "spacing": 0.05}
    )
    assert resp.status_code == 200
    assert resp.json()["thickness"] == 0.2
    assert client.get(f"/api/v1/sessions/{session}/params").json()["spacing"] == 0.05
    # The finer contour resampling reaches the cached preview.
    fine = client.get(f"/api/v1/sessions/{session}/inner")
    assert fine.status_code == 200
    assert fine.content != coarse.content


def test_contour_near_rim_is_validation_payload(client, session):
    low = ring_points(np.sin(np.radians(85.0)), np.cos(np.radians(85.0)))
    add_points(client, session, low)
    client.put(f"/api/v1/sessions/{session}/params", json={"thickness": 0.2})
    resp = client.get(f"/api/v1/sessions/{session}/inner")
    assert resp.status_code == 422
    assert resp.json()["detail"]["kind"] == "ValidationError"


def test_generate_and_download(client, session):
    r = 1.0 / np.sqrt(2.0)
    add_points(client, session, ring_points(r, r))
    assert client.get(f"/api/v1/sessions/{session}/template.stl").status_code == 404

    resp = client.post(
        f"/api/v1/sessions/{session}/generate",
        json={
            "params": {"thickness": 0.2, "spacing": 0.05},
            "axes": [
                {
                    "entry": [0.0, 0.0, 1.0],
                    "direction": [0.0, 0.0, 1.0],
                    "inner_radius": 0.15,
                    "outer_radius": 0.3,
                    "length": 0.6,
                }
            ],
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["closed"] is True
    assert body["euler_characteristic"] == 0
    stages = [row["stage"] for row in body["timings"]]
    assert stages[-1] == "Runtime of Boolean operation(s)"
    assert len(stages) == 7

    stl = client.get(f"/api/v1/sessions/{session}/template.stl")
    assert stl.status_code == 200
    assert "attachment" in stl.headers["content-disposition"]
    template = load_stl(io.BytesIO(stl.content))
    assert template.euler_characteristic() == 0

    payload = client.get(f"/api/v1/sessions/{session}/template")
    _, preview_tris = decode_mesh_payload(payload.content)
    assert len(preview_tris) == body["triangle_count"]


def test_generate_without_axes_is_plain_shell(client, session):
    r = 1.0 / np.sqrt(2.0)
    add_points(client, session, ring_points(r, r))
    resp = client.post(
        f"/api/v1/sessions/{session}/generate",
        json={"params": {"thickness": 0.2, "spacing": 0.05}},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["euler_characteristic"] == 2
    assert len(body["timings"]) == 6


def test_invalid_tube_radii_payload(client, session):
    r = 1.0 / np.sqrt(2.0)
    add_points(client, session, ring_points(r, r))
    resp = client.post(
        f"/api/v1/sessions/{session}/generate",
        json={
            "params": {"thickness": 0.2, "spacing": 0.05},
            "axes": [
                {
                    "entry": [0, 0, 1],
                    "direction": [0, 0, 1],
                    "inner_radius": 0.4,
                    "outer_radius": 0.3,
                    "length": 0.6,
                }
            ],
        },
    )
    assert resp.status_code == 422
    assert resp.json()["detail"]["kind"] == "ContractError"


def test_failed_generate_names_stage(client, session):
    low = ring_points(np.sin(np.radians(85.0)), np.cos(np.radians(85.0)))
    add_points(client, session, low)
    resp = client.post(
        f"/api/v1/sessions/{session}/generate",
        json={"params": {"thickness": 0.2, "spacing": 0.05}},
    )
    assert resp.status_code == 422
    assert resp.json()["detail"]["stage"] == "contour validation"


def test_sessions_do_not_interact(client, hemisphere_stl):
    sphere = stl_bytes(make_uv_sphere(radius=2.0, n_lat=8, n_lon=16))
    a = client.post("/api/v1/sessions", content=hemisphere_stl).json()["id"]
    b = client.post("/api/v1/sessions", content=sphere).json()["id"]
    assert a != b
    add_points(client, a, ring_points(0.7, 0.7))
    assert client.get(f"/api/v1/sessions/{b}/points").json()["count"] == 0
    assert client.delete(f"/api/v1/sessions/{a}").status_code == 204
    assert client.get(f"/api/v1/sessions/{a}/points").status_code == 404
    assert client.get(f"/api/v1/sessions/{b}/points").status_code == 200


def test_idle_sessions_expire(hemisphere_stl):
    now = [0.0]
    app = create_app(ttl=10.0, clock=lambda: now[0])
    with TestClient(app) as client:
        sid = client.post("/api/v1/sessions", content=hemisphere_stl).json()["id"]
        now[0] = 5.0
        assert client.get(f"/api/v1/sessions/{sid}/points").status_code == 200
        now[0] = 14.0  # touched at 5.0, still inside ttl
        assert client.get(f"/api/v1/sessions/{sid}/points").status_code == 200
        now[0] = 30.0
        assert client.get(f"/api/v1/sessions/{sid}/points").status_code == 404


def test_mesh_payload_round_trip():
    mesh = make_uv_sphere(radius=3.0, n_lat=6, n_lon=9)
    vertices, triangles = decode_mesh_payload(encode_mesh_payload(mesh))
    assert np.allclose(vertices, mesh.vertices, atol=1e-6)
    assert np.array_equal(triangles, mesh.triangles)


def test_cors_headers(client, hemisphere_stl):
    resp = client.post(
        "/api/v1/sessions", content=hemisphere_stl, headers={"origin": "http://localhost:5173"}
    )
    assert resp.headers.get("access-control-allow-origin") == "*"
