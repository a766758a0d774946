"""HTTP API behind the interactive viewer.

Sessions are in-memory and expire after an idle TTL.  Each session holds an
immutable source image plus the current (model, scales) state; previews are
pure functions of that state, cached per composition, and never rendered from
a half-updated model (state swaps happen under the session lock).
"""

from __future__ import annotations

import secrets
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from fastapi import Body, FastAPI, File, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from . import __version__
from .color import mean_delta_e00, psnr
from .lowrank import LorLutModel, component_curves, compose_lut
from .luts import apply_lut
from .model_io import quantize_u8, read_image, read_model, write_cube, write_image
from .optim import FitConfig, fit_image_pair

SCALE_LIMIT = 4.0
_PREVIEW_CACHE_CAP = 32

_AXIS_TO_DIM = {"r": 0, "g": 1, "b": 2}


@dataclass
class Session:
    id: str
    source: np.ndarray
    model: LorLutModel
    scales: np.ndarray
    created: float
    last_access: float
    lock: threading.Lock = field(default_factory=threading.Lock)
    fit_running: bool = False
    model_version: int = 0
    preview_cache: OrderedDict = field(default_factory=OrderedDict)


class SessionStore:
    """Thread-safe session map with idle-TTL eviction."""

    def __init__(self, max_sessions: int, ttl_s: float) -> None:
        self.max_sessions = max_sessions
        self.ttl_s = ttl_s
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _evict_expired(self, now: float) -> None:
        dead = [
            sid
            for sid, s in self._sessions.items()
            if now - s.last_access > self.ttl_s
        ]
        for sid in dead:
            del self._sessions[sid]

    def create(self, source: np.ndarray, model: LorLutModel) -> Session:
        now = time.monotonic()
        with self._lock:
            self._evict_expired(now)
            if len(self._sessions) >= self.max_sessions:
                raise HTTPException(429, "session limit reached")
            sid = secrets.token_hex(16)
            session = Session(
                id=sid,
                source=source,
                model=model,
                scales=np.ones(model.rank),
                created=now,
                last_access=now,
            )
            self._sessions[sid] = session
            return session

    def get(self, sid: str) -> Session:
        now = time.monotonic()
        with self._lock:
            self._evict_expired(now)
            session = self._sessions.get(sid)
            if session is None:
                raise HTTPException(404, "unknown or expired session")
            session.last_access = now
            return session

    def count(self) -> int:
        with self._lock:
            self._evict_expired(time.monotonic())
            return len(self._sessions)


def _render_preview(session: Session) -> bytes:
    with session.lock:
        key = (session.model_version, tuple(session.scales))
        cached = session.preview_cache.get(key)
        if cached is not None:
            session.preview_cache.move_to_end(key)
            return cached
        model, scales = session.model, session.scales.copy()
    lut = compose_lut(model, scales)
    png = write_image(apply_lut(lut, session.source), format="png")
    with session.lock:
        session.preview_cache[key] = png
        while len(session.preview_cache) > _PREVIEW_CACHE_CAP:
            session.preview_cache.popitem(last=False)
    return png


def _snapshot(session: Session) -> tuple[LorLutModel, np.ndarray]:
    with session.lock:
        return session.model, session.scales.copy()


def _model_meta(session: Session) -> dict:
    model = session.model
    return {
        "id": session.id,
        "G": model.grid_size,
        "K": model.num_bases,
        "R": model.rank,
        "scales": [float(s) for s in session.scales],
    }


def create_app(
    max_sessions: int = 16,
    ttl_s: float = 1800.0,
    fit_step_cap: int = 2000,
    max_upload_bytes: int = 32 * 1024 * 1024,
    default_model: LorLutModel | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="lorlut", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(max_sessions=max_sessions, ttl_s=ttl_s)
    app.state.store = store

    def _default_model() -> LorLutModel:
        if default_model is not None:
            return default_model
        return LorLutModel.identity(33)

    async def _read_upload(upload: UploadFile) -> bytes:
        data = await upload.read()
        if len(data) > max_upload_bytes:
            raise HTTPException(413, "payload too large")
        return data

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/v1/sessions")
    async def create_session(
        image: UploadFile = File(...),
        model: UploadFile | None = File(None),
    ) -> JSONResponse:
        image_bytes = await _read_upload(image)
        try:
            source = read_image(image_bytes)
        except ValueError as exc:
            raise HTTPException(400, f"undecodable image: {exc}") from exc
        session_model = _default_model()
        if model is not None:
            model_bytes = await _read_upload(model)
            try:
                session_model, _ = read_model(model_bytes.decode("utf-8"))
            except (ValueError, UnicodeDecodeError) as exc:
                raise HTTPException(400, f"undecodable model: {exc}") from exc
        session = store.create(source, session_model)
        return JSONResponse(_model_meta(session))

    @app.put("/v1/sessions/{sid}/scales")
    def put_scales(sid: str, scales: list[float] = Body(...)) -> dict:
        session = store.get(sid)
        with session.lock:
            rank = session.model.rank
            if len(scales) != rank:
                raise HTTPException(422, f"expected {rank} scales, got {len(scales)}")
            values = np.asarray(scales, dtype=np.float64)
            if not np.all(np.isfinite(values)):
                raise HTTPException(422, "scales must be finite")
            if np.any(np.abs(values) > SCALE_LIMIT):
                raise HTTPException(
                    422, f"scales must lie within [-{SCALE_LIMIT}, {SCALE_LIMIT}]"
                )
            session.scales = values
            return {"scales": [float(s) for s in session.scales]}

    @app.get("/v1/sessions/{sid}/preview")
    def preview(sid: str) -> Response:
        session = store.get(sid)
        return Response(content=_render_preview(session), media_type="image/png")

    @app.get("/v1/sessions/{sid}/metrics")
    def metrics(sid: str) -> dict:
        # Measured on the 8-bit images the viewer actually displays, so an
        # identity model reports an infinite PSNR (sent as null).
        session = store.get(sid)
        model, scales = _snapshot(session)
        rendered = apply_lut(compose_lut(model, scales), session.source)
        shown = quantize_u8(rendered) / 255.0
        source = quantize_u8(session.source) / 255.0
        value = psnr(shown, source)
        return {
            "psnr": None if value == float("inf") else value,
            "mean_de00": mean_delta_e00(shown, source),
        }

    @app.get("/v1/sessions/{sid}/factors")
    def factors(sid: str) -> dict:
        session = store.get(sid)
        model, scales = _snapshot(session)
        components = []
        for r in range(model.rank):
            curves = component_curves(model.factors, r)
            components.append(
                {
                    "index": r,
                    "u": curves["u"].tolist(),
                    "v": curves["v"].tolist(),
                    "w": curves["w"].tolist(),
                    "c": curves["c"].tolist(),
                    "magnitude": curves["magnitude"],
                    "scale": float(scales[r]),
                }
            )
        return {"grid": model.grid_size, "rank": model.rank, "components": components}

    @app.get("/v1/sessions/{sid}/lut/slice")
    def lut_slice(sid: str, axis: str, index: int) -> dict:
        session = store.get(sid)
        dim = _AXIS_TO_DIM.get(axis)
        if dim is None:
            raise HTTPException(422, f"axis must be one of r, g, b, got {axis!r}")
        model, scales = _snapshot(session)
        g = model.grid_size
        if not 0 <= index < g:
            raise HTTPException(422, f"index must lie in [0, {g}), got {index}")
        lut = np.clip(compose_lut(model, scales), 0.0, 1.0)
        plane = np.take(lut, index, axis=dim)
        return {
            "axis": axis,
            "index": index,
            "grid": g,
            "rows": plane.tolist(),
        }

    @app.post("/v1/sessions/{sid}/fit")
    async def fit(
        sid: str,
        target: UploadFile = File(...),
        steps: int = Form(200),
        rank: int = Form(8),
        grid: int = Form(33),
        seed: int = Form(0),
        lr: float = Form(5e-3),
    ) -> dict:
        session = store.get(sid)
        target_bytes = await _read_upload(target)
        try:
            target_img = read_image(target_bytes)
        except ValueError as exc:
            raise HTTPException(400, f"undecodable image: {exc}") from exc
        if target_img.shape != session.source.shape:
            raise HTTPException(
                422,
                f"target dimensions {target_img.shape[:2]} do not match "
                f"source {session.source.shape[:2]}",
            )
        with session.lock:
            if session.fit_running:
                raise HTTPException(409, "a fit is already running for this session")
            session.fit_running = True
        try:
            try:
                config = FitConfig(
                    steps=min(max(steps, 1), fit_step_cap),
                    base_lr=lr,
                    rank=rank,
                    grid_size=grid,
                    rng_seed=seed,
                )
            except ValueError as exc:
                raise HTTPException(422, str(exc)) from exc
            try:
                model, report = fit_image_pair(session.source, target_img, config)
            except RuntimeError as exc:
                raise HTTPException(422, f"fit failed: {exc}") from exc
            with session.lock:
                session.model = model
                session.scales = np.ones(model.rank)
                session.model_version += 1
                session.preview_cache.clear()
        finally:
            with session.lock:
                session.fit_running = False
        return {
            **_model_meta(session),
            "report": {
                "steps": report.steps,
                "duration_s": report.duration_s,
                "final_loss": report.final_loss,
                "psnr": None if report.psnr == float("inf") else report.psnr,
                "ssim": report.ssim,
                "mean_de00": report.mean_de00,
            },
        }

    @app.get("/v1/sessions/{sid}/export.cube")
    def export_cube(sid: str) -> Response:
        session = store.get(sid)
        model, scales = _snapshot(session)
        text = write_cube(compose_lut(model, scales))
        return Response(
            content=text,
            media_type="text/plain; charset=utf-8",
            headers={"Content-Disposition": 'attachment; filename="lorlut.cube"'},
        )

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="viewer")

    return app
