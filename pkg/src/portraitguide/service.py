"""Stateful session service for the two-stage drawing workflow.

Sessions hold the active sketch and stage. Global-stage edits trigger a
retrieval query and a shadow re-blend; switching to the local stage
snapshots the sketch and generates guidance candidates; switching back
restores the snapshot (the rewind tool). Sketches persist to disk after
every mutation so a restart loses nothing.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import threading
import time
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import strokes as sk
from .errors import DocumentError, ValidationError
from .galif import load_codebook
from .images import load_binary, png_bytes
from .index import Index, RetrievalResult, load_index, query
from .maskdata import load_label_mask, load_manifest
from .shadow import blend_shadow, shadow_png
from .synth import (
    STYLE_SKETCH_LINES,
    GuidanceCandidate,
    generate_candidates,
    make_external_synthesizer,
    register_synthesizer,
)

log = logging.getLogger(__name__)

API_VERSION = 1
STAGE_GLOBAL = "global"
STAGE_LOCAL = "local"

ENV_OVERRIDES = {
    "DUALFACE_INDEX": "index_path",
    "DUALFACE_CODEBOOK": "codebook_path",
    "DUALFACE_MANIFEST": "manifest_path",
    "DUALFACE_LISTEN": "listen",
    "DUALFACE_SESSION_DIR": "session_dir",
}


class SessionNotFound(KeyError):
    pass


class StageConflict(RuntimeError):
    pass


@dataclass
class ServiceConfig:
    index_path: str
    codebook_path: str
    manifest_path: str
    top_n: int = 3
    synth_impl: str = "region-composite"
    synth_command: str | None = None
    listen: str = "127.0.0.1:8750"
    session_dir: str | None = None
    session_ttl: float = 3600.0
    ui_dir: str | None = None
    similarity_weights: bool = False

    def __post_init__(self):
        if self.top_n < 1:
            raise ValidationError("top_n must be >= 1")

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen.rpartition(":")
        return host or "127.0.0.1", int(port)


def load_config(path=None, env=os.environ) -> ServiceConfig:
    doc = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise DocumentError("config", "expected an object")
        doc.pop("version", None)
    fields = {
        "index": "index_path",
        "codebook": "codebook_path",
        "manifest": "manifest_path",
        "top_n": "top_n",
        "listen": "listen",
        "session_dir": "session_dir",
        "session_ttl": "session_ttl",
        "ui_dir": "ui_dir",
        "similarity_weights": "similarity_weights",
    }
    kwargs = {}
    for key, attr in fields.items():
        if key in doc:
            kwargs[attr] = doc[key]
    synth = doc.get("synth", {})
    if not isinstance(synth, dict):
        raise DocumentError("config.synth", "expected an object")
    if "impl" in synth:
        kwargs["synth_impl"] = synth["impl"]
    if "command" in synth:
        kwargs["synth_command"] = synth["command"]
    for var, attr in ENV_OVERRIDES.items():
        if env.get(var):
            kwargs[attr] = env[var]
    for required in ("index_path", "codebook_path", "manifest_path"):
        if required not in kwargs:
            raise ValidationError(f"config is missing {required!r} (file key or env override)")
    return ServiceConfig(**kwargs)


@dataclass
class Session:
    session_id: str
    sketch: sk.StrokeSet
    stage: str = STAGE_GLOBAL
    saved_global_sketch: sk.StrokeSet | None = None
    candidates: list[GuidanceCandidate] | None = None
    selected_candidate: str | None = None
    shadow: np.ndarray | None = None
    last_results: list[RetrievalResult] = field(default_factory=list)
    last_retrieval_ms: float = 0.0
    generating: bool = False
    last_access: float = field(default_factory=time.monotonic)
    lock: threading.RLock = field(default_factory=threading.RLock)


class GuidanceService:
    """Engine facade the HTTP layer delegates to; usable headless too."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        codebook = load_codebook(config.codebook_path)
        self.index: Index = load_index(config.index_path, codebook)
        self.manifest = load_manifest(config.manifest_path)
        self.canvas_size = self.index.canvas_size
        self._sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()
        self._contour_cache: OrderedDict[str, np.ndarray] = OrderedDict()
        self._mask_cache: OrderedDict[str, object] = OrderedDict()
        if config.synth_command:
            register_synthesizer("external", make_external_synthesizer(config.synth_command))
        self.session_dir = Path(config.session_dir) if config.session_dir else None
        if self.session_dir:
            self.session_dir.mkdir(parents=True, exist_ok=True)
            self._restore_sessions()

    # -- session plumbing -------------------------------------------------

    def _get(self, session_id: str) -> Session:
        self._evict_expired()
        with self._sessions_lock:
            try:
                session = self._sessions[session_id]
            except KeyError:
                raise SessionNotFound(session_id)
        session.last_access = time.monotonic()
        return session

    def _evict_expired(self):
        ttl = self.config.session_ttl
        if ttl <= 0:
            return
        now = time.monotonic()
        with self._sessions_lock:
            dead = [sid for sid, s in self._sessions.items() if now - s.last_access > ttl]
            for sid in dead:
                del self._sessions[sid]
                if self.session_dir:
                    (self.session_dir / f"{sid}.json").unlink(missing_ok=True)

    def create_session(self, sketch_doc: dict | None = None) -> Session:
        w, h = self.canvas_size
        sketch = (
            sk.load_sketch(sketch_doc)
            if sketch_doc is not None
            else sk.StrokeSet(canvas_size=(w, h))
        )
        if sketch.canvas_size != (w, h):
            raise ValidationError(
                f"sketch canvas {sketch.canvas_size} does not match corpus canvas {(w, h)}"
            )
        session = Session(session_id=uuid.uuid4().hex, sketch=sketch)
        with self._sessions_lock:
            self._sessions[session.session_id] = session
        if sketch.strokes:
            with session.lock:
                self._refresh_guidance(session)
        self._persist(session)
        return session

    def _persist(self, session: Session):
        if not self.session_dir:
            return
        doc = {
            "version": API_VERSION,
            "session_id": session.session_id,
            "stage": session.stage,
            "sketch": sk.save_sketch(session.sketch),
            "saved_global_sketch": (
                sk.save_sketch(session.saved_global_sketch)
                if session.saved_global_sketch is not None
                else None
            ),
            "selected_candidate": session.selected_candidate,
        }
        path = self.session_dir / f"{session.session_id}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc), encoding="utf-8")
        tmp.replace(path)

    def _restore_sessions(self):
        for path in sorted(self.session_dir.glob("*.json")):
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
                session = Session(
                    session_id=doc["session_id"],
                    sketch=sk.load_sketch(doc["sketch"]),
                    stage=doc.get("stage", STAGE_GLOBAL),
                    saved_global_sketch=(
                        sk.load_sketch(doc["saved_global_sketch"])
                        if doc.get("saved_global_sketch")
                        else None
                    ),
                    selected_candidate=doc.get("selected_candidate"),
                )
            except (KeyError, ValueError, DocumentError) as exc:
                log.warning("skipping unreadable session file %s: %s", path, exc)
                continue
            self._sessions[session.session_id] = session

    # -- corpus access ----------------------------------------------------

    def _contour(self, entry_id: str) -> np.ndarray:
        if entry_id not in self._contour_cache:
            raster = load_binary(self.index.entry(entry_id).contour_path)
            self._contour_cache[entry_id] = raster
            if len(self._contour_cache) > 64:
                self._contour_cache.popitem(last=False)
        self._contour_cache.move_to_end(entry_id)
        return self._contour_cache[entry_id]

    def _template_mask(self, entry_id: str):
        if entry_id not in self._mask_cache:
            entry = self.index.entry(entry_id)
            mask = load_label_mask(entry.mask_path, self.manifest.palette, self.canvas_size)
            self._mask_cache[entry_id] = mask
            if len(self._mask_cache) > 16:
                self._mask_cache.popitem(last=False)
        self._mask_cache.move_to_end(entry_id)
        return self._mask_cache[entry_id]

    # -- the two-stage workflow -------------------------------------------

    def _refresh_guidance(self, session: Session):
        """Re-query and re-blend after a global-stage change."""
        raster = sk.rasterize(session.sketch)
        t0 = time.perf_counter()
        results = query(self.index, raster, n=self.config.top_n)
        session.last_retrieval_ms = (time.perf_counter() - t0) * 1e3
        session.last_results = results
        if not results:
            session.shadow = None
            return
        contours = [self._contour(r.entry_id) for r in results]
        weights = [r.similarity for r in results] if self.config.similarity_weights else None
        session.shadow = blend_shadow(contours, weights)

    def apply_edit(self, session_id: str, edit: dict) -> dict:
        session = self._get(session_id)
        with session.lock:
            action = edit.get("action")
            if action == "add":
                if "points" not in edit:
                    raise ValidationError("add edit requires points")
                session.sketch = sk.add_stroke(
                    session.sketch, edit["points"], float(edit.get("width", 2.0))
                )
            elif action == "erase":
                if "click" not in edit:
                    raise ValidationError("erase edit requires click")
                x, y = edit["click"]
                session.sketch = sk.erase_stroke(
                    session.sketch,
                    sk.Vertex(float(x), float(y)),
                    float(edit.get("tolerance", sk.ERASE_TOLERANCE)),
                )
            elif action == "undo":
                session.sketch = sk.undo(session.sketch)
            else:
                raise ValidationError(f"unknown edit action {action!r}")

            response = {
                "version": API_VERSION,
                "stage": session.stage,
                "stroke_count": len(session.sketch),
            }
            if session.stage == STAGE_GLOBAL:
                self._refresh_guidance(session)
                response["results"] = [
                    {"entry_id": r.entry_id, "similarity": r.similarity, "rank": r.rank}
                    for r in session.last_results
                ]
                response["retrieval_ms"] = session.last_retrieval_ms
                response["shadow_available"] = session.shadow is not None
            else:
                response["ack"] = True
            self._persist(session)
            return response

    def get_shadow(self, session_id: str) -> bytes | None:
        session = self._get(session_id)
        with session.lock:
            if session.shadow is None:
                return None
            return shadow_png(session.shadow)

    def switch_stage(self, session_id: str, target: str, streaming: bool = False) -> dict:
        session = self._get(session_id)
        with session.lock:
            if target not in (STAGE_GLOBAL, STAGE_LOCAL):
                raise ValidationError(f"unknown stage {target!r}")
            if target == session.stage:
                return self._stage_state(session)
            if target == STAGE_LOCAL:
                if not session.sketch.strokes:
                    raise StageConflict(
                        "draw some contour strokes before switching to local guidance"
                    )
                session.saved_global_sketch = session.sketch
                if not session.last_results:
                    self._refresh_guidance(session)
                session.selected_candidate = None
                session.stage = STAGE_LOCAL
                if streaming:
                    # candidates land one by one; list_candidates shows progress
                    session.candidates = []
                    session.generating = True
                    worker = threading.Thread(target=self._generate_streaming, args=(session,))
                    worker.daemon = True
                    worker.start()
                else:
                    try:
                        session.candidates = self._generate(session)
                    except Exception:
                        session.stage = STAGE_GLOBAL
                        session.candidates = None
                        raise
            else:  # rewind
                if session.saved_global_sketch is not None:
                    session.sketch = session.saved_global_sketch
                session.stage = STAGE_GLOBAL
                session.candidates = None
                session.selected_candidate = None
                session.generating = False
                self._refresh_guidance(session)
            self._persist(session)
            return self._stage_state(session)

    def _templates_for(self, session: Session):
        return [
            (self.index.entry(r.entry_id), self._template_mask(r.entry_id))
            for r in session.last_results
        ]

    def _generate(self, session: Session) -> list[GuidanceCandidate]:
        sketch = session.saved_global_sketch or session.sketch
        return generate_candidates(
            sketch, self._templates_for(session), impl=self.config.synth_impl, style=STYLE_SKETCH_LINES
        )

    def _generate_streaming(self, session: Session):
        templates = self._templates_for(session)
        sketch = session.saved_global_sketch or session.sketch
        try:
            for rank, pair in enumerate(templates, start=1):
                try:
                    (candidate,) = generate_candidates(
                        sketch, [pair], impl=self.config.synth_impl, style=STYLE_SKETCH_LINES
                    )
                except ValidationError as exc:
                    log.warning("streaming candidate %d failed: %s", rank, exc)
                    continue
                candidate.rank = rank
                candidate.candidate_id = f"cand{rank}"
                with session.lock:
                    if session.stage != STAGE_LOCAL:
                        return  # user rewound mid-generation
                    session.candidates = (session.candidates or []) + [candidate]
        finally:
            with session.lock:
                session.generating = False

    def _stage_state(self, session: Session) -> dict:
        state = {
            "version": API_VERSION,
            "stage": session.stage,
            "stroke_count": len(session.sketch),
        }
        if session.stage == STAGE_LOCAL:
            state["generating"] = session.generating
            if session.candidates is not None:
                state["candidates"] = self._candidate_list(session)
        return state

    def _candidate_list(self, session: Session) -> list[dict]:
        return [
            {
                "candidate_id": c.candidate_id,
                "template_entry_id": c.template_entry_id,
                "rank": c.rank,
                "selected": c.candidate_id == session.selected_candidate,
            }
            for c in session.candidates or []
        ]

    def _ensure_candidates(self, session: Session):
        if session.stage != STAGE_LOCAL:
            raise StageConflict("candidates exist only in the local stage")
        if session.candidates is None:
            # restored session: regenerate deterministically from the snapshot
            if not session.last_results:
                self._refresh_guidance_snapshot(session)
            session.candidates = self._generate(session)

    def _refresh_guidance_snapshot(self, session: Session):
        raster = sk.rasterize(session.saved_global_sketch or session.sketch)
        session.last_results = query(self.index, raster, n=self.config.top_n)

    def list_candidates(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            self._ensure_candidates(session)
            return {
                "version": API_VERSION,
                "generating": session.generating,
                "candidates": self._candidate_list(session),
            }

    def select_candidate(self, session_id: str, candidate_id: str) -> bytes:
        session = self._get(session_id)
        with session.lock:
            self._ensure_candidates(session)
            for c in session.candidates:
                if c.candidate_id == candidate_id:
                    session.selected_candidate = candidate_id
                    self._persist(session)
                    return png_bytes(c.portrait)
            raise SessionNotFound(f"candidate {candidate_id}")

    def _chosen_candidate(self, session: Session) -> GuidanceCandidate | None:
        if not session.candidates:
            return None
        if session.selected_candidate:
            for c in session.candidates:
                if c.candidate_id == session.selected_candidate:
                    return c
        # default to the best-fitting template
        return min(session.candidates, key=lambda c: (c.fit_score, c.rank))

    def export_session(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            raster = sk.rasterize(session.sketch)
            sketch_png = png_bytes(np.where(raster, 0, 255).astype(np.uint8))
            artifacts = {
                "sketch_png": base64.b64encode(sketch_png).decode("ascii"),
                "shadow_png": None,
                "merged_mask_png": None,
                "revised_contour_png": None,
                "guidance_png": None,
            }
            if session.shadow is not None:
                artifacts["shadow_png"] = base64.b64encode(shadow_png(session.shadow)).decode("ascii")
            chosen = self._chosen_candidate(session)
            if chosen is not None:
                from .maskdata import extract_contours

                merged = chosen.merged_mask
                artifacts["merged_mask_png"] = base64.b64encode(
                    png_bytes(merged.labels)
                ).decode("ascii")
                contour = extract_contours(merged.as_label_mask())
                artifacts["revised_contour_png"] = base64.b64encode(
                    png_bytes(np.where(contour, 0, 255).astype(np.uint8))
                ).decode("ascii")
                artifacts["guidance_png"] = base64.b64encode(
                    png_bytes(chosen.portrait)
                ).decode("ascii")
            return {
                "version": API_VERSION,
                "session_id": session.session_id,
                "stage": session.stage,
                "sketch": sk.save_sketch(session.sketch),
                "results": [
                    {"entry_id": r.entry_id, "similarity": r.similarity, "rank": r.rank}
                    for r in session.last_results
                ],
                "artifacts": artifacts,
            }


def create_app(service: GuidanceService):
    from fastapi import Body, FastAPI, HTTPException, Response

    app = FastAPI(title="portraitguide", version=str(API_VERSION))

    def _translate(exc: Exception) -> HTTPException:
        if isinstance(exc, SessionNotFound):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, StageConflict):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, (ValidationError, DocumentError)):
            return HTTPException(status_code=422, detail=str(exc))
        raise exc

    # Handlers are sync on purpose: FastAPI moves them onto the worker
    # threadpool, so a slow candidate generation in one session cannot
    # stall edits in another.

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "version": API_VERSION,
            "index_entries": len(service.index),
            "canvas": list(service.canvas_size),
        }

    @app.post("/sessions")
    def create_session(doc: dict | None = Body(None)):
        try:
            session = service.create_session((doc or {}).get("sketch"))
        except Exception as exc:  # noqa: BLE001 - translated below
            raise _translate(exc)
        return {
            "version": API_VERSION,
            "session_id": session.session_id,
            "stage": session.stage,
            "stroke_count": len(session.sketch),
        }

    @app.post("/sessions/{session_id}/edits")
    def post_edit(session_id: str, edit: dict = Body(...)):
        try:
            return service.apply_edit(session_id, edit)
        except Exception as exc:
            raise _translate(exc)

    @app.get("/sessions/{session_id}/shadow")
    def get_shadow(session_id: str):
        try:
            png = service.get_shadow(session_id)
        except Exception as exc:
            raise _translate(exc)
        if png is None:
            raise HTTPException(status_code=404, detail="no shadow yet (blank sketch)")
        return Response(content=png, media_type="image/png")

    @app.post("/sessions/{session_id}/stage")
    def post_stage(session_id: str, doc: dict = Body(...)):
        try:
            return service.switch_stage(
                session_id, doc.get("target", ""), streaming=bool(doc.get("streaming", False))
            )
        except Exception as exc:
            raise _translate(exc)

    @app.get("/sessions/{session_id}/candidates")
    def get_candidates(session_id: str):
        try:
            return service.list_candidates(session_id)
        except Exception as exc:
            raise _translate(exc)

    @app.post("/sessions/{session_id}/candidates/{candidate_id}/select")
    def post_select(session_id: str, candidate_id: str):
        try:
            png = service.select_candidate(session_id, candidate_id)
        except Exception as exc:
            raise _translate(exc)
        return Response(content=png, media_type="image/png")

    @app.get("/sessions/{session_id}/export")
    def get_export(session_id: str):
        try:
            return service.export_session(session_id)
        except Exception as exc:
            raise _translate(exc)

    if service.config.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=service.config.ui_dir, html=True), name="ui")

    return app
