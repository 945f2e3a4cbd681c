"""Survey service: serves precomputed suggestions, collects relevance
marks into an append-only log, and reports aggregates.

Wire protocol (JSON bodies, UTF-8):
  GET  /api/next?user=<id>  -> next unmarked video for that user or done
  POST /api/mark            -> {"status": "accepted"} or rejection
  GET  /api/report          -> aggregate report document
  GET  /                    -> the annotator UI bundle, when present

Each user sees the videos in a pseudorandom order derived from a stable
hash of the user id, so the order survives restarts.  Marks are flushed
and fsynced before the request is acknowledged; replaying the log on
startup restores all acknowledged marks.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .errors import TagforgeError
from .evalstats import (
    RelevanceMark,
    aggregate_relevance,
    mark_to_json,
    read_marks_jsonl,
    report_to_json_bytes,
)
from .suggest import Suggestion


@dataclass
class StoredVideo:
    video_id: str
    media_url: str
    class_stem: str
    suggestions: list[Suggestion]


class SurveyStore:
    """Immutable bundle of videos with precomputed suggestions."""

    def __init__(self, videos: list[StoredVideo], k: int):
        if any(len(v.suggestions) != k for v in videos):
            raise TagforgeError("every video must carry exactly k suggestions")
        self.videos = list(videos)
        self.k = k
        self.by_id = {v.video_id: v for v in videos}

    def labels(self) -> dict[str, str]:
        return {v.video_id: v.class_stem for v in self.videos}

    def save(self, store_dir: str | Path) -> None:
        out = Path(store_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "videos.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
            for v in self.videos:
                doc = {
                    "video_id": v.video_id,
                    "media_url": v.media_url,
                    "class_stem": v.class_stem,
                    "suggestions": [
                        {
                            "rank": s.rank,
                            "stem": s.stem,
                            "surface": s.surface,
                            "distance": s.distance,
                        }
                        for s in v.suggestions
                    ],
                }
                fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, store_dir: str | Path) -> "SurveyStore":
        path = Path(store_dir) / "videos.jsonl"
        if not path.exists():
            raise TagforgeError(f"store file not found: {path}")
        videos = []
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                    videos.append(
                        StoredVideo(
                            video_id=doc["video_id"],
                            media_url=doc["media_url"],
                            class_stem=doc["class_stem"],
                            suggestions=[
                                Suggestion(s["rank"], s["stem"], s["surface"], s["distance"])
                                for s in doc["suggestions"]
                            ],
                        )
                    )
                except (json.JSONDecodeError, KeyError, TypeError):
                    raise TagforgeError(f"{path}:{lineno}: malformed store record") from None
        if not videos:
            raise TagforgeError(f"{path}: store is empty")
        k = len(videos[0].suggestions)
        return cls(videos, k)


class MarksLog:
    """Append-only JSONL log of relevance marks; appends are serialized
    and durably flushed before acknowledgement."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.marks: list[RelevanceMark] = (
            read_marks_jsonl(self.path) if self.path.exists() else []
        )
        self._seen = {(m.video_id, m.user_id) for m in self.marks}

    def already_marked(self, video_id: str, user_id: str) -> bool:
        return (video_id, user_id) in self._seen

    def marked_by(self, user_id: str) -> set[str]:
        return {m.video_id for m in self.marks if m.user_id == user_id}

    def append(self, mark: RelevanceMark) -> None:
        with self._lock:
            if (mark.video_id, mark.user_id) in self._seen:
                raise TagforgeError("already marked")
            with self.path.open("a", encoding="utf-8", newline="\n") as fh:
                fh.write(mark_to_json(mark) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.marks.append(mark)
            self._seen.add((mark.video_id, mark.user_id))


def build_store(
    fvs,
    net,
    tv,
    dm,
    labels: dict[str, str],
    k: int = 15,
    media_base: str = "media",
    exclude_stems: frozenset[str] = frozenset(),
) -> SurveyStore:
    """Precompute suggestions for every video once, at store-build time;
    serving never touches the models."""
    from .suggest import SuggestConfig, suggest_tags

    cfg = SuggestConfig(k=k, exclude_stems=exclude_stems)
    videos = []
    for fv in sorted(fvs, key=lambda f: f.video_id):
        if fv.video_id not in labels:
            raise TagforgeError(f"no class label for video {fv.video_id!r}")
        suggestions = suggest_tags(fv, net, tv, dm, cfg)
        if len(suggestions) != k:
            raise TagforgeError(
                f"{fv.video_id}: only {len(suggestions)} suggestions available, need {k}"
            )
        videos.append(
            StoredVideo(
                video_id=fv.video_id,
                media_url=f"{media_base.rstrip('/')}/{fv.video_id}.mp4",
                class_stem=labels[fv.video_id],
                suggestions=suggestions,
            )
        )
    return SurveyStore(videos, k)


def user_order(video_ids: list[str], user_id: str) -> list[str]:
    """Per-user presentation order from a stable hash of the user id."""
    seed = int.from_bytes(hashlib.sha256(user_id.encode("utf-8")).digest()[:8], "little")
    order = list(video_ids)
    random.Random(seed).shuffle(order)
    return order


def create_app(
    store: SurveyStore,
    marks_path: str | Path,
    static_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="tagforge survey service")
    log = MarksLog(marks_path)
    ordered_ids = [v.video_id for v in store.videos]

    @app.get("/api/next")
    def get_next(user: str = "") -> JSONResponse:
        if not user:
            raise HTTPException(status_code=400, detail="user must be non-empty")
        done = log.marked_by(user)
        for video_id in user_order(ordered_ids, user):
            if video_id in done:
                continue
            video = store.by_id[video_id]
            return JSONResponse(
                {
                    "done": False,
                    "video_id": video.video_id,
                    "media_url": video.media_url,
                    "progress": {"marked": len(done), "total": len(ordered_ids)},
                    "suggestions": [
                        {"rank": s.rank, "surface": s.surface, "stem": s.stem}
                        for s in video.suggestions
                    ],
                }
            )
        return JSONResponse(
            {"done": True, "progress": {"marked": len(done), "total": len(ordered_ids)}}
        )

    @app.post("/api/mark")
    async def post_mark(request: Request) -> JSONResponse:
        def rejected(reason: str) -> JSONResponse:
            return JSONResponse({"status": "rejected", "reason": reason})

        try:
            body = await request.json()
            mark = RelevanceMark(
                video_id=str(body["video_id"]),
                user_id=str(body["user_id"]),
                shown=[str(s) for s in body["shown"]],
                selected=[str(s) for s in body["selected"]],
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            return rejected("malformed mark")
        if not mark.user_id:
            return rejected("user must be non-empty")
        video = store.by_id.get(mark.video_id)
        if video is None:
            return rejected("unknown video")
        if log.already_marked(mark.video_id, mark.user_id):
            return rejected("already marked")
        served = [s.stem for s in video.suggestions]
        if mark.shown != served:
            return rejected("shown list mismatch")
        if not set(mark.selected) <= set(mark.shown):
            return rejected("unknown selection")
        try:
            log.append(mark)
        except TagforgeError as exc:
            return rejected(str(exc))
        return JSONResponse({"status": "accepted"})

    @app.get("/api/report")
    def get_report() -> Response:
        report = aggregate_relevance(log.marks, store.labels(), k=store.k)
        return Response(content=report_to_json_bytes(report), media_type="application/json")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:

        @app.get("/")
        def index() -> Response:
            return Response(
                "<html><body><h1>tagforge survey service</h1>"
                "<p>No UI bundle configured; the API lives under /api/.</p>"
                "</body></html>",
                media_type="text/html",
            )

    return app
