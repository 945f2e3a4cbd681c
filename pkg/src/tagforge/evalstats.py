"""Aggregate user relevance marks into per-class survey statistics.

Averages are taken over (video, user) marks; a video is zero-relevant
only when every one of its marks has an empty selection.  The report
carries 4.79 as a documented reference for the typical number of
author-given tags per clip; it is informational only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import TagforgeError

TYPICAL_TAGS_PER_VIDEO_REFERENCE = 4.79


@dataclass
class RelevanceMark:
    video_id: str
    user_id: str
    shown: list[str]
    selected: list[str]


@dataclass
class ClassReport:
    class_stem: str
    video_count: int
    avg_relevant: float
    zero_relevant_videos: int


@dataclass
class AggregateReport:
    per_class: list[ClassReport]
    overall_avg: float
    total_zero_videos: int
    mark_count: int
    video_count: int
    k: int


def aggregate_relevance(
    marks: list[RelevanceMark], labels: dict[str, str], k: int = 15
) -> AggregateReport:
    """Per-class average selected-tag counts and zero-relevant tallies."""
    if k < 1:
        raise TagforgeError("k must be >= 1")
    selected_sizes: dict[str, list[int]] = {}
    video_marks: dict[str, list[int]] = {}
    video_class: dict[str, str] = {}
    for mark in marks:
        who = f"mark (video={mark.video_id!r}, user={mark.user_id!r})"
        if mark.video_id not in labels:
            raise TagforgeError(f"{who}: video has no class label")
        if len(mark.shown) != k:
            raise TagforgeError(
                f"{who}: shown list has {len(mark.shown)} stems, expected {k}"
            )
        if not set(mark.selected) <= set(mark.shown):
            raise TagforgeError(f"{who}: selection is not a subset of shown")
        cls = labels[mark.video_id]
        n_selected = len(mark.selected)
        selected_sizes.setdefault(cls, []).append(n_selected)
        video_marks.setdefault(mark.video_id, []).append(n_selected)
        video_class[mark.video_id] = cls

    per_class = []
    total_zero = 0
    for cls in sorted(selected_sizes):
        sizes = selected_sizes[cls]
        videos = [v for v, c in video_class.items() if c == cls]
        zero = sum(1 for v in videos if all(n == 0 for n in video_marks[v]))
        total_zero += zero
        per_class.append(
            ClassReport(
                class_stem=cls,
                video_count=len(videos),
                avg_relevant=sum(sizes) / len(sizes),
                zero_relevant_videos=zero,
            )
        )
    all_sizes = [n for sizes in selected_sizes.values() for n in sizes]
    overall = sum(all_sizes) / len(all_sizes) if all_sizes else 0.0
    return AggregateReport(
        per_class=per_class,
        overall_avg=overall,
        total_zero_videos=total_zero,
        mark_count=len(marks),
        video_count=len(video_class),
        k=k,
    )


def report_to_tsv(report: AggregateReport) -> str:
    lines = [
        f"{c.class_stem}\t{c.video_count}\t{c.avg_relevant!r}\t{c.zero_relevant_videos}"
        for c in report.per_class
    ]
    lines.append(
        f"overall\t{report.video_count}\t{report.overall_avg!r}\t{report.total_zero_videos}"
    )
    return "\n".join(lines) + "\n"


def report_to_json_bytes(report: AggregateReport) -> bytes:
    """Canonical JSON encoding; the survey service returns these exact
    bytes so wire and direct aggregation compare equal."""
    doc = {
        "k": report.k,
        "classes": [
            {
                "class_stem": c.class_stem,
                "video_count": c.video_count,
                "avg_relevant": c.avg_relevant,
                "zero_relevant_videos": c.zero_relevant_videos,
            }
            for c in report.per_class
        ],
        "overall_avg": report.overall_avg,
        "total_zero_videos": report.total_zero_videos,
        "mark_count": report.mark_count,
        "video_count": report.video_count,
        "typical_tags_per_video_reference": TYPICAL_TAGS_PER_VIDEO_REFERENCE,
    }
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def mark_to_json(mark: RelevanceMark) -> str:
    return json.dumps(
        {
            "video_id": mark.video_id,
            "user_id": mark.user_id,
            "shown": mark.shown,
            "selected": mark.selected,
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def read_marks_jsonl(path: str | Path) -> list[RelevanceMark]:
    path = Path(path)
    if not path.exists():
        raise TagforgeError(f"marks file not found: {path}")
    marks = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                marks.append(
                    RelevanceMark(
                        video_id=obj["video_id"],
                        user_id=obj["user_id"],
                        shown=[str(s) for s in obj["shown"]],
                        selected=[str(s) for s in obj["selected"]],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError):
                raise TagforgeError(f"{path}:{lineno}: malformed mark record") from None
    return marks
