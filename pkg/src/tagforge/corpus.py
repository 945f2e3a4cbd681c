"""Tag records -> stemmed hash-tag sentences, vocabulary and de-stem map.

A raw tag such as ``#FitFluential`` is normalized to the surface form
``fitfluential`` and stemmed.  On the source platforms a hash-tag ends at
the first character outside [a-z0-9], so normalization keeps the first
alphanumeric run of the lowercased tag ("#fish-like" is the tag "fish").
Tags containing digits are not stemmed; the Porter rules are defined on
alphabetic words only.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from . import porter
from .errors import TagforgeError

DEFAULT_MIN_COUNT = 5

_ALNUM = frozenset("abcdefghijklmnopqrstuvwxyz0123456789")


def normalize_tag(raw: str) -> tuple[str, str] | None:
    """Normalize a raw tag to ``(surface, stem)``, or ``None`` if nothing
    alphanumeric remains."""
    lowered = unicodedata.normalize("NFC", raw).lower()
    start = None
    end = len(lowered)
    for i, ch in enumerate(lowered):
        if ch in _ALNUM:
            if start is None:
                start = i
        elif start is not None:
            end = i
            break
    if start is None:
        return None
    surface = lowered[start:end]
    stem = porter.stem(surface) if surface.isascii() and surface.isalpha() else surface
    return surface, stem


@dataclass
class TagRecord:
    video_id: str
    raw_tags: list[str]


@dataclass
class HashTagSentence:
    video_id: str
    stems: list[str]


class Vocabulary:
    """Stem vocabulary with contiguous indices.

    Iteration and index order is descending count with lexicographic
    tie-break, so two builds over the same corpus agree byte for byte.
    """

    def __init__(self, counts: dict[str, int], min_count: int = 1):
        if min_count < 1:
            raise TagforgeError("min_count must be >= 1")
        self.min_count = min_count
        kept = [(s, c) for s, c in counts.items() if c >= min_count]
        kept.sort(key=lambda item: (-item[1], item[0]))
        self.stems: list[str] = [s for s, _ in kept]
        self.counts: list[int] = [c for _, c in kept]
        self._index = {s: i for i, s in enumerate(self.stems)}

    def __len__(self) -> int:
        return len(self.stems)

    def __contains__(self, stem: str) -> bool:
        return stem in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self.stems)

    def index(self, stem: str) -> int:
        try:
            return self._index[stem]
        except KeyError:
            raise TagforgeError(f"unknown stem: {stem!r}") from None

    def count(self, stem: str) -> int:
        return self.counts[self.index(stem)]

    def items(self) -> Iterator[tuple[str, int]]:
        return iter(zip(self.stems, self.counts))


class DestemMap:
    """stem -> surface forms with corpus counts, most common first."""

    def __init__(self, surface_counts: dict[str, dict[str, int]]):
        self._forms: dict[str, list[tuple[str, int]]] = {}
        for stem in sorted(surface_counts):
            forms = sorted(surface_counts[stem].items(), key=lambda it: (-it[1], it[0]))
            self._forms[stem] = forms

    def __contains__(self, stem: str) -> bool:
        return stem in self._forms

    def __len__(self) -> int:
        return len(self._forms)

    def forms(self, stem: str) -> list[tuple[str, int]]:
        return list(self._forms.get(stem, ()))

    def items(self) -> Iterator[tuple[str, list[tuple[str, int]]]]:
        return iter(self._forms.items())


def destem(stem: str, dm: DestemMap) -> str:
    """Most common surface form for a stem; the stem itself if unseen."""
    forms = dm.forms(stem)
    return forms[0][0] if forms else stem


@dataclass
class CorpusDiagnostics:
    malformed_records: int = 0
    dropped_records: int = 0
    dropped_tags: int = 0


@dataclass
class Corpus:
    sentences: list[HashTagSentence]
    vocab: Vocabulary
    destem: DestemMap

    def is_trainable(self, sentence: HashTagSentence) -> bool:
        return sum(1 for s in sentence.stems if s in self.vocab) >= 2

    def trainable_sentences(self) -> list[list[int]]:
        """Vocabulary-index encodings of every trainable sentence."""
        out = []
        for sent in self.sentences:
            idx = [self.vocab.index(s) for s in sent.stems if s in self.vocab]
            if len(idx) >= 2:
                out.append(idx)
        return out


def build_corpus(
    records: Iterable[TagRecord], min_count: int = DEFAULT_MIN_COUNT
) -> tuple[Corpus, CorpusDiagnostics]:
    """Stem every record's tags into a sentence and tally the vocabulary.

    Records without a video_id are skipped and counted in the returned
    diagnostics; records with no surviving stem are dropped.
    """
    if min_count < 1:
        raise TagforgeError("min_count must be >= 1")
    diags = CorpusDiagnostics()
    sentences: list[HashTagSentence] = []
    stem_counts: dict[str, int] = {}
    surface_counts: dict[str, dict[str, int]] = {}
    for rec in records:
        if not rec.video_id:
            diags.malformed_records += 1
            continue
        stems = []
        for raw in rec.raw_tags:
            norm = normalize_tag(raw)
            if norm is None:
                diags.dropped_tags += 1
                continue
            surface, stem_ = norm
            stems.append(stem_)
            stem_counts[stem_] = stem_counts.get(stem_, 0) + 1
            per_stem = surface_counts.setdefault(stem_, {})
            per_stem[surface] = per_stem.get(surface, 0) + 1
        if not stems:
            diags.dropped_records += 1
            continue
        sentences.append(HashTagSentence(rec.video_id, stems))
    vocab = Vocabulary(stem_counts, min_count)
    return Corpus(sentences, vocab, DestemMap(surface_counts)), diags


def read_records_jsonl(path: str | Path) -> Iterator[TagRecord]:
    """Parse line-delimited ``{"video_id": ..., "tags": [...]}`` records.

    Lines that are not valid JSON objects or lack the required fields
    yield a record with an empty video_id, which build_corpus counts as
    malformed."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                video_id = obj["video_id"]
                tags = obj["tags"]
                if not isinstance(video_id, str) or not isinstance(tags, list):
                    raise TypeError
            except (json.JSONDecodeError, KeyError, TypeError):
                yield TagRecord("", [])
                continue
            yield TagRecord(video_id, [str(t) for t in tags])


def save_corpus(corpus: Corpus, out_dir: str | Path) -> None:
    """Write sentences.txt, vocab.tsv and destem.tsv into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sentences.txt").open("w", encoding="utf-8", newline="\n") as fh:
        for sent in corpus.sentences:
            fh.write(sent.video_id + " " + " ".join(sent.stems) + "\n")
    with (out / "vocab.tsv").open("w", encoding="utf-8", newline="\n") as fh:
        for stem_, count in corpus.vocab.items():
            fh.write(f"{stem_}\t{count}\n")
    with (out / "destem.tsv").open("w", encoding="utf-8", newline="\n") as fh:
        for stem_, forms in corpus.destem.items():
            for surface, count in forms:
                fh.write(f"{stem_}\t{surface}\t{count}\n")


def load_corpus(in_dir: str | Path) -> Corpus:
    """Read a corpus archive written by save_corpus."""
    src = Path(in_dir)
    counts: dict[str, int] = {}
    vocab_path = src / "vocab.tsv"
    if not vocab_path.exists():
        raise TagforgeError(f"not a corpus archive (missing {vocab_path})")
    for line in vocab_path.read_text(encoding="utf-8").splitlines():
        stem_, count = line.split("\t")
        counts[stem_] = int(count)
    min_count = min(counts.values()) if counts else 1
    vocab = Vocabulary(counts, min_count=max(1, min_count))
    sentences = []
    for line in (src / "sentences.txt").read_text(encoding="utf-8").splitlines():
        parts = line.split(" ")
        sentences.append(HashTagSentence(parts[0], parts[1:]))
    surface_counts: dict[str, dict[str, int]] = {}
    for line in (src / "destem.tsv").read_text(encoding="utf-8").splitlines():
        stem_, surface, count = line.split("\t")
        surface_counts.setdefault(stem_, {})[surface] = int(count)
    return Corpus(sentences, vocab, DestemMap(surface_counts))


def load_destem(path: str | Path) -> DestemMap:
    """Read a destem.tsv file on its own (as the suggest CLI does)."""
    surface_counts: dict[str, dict[str, int]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        stem_, surface, count = line.split("\t")
        surface_counts.setdefault(stem_, {})[surface] = int(count)
    return DestemMap(surface_counts)
