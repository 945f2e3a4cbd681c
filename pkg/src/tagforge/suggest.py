"""Top-k de-stemmed tag suggestions for a query Fisher vector.

The query is projected into the tag space and ranked against every tag
vector by an exhaustive L2 scan (O(N*d)); no stored training vectors
take part.  Stems whose display surface duplicates an earlier one are
collapsed away by default, and the scan keeps going until k distinct
suggestions survive or the vocabulary runs out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import DestemMap, destem
from .crossmodal import EmbeddingNet, project
from .errors import DimensionMismatchError, TagforgeError
from .fisher import FisherVector
from .tag2vec import TagVectors, nearest_tags


@dataclass
class Suggestion:
    rank: int
    stem: str
    surface: str
    distance: float


@dataclass
class SuggestConfig:
    k: int = 15
    exclude_stems: frozenset[str] = frozenset()
    collapse_to_surface: bool = True

    def validate(self) -> None:
        if self.k < 1:
            raise TagforgeError("k must be >= 1")


def suggest_tags(
    fv: FisherVector,
    net: EmbeddingNet,
    tv: TagVectors,
    dm: DestemMap,
    cfg: SuggestConfig | None = None,
) -> list[Suggestion]:
    cfg = cfg or SuggestConfig()
    cfg.validate()
    if len(tv.stems) == 0:
        raise TagforgeError("empty tag vocabulary")
    if fv.values.shape != (net.f,):
        raise DimensionMismatchError(
            f"{fv.video_id}: fisher vector has {fv.values.shape[0]} dims, "
            f"net expects {net.f}"
        )
    if net.d != tv.dim:
        raise DimensionMismatchError(
            f"net outputs {net.d} dims, tag space has {tv.dim}"
        )
    point = project(net, fv.values)
    ranked = nearest_tags(
        tv, point, k=len(tv.stems), metric="l2", exclude=cfg.exclude_stems
    )
    out: list[Suggestion] = []
    seen_surfaces: set[str] = set()
    for stem, distance in ranked:
        surface = destem(stem, dm)
        if cfg.collapse_to_surface:
            if surface in seen_surfaces:
                continue
            seen_surfaces.add(surface)
        out.append(Suggestion(len(out) + 1, stem, surface, distance))
        if len(out) == cfg.k:
            break
    return out
