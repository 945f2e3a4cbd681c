"""Synthetic fixtures: grouped tag corpora and class-conditioned
descriptor sets, used by the test suite and the demo pipeline in place
of scraped tags and extracted video features."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import TagRecord
from .descriptors import DescriptorSet, save_descriptors
from .errors import TagforgeError


def group_stems(groups: int, stems_per_group: int) -> list[list[str]]:
    """Stem names per topic group; the first stem of each group doubles
    as the class label.  Digits keep the tokens stable under stemming."""
    return [
        [f"class{g}"] + [f"g{g}tag{j}" for j in range(1, stems_per_group)]
        for g in range(groups)
    ]


def grouped_tag_records(
    groups: int = 5,
    stems_per_group: int = 8,
    sentences: int = 2000,
    tags_per_sentence: int = 4,
    seed: int = 1,
) -> tuple[list[TagRecord], list[list[str]]]:
    """Tag records where each sentence draws its tags from one group."""
    if tags_per_sentence > stems_per_group:
        raise TagforgeError("tags_per_sentence cannot exceed stems_per_group")
    stems = group_stems(groups, stems_per_group)
    rng = np.random.default_rng(seed)
    records = []
    for i in range(sentences):
        g = i % groups
        chosen = rng.choice(stems_per_group, size=tags_per_sentence, replace=False)
        records.append(TagRecord(f"s{i:05d}", [stems[g][j] for j in chosen]))
    return records, stems


@dataclass
class SynthVideo:
    video_id: str
    class_stem: str
    split: str  # "train" or "test"


def class_descriptor_sets(
    classes: int = 5,
    per_class: int = 20,
    n: int = 200,
    d: int = 16,
    seed: int = 7,
    test_fraction: float = 0.2,
    atoms_per_class: int = 3,
    own_atom_mass: float = 0.7,
    mixing_concentration: float = 400.0,
    atom_scale: float = 3.0,
) -> tuple[list[DescriptorSet], list[SynthVideo]]:
    """Bag-of-atoms descriptor sets, the regime Fisher encoding suits:
    every class draws from one shared pool of unit-variance Gaussian
    atoms, but concentrates own_atom_mass of its descriptors on its own
    atoms.  Each video Dirichlet-jitters its class mixture, so videos of
    a class differ without losing its usage signature."""
    rng = np.random.default_rng(seed)
    n_atoms = classes * atoms_per_class
    atom_means = rng.normal(0.0, atom_scale, size=(n_atoms, d))
    sets = []
    manifest = []
    n_test = int(round(per_class * test_fraction))
    for c in range(classes):
        own = range(c * atoms_per_class, (c + 1) * atoms_per_class)
        profile = np.full(n_atoms, (1.0 - own_atom_mass) / (n_atoms - atoms_per_class))
        profile[own] = own_atom_mass / atoms_per_class
        order = rng.permutation(per_class)
        test_slots = set(order[:n_test].tolist())
        for v in range(per_class):
            video_id = f"vid_c{c}_{v:03d}"
            mixing = rng.dirichlet(profile * mixing_concentration)
            atoms = rng.choice(n_atoms, size=n, p=mixing)
            matrix = atom_means[atoms] + rng.normal(0.0, 1.0, size=(n, d))
            sets.append(DescriptorSet(video_id, matrix))
            split = "test" if v in test_slots else "train"
            manifest.append(SynthVideo(video_id, f"class{c}", split))
    return sets, manifest


def write_labels(manifest: list[SynthVideo], path: str | Path, split: str | None = None) -> None:
    """TSV manifest: video_id TAB class_stem, optionally one split only."""
    rows = [v for v in manifest if split is None or v.split == split]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for v in rows:
            fh.write(f"{v.video_id}\t{v.class_stem}\n")


def read_labels(path: str | Path) -> dict[str, str]:
    labels = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        try:
            video_id, class_stem = line.split("\t")
        except ValueError:
            raise TagforgeError(f"{path}: malformed label line {line!r}") from None
        labels[video_id] = class_stem
    return labels


def write_descriptor_dir(sets: list[DescriptorSet], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for ds in sets:
        save_descriptors(ds, out / f"{ds.video_id}.tfds")
