from __future__ import annotations

import itertools
import math
import struct

import numpy as np
import pytest

from tagforge.corpus import Corpus, TagRecord, build_corpus
from tagforge.errors import (
    DimensionMismatchError,
    MalformedHeaderError,
    TagforgeError,
    TruncatedPayloadError,
)
from tagforge.synth import grouped_tag_records
from tagforge.tag2vec import (
    NoiseSampler,
    T2VConfig,
    TagVectors,
    load_vectors,
    nearest_tags,
    save_vectors,
    similarity,
    train_tag2vec,
)

GROUPED_CFG = T2VConfig(dim=25, window=5, negatives=5, epochs=15,
                        subsample_t=0.0, seed=1)


@pytest.fixture(scope="module")
def grouped_corpus():
    records, stems = grouped_tag_records(groups=5, stems_per_group=8,
                                         sentences=2000, tags_per_sentence=4,
                                         seed=1)
    corpus, _ = build_corpus(records, min_count=1)
    return corpus, stems


@pytest.fixture(scope="module")
def grouped_vectors(grouped_corpus):
    corpus, stems = grouped_corpus
    tv = train_tag2vec(corpus, GROUPED_CFG)
    return tv, stems


def group_of(stems):
    return {s: g for g, group in enumerate(stems) for s in group}


def test_group_separation(grouped_vectors):
    tv, stems = grouped_vectors
    membership = group_of(stems)
    hits = 0
    total = 0
    for stem in tv.stems:
        (neighbor, _), = nearest_tags(tv, stem, k=1, metric="cosine",
                                      exclude={stem})
        total += 1
        hits += membership[neighbor] == membership[stem]
    assert hits / total >= 0.90


def test_intra_vs_inter_group_cosine(grouped_vectors):
    tv, stems = grouped_vectors
    membership = group_of(stems)
    intra, inter = [], []
    for a, b in itertools.combinations(tv.stems, 2):
        sim = similarity(tv, a, b)
        (intra if membership[a] == membership[b] else inter).append(sim)
    assert np.mean(intra) - np.mean(inter) >= 0.3


def test_epoch_loss_nonincreasing_early(grouped_vectors):
    tv, _ = grouped_vectors
    losses = tv.epoch_losses
    assert len(losses) == GROUPED_CFG.epochs
    assert losses[0] >= losses[1] >= losses[2]


def test_training_deterministic():
    records, _ = grouped_tag_records(sentences=200, seed=3)
    corpus, _ = build_corpus(records, min_count=1)
    cfg = T2VConfig(dim=8, epochs=3, subsample_t=0.0, seed=42)
    tv1 = train_tag2vec(corpus, cfg)
    tv2 = train_tag2vec(corpus, cfg)
    assert np.array_equal(tv1.input_vectors, tv2.input_vectors)
    assert np.array_equal(tv1.context_vectors, tv2.context_vectors)


def test_subsampling_changes_training_but_stays_deterministic():
    records, _ = grouped_tag_records(sentences=200, seed=3)
    corpus, _ = build_corpus(records, min_count=1)
    cfg = T2VConfig(dim=8, epochs=2, subsample_t=0.05, seed=42)
    tv1 = train_tag2vec(corpus, cfg)
    tv2 = train_tag2vec(corpus, cfg)
    assert np.array_equal(tv1.input_vectors, tv2.input_vectors)


def test_parallel_mode_runs():
    # lock-free multi-worker training: no bitwise guarantee, but the
    # result must be finite and the right shape
    records, _ = grouped_tag_records(sentences=200, seed=3)
    corpus, _ = build_corpus(records, min_count=1)
    tv = train_tag2vec(corpus, T2VConfig(dim=8, epochs=2, subsample_t=0.0, seed=1),
                       workers=2)
    assert tv.input_vectors.shape == (len(corpus.vocab), 8)
    assert np.isfinite(tv.input_vectors).all()


def test_train_errors():
    corpus, _ = build_corpus([TagRecord("v", ["solo", "solo"])], min_count=1)
    with pytest.raises(TagforgeError, match="vocabulary too small"):
        train_tag2vec(corpus, T2VConfig(dim=4, epochs=1))
    empty, _ = build_corpus([], min_count=1)
    with pytest.raises(TagforgeError, match="no trainable sentences"):
        train_tag2vec(empty, T2VConfig(dim=4, epochs=1))


def test_negative_sampling_distribution():
    counts = np.arange(20, 50)
    sampler = NoiseSampler(counts)
    expected = counts.astype(float) ** 0.75
    expected /= expected.sum()
    rng = np.random.default_rng(2024)
    draws = sampler.draw(rng, 1_000_000)
    freq = np.bincount(draws, minlength=len(counts)) / len(draws)
    rel_err = np.abs(freq - expected) / expected
    assert rel_err.max() < 0.02


def _toy_vectors():
    mat = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
    return TagVectors(stems=["origin", "near", "far"], input_vectors=mat)


def test_similarity_self_is_one(grouped_vectors):
    tv, _ = grouped_vectors
    for stem in tv.stems[:5]:
        assert similarity(tv, stem, stem) == pytest.approx(1.0, abs=1e-12)


def test_similarity_unknown_stem():
    tv = _toy_vectors()
    with pytest.raises(TagforgeError, match="nope"):
        similarity(tv, "origin", "nope")


def test_similarity_scale_invariant():
    tv = _toy_vectors()
    base = similarity(tv, "near", "far")
    scaled = TagVectors(stems=tv.stems, input_vectors=tv.input_vectors * [[1.0], [7.5], [1.0]])
    assert similarity(scaled, "near", "far") == pytest.approx(base, abs=1e-12)


def test_nearest_known_coordinates():
    tv = _toy_vectors()
    result = nearest_tags(tv, np.array([0.9, 0.0]), k=2, metric="l2")
    assert [(s, pytest.approx(d, abs=1e-12)) for s, d in result] == [
        ("near", pytest.approx(0.1, abs=1e-12)),
        ("origin", pytest.approx(0.9, abs=1e-12)),
    ]


def test_nearest_self_at_zero(grouped_vectors):
    tv, _ = grouped_vectors
    for stem in tv.stems:
        (first, dist), = nearest_tags(tv, tv.vector(stem), k=1, metric="l2")
        assert first == stem
        assert dist == 0.0


def test_nearest_matches_bruteforce_sort():
    rng = np.random.default_rng(7)
    for _ in range(20):
        v, d = int(rng.integers(3, 12)), int(rng.integers(2, 5))
        mat = rng.normal(size=(v, d))
        stems = [f"s{i:02d}" for i in range(v)]
        tv = TagVectors(stems=stems, input_vectors=mat)
        q = rng.normal(size=d)
        k = int(rng.integers(1, v + 1))
        got = nearest_tags(tv, q, k=k, metric="l2")
        expected = sorted(
            ((math.dist(mat[i], q), stems[i]) for i in range(v)),
        )[:k]
        assert [s for s, _ in got] == [s for _, s in expected]
        for (_, got_d), (exp_d, _) in zip(got, expected):
            assert got_d == pytest.approx(exp_d, abs=1e-12)


def test_nearest_tie_breaks_lexicographically():
    mat = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    tv = TagVectors(stems=["zed", "abe", "mid"], input_vectors=mat)
    result = nearest_tags(tv, np.array([0.0, 0.0]), k=3, metric="l2")
    assert [s for s, _ in result] == ["abe", "mid", "zed"]


def test_nearest_k_saturation_and_exclude():
    tv = _toy_vectors()
    result = nearest_tags(tv, np.array([0.0, 0.0]), k=10, metric="l2")
    assert len(result) == 3
    result = nearest_tags(tv, np.array([0.0, 0.0]), k=10, metric="l2",
                          exclude={"origin"})
    assert [s for s, _ in result] == ["near", "far"]


def test_nearest_unknown_query():
    tv = _toy_vectors()
    with pytest.raises(TagforgeError):
        nearest_tags(tv, "missing", k=1)


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(11)
    tv = TagVectors(
        stems=["alpha", "beta"],
        input_vectors=rng.normal(size=(2, 3)),
        context_vectors=rng.normal(size=(2, 3)),
    )
    path = tmp_path / "tiny.t2v"
    save_vectors(tv, path, include_context=True)
    loaded = load_vectors(path, load_context=True)
    assert loaded.stems == tv.stems
    assert np.array_equal(loaded.input_vectors, tv.input_vectors)
    assert np.array_equal(loaded.context_vectors, tv.context_vectors)


def test_round_trip_extreme_values(tmp_path):
    vals = np.array([[0.0, -0.0, 1e-308], [math.pi, -1e308, 5e-324]])
    tv = TagVectors(stems=["a", "b"], input_vectors=vals)
    path = tmp_path / "x.t2v"
    save_vectors(tv, path)
    loaded = load_vectors(path)
    assert np.array_equal(loaded.input_vectors, vals)
    assert struct.pack("<d", loaded.input_vectors[0, 1]) == struct.pack("<d", -0.0)


def test_load_cross_writer(tmp_path):
    # independent writer following the format description
    rows = {"cat": [1.5, -2.25], "dog": [0.1, 1e-12]}
    lines = [f"T2V {len(rows)} 2"]
    for stem, vec in rows.items():
        packed = " ".join(struct.pack("<d", x).hex() for x in vec)
        lines.append(f"{stem} {packed}")
    path = tmp_path / "ind.t2v"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tv = load_vectors(path)
    assert tv.stems == ["cat", "dog"]
    assert np.array_equal(tv.input_vectors, np.array([rows["cat"], rows["dog"]]))


def test_load_error_cases(tmp_path):
    good_row = "w " + struct.pack("<d", 1.0).hex()
    cases = {
        "bad_header.t2v": ("XXX 1 1\n" + good_row + "\n", MalformedHeaderError),
        "bad_counts.t2v": ("T2V x 1\n" + good_row + "\n", MalformedHeaderError),
        "truncated.t2v": ("T2V 2 1\n" + good_row + "\n", TruncatedPayloadError),
        "dim_mismatch.t2v": (
            "T2V 1 2\n" + good_row + "\n", DimensionMismatchError),
        "trailing.t2v": ("T2V 1 1\n" + good_row + "\n" + good_row + "\n",
                         TagforgeError),
    }
    for name, (content, exc) in cases.items():
        path = tmp_path / name
        path.write_text(content, encoding="utf-8")
        with pytest.raises(exc):
            load_vectors(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(TagforgeError, match="missing.t2v"):
        load_vectors(tmp_path / "missing.t2v")
