"""End-to-end pipeline driver: synth -> corpus -> t2v -> gmm -> fv ->
embed -> evaluate -> store, configured by one TOML file.

Every stage derives its seed from the single pipeline seed, records a
manifest of its config and output content hashes, and is skipped on
rerun when those hashes still match (``force`` reruns everything).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import synth
from .corpus import build_corpus, load_corpus, read_records_jsonl, save_corpus
from .crossmodal import (
    NetConfig,
    build_train_pairs,
    load_net,
    nearest_class_accuracy,
    save_net,
    train_embedding,
)
from .descriptors import load_descriptor_dir
from .errors import TagforgeError
from .fisher import encode_fisher, load_fisher_dir, save_fisher
from .gmm import EmConfig, fit_gmm, load_gmm, save_gmm
from .service import build_store
from .suggest import SuggestConfig, suggest_tags
from .tag2vec import T2VConfig, load_vectors, save_vectors, train_tag2vec
from .util import config_hash, derive_seed, sha256_file

_ALLOWED_KEYS = {
    "pipeline": {"out", "seed"},
    "synth": {
        "classes", "per_class", "descriptors_per_video", "descriptor_dim",
        "stems_per_group", "sentences", "tags_per_sentence", "test_fraction",
    },
    "corpus": {"min_count"},
    "t2v": {"dim", "window", "negatives", "epochs", "initial_lr", "min_lr",
            "subsample_t"},
    "gmm": {"k", "max_iters", "ll_rel_tol", "init"},
    "fv": {"normalize"},
    "embed": {"hidden", "max_iters", "optimizer", "lr", "momentum",
              "batch_size", "l2_reg"},
    "suggest": {"k"},
    "store": {"media_base"},
}

_DEFAULTS = {
    "synth": {
        "classes": 5, "per_class": 20, "descriptors_per_video": 200,
        "descriptor_dim": 16, "stems_per_group": 8, "sentences": 2000,
        "tags_per_sentence": 4, "test_fraction": 0.2,
    },
    "corpus": {"min_count": 1},
    "t2v": {"dim": 25, "window": 5, "negatives": 5, "epochs": 15,
            "initial_lr": 0.025, "min_lr": 1e-4, "subsample_t": 0.0},
    "gmm": {"k": 4, "max_iters": 100, "ll_rel_tol": 1e-6, "init": "kmeans_pp"},
    "fv": {"normalize": "ssqrt_l2"},
    "embed": {"hidden": 32, "max_iters": 300, "optimizer": "full_batch_gd_momentum",
              "lr": 0.1, "momentum": 0.9, "batch_size": 64, "l2_reg": 1e-4},
    "suggest": {"k": 15},
    "store": {"media_base": "media"},
}


@dataclass
class PipelineConfig:
    out: Path
    seed: int
    stages: dict[str, dict]

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise TagforgeError(f"config file not found: {path}")
        try:
            doc = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise TagforgeError(f"{path}: invalid TOML ({exc})") from None
        unknown_tables = set(doc) - set(_ALLOWED_KEYS)
        if unknown_tables:
            raise TagforgeError(f"{path}: unknown tables {sorted(unknown_tables)}")
        for table, values in doc.items():
            bad = set(values) - _ALLOWED_KEYS[table]
            if bad:
                raise TagforgeError(f"{path}: unknown keys in [{table}]: {sorted(bad)}")
        pipeline = doc.get("pipeline", {})
        out = Path(pipeline.get("out", "pipeline-out"))
        if not out.is_absolute():
            out = path.parent / out
        stages = {
            name: {**defaults, **doc.get(name, {})}
            for name, defaults in _DEFAULTS.items()
        }
        return cls(out=out, seed=int(pipeline.get("seed", 1)), stages=stages)


class StageRunner:
    """Runs stages with content-hash skip detection."""

    def __init__(self, out_dir: Path, force: bool, echo=print):
        self.out = out_dir
        self.force = force
        self.echo = echo
        self.manifest_dir = out_dir / ".stages"
        self.manifest_dir.mkdir(parents=True, exist_ok=True)

    def run(self, name: str, cfg: dict, outputs: list[Path], fn) -> None:
        manifest_path = self.manifest_dir / f"{name}.json"
        want_hash = config_hash(cfg)
        if not self.force and self._outputs_match(manifest_path, want_hash, outputs):
            self.echo(f"[{name}] up to date, skipping")
            return
        self.echo(f"[{name}] running")
        fn()
        hashes = {}
        for out in outputs:
            if not out.exists():
                raise TagforgeError(f"stage {name} did not produce {out}")
            hashes[str(out.relative_to(self.out))] = _hash_path(out)
        manifest_path.write_text(
            json.dumps({"config": want_hash, "outputs": hashes}, sort_keys=True,
                       separators=(",", ":")) + "\n",
            encoding="utf-8",
        )

    def _outputs_match(self, manifest_path: Path, want_hash: str,
                       outputs: list[Path]) -> bool:
        if not manifest_path.exists():
            return False
        try:
            doc = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return False
        if doc.get("config") != want_hash:
            return False
        recorded = doc.get("outputs", {})
        if set(recorded) != {str(o.relative_to(self.out)) for o in outputs}:
            return False
        return all(
            (self.out / rel).exists() and _hash_path(self.out / rel) == digest
            for rel, digest in recorded.items()
        )


def _hash_path(path: Path) -> str:
    if path.is_dir():
        parts = []
        for child in sorted(path.rglob("*")):
            if child.is_file():
                parts.append(f"{child.relative_to(path)}:{sha256_file(child)}")
        import hashlib

        return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()
    return sha256_file(path)


def run_pipeline(config_path: str | Path, force: bool = False, echo=print) -> dict:
    """Execute all stages; returns the final metrics document."""
    cfg = PipelineConfig.load(config_path)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    runner = StageRunner(out, force, echo)
    s = cfg.stages

    records_path = out / "records.jsonl"
    desc_dir = out / "descriptors"
    labels_all = out / "labels.tsv"
    labels_train = out / "labels-train.tsv"
    labels_test = out / "labels-test.tsv"
    corpus_dir = out / "corpus"
    t2v_path = out / "tags.t2v"
    gmm_path = out / "gmm.json"
    fv_dir = out / "fv"
    net_path = out / "net.json"
    metrics_path = out / "metrics.json"
    store_dir = out / "store"

    def synth_stage():
        sy = s["synth"]
        records, _ = synth.grouped_tag_records(
            groups=sy["classes"],
            stems_per_group=sy["stems_per_group"],
            sentences=sy["sentences"],
            tags_per_sentence=sy["tags_per_sentence"],
            seed=derive_seed(cfg.seed, "synth-corpus"),
        )
        with records_path.open("w", encoding="utf-8", newline="\n") as fh:
            for rec in records:
                fh.write(json.dumps(
                    {"video_id": rec.video_id, "tags": rec.raw_tags},
                    sort_keys=True, separators=(",", ":")) + "\n")
        sets, manifest = synth.class_descriptor_sets(
            classes=sy["classes"],
            per_class=sy["per_class"],
            n=sy["descriptors_per_video"],
            d=sy["descriptor_dim"],
            seed=derive_seed(cfg.seed, "synth-descriptors"),
            test_fraction=sy["test_fraction"],
        )
        synth.write_descriptor_dir(sets, desc_dir)
        synth.write_labels(manifest, labels_all)
        synth.write_labels(manifest, labels_train, split="train")
        synth.write_labels(manifest, labels_test, split="test")

    runner.run("synth", {**s["synth"], "seed": cfg.seed},
               [records_path, desc_dir, labels_all, labels_train, labels_test],
               synth_stage)

    def corpus_stage():
        corpus, diags = build_corpus(
            read_records_jsonl(records_path), min_count=s["corpus"]["min_count"]
        )
        if diags.malformed_records:
            raise TagforgeError(
                f"{records_path}: {diags.malformed_records} malformed records"
            )
        save_corpus(corpus, corpus_dir)

    runner.run("corpus", s["corpus"], [corpus_dir], corpus_stage)

    def t2v_stage():
        corpus = load_corpus(corpus_dir)
        t2v_cfg = T2VConfig(seed=derive_seed(cfg.seed, "t2v"), **s["t2v"])
        save_vectors(train_tag2vec(corpus, t2v_cfg), t2v_path)

    runner.run("t2v", {**s["t2v"], "seed": cfg.seed}, [t2v_path], t2v_stage)

    def gmm_stage():
        train_ids = set(synth.read_labels(labels_train))
        sets = [ds for ds in load_descriptor_dir(desc_dir) if ds.video_id in train_ids]
        if not sets:
            raise TagforgeError("no training descriptors found")
        pooled = np.vstack([ds.matrix for ds in sets])
        em = EmConfig(
            max_iters=s["gmm"]["max_iters"],
            ll_rel_tol=s["gmm"]["ll_rel_tol"],
            init=s["gmm"]["init"],
            seed=derive_seed(cfg.seed, "gmm"),
        )
        save_gmm(fit_gmm(pooled, s["gmm"]["k"], em), gmm_path)

    runner.run("gmm", {**s["gmm"], "seed": cfg.seed}, [gmm_path], gmm_stage)

    def fv_stage():
        gmm = load_gmm(gmm_path)
        fv_dir.mkdir(parents=True, exist_ok=True)
        for ds in load_descriptor_dir(desc_dir):
            fv = encode_fisher(gmm, ds, normalize=s["fv"]["normalize"])
            save_fisher(fv, fv_dir / f"{ds.video_id}.fv")

    runner.run("fv", s["fv"], [fv_dir], fv_stage)

    def embed_stage():
        labels = synth.read_labels(labels_train)
        fvs = _labeled_fvs(fv_dir, labels)
        tv = load_vectors(t2v_path)
        pairs = build_train_pairs(fvs, labels, tv)
        net_cfg = NetConfig(seed=derive_seed(cfg.seed, "embed"), **s["embed"])
        save_net(train_embedding(pairs, net_cfg), net_path)

    runner.run("embed", {**s["embed"], "seed": cfg.seed}, [net_path], embed_stage)

    def evaluate_stage():
        metrics = evaluate_heldout(
            net_path, t2v_path, corpus_dir, fv_dir, labels_test,
            k=s["suggest"]["k"],
        )
        metrics["train_videos"] = len(synth.read_labels(labels_train))
        metrics_path.write_text(
            json.dumps(metrics, sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )

    runner.run("evaluate", {"k": s["suggest"]["k"]}, [metrics_path], evaluate_stage)

    def store_stage():
        labels = synth.read_labels(labels_test)
        fvs = _labeled_fvs(fv_dir, labels)
        tv = load_vectors(t2v_path)
        net = load_net(net_path)
        dm = load_corpus(corpus_dir).destem
        store = build_store(fvs, net, tv, dm, labels, k=s["suggest"]["k"],
                            media_base=s["store"]["media_base"])
        store.save(store_dir)

    runner.run("store", {**s["suggest"], **s["store"]}, [store_dir], store_stage)

    metrics = json.loads(metrics_path.read_text(encoding="utf-8"))
    k = s["suggest"]["k"]
    echo = runner.echo
    echo(
        f"held-out top-{k} hit-rate: {metrics['heldout_topk_hit_rate']:.3f} "
        f"(nearest-class accuracy {metrics['heldout_nearest_class_accuracy']:.3f})"
    )
    return metrics


def _labeled_fvs(fv_dir: Path, labels: dict[str, str]):
    fvs = [fv for fv in load_fisher_dir(fv_dir) if fv.video_id in labels]
    missing = set(labels) - {fv.video_id for fv in fvs}
    if missing:
        raise TagforgeError(f"missing fisher vectors for: {sorted(missing)}")
    return fvs


def evaluate_heldout(
    net_path: Path,
    t2v_path: Path,
    corpus_dir: Path,
    fv_dir: Path,
    labels_path: Path,
    k: int = 15,
) -> dict:
    """Held-out nearest-class accuracy and top-k suggestion hit rate."""
    labels = synth.read_labels(labels_path)
    fvs = _labeled_fvs(fv_dir, labels)
    tv = load_vectors(t2v_path)
    net = load_net(net_path)
    dm = load_corpus(corpus_dir).destem
    pairs = build_train_pairs(fvs, labels, tv)
    class_vectors = {stem: tv.vector(stem) for stem in sorted(set(labels.values()))}
    acc = nearest_class_accuracy(net, pairs, class_vectors)
    hits = 0
    for fv in fvs:
        suggestions = suggest_tags(fv, net, tv, dm, SuggestConfig(k=k))
        stems = {sug.stem for sug in suggestions}
        hits += labels[fv.video_id] in stems
    return {
        "heldout_nearest_class_accuracy": acc,
        "heldout_topk_hit_rate": hits / len(fvs),
        "k": k,
        "test_videos": len(fvs),
    }
