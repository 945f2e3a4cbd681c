"""The ``tagforge`` command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import synth as synthmod
from .corpus import build_corpus, load_corpus, load_destem, read_records_jsonl, save_corpus
from .crossmodal import (
    NetConfig,
    build_train_pairs,
    export_projections,
    load_net,
    save_net,
    train_embedding,
)
from .descriptors import load_descriptor_dir
from .errors import TagforgeError
from .evalstats import aggregate_relevance, read_marks_jsonl, report_to_json_bytes, report_to_tsv
from .fisher import encode_fisher, load_fisher, load_fisher_dir, save_fisher
from .gmm import EmConfig, fit_gmm, load_gmm, save_gmm
from .pipeline import run_pipeline
from .service import SurveyStore, build_store, create_app
from .suggest import SuggestConfig, suggest_tags
from .tag2vec import T2VConfig, load_vectors, nearest_tags, save_vectors, train_tag2vec


@click.group()
@click.option("--seed", type=int, default=1, show_default=True,
              help="Global seed; stages derive their own from it.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads where a stage supports them.")
@click.option("--force", is_flag=True, help="Rerun pipeline stages even if up to date.")
@click.pass_context
def cli(ctx, seed, threads, force):
    """Hash-tag vector spaces, Fisher encoding and tag suggestion."""
    ctx.obj = {"seed": seed, "threads": threads, "force": force}


# ---------------------------------------------------------------- corpus

@cli.group()
def corpus():
    """Build and inspect tag corpora."""


@corpus.command("build")
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--min-count", default=5, show_default=True, type=int)
def corpus_build(input_path, out_dir, min_count):
    if not input_path.exists():
        raise TagforgeError(f"records file not found: {input_path}")
    built, diags = build_corpus(read_records_jsonl(input_path), min_count=min_count)
    save_corpus(built, out_dir)
    click.echo(
        f"corpus: {len(built.sentences)} sentences, |V|={len(built.vocab)}, "
        f"malformed={diags.malformed_records} dropped={diags.dropped_records}"
    )


# ---------------------------------------------------------------- t2v

@cli.group()
def t2v():
    """Train and query tag embeddings."""


@t2v.command("train")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(path_type=Path))
@click.option("--dim", default=100, show_default=True, type=int)
@click.option("--window", default=5, show_default=True, type=int)
@click.option("--negatives", default=5, show_default=True, type=int)
@click.option("--epochs", default=15, show_default=True, type=int)
@click.option("--lr", default=0.025, show_default=True, type=float)
@click.option("--subsample", default=1e-4, show_default=True, type=float)
@click.option("--seed", default=None, type=int, help="Overrides the global seed.")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.pass_context
def t2v_train(ctx, corpus_dir, dim, window, negatives, epochs, lr, subsample, seed, out_path):
    cfg = T2VConfig(
        dim=dim, window=window, negatives=negatives, epochs=epochs,
        initial_lr=lr, subsample_t=subsample,
        seed=seed if seed is not None else ctx.obj["seed"],
    )
    tv = train_tag2vec(load_corpus(corpus_dir), cfg, workers=ctx.obj["threads"])
    save_vectors(tv, out_path)
    click.echo(f"trained {len(tv.stems)} vectors of dim {tv.dim} -> {out_path}")


@t2v.command("nn")
@click.option("--model", "model_path", required=True, type=click.Path(path_type=Path))
@click.option("--query", required=True)
@click.option("--k", default=30, show_default=True, type=int)
@click.option("--metric", default="l2", show_default=True,
              type=click.Choice(["l2", "cosine"]))
def t2v_nn(model_path, query, k, metric):
    tv = load_vectors(model_path)
    for rank, (stem, score) in enumerate(
        nearest_tags(tv, query, k=k, metric=metric), start=1
    ):
        click.echo(f"{rank}\t{stem}\t{score!r}")


# ---------------------------------------------------------------- gmm / fv

@cli.group()
def gmm():
    """Fit mixture vocabularies."""


@gmm.command("fit")
@click.option("--descriptors", "desc_dir", required=True, type=click.Path(path_type=Path))
@click.option("--k", default=64, show_default=True, type=int)
@click.option("--max-iters", default=100, show_default=True, type=int)
@click.option("--init", default="kmeans_pp", show_default=True,
              type=click.Choice(["kmeans_pp", "random_points"]))
@click.option("--seed", default=None, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.pass_context
def gmm_fit(ctx, desc_dir, k, max_iters, init, seed, out_path):
    pooled = np.vstack([ds.matrix for ds in load_descriptor_dir(desc_dir)])
    cfg = EmConfig(
        max_iters=max_iters, init=init,
        seed=seed if seed is not None else ctx.obj["seed"],
    )
    model = fit_gmm(pooled, k, cfg)
    save_gmm(model, out_path)
    diags = model.diagnostics
    click.echo(
        f"fit K={k} on {pooled.shape[0]}x{pooled.shape[1]} in "
        f"{diags.iterations} iterations (converged={diags.converged}) -> {out_path}"
    )


@cli.group()
def fv():
    """Fisher-vector encoding."""


@fv.command("encode")
@click.option("--gmm", "gmm_path", required=True, type=click.Path(path_type=Path))
@click.option("--descriptors", "desc_dir", required=True, type=click.Path(path_type=Path))
@click.option("--normalize", default="ssqrt_l2", show_default=True,
              type=click.Choice(["none", "ssqrt", "l2", "ssqrt_l2"]))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def fv_encode(gmm_path, desc_dir, normalize, out_dir):
    model = load_gmm(gmm_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for ds in load_descriptor_dir(desc_dir):
        encoded = encode_fisher(model, ds, normalize=normalize)
        if encoded.degenerate:
            click.echo(f"warning: {ds.video_id}: all-zero encoding", err=True)
        save_fisher(encoded, out_dir / f"{ds.video_id}.fv")
        count += 1
    click.echo(f"encoded {count} videos (F={2 * model.k * model.d}) -> {out_dir}")


# ---------------------------------------------------------------- embed

@cli.group()
def embed():
    """Train and apply the video-to-tag-space net."""


def _labeled_fvs(fv_dir: Path, labels: dict[str, str]):
    fvs = [f for f in load_fisher_dir(fv_dir) if f.video_id in labels]
    missing = set(labels) - {f.video_id for f in fvs}
    if missing:
        raise TagforgeError(f"missing fisher vectors for: {sorted(missing)}")
    return fvs


@embed.command("train")
@click.option("--fv", "fv_dir", required=True, type=click.Path(path_type=Path))
@click.option("--labels", "labels_path", required=True, type=click.Path(path_type=Path))
@click.option("--t2v", "t2v_path", required=True, type=click.Path(path_type=Path))
@click.option("--hidden", default=600, show_default=True, type=int)
@click.option("--max-iters", default=1000, show_default=True, type=int)
@click.option("--lr", default=1e-2, show_default=True, type=float)
@click.option("--l2-reg", default=1e-4, show_default=True, type=float)
@click.option("--optimizer", default="full_batch_gd_momentum", show_default=True,
              type=click.Choice(["full_batch_gd_momentum", "minibatch_sgd"]))
@click.option("--seed", default=None, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.pass_context
def embed_train(ctx, fv_dir, labels_path, t2v_path, hidden, max_iters, lr, l2_reg,
                optimizer, seed, out_path):
    labels = synthmod.read_labels(labels_path)
    pairs = build_train_pairs(_labeled_fvs(fv_dir, labels), labels,
                              load_vectors(t2v_path))
    cfg = NetConfig(
        hidden=hidden, max_iters=max_iters, lr=lr, l2_reg=l2_reg,
        optimizer=optimizer, seed=seed if seed is not None else ctx.obj["seed"],
    )
    net = train_embedding(pairs, cfg)
    save_net(net, out_path)
    final = net.diagnostics.accepted_losses[-1]
    click.echo(f"trained on {len(pairs)} pairs, final loss {final:.6g} -> {out_path}")


@embed.command("project")
@click.option("--net", "net_path", required=True, type=click.Path(path_type=Path))
@click.option("--fv", "fv_path", required=True, type=click.Path(path_type=Path))
def embed_project(net_path, fv_path):
    from .crossmodal import project

    net = load_net(net_path)
    vec = project(net, load_fisher(fv_path).values)
    click.echo(" ".join(repr(float(v)) for v in vec))


@embed.command("export-proj")
@click.option("--net", "net_path", required=True, type=click.Path(path_type=Path))
@click.option("--fv", "fv_dir", required=True, type=click.Path(path_type=Path))
@click.option("--labels", "labels_path", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def embed_export_proj(net_path, fv_dir, labels_path, out_path):
    labels = synthmod.read_labels(labels_path)
    export_projections(load_net(net_path), _labeled_fvs(fv_dir, labels), labels, out_path)
    click.echo(f"projections -> {out_path}")


# ---------------------------------------------------------------- suggest

@cli.command("suggest")
@click.option("--net", "net_path", required=True, type=click.Path(path_type=Path))
@click.option("--t2v", "t2v_path", required=True, type=click.Path(path_type=Path))
@click.option("--destem", "destem_path", required=True, type=click.Path(path_type=Path))
@click.option("--fv", "fv_path", required=True, type=click.Path(path_type=Path))
@click.option("--k", default=15, show_default=True, type=int)
@click.option("--exclude", multiple=True, help="Stems to exclude (repeatable).")
@click.option("--format", "fmt", default="tsv", show_default=True,
              type=click.Choice(["tsv", "json"]))
def suggest_cmd(net_path, t2v_path, destem_path, fv_path, k, exclude, fmt):
    if not destem_path.exists():
        raise TagforgeError(f"destem file not found: {destem_path}")
    suggestions = suggest_tags(
        load_fisher(fv_path),
        load_net(net_path),
        load_vectors(t2v_path),
        load_destem(destem_path),
        SuggestConfig(k=k, exclude_stems=frozenset(exclude)),
    )
    if fmt == "tsv":
        for s in suggestions:
            click.echo(f"{s.rank}\t{s.surface}\t{s.stem}\t{s.distance!r}")
    else:
        click.echo(json.dumps(
            [
                {"rank": s.rank, "surface": s.surface, "stem": s.stem,
                 "distance": s.distance}
                for s in suggestions
            ],
            sort_keys=True,
        ))


# ---------------------------------------------------------------- eval / serve

@cli.group("eval")
def eval_group():
    """Aggregate survey relevance marks."""


@eval_group.command("report")
@click.option("--marks", "marks_path", required=True, type=click.Path(path_type=Path))
@click.option("--labels", "labels_path", required=True, type=click.Path(path_type=Path))
@click.option("--k", default=15, show_default=True, type=int)
@click.option("--out", "out_path", default=None, type=click.Path(path_type=Path))
@click.option("--json-out", "json_path", default=None, type=click.Path(path_type=Path))
def eval_report(marks_path, labels_path, k, out_path, json_path):
    report = aggregate_relevance(
        read_marks_jsonl(marks_path), synthmod.read_labels(labels_path), k=k
    )
    tsv = report_to_tsv(report)
    if out_path is not None:
        out_path.write_text(tsv, encoding="utf-8")
        click.echo(f"report -> {out_path}")
    else:
        click.echo(tsv, nl=False)
    if json_path is not None:
        json_path.write_bytes(report_to_json_bytes(report))
        click.echo(f"json report -> {json_path}")


@cli.command("serve")
@click.option("--store", "store_dir", required=True, type=click.Path(path_type=Path))
@click.option("--marks", "marks_path", required=True, type=click.Path(path_type=Path))
@click.option("--port", default=8080, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", "ui_dir", default=None, type=click.Path(path_type=Path),
              help="Directory with the built annotator UI bundle.")
def serve_cmd(store_dir, marks_path, port, host, ui_dir):
    import uvicorn

    app = create_app(SurveyStore.load(store_dir), marks_path, static_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


# ---------------------------------------------------------------- synth / store

@cli.group("synth")
def synth_group():
    """Generate synthetic fixtures."""


@synth_group.command("descriptors")
@click.option("--classes", default=5, show_default=True, type=int)
@click.option("--per-class", default=20, show_default=True, type=int)
@click.option("--n", default=200, show_default=True, type=int)
@click.option("--d", default=16, show_default=True, type=int)
@click.option("--test-fraction", default=0.2, show_default=True, type=float)
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def synth_descriptors(classes, per_class, n, d, test_fraction, seed, out_dir):
    sets, manifest = synthmod.class_descriptor_sets(
        classes=classes, per_class=per_class, n=n, d=d, seed=seed,
        test_fraction=test_fraction,
    )
    synthmod.write_descriptor_dir(sets, out_dir)
    synthmod.write_labels(manifest, out_dir / "labels.tsv")
    synthmod.write_labels(manifest, out_dir / "labels-train.tsv", split="train")
    synthmod.write_labels(manifest, out_dir / "labels-test.tsv", split="test")
    click.echo(f"wrote {len(sets)} descriptor sets and labels -> {out_dir}")


@synth_group.command("corpus")
@click.option("--groups", default=5, show_default=True, type=int)
@click.option("--stems-per-group", default=8, show_default=True, type=int)
@click.option("--sentences", default=2000, show_default=True, type=int)
@click.option("--tags-per-sentence", default=4, show_default=True, type=int)
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def synth_corpus(groups, stems_per_group, sentences, tags_per_sentence, seed, out_path):
    records, _ = synthmod.grouped_tag_records(
        groups=groups, stems_per_group=stems_per_group, sentences=sentences,
        tags_per_sentence=tags_per_sentence, seed=seed,
    )
    with out_path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(
                {"video_id": rec.video_id, "tags": rec.raw_tags},
                sort_keys=True, separators=(",", ":")) + "\n")
    click.echo(f"wrote {len(records)} records -> {out_path}")


@cli.group("store")
def store_group():
    """Survey store management."""


@store_group.command("build")
@click.option("--fv", "fv_dir", required=True, type=click.Path(path_type=Path))
@click.option("--labels", "labels_path", required=True, type=click.Path(path_type=Path))
@click.option("--net", "net_path", required=True, type=click.Path(path_type=Path))
@click.option("--t2v", "t2v_path", required=True, type=click.Path(path_type=Path))
@click.option("--destem", "destem_path", required=True, type=click.Path(path_type=Path))
@click.option("--k", default=15, show_default=True, type=int)
@click.option("--media-base", default="media", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def store_build(fv_dir, labels_path, net_path, t2v_path, destem_path, k, media_base, out_dir):
    if not destem_path.exists():
        raise TagforgeError(f"destem file not found: {destem_path}")
    labels = synthmod.read_labels(labels_path)
    store = build_store(
        _labeled_fvs(fv_dir, labels),
        load_net(net_path),
        load_vectors(t2v_path),
        load_destem(destem_path),
        labels,
        k=k,
        media_base=media_base,
    )
    store.save(out_dir)
    click.echo(f"store with {len(store.videos)} videos -> {out_dir}")


# ---------------------------------------------------------------- pipeline

@cli.group("pipeline")
def pipeline_group():
    """Run all stages from one config."""


@pipeline_group.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path))
@click.option("--force", is_flag=True, help="Rerun stages even if up to date.")
@click.pass_context
def pipeline_run(ctx, config_path, force):
    run_pipeline(config_path, force=force or ctx.obj["force"], echo=click.echo)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except TagforgeError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
