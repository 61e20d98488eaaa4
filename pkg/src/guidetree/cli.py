"""Command-line entry points: ingest, build, query, eval, serve.

State between invocations lives in a workspace directory (corpus copy, chunk
settings, tree snapshot), so each verb runs as its own process. Exit codes:
0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .assistant import Assistant, AssistantConfig, Session
from .corpus import chunk_document, load_corpus
from .embed import HashEmbedder
from .evaluation import load_benchmark, rule_judge, run_benchmark
from .raptor import load_tree, save_tree, traverse_retrieve
from .service import AppState, build_config_from_overrides, answer_to_response
from .tools import (
    ToolRegistry,
    make_checklist_tool,
    make_retrieval_tool,
    make_summary_tool,
)

DEFAULT_WORKSPACE = ".guidetree"


def _workspace(ctx) -> Path:
    ws = Path(ctx.obj["workspace"])
    ws.mkdir(parents=True, exist_ok=True)
    return ws


def _load_state_tree(ws: Path):
    tree_path = ws / "tree.snapshot"
    if not tree_path.exists():
        raise click.ClickException("no tree built; run 'build' first")
    return load_tree(tree_path)


def _emit(ctx, human: str, record: dict):
    if ctx.obj["format"] == "records":
        click.echo(json.dumps(record, ensure_ascii=False))
    else:
        click.echo(human)


@click.group()
@click.option("--workspace", default=DEFAULT_WORKSPACE, show_default=True,
              help="Directory holding corpus and tree state between verbs.")
@click.option("--format", "fmt", type=click.Choice(["text", "records"]),
              default="text", show_default=True)
@click.pass_context
def cli(ctx, workspace, fmt):
    """Grounded emergency-guidance retrieval over a hierarchical summary tree."""
    ctx.ensure_object(dict)
    ctx.obj["workspace"] = workspace
    ctx.obj["format"] = fmt


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def ingest(ctx, path):
    """Load and chunk a corpus file into the workspace."""
    ws = _workspace(ctx)
    docs = load_corpus(path)
    chunk_count = sum(len(chunk_document(d)) for d in docs)
    (ws / "corpus.jsonl").write_text(Path(path).read_text(encoding="utf-8"),
                                     encoding="utf-8")
    _emit(ctx, f"ingested {len(docs)} documents ({chunk_count} chunks)",
          {"doc_count": len(docs), "chunk_count": chunk_count})


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--k-range", default=None, help="BIC selection range, e.g. 1,8")
@click.pass_context
def build(ctx, seed, k_range):
    """Build the summary tree from the ingested corpus."""
    ws = _workspace(ctx)
    corpus_path = ws / "corpus.jsonl"
    if not corpus_path.exists():
        raise click.ClickException("no corpus ingested; run 'ingest' first")
    overrides = {"seed": seed}
    if k_range:
        try:
            a, b = (int(x) for x in k_range.split(","))
        except ValueError:
            raise click.UsageError("--k-range must be two integers like 1,8")
        overrides["k_range"] = (a, b)
    state = AppState()
    docs = load_corpus(corpus_path)
    records = [dict(d.source.to_dict(), text=d.text) for d in docs]
    cfg = build_config_from_overrides(overrides)
    state.ingest(records, cfg.chunk_cfg)
    result = state.build(cfg)
    save_tree(state.tree, ws / "tree.snapshot")
    result["digest"] = state.tree.content_digest()
    _emit(ctx, "built tree: levels=" + ",".join(str(n) for n in result["levels"])
          + f" nodes={result['node_count']} digest={result['digest'][:16]}", result)


@cli.command()
@click.argument("text")
@click.option("--strategy", type=click.Choice(["collapsed", "traverse"]),
              default="collapsed", show_default=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.pass_context
def query(ctx, text, strategy, k):
    """Answer a query against the built tree, with citations and verdict."""
    if k < 1:
        raise click.UsageError("--k must be >= 1")
    ws = _workspace(ctx)
    tree = _load_state_tree(ws)
    embedder = HashEmbedder()
    if strategy == "traverse":
        hits = traverse_retrieve(tree, embedder.embed(text), beam=3, k=k)
        record = {"hits": [{"node_id": n.node_id, "score": s, "level": n.level,
                            "text": n.text} for n, s in hits]}
        human = "\n".join(f"[{s: .4f}] L{n.level} {n.node_id}: {n.text[:80]}"
                          for n, s in hits)
        _emit(ctx, human, record)
        return
    registry = ToolRegistry()
    registry.register(*make_retrieval_tool(tree, embedder))
    registry.register(*make_checklist_tool(tree, embedder))
    from .raptor import extractive_summarize

    registry.register(*make_summary_tool(tree, embedder, extractive_summarize))
    assistant = Assistant(tree, embedder, registry, AssistantConfig(retrieve_k=k))
    answer = assistant.answer_query(text, Session(session_id="cli"))
    record = answer_to_response(answer)
    cites = "; ".join(f"{c['title']} ({c['publisher']})" for c in record["citations"])
    human = (f"{record['answer_text']}\n\nverdict: {record['verdict']}\n"
             f"sources: {cites or 'none'}")
    _emit(ctx, human, record)


@cli.command("eval")
@click.argument("benchmark_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--judge", "judge_name", type=click.Choice(["rule", "remote"]),
              default="rule", show_default=True)
@click.pass_context
def eval_cmd(ctx, benchmark_path, judge_name):
    """Run the five-criterion benchmark against the built tree."""
    if judge_name == "remote":
        raise click.ClickException("remote judge requires endpoint configuration")
    ws = _workspace(ctx)
    tree = _load_state_tree(ws)
    embedder = HashEmbedder()
    registry = ToolRegistry()
    registry.register(*make_retrieval_tool(tree, embedder))
    assistant = Assistant(tree, embedder, registry, AssistantConfig())

    def answerer(item):
        return assistant.answer_query(item.question, Session(session_id="eval"))

    items = load_benchmark(benchmark_path)
    report = run_benchmark(items, [("guidetree", answerer)], judge=rule_judge)
    if ctx.obj["format"] == "records":
        for rec in report.records():
            click.echo(json.dumps(rec))
    else:
        click.echo(report.table())


@cli.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_context
def serve(ctx, port, host):
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except click.exceptions.Abort:
        return 2
    except Exception as exc:  # runtime failure
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
