"""Operator command line: extract articles, serve an endpoint, query a
federation, and drive executions.

Exit codes are scripting-stable: 0 success, 1 partial result or content
error, 2 usage error, 3 federation failure. Data goes to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import execution as exec_engine
from . import extract as extract_mod
from . import federation as fed
from .rdf import DEFAULT_PREFIXES, EX_NS, Graph, Iri, expand, lexical_str, serialize_turtle
from .server import EndpointConfig, KnowHowEndpoint
from .sparql import QueryParseError, parse_query
from .results import encode_results

PARTIAL, USAGE, FEDERATION_FAILURE = 1, 2, 3


@dataclass(frozen=True)
class CliConfig:
    federation_file: str
    publish_target: str | None
    base_namespace: str
    output_format: str


def _load_endpoints(federation_file: str | None) -> list[fed.EndpointDescriptor]:
    if not federation_file:
        raise click.UsageError("no federation configured (--federation or KNOWHOW_FEDERATION)")
    try:
        return fed.load_federation(federation_file)
    except (OSError, ValueError) as exc:
        raise click.UsageError(f"bad federation config {federation_file}: {exc}")


def _parse_iri(text: str) -> Iri:
    """Accept `<http://…>`, an absolute IRI, or a name in one of the
    well-known prefixes (`:organise_conference`, `prohow:has_step`)."""
    text = text.strip()
    if text.startswith("<") and text.endswith(">"):
        text = text[1:-1]
    try:
        if "://" not in text and ":" in text:
            prefix = text.split(":", 1)[0]
            if prefix in DEFAULT_PREFIXES:
                return expand(text, DEFAULT_PREFIXES)
        return Iri(text)
    except ValueError as exc:
        raise click.UsageError(f"not an IRI: {text} ({exc})")


def _pick_target(endpoints: list[fed.EndpointDescriptor], name: str | None) -> str:
    if not name:
        raise click.UsageError("no publish target configured (--target or KNOWHOW_TARGET)")
    if name not in {ep.name for ep in endpoints}:
        raise click.UsageError(f"publish target {name!r} is not in the federation")
    return name


def _emit_result_json(result: fed.FederatedResult) -> None:
    doc = json.loads(encode_results(result.bindings))
    doc["responded"] = result.responded
    doc["failed"] = [{"name": n, "reason": r} for n, r in result.failed]
    click.echo(json.dumps(doc, indent=2))


def _report_partial(failed: list[tuple[str, str]]) -> bool:
    for name, reason in failed:
        click.echo(f"endpoint {name} failed: {reason}", err=True)
    return bool(failed)


federation_option = click.option(
    "--federation",
    "federation_file",
    envvar="KNOWHOW_FEDERATION",
    type=click.Path(),
    help="Federation config JSON (env: KNOWHOW_FEDERATION).",
)
format_option = click.option(
    "--format",
    "output_format",
    envvar="KNOWHOW_FORMAT",
    type=click.Choice(["text", "json"]),
    default="text",
    show_default=True,
)
target_option = click.option(
    "--target",
    "publish_target",
    envvar="KNOWHOW_TARGET",
    help="Federation endpoint name to publish to (env: KNOWHOW_TARGET).",
)
base_ns_option = click.option(
    "--base-ns",
    "base_namespace",
    envvar="KNOWHOW_BASE_NS",
    default=EX_NS,
    show_default=True,
    help="Namespace for minted IRIs (env: KNOWHOW_BASE_NS).",
)


@click.group()
def main() -> None:
    """Community know-how as linked data: extract, serve, query, execute."""
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------


@main.command("extract")
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("output_dir", type=click.Path(file_okay=False))
@base_ns_option
@click.option("--sequential-requires/--no-sequential-requires", default=True, show_default=True,
              help="Chain consecutive sibling steps with requires edges.")
@click.option("--merged", is_flag=True, help="Also write one merged.ttl with every article's triples.")
def cmd_extract(input_dir: str, output_dir: str, base_namespace: str, sequential_requires: bool, merged: bool) -> None:
    """Extract every .json/.html article in INPUT_DIR to Turtle files."""
    try:
        policy = extract_mod.MintingPolicy(base_namespace=base_namespace)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    articles = sorted(p for p in Path(input_dir).iterdir() if p.suffix in (".json", ".html"))
    merged_graph = Graph()
    failures = 0
    written = 0
    for path in articles:
        try:
            text = path.read_text(encoding="utf-8")
            if path.suffix == ".json":
                doc = extract_mod.parse_article_json(text)
            else:
                doc = extract_mod.parse_article_html(text, source_id=path.stem)
            g = extract_mod.article_to_graph(doc, policy, sequential_requires=sequential_requires)
        except (OSError, ValueError) as exc:
            click.echo(f"{path.name}: {exc}", err=True)
            failures += 1
            continue
        (out / (path.stem + ".ttl")).write_text(serialize_turtle(g), encoding="utf-8")
        written += 1
        if merged:
            merged_graph = merged_graph.union(g)
    if merged:
        (out / "merged.ttl").write_text(serialize_turtle(merged_graph), encoding="utf-8")
    click.echo(f"wrote {written} of {len(articles)} article(s) to {out}", err=True)
    if failures:
        sys.exit(PARTIAL)


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


@main.command("serve")
@click.option("--bind", default="127.0.0.1:8080", show_default=True, help="host:port; port 0 picks a free port.")
@click.option("--data", "data_file", default="store.ttl", show_default=True, help="Turtle file backing the store.")
@click.option("--read-only", is_flag=True, help="Reject /publish.")
@click.option("--max-rows", default=10000, show_default=True, help="Row cap per query response.")
def cmd_serve(bind: str, data_file: str, read_only: bool, max_rows: int) -> None:
    """Serve /sparql, /publish and /health over one store file."""
    try:
        config = EndpointConfig(bind_address=bind, data_file=data_file, read_only=read_only, max_query_rows=max_rows)
        endpoint = KnowHowEndpoint(config)
    except (OSError, ValueError) as exc:
        click.echo(f"cannot serve: {exc}", err=True)
        sys.exit(PARTIAL)
    host, port = endpoint.bound_address
    click.echo(f"listening on http://{host}:{port}")
    sys.stdout.flush()
    try:
        endpoint.run()
    except KeyboardInterrupt:
        pass
    finally:
        endpoint.stop()


# ---------------------------------------------------------------------------
# query / search / explore
# ---------------------------------------------------------------------------


@main.command("query")
@click.argument("query_text")
@federation_option
@click.option("--mode", type=click.Choice(["join", "union"]), default="join", show_default=True)
@format_option
def cmd_query(query_text: str, federation_file: str | None, mode: str, output_format: str) -> None:
    """Run a SELECT query across the federation."""
    endpoints = _load_endpoints(federation_file)
    try:
        query = parse_query(query_text)
    except QueryParseError as exc:
        raise click.UsageError(f"query syntax error: {exc}")
    try:
        result = fed.federated_query(endpoints, query, mode=mode)
    except fed.FederationError as exc:
        click.echo(str(exc), err=True)
        sys.exit(FEDERATION_FAILURE)
    if output_format == "json":
        _emit_result_json(result)
    else:
        for row in result.bindings.rows:
            click.echo("\t".join(lexical_str(row[v]) if v in row else "" for v in result.bindings.vars))
    if _report_partial(result.failed):
        sys.exit(PARTIAL)


@main.command("search")
@click.argument("keywords", nargs=-1, required=True)
@federation_option
@format_option
def cmd_search(keywords: tuple[str, ...], federation_file: str | None, output_format: str) -> None:
    """Find entities whose label contains every keyword."""
    endpoints = _load_endpoints(federation_file)
    try:
        result = fed.federated_search(endpoints, list(keywords))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    except fed.FederationError as exc:
        click.echo(str(exc), err=True)
        sys.exit(FEDERATION_FAILURE)
    if output_format == "json":
        _emit_result_json(result)
    else:
        for row in result.bindings.rows:
            click.echo(f"{lexical_str(row['label'])}\t{row['entity'].value}")
    if _report_partial(result.failed):
        sys.exit(PARTIAL)


@main.command("explore")
@click.argument("entity")
@federation_option
@format_option
def cmd_explore(entity: str, federation_file: str | None, output_format: str) -> None:
    """Show an entity's know-how neighborhood across the federation."""
    endpoints = _load_endpoints(federation_file)
    try:
        result = fed.explore(endpoints, _parse_iri(entity))
    except fed.FederationError as exc:
        click.echo(str(exc), err=True)
        sys.exit(FEDERATION_FAILURE)
    if output_format == "json":
        click.echo(json.dumps(result.to_json(), indent=2))
    else:
        click.echo(f"entity: {result.entity.value}")
        for label in result.labels:
            click.echo(f"label: {label}")
        sections = [
            ("steps", result.steps),
            ("part of", result.part_of),
            ("requires", result.requires),
            ("required by", result.required_by),
            ("methods", result.methods),
            ("method of", result.method_of),
            ("annotations", result.annotations),
        ]
        for heading, entries in sections:
            if entries:
                click.echo(f"{heading}:")
                for e in entries:
                    click.echo(f"  {e.value}")
    if _report_partial(result.failed):
        sys.exit(PARTIAL)


# ---------------------------------------------------------------------------
# exec
# ---------------------------------------------------------------------------


@main.group("exec")
def cmd_exec() -> None:
    """Start executions, assert outcomes, inspect readiness."""


@cmd_exec.command("start")
@click.argument("goal")
@federation_option
@target_option
@base_ns_option
def exec_start(goal: str, federation_file: str | None, publish_target: str | None, base_namespace: str) -> None:
    """Mint an execution with GOAL as its goal; prints the execution IRI."""
    endpoints = _load_endpoints(federation_file)
    target = _pick_target(endpoints, publish_target)
    try:
        execution = exec_engine.start_execution(endpoints, target, _parse_iri(goal), base_namespace=base_namespace)
    except fed.FederationError as exc:
        click.echo(str(exc), err=True)
        sys.exit(FEDERATION_FAILURE)
    click.echo(execution.value)


def _outcome_command(name: str, outcome: str, doc: str):
    @cmd_exec.command(name, help=doc)
    @click.argument("execution")
    @click.argument("task")
    @federation_option
    @target_option
    @click.option("--force", is_flag=True, help="Publish even if the execution has no known goal triple.")
    def command(execution: str, task: str, federation_file: str | None, publish_target: str | None, force: bool) -> None:
        endpoints = _load_endpoints(federation_file)
        target = _pick_target(endpoints, publish_target)
        exec_iri, task_iri = _parse_iri(execution), _parse_iri(task)
        try:
            inserted = exec_engine.assert_outcome(endpoints, target, exec_iri, task_iri, outcome, force=force)
        except exec_engine.UnknownExecutionError as exc:
            click.echo(str(exc), err=True)
            sys.exit(PARTIAL)
        except fed.FederationError as exc:
            click.echo(str(exc), err=True)
            sys.exit(FEDERATION_FAILURE)
        click.echo(f"inserted: {inserted}", err=True)
        if outcome == "failed":
            alternatives = exec_engine.suggest_alternatives(endpoints, task_iri)
            if alternatives:
                click.echo("alternative methods to try:", err=True)
                for alt in alternatives:
                    click.echo(f"  {alt.value}", err=True)

    return command


_outcome_command("succeed", "succeeded", "Assert TASK succeeded in EXECUTION.")
_outcome_command("fail", "failed", "Assert TASK failed in EXECUTION; suggests alternative methods.")


@cmd_exec.command("status")
@click.argument("execution")
@federation_option
@format_option
@click.option("--scope", help="Compute the view under this root task instead of the goals.")
@click.option("--derive/--no-derive", default=True, show_default=True,
              help="Derive completion from succeeded methods/steps.")
def exec_status(execution: str, federation_file: str | None, output_format: str, scope: str | None, derive: bool) -> None:
    """Render the execution's view: goals, outcomes, ready, blocked."""
    endpoints = _load_endpoints(federation_file)
    try:
        view = exec_engine.compute_view(
            endpoints,
            _parse_iri(execution),
            scope=_parse_iri(scope) if scope else None,
            derive=derive,
        )
    except exec_engine.RequiresCycleError as exc:
        click.echo(str(exc), err=True)
        sys.exit(PARTIAL)
    except fed.FederationError as exc:
        click.echo(str(exc), err=True)
        sys.exit(FEDERATION_FAILURE)
    if output_format == "json":
        click.echo(json.dumps(view.to_json(), indent=2))
    else:
        from .rdf import term_key

        click.echo(f"execution: {view.execution.value}")
        for goal in sorted(view.goals, key=term_key):
            click.echo(f"goal: {goal.value}")
        for task in sorted(view.succeeded_derived, key=term_key):
            suffix = "" if task in view.succeeded_asserted else " (derived)"
            click.echo(f"done: {task.value}{suffix}")
        for task in sorted(view.failed_asserted, key=term_key):
            click.echo(f"failed: {task.value}")
        for task in sorted(view.ready, key=term_key):
            click.echo(f"ready: {task.value}")
        for task, unmet in sorted(view.blocked.items(), key=lambda kv: term_key(kv[0])):
            reasons = ", ".join(u.value for u in sorted(unmet, key=term_key))
            click.echo(f"blocked: {task.value}  missing: {reasons}")
    for warning in view.warnings:
        click.echo(f"warning: {warning}", err=True)
    if _report_partial(view.failed_endpoints):
        sys.exit(PARTIAL)


@cmd_exec.command("watch")
@click.argument("execution")
@federation_option
@click.option("--interval", default=5.0, show_default=True, help="Seconds between polls (at least 1).")
@click.option("--max-polls", type=int, default=None, help="Stop after this many polls (default: run until interrupted).")
@click.option("--derive/--no-derive", default=True, show_default=True)
def exec_watch(execution: str, federation_file: str | None, interval: float, max_polls: int | None, derive: bool) -> None:
    """Poll the execution and print a JSON line per task becoming ready."""
    endpoints = _load_endpoints(federation_file)
    if interval < 1:
        raise click.UsageError("interval must be at least 1 second")

    def sink(event: exec_engine.ReadyEvent) -> None:
        click.echo(exec_engine.ready_event_json(event))
        sys.stdout.flush()

    try:
        exec_engine.watch(endpoints, _parse_iri(execution), interval, sink, max_polls=max_polls, derive=derive)
    except KeyboardInterrupt:
        pass
    except exec_engine.RequiresCycleError as exc:
        click.echo(str(exc), err=True)
        sys.exit(PARTIAL)


if __name__ == "__main__":
    main()
