"""Command line entry points: dataset generation and detection runs."""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

import click

from .core import Event
from .datagen import (
    DEFAULT_RULES,
    TransactionBatch,
    corpus_manifest,
    generate_message_corpus,
    generate_population,
    generate_stream,
    read_transactions,
    replay_text_stream,
    stream_manifest,
    write_messages,
    write_transactions,
)
from .evaluation import (
    ExperimentConfig,
    KeywordOracle,
    TruthOracle,
    run_experiment,
    write_alerts_csv,
    write_report,
)
from .experts import (
    ProjectionPool,
    TreePool,
    build_vocabulary,
    sample_projection_experts,
    sample_tree_experts,
)
from . import plots
from .service import QueueFullError, ReviewService, ServicePausedError, serve

TEXT_MODES = ("halving", "agnostic")

# flag defaults live here so a config file can override them and an
# explicit flag can override the config file
DEFAULTS = {
    "mode": "halving",
    "input": "gen:messages",
    "experts": None,
    "oracle": None,
    "theta": 0.5,
    "alpha": 1.0,
    "c": 0.2,
    "m": 1000,
    "seed": 42,
    "report": None,
    "serve": None,
    "capacity": 10_000,
}


def _merge_config(config_path, cli_values: dict) -> dict:
    merged = dict(DEFAULTS)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(DEFAULTS)
        if unknown:
            raise click.ClickException(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_values)
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    return merged


def _load_stream(source: str, mode: str, seed: int):
    """Events for text modes, a TransactionBatch for auction mode."""
    if source.startswith("gen:"):
        parts = source.split(":")
        kind = parts[1]
        if kind == "fintech":
            count = int(parts[2]) if len(parts) > 2 else 1_000_000
            customers = int(parts[3]) if len(parts) > 3 else 10_000
            population = generate_population(customers, seed=seed)
            return generate_stream(count, population, DEFAULT_RULES, seed=seed)
        if kind == "messages":
            count = int(parts[2]) if len(parts) > 2 else 100_000
            return [Event(i, msg) for i, msg in enumerate(generate_message_corpus(count, seed=seed))]
        raise click.ClickException(f"unknown generator {source!r}")
    path = Path(source)
    if not path.exists():
        raise click.ClickException(f"input not found: {source}")
    if path.suffix in (".ndjson", ".jsonl"):
        return read_transactions(path)
    return list(replay_text_stream(path))


def _check_stream_mode(stream, mode: str) -> None:
    if mode == "auction" and not isinstance(stream, TransactionBatch):
        raise click.ClickException("auction mode needs a transaction stream (NDJSON or gen:fintech)")
    if mode in TEXT_MODES and isinstance(stream, TransactionBatch):
        raise click.ClickException(f"{mode} mode needs a message stream (text file or gen:messages)")


def _load_pool(spec: str | None, mode: str, stream, m: int, seed: int):
    if spec is None:
        spec = "gen:trees" if mode == "auction" else "gen:projections"
    if spec.startswith("gen:"):
        kind = spec.split(":", 1)[1]
        if kind == "projections":
            try:
                vocab = build_vocabulary([e.payload for e in stream])
            except ValueError as err:
                raise click.ClickException(str(err))
            return sample_projection_experts(m, vocab, seed=seed)
        if kind == "trees":
            return sample_tree_experts(m, DEFAULT_RULES, seed=seed)
        raise click.ClickException(f"unknown expert generator {spec!r}")
    with open(spec, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") == "projection":
        return ProjectionPool.from_doc(doc)
    if doc.get("kind") == "tree":
        return TreePool.from_doc(doc)
    raise click.ClickException(f"unrecognized expert pool document in {spec}")


def _load_oracle(spec: str | None, mode: str):
    """Returns (oracle callable or None, human flag)."""
    if spec is None:
        spec = "truth" if mode == "auction" else "keyword"
    if spec == "human":
        return None, True
    if spec == "truth":
        return TruthOracle(), False
    if spec == "keyword" or spec.startswith("keyword:"):
        _, _, words = spec.partition(":")
        keywords = frozenset(w for w in words.split(",") if w)
        return KeywordOracle(keywords) if keywords else KeywordOracle(), False
    raise click.ClickException(f"unknown oracle {spec!r}")


def _report_artifacts(report, alert_log, report_path: str) -> list[str]:
    """JSON plus the audit CSV and figures, side by side."""
    path = Path(report_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_report(report, path)
    stem = path.with_suffix("")
    csv_path = Path(f"{stem}.events.csv")
    write_alerts_csv(alert_log, csv_path)
    evicted_at = {e: a.position for a in alert_log for e in a.evicted}
    traj = Path(f"{stem}.active.png")
    plots.render_active_trajectory(report.m, evicted_at, report.events_processed, traj)
    dens = Path(f"{stem}.alerts.png")
    plots.render_alert_density([a.position for a in alert_log], report.events_processed, dens)
    return [str(path), str(csv_path), str(traj), str(dens)]


@click.group()
def main() -> None:
    """Streaming human-in-the-loop detection."""


@main.command()
@click.option("--mode", type=click.Choice(["halving", "agnostic", "auction"]), default=None)
@click.option("--input", "input_", default=None, help="path, gen:messages[:count], or gen:fintech[:count[:customers]]")
@click.option("--experts", default=None, help="pool JSON path, gen:projections, or gen:trees")
@click.option("--oracle", default=None, help="keyword[:w1,w2], truth, or human")
@click.option("--theta", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--c", type=float, default=None)
@click.option("--m", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--report", default=None, help="write the run report JSON here (CSV and figures land beside it)")
@click.option("--serve", default=None, help="host:port for the review API")
@click.option("--capacity", type=int, default=None, help="review queue bound")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON file mirroring these flags")
def run(config_path, **cli_values) -> None:
    """Stream events through a detector and report or serve."""
    cli_values["input"] = cli_values.pop("input_")
    cfg = _merge_config(config_path, cli_values)

    if cfg["mode"] == "halving" and cfg["alpha"] != 1.0:
        raise click.ClickException("halving mode means alpha=1; use agnostic for alpha<1")
    if cfg["mode"] == "agnostic" and not 0.0 < cfg["alpha"] < 1.0:
        raise click.ClickException("agnostic mode needs 0 < alpha < 1 (pass --alpha)")
    oracle, human = _load_oracle(cfg["oracle"], cfg["mode"])
    if human and not cfg["serve"]:
        raise click.ClickException("--oracle human needs --serve so judgements can arrive")

    stream = _load_stream(cfg["input"], cfg["mode"], cfg["seed"])
    _check_stream_mode(stream, cfg["mode"])
    pool = _load_pool(cfg["experts"], cfg["mode"], stream, cfg["m"], cfg["seed"])

    if cfg["serve"]:
        _serve_run(stream, pool, oracle, human, cfg)
        return

    try:
        experiment = ExperimentConfig(
            mode=cfg["mode"],
            stream=stream,
            pool=pool,
            oracle=oracle,
            theta=cfg["theta"],
            alpha=cfg["alpha"],
            c=cfg["c"],
            seed=cfg["seed"],
            rules=DEFAULT_RULES if cfg["mode"] == "auction" and cfg["input"].startswith("gen:") else None,
            alert_log=[],
        )
    except ValueError as err:
        raise click.ClickException(str(err))
    report = run_experiment(experiment)

    recall = "n/a" if report.recall is None else f"{report.recall:.3f}"
    click.echo(
        f"{report.mode}: processed={report.events_processed} alerts={report.alerts} "
        f"inspection={report.inspection_fraction:.2%} active={report.final_active_size} "
        f"recall={recall} "
        f"({report.timing['throughput_events_per_second']:,.0f} events/s)"
    )
    if report.pool_exhausted:
        click.echo("warning: expert pool exhausted mid-run", err=True)
    if cfg["report"]:
        for artifact in _report_artifacts(report, experiment.alert_log, cfg["report"]):
            click.echo(f"wrote {artifact}")


def _serve_run(stream, pool, oracle, human, cfg) -> None:
    from .core import VoteConfig
    from .engine import AuctionEngine, TextHalvingEngine
    from .evaluation import label_events

    if cfg["mode"] in TEXT_MODES:
        events = stream if human else label_events(stream, oracle)
        engine = TextHalvingEngine(
            pool,
            VoteConfig(theta=cfg["theta"], alpha=cfg["alpha"], seed=cfg["seed"]),
            judge=None if human else oracle,
            chunk=1,
        )
        feed_items = events
    else:
        engine = AuctionEngine(pool, c=cfg["c"], use_truth=not human, chunk=1)
        feed_items = (stream.slice(i, i + 1) for i in range(len(stream)))

    service = ReviewService(engine, capacity=cfg["capacity"])

    def producer() -> None:
        for item in feed_items:
            while True:
                try:
                    service.ingest(item)
                    break
                except (QueueFullError, ServicePausedError):
                    time.sleep(0.05)

    threading.Thread(target=producer, daemon=True).start()
    host, _, port = cfg["serve"].rpartition(":")
    click.echo(f"review API on http://{host}:{port} (WS /live)")
    serve(service, host=host or "127.0.0.1", port=int(port))


@main.command()
@click.argument("kind", type=click.Choice(["fintech", "messages"]))
@click.option("--count", type=int, default=None, help="events to generate")
@click.option("--seed", type=int, default=42)
@click.option("--customers", type=int, default=10_000, help="population size (fintech)")
@click.option("--out", required=True, type=click.Path())
def gen(kind, count, seed, customers, out) -> None:
    """Write a synthetic dataset plus its manifest."""
    if kind == "fintech":
        count = count if count is not None else 1_000_000
        population = generate_population(customers, seed=seed)
        batch = generate_stream(count, population, DEFAULT_RULES, seed=seed)
        write_transactions(out, batch, stream_manifest(count, population, DEFAULT_RULES, seed))
        click.echo(f"wrote {count} transactions ({int(batch.fraud.sum())} fraudulent) to {out}")
    else:
        count = count if count is not None else 100_000
        messages = generate_message_corpus(count, seed=seed)
        write_messages(out, messages, corpus_manifest(count, seed))
        click.echo(f"wrote {count} messages to {out}")


if __name__ == "__main__":
    main(prog_name="halfado")
