"""Admin and operations CLI.

Exit codes: 0 success, 1 domain error, 2 usage error. Options override the
JSON config file, which overrides defaults; RAILSHOP_DATA_DIR supplies the
default data directory.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from datetime import timedelta
from typing import Optional

import click

from .clock import ManualClock, from_iso
from .engine import EngineConfig, Workshop
from .errors import DomainError
from .metrics import Stage

DEFAULTS = {
    "host": "127.0.0.1",
    "port": 8000,
    "data_dir": None,  # resolved via RAILSHOP_DATA_DIR, then ./data
    "zones": None,
    "console_dir": None,
    "sweep_interval_s": 60.0,
    "session_ttl_h": 8.0,
    "activation_grace_s": 0.0,
    "min_safety_rating": None,
}


def resolve_config(config_path: Optional[str], **flags) -> dict:
    merged = dict(DEFAULTS)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(DEFAULTS)
        if unknown:
            raise click.UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_values)
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    if merged["data_dir"] is None:
        merged["data_dir"] = os.environ.get("RAILSHOP_DATA_DIR", "./data")
    return merged


def engine_config(cfg: dict) -> EngineConfig:
    return EngineConfig(
        session_ttl=timedelta(hours=float(cfg["session_ttl_h"])),
        activation_grace=timedelta(seconds=float(cfg["activation_grace_s"])),
        sweep_interval_s=float(cfg["sweep_interval_s"]),
        min_safety_rating=cfg["min_safety_rating"],
    )


def open_shop(cfg: dict, clock=None) -> Workshop:
    shop = Workshop.open(cfg["data_dir"], clock=clock, config=engine_config(cfg))
    if cfg.get("zones"):
        shop.load_zones_file(cfg["zones"])
    return shop


def run_domain(fn):
    try:
        return fn()
    except DomainError as err:
        click.echo(f"error [{err.code}]: {err.message}", err=True)
        sys.exit(1)


@click.group()
def main():
    """Workshop safety workflow governance."""


@main.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--data-dir", "data_dir", type=click.Path(), default=None)
@click.option("--zones", type=click.Path(exists=True), default=None,
              help="Zones JSON document to load at startup.")
@click.option("--console-dir", "console_dir", type=click.Path(), default=None,
              help="Directory of built console assets served under /console.")
@click.option("--sweep-interval", "sweep_interval_s", type=float, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(host, port, data_dir, zones, console_dir, sweep_interval_s, config_path):
    """Run the HTTP gateway."""
    import uvicorn

    from .api import create_app

    cfg = resolve_config(config_path, host=host, port=port, data_dir=data_dir,
                         zones=zones, console_dir=console_dir,
                         sweep_interval_s=sweep_interval_s)
    shop = run_domain(lambda: open_shop(cfg))
    app = create_app(shop, console_dir=cfg["console_dir"])
    click.echo(f"serving on {cfg['host']}:{cfg['port']} (data: {cfg['data_dir']})")
    uvicorn.run(app, host=cfg["host"], port=int(cfg["port"]), log_level="warning")


@main.command()
@click.option("--file", "fixture_path", type=click.Path(exists=True), required=True)
@click.option("--data-dir", "data_dir", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def seed(fixture_path, data_dir, config_path):
    """Load master data (users, zones, machines, contractors) from a fixture."""
    cfg = resolve_config(config_path, data_dir=data_dir)

    def go():
        shop = open_shop(cfg)
        with open(fixture_path, "r", encoding="utf-8") as fh:
            fixture = json.load(fh)
        created = shop.seed(fixture, base_dir=os.path.dirname(os.path.abspath(fixture_path)))
        shop.close()
        return created

    created = run_domain(go)
    counts = {k: len(v) for k, v in created.items()}
    click.echo(f"seeded {counts} into {cfg['data_dir']}")


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), required=True)
@click.option("--data-dir", "data_dir", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def simulate(scenario_path, data_dir, config_path):
    """Drive a scripted operation sequence through the engine."""
    from .scenario import run_scenario_file

    cfg = resolve_config(config_path, data_dir=data_dir)

    def go():
        shop = open_shop(cfg, clock=ManualClock())
        summary = run_scenario_file(shop, scenario_path)
        shop.close()
        return summary

    summary = run_domain(go)
    click.echo(f"scenario complete: {summary['ops']} ops, "
               f"last audit seq {summary['last_seq']}")


@main.group()
def report():
    """Pipeline-duration and incident reports."""


@report.command("pipeline")
@click.option("--baseline", type=click.Path(exists=True), required=True,
              help="JSON file with a manual_minutes table.")
@click.option("--data-dir", "data_dir", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv")
@click.option("--window-from", "window_from", default=None)
@click.option("--window-to", "window_to", default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def report_pipeline(baseline, data_dir, fmt, window_from, window_to, config_path):
    """Manual-vs-digital stage durations from the audit log."""
    cfg = resolve_config(config_path, data_dir=data_dir)

    def go():
        shop = open_shop(cfg)
        with open(baseline, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        result = shop.pipeline_report(
            doc["manual_minutes"],
            from_iso(window_from) if window_from else None,
            from_iso(window_to) if window_to else None)
        shop.close()
        return result

    result = run_domain(go)
    if fmt == "json":
        click.echo(json.dumps(result.to_dict(), indent=2, sort_keys=True))
        return
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["stage", "manual_min", "digital_min", "reduction_pct"])
    for stage in Stage:
        cmp = result.per_stage.get(stage)
        if cmp is not None:
            writer.writerow([stage.value, cmp.manual_minutes, cmp.digital_minutes,
                             cmp.reduction_pct])
    click.echo(out.getvalue(), nl=False)


@report.command("incidents")
@click.option("--data-dir", "data_dir", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def report_incidents(data_dir, fmt, config_path):
    """Incident percentages by category."""
    cfg = resolve_config(config_path, data_dir=data_dir)

    def go():
        shop = open_shop(cfg)
        stats = shop.incident_report()
        shop.close()
        return stats

    stats = run_domain(go)
    if fmt == "json":
        click.echo(json.dumps(stats, indent=2, sort_keys=True))
        return
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["category", "percent"])
    for category, pct in sorted(stats.items()):
        writer.writerow([category, pct])
    click.echo(out.getvalue(), nl=False)


@main.group()
def audit():
    """Audit-trail operations."""


@audit.command("verify")
@click.option("--data-dir", "data_dir", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def audit_verify(data_dir, config_path):
    """Recompute the hash chain over the journal on disk."""
    cfg = resolve_config(config_path, data_dir=data_dir)

    def go():
        shop = open_shop(cfg)
        result = shop.verify_chain()
        shop.close()
        return result

    try:
        result = go()
    except DomainError as err:
        # a corrupt journal refuses to load; report what verification found
        click.echo(f"chain INVALID: {err.message}", err=True)
        sys.exit(1)
    if result.valid:
        click.echo(f"chain valid ({result.entries} entries)")
    else:
        click.echo(f"chain INVALID at seq {result.first_bad_seq} "
                   f"({result.entries} entries)", err=True)
        sys.exit(1)


@main.group()
def snapshot():
    """State snapshots."""


@snapshot.command("create")
@click.option("--data-dir", "data_dir", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def snapshot_create(data_dir, config_path):
    """Write a snapshot of current state next to the journal."""
    cfg = resolve_config(config_path, data_dir=data_dir)

    def go():
        shop = open_shop(cfg)
        doc = shop.create_snapshot()
        shop.close()
        return doc

    doc = run_domain(go)
    click.echo(f"snapshot written at seq {doc['last_seq']} "
               f"({sum(doc['version_vector'].values())} entities)")


if __name__ == "__main__":
    main()
