"""``b5groam`` command line: key ceremony, scenario runs, benchmarks."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import B5GError, NoContributions, ScenarioInvalid, UnexpectedVerdict, UnknownBackend
from .harness import bench_latency, bench_layers, bench_prove, keys_setup, load_descriptor, run_scenario

EXIT_SCENARIO_INVALID = 2
EXIT_SECURITY_VIOLATION = 3


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}") from None


def _emit(report, out) -> None:
    if out:
        sidecar = report.write(out)
        click.echo(f"wrote {out} and {sidecar}")
    rows = report.table()
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in report.columns}
    click.echo("  ".join(c.rjust(widths[c]) for c in report.columns))
    for r in rows:
        click.echo("  ".join(str(r[c]).rjust(widths[c]) for c in report.columns))


@click.group()
def main():
    """Zero-trust roaming settlement simulator."""


@main.group()
def keys():
    """Trusted setup and key generation."""


@keys.command("setup")
@click.option("--contributors", type=int, required=True)
@click.option("--seed", required=True, help="hex seed driving every contribution")
@click.option("--circuit", "circuit", type=click.Path(exists=True, dir_okay=False), required=True,
              help="circuit descriptor JSON (rates, salted, range_bits) or a bare rate schedule")
@click.option("--out", type=click.Path(file_okay=False), default="keys", show_default=True)
def keys_setup_cmd(contributors, seed, circuit, out):
    """Run the ceremony and write params, proving key and verification key."""
    try:
        files = keys_setup(contributors, seed, load_descriptor(circuit), out)
    except NoContributions as exc:
        raise click.ClickException(str(exc))
    except OSError as exc:
        raise click.ClickException(f"IOFailure: {exc}")
    click.echo(f"params: {files.params}")
    click.echo(f"proving key: {files.proving_key}")
    click.echo(f"verification key: {files.verification_key}")
    click.echo(f"vk digest: {files.vk_digest}")


@main.command("run")
@click.option("--scenario", type=click.Path(dir_okay=False), required=True)
@click.option("--seed", default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="directory for log, manifests and report")
def run_cmd(scenario, seed, out):
    """Execute a scenario and check every verdict."""
    try:
        result = run_scenario(scenario, seed=seed, strict=False)
    except ScenarioInvalid as exc:
        click.echo(f"invalid scenario: {exc}", err=True)
        sys.exit(EXIT_SCENARIO_INVALID)
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        result.ledger.write_log(d / "ledger.jsonl")
        (d / "report.json").write_bytes(result.report_bytes())
        if result.sequencer is not None:
            for b in result.sequencer.batches:
                b.write_manifest(d / f"batch_{b.batch_id:04d}.json")
    for v in result.verdicts:
        tag = "ok " if v.expected else "BAD"
        click.echo(f"{tag} {v.session:<12} {v.adversary or 'honest':<20} {v.outcome:<9} "
                   + ", ".join(f"{a}={r}" for a, r in v.attempts))
    click.echo(f"state digest: {result.digest}")
    if not result.ok:
        click.echo(str(UnexpectedVerdict("a security property was violated")), err=True)
        sys.exit(EXIT_SECURITY_VIOLATION)


@main.group()
def bench():
    """Benchmarks (CSV plus JSON sidecar)."""


@bench.command("prove")
@click.option("--backend", default="groth16", show_default=True)
@click.option("--iters", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def bench_prove_cmd(backend, iters, out):
    try:
        report = bench_prove(backend, iters)
    except UnknownBackend as exc:
        raise click.BadParameter(str(exc), param_hint="--backend")
    _emit(report, out)


@bench.command("layers")
@click.option("--txs", default="60,100,200,500", show_default=True)
@click.option("--batch-size", default="table", show_default=True,
              help="max batch size, or 'table' for the per-row reference sizes")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def bench_layers_cmd(txs, batch_size, out):
    size = batch_size if batch_size == "table" else int(batch_size)
    _emit(bench_layers(_ints(txs), size), out)


@bench.command("latency")
@click.option("--loads", default="500,1000,2500,5000", show_default=True)
@click.option("--cap", type=float, default=100.0, show_default=True, help="L1 tx/s cap")
@click.option("--base-latency", type=float, default=0.1, show_default=True)
@click.option("--rate", type=float, default=None, help="offered tx/s (default: the cap)")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def bench_latency_cmd(loads, cap, base_latency, rate, out):
    _emit(bench_latency(_ints(loads), cap, base_latency, rate), out)


def entrypoint():
    try:
        main(standalone_mode=True)
    except B5GError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
