"""Command-line client for the melodyforge service.

Every subcommand talks to the HTTP API: against --server URL when given,
otherwise against the service mounted in-process, so local use needs no
running daemon while remote use is the same code path.

Exit status by error class:
    0  success
    1  verification failure (symbolic violation or unreadable files)
    2  configuration / usage error
    3  missing input (dataset, manifest, or job not found)
    4  I/O error on the server side
    5  transport or unexpected server error
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import httpx

EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_IO = 4
EXIT_SERVER = 5

_STATUS_EXIT = {400: EXIT_CONFIG, 422: EXIT_CONFIG, 404: EXIT_MISSING}

TIMBRES = ("sine", "square", "sawtooth", "triangle")
SPLITS = ("train", "val", "test")


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # starlette's TestClient warns about httpx-vs-httpx2; it is the
        # supported way to mount an ASGI app behind a sync client.
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _call(client: httpx.Client, method: str, path: str, **kwargs) -> httpx.Response:
    try:
        response = client.request(method, path, **kwargs)
    except httpx.HTTPError as exc:
        _fail(f"cannot reach server: {exc}", EXIT_SERVER)
    if response.status_code >= 400:
        detail = None
        try:
            detail = response.json().get("detail")
        except Exception:
            pass
        if isinstance(detail, dict):
            message = detail.get("message", str(detail))
            error_class = detail.get("error_class", "")
        else:
            message = str(detail) if detail else response.text
            error_class = ""
        code = _STATUS_EXIT.get(response.status_code, EXIT_SERVER)
        if error_class == "io":
            code = EXIT_IO
        _fail(f"{message}", code)
    return response


def _echo_counts(title: str, stats: dict, quiet: bool = False) -> None:
    click.echo(f"  {title}: {stats['records']} records")
    if not quiet:
        for key, count in stats["counts"].items():
            click.echo(f"    {key:<18} {count}")
    click.echo(
        f"    P(sine|major)={stats['p_sine_given_major']:.4f}  "
        f"phi(timbre,label)={stats['timbre_label_phi']:+.4f}"
    )


@click.group()
@click.option("--server", "-s", default=None, metavar="URL",
              help="Service URL; defaults to running the service in-process.")
@click.option("--root", "-r", default="melody-data", show_default=True,
              help="Dataset root directory (on the server's filesystem).")
@click.option("--json", "as_json", is_flag=True,
              help="Print raw response JSON instead of summaries.")
@click.option("--quiet", "-q", is_flag=True, help="Trim summaries to one line per section.")
@click.pass_context
def main(ctx: click.Context, server: str | None, root: str, as_json: bool, quiet: bool) -> None:
    """Generate, shift, and verify synthetic melody datasets."""
    ctx.obj = {"server": server, "root": root, "json": as_json, "quiet": quiet}


def _emit_json_if_requested(ctx: click.Context, body: dict) -> bool:
    if ctx.obj.get("json"):
        click.echo(json.dumps(body, indent=2, sort_keys=True))
        return True
    return False


@main.command()
@click.option("--timbre", "timbres", multiple=True, type=click.Choice(TIMBRES),
              help="Restrict to these timbres (repeatable); default all four.")
@click.option("--split", "splits", multiple=True, type=click.Choice(SPLITS),
              help="Restrict to these splits (repeatable); default all three.")
@click.option("--scale-divisor", default=1, show_default=True,
              help="Divide all seed ranges and sizes by this factor.")
@click.option("--count", type=int, default=None,
              help="Quick mode: build a tiny standalone dataset of COUNT samples.")
@click.option("--bias-level", type=float, default=None,
              help="Quick mode timbre-label correlation level (0.0..1.0).")
@click.option("--amplitude", default="stable", show_default=True,
              type=click.Choice(["stable", "increase", "decrease"]))
@click.option("--render/--no-render", default=True, show_default=True,
              help="Render WAV files (otherwise manifests only).")
@click.option("--workers", default=1, show_default=True, help="Parallel render workers.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file with melody-generation ranges.")
@click.option("--background", is_flag=True,
              help="Run on the server as a job and poll progress.")
@click.pass_context
def generate(ctx, timbres, splits, scale_divisor, count, bias_level, amplitude,
             render, workers, config_path, background):
    """Materialise base datasets (specs -> WAVs -> manifests)."""
    payload: dict = {
        "root": ctx.obj["root"],
        "scale_divisor": scale_divisor,
        "amplitude": amplitude,
        "render": render,
        "workers": workers,
        "background": background,
    }
    if timbres:
        payload["timbres"] = list(timbres)
    if splits:
        payload["splits"] = list(splits)
    if count is not None:
        payload["count"] = count
    if bias_level is not None:
        payload["bias_level"] = bias_level
    if config_path is not None:
        file_config = json.loads(Path(config_path).read_text())
        dataset = file_config.pop("dataset", None)
        if dataset:
            payload["dataset"] = dataset
        if file_config:
            payload["gen"] = file_config

    with _client(ctx.obj["server"]) as client:
        response = _call(client, "POST", "/datasets/generate", json=payload)
        body = response.json()
        if background:
            job_id = body["job_id"]
            click.echo(f"job {job_id} submitted")
            while True:
                status = _call(client, "GET", f"/jobs/{job_id}").json()
                click.echo(f"  {status['state']}: {status['done']}/{status['total']}")
                if status["state"] == "failed":
                    _fail(status["error"], EXIT_SERVER)
                if status["state"] == "done":
                    body = status["result"]
                    break
                time.sleep(1.0)
        if _emit_json_if_requested(ctx, body):
            return
        click.echo(f"root: {body['root']}")
        for name, path in body["manifests"].items():
            click.echo(f"manifest: {path}")
        click.echo(
            f"records: {body['records']}  written: {body['written']}  "
            f"skipped: {body['skipped']}"
        )


@main.group()
def shift() -> None:
    """Construct shifted training manifests and evaluation suites."""


def _shift_config(config_path: str | None) -> dict:
    if config_path is None:
        return {}
    return json.loads(Path(config_path).read_text())


@shift.command()
@click.option("--level", type=int, default=None, help="Domain-shift level (0..11).")
@click.option("--schedule", default=None,
              help="Comma-separated square counts per level (defaults to the built-in schedule).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help='JSON shift config, e.g. {"level": 3, "schedule": [...]}.')
@click.pass_context
def domain(ctx, level, schedule, config_path):
    """Replace the first N training melodies with their square twins."""
    file_config = _shift_config(config_path)
    if level is None:
        level = file_config.get("level")
    if level is None:
        _fail("provide --level or a config file with a 'level' key", EXIT_CONFIG)
    payload: dict = {"root": ctx.obj["root"], "level": level}
    if schedule is not None:
        payload["schedule"] = [int(x) for x in schedule.split(",")]
    elif "schedule" in file_config:
        payload["schedule"] = file_config["schedule"]
    with _client(ctx.obj["server"]) as client:
        body = _call(client, "POST", "/shifts/domain", json=payload).json()
    if _emit_json_if_requested(ctx, body):
        return
    click.echo(f"manifest: {body['manifest']}")
    click.echo(f"level {body['level']}: {body['square_count']} square / {body['sine_count']} sine")
    _echo_counts("training", body["stats"], ctx.obj["quiet"])


@shift.command("selection-bias")
@click.option("--p", type=float, default=None, help="Bias level in {0.0, 0.1, ..., 1.0}.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help='JSON shift config, e.g. {"p": 0.7}.')
@click.pass_context
def selection_bias(ctx, p, config_path):
    """Correlate timbre with the label for a fraction p of training records."""
    file_config = _shift_config(config_path)
    if p is None:
        p = file_config.get("p")
    if p is None:
        _fail("provide --p or a config file with a 'p' key", EXIT_CONFIG)
    payload = {"root": ctx.obj["root"], "p": p}
    with _client(ctx.obj["server"]) as client:
        body = _call(client, "POST", "/shifts/selection-bias", json=payload).json()
    if _emit_json_if_requested(ctx, body):
        return
    click.echo(f"manifest: {body['manifest']}")
    _echo_counts("training", body["training"], ctx.obj["quiet"])
    for name, suite in body["suites"].items():
        click.echo(f"suite {name}: {suite['manifest']}")
        _echo_counts(name, suite["stats"], ctx.obj["quiet"])


@main.command()
@click.option("--manifest", default=None,
              help="Verify one manifest file name; default: every manifest in root.")
@click.option("--spectral-sample", default=25, show_default=True,
              help="Clips per timbre to decode and key-check.")
@click.pass_context
def verify(ctx, manifest, spectral_sample):
    """Check specs, files, and spectral key agreement for a dataset."""
    payload = {"root": ctx.obj["root"], "spectral_sample": spectral_sample}
    if manifest is not None:
        payload["manifest"] = manifest
    with _client(ctx.obj["server"]) as client:
        body = _call(client, "POST", "/verify", json=payload).json()
    if _emit_json_if_requested(ctx, body):
        if not body["ok"]:
            sys.exit(EXIT_VERIFY)
        return
    for name, summary in body["manifests"].items():
        click.echo(
            f"{name}: {summary['records']} records, "
            f"{summary['symbolic_failures']} symbolic violations, "
            f"{len(summary['file_errors'])} file errors"
        )
        for err in summary["file_errors"]:
            click.echo(f"  file error: {err}")
        for timbre, (n, good) in summary["per_timbre_accuracy"].items():
            click.echo(f"  spectral accuracy {timbre}: {good}/{n}")
        click.echo(f"  report: {summary['report_path']}")
    if not body["ok"]:
        sys.exit(EXIT_VERIFY)
    click.echo("ok: 0 symbolic violations, 0 file errors")


@main.group()
def manifest() -> None:
    """Manifest utilities."""


@manifest.command()
@click.argument("path")
@click.pass_context
def inspect(ctx, path):
    """Print a manifest's header and row composition."""
    with _client(ctx.obj["server"]) as client:
        body = _call(client, "GET", "/manifests/inspect", params={"path": path}).json()
    if _emit_json_if_requested(ctx, body):
        return
    click.echo(f"path: {body['path']}")
    click.echo(f"kind: {body['kind']}  records: {body['records']}")
    click.echo(
        f"generator: {body['generator_version']}  format: {body['format_version']}  "
        f"config_hash: {body['config_hash']}"
    )
    if body["shift"]:
        click.echo(f"shift: {json.dumps(body['shift'], sort_keys=True)}")
    for field in ("by_split", "by_timbre", "by_label", "by_role"):
        pairs = ", ".join(f"{k}={v}" for k, v in body[field].items())
        click.echo(f"{field[3:]}: {pairs}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
def serve(host, port):
    """Run the melodyforge HTTP service."""
    import uvicorn

    uvicorn.run("melodyforge.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
