"""Command-line interface.

`estimate` runs on a WAV file (locally, or against a running service with
--server), `simulate` renders recipe trials to WAV files, `suite` runs the
evaluation protocol and writes a metrics report, and `serve` starts the
HTTP service.
"""

from __future__ import annotations

import base64
import json
import sys
from pathlib import Path

import click

from . import __version__
from .audio_io import load_audio, save_wav
from .config import default_config, load_config, load_recipe
from .evaluate import emit_report, run_suite, simulate_trial
from .pipeline import estimate as run_estimate
from .pipeline import estimate_baseline


@click.group()
@click.version_option(version=__version__)
def main():
    """Direction-of-arrival estimation toolkit for linear microphone arrays."""


def _report_payload(report):
    return {
        "theta": report.theta,
        "method": report.method,
        "tau_mid": report.tau_mid,
        "num_selected": report.num_selected,
        "num_mid": report.num_mid,
        "num_high": report.num_high,
        "transient_frames": list(report.transient_frames),
        "warnings": list(report.warnings),
        "timings": {k: round(float(v), 4) for k, v in report.timings.items()},
    }


@main.command()
@click.argument("wav", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="YAML configuration file (defaults used otherwise).")
@click.option("--baseline", is_flag=True,
              help="Run the SRP-PHAT baseline instead of the proposed method.")
@click.option("--report", "report_path", type=click.Path(),
              help="Write the full JSON report here.")
@click.option("--server", help="Base URL of a running service; the CLI then "
                               "posts the file instead of computing locally.")
def estimate(wav, config_path, baseline, report_path, server):
    """Estimate the source direction of a multichannel WAV capture."""
    if server:
        import httpx

        payload = {
            "wav_b64": base64.b64encode(Path(wav).read_bytes()).decode(),
            "baseline": baseline,
        }
        if config_path:
            import yaml

            payload["config"] = yaml.safe_load(Path(config_path).read_text())
        resp = httpx.post(f"{server.rstrip('/')}/v1/estimate", json=payload,
                          timeout=300.0)
        if resp.status_code != 200:
            raise click.ClickException(
                f"server returned {resp.status_code}: {resp.text}")
        data = resp.json()
    else:
        try:
            cfg = load_config(config_path) if config_path else default_config()
            audio, _ = load_audio(wav, expected_rate=cfg.stft.sample_rate,
                                  expected_channels=cfg.geometry.num_mics)
            runner = estimate_baseline if baseline else run_estimate
            data = _report_payload(runner(audio, cfg))
        except (ValueError, RuntimeError) as exc:
            raise click.ClickException(str(exc)) from exc
    click.echo(f"theta: {data['theta']:+.1f} deg  ({data['method']})")
    for warning in data.get("warnings", []):
        click.echo(f"warning: {warning}", err=True)
    if report_path:
        Path(report_path).write_text(json.dumps(data, indent=2) + "\n")


@main.command()
@click.option("--recipe", "recipe_path", type=click.Path(exists=True),
              required=True, help="Suite recipe (YAML).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              required=True, help="Directory for the rendered WAV files.")
def simulate(recipe_path, out_dir):
    """Render every recipe trial to a multichannel WAV file."""
    recipe = load_recipe(recipe_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fs = recipe.config.stft.sample_rate
    manifest = []
    for i, spec in enumerate(recipe.trials):
        capture = simulate_trial(spec, recipe.config)
        path = out / f"trial_{i:03d}.wav"
        save_wav(path, capture, fs)
        manifest.append({"trial": i, "wav": path.name,
                         "target_angle": spec.target_angle,
                         "interference_angle": spec.interference_angle})
        click.echo(f"{path.name}: target {spec.target_angle:+.1f} deg")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


@main.command()
@click.option("--recipe", "recipe_path", type=click.Path(exists=True),
              required=True, help="Suite recipe (YAML).")
@click.option("--report", "report_path", type=click.Path(), required=True,
              help="Write the per-trial CSV report here.")
@click.option("--workers", default=1, show_default=True,
              help="Concurrent trial workers.")
@click.option("--estimator", "estimators", multiple=True,
              type=click.Choice(["proposed", "baseline"]),
              help="Estimator(s) to run; default both.")
def suite(recipe_path, report_path, workers, estimators):
    """Run the evaluation protocol and print the metrics table."""
    recipe = load_recipe(recipe_path)
    names = tuple(estimators) or ("proposed", "baseline")
    table = run_suite(recipe.trials, recipe.config, estimators=names,
                      workers=workers)
    Path(report_path).write_text(emit_report(table, "csv"))
    click.echo(emit_report(table, "text"))
    if any(r.failure for r in table.records):
        click.echo("some trials failed; see the report", err=True)
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP estimation service."""
    import uvicorn

    uvicorn.run("doakit.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
