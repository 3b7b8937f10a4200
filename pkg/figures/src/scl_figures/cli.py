"""Command line entry point: render one panel from metric CSVs."""

from __future__ import annotations

import sys

import click

from scl_figures.panels import PANEL_KINDS, PanelSpec, render
from scl_figures.schema import SchemaError


@click.command(name="render")
@click.option(
    "--panel",
    "kind",
    required=True,
    type=click.Choice(PANEL_KINDS),
    help="Panel kind to draw.",
)
@click.option(
    "--in",
    "inputs",
    required=True,
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Metric CSV file; repeat for several.",
)
@click.option("--alpha", required=True, type=float, help="Target level line.")
@click.option(
    "--out",
    "out_path",
    required=True,
    type=click.Path(dir_okay=False, writable=True),
    help="Output image path; format follows the extension.",
)
@click.version_option(package_name="scl-figures")
def main(kind: str, inputs: tuple[str, ...], alpha: float, out_path: str):
    try:
        spec = PanelSpec(kind=kind, inputs=inputs, alpha=alpha, out_path=out_path)
        written = render(spec)
    except (SchemaError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {written}")


if __name__ == "__main__":
    main()
