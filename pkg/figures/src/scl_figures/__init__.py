"""Figure panels rendered from scl metric CSV files.

The package reads only the documented CSV layout (columns t, strategy,
metric, value, stderr, n_replicates) and never imports the simulation
package, so either side can be installed and tested alone.
"""

from scl_figures.panels import PANEL_KINDS, PanelSpec, render
from scl_figures.schema import COLUMNS, SchemaError, load_frames

__all__ = [
    "COLUMNS",
    "PANEL_KINDS",
    "PanelSpec",
    "SchemaError",
    "load_frames",
    "render",
]
