"""Panel rendering for matchgate-shadow experiment CSV bundles."""

from .panels import PanelError, PanelSpec, render_panel

__all__ = ["PanelError", "PanelSpec", "render_panel"]
__version__ = "0.1.0"
