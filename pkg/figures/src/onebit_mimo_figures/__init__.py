"""Figure rendering for onebit-mimo CSV results."""

from .render import RecipeError, read_csv, read_recipe, render

__all__ = ["RecipeError", "read_csv", "read_recipe", "render"]
__version__ = "0.1.0"
