# src/vortexlab/__init__.py

"""
vortexlab: a numerical laboratory for current- and field-driven thin-film
superconductors on a rectangle.

Run the command-line tool from the project root with
``python src/vortexlab/main.py <command> [options]``.
"""

__version__ = "0.3.0"
