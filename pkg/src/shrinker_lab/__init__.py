"""Numerical laboratory for time analyticity of heat flows on shrinking solitons."""

__version__ = '0.3.1'
__app_name__ = 'shrinker-lab'
