"""Numerical laboratory for extinction asymptotics of subcritical fast diffusion.

Submodules: ``core`` (parameters, meshes, finite-volume operators),
``stationary`` (profiles V), ``spectrum`` (the weighted linearization),
``evolution`` (time stepping), ``asymptotics`` (rates and verdicts),
``merlezaag`` (mode-system checks), ``pipeline`` (end-to-end experiments),
``io``, ``plotting`` and ``cli``.

Nothing is imported here so that the command-line entry point can cap BLAS
threads before numpy loads.
"""

__version__ = "0.1.0"
