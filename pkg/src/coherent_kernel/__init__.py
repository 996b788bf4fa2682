"""Closed-form propagators for a charged particle dressed by a coherent photon mode.

Submodules: ``core`` (parameters, grids), ``field`` (coherent amplitude,
invariant checks), ``magnetic`` (Landau kernel), ``axial`` (z kernel),
``mathieu`` (Mathieu basis), ``evolution`` (wavepackets), ``oracle`` (grid
integrators), ``cli``.
"""
__version__ = "0.1.0"

__all__ = ["axial", "core", "evolution", "field", "magnetic", "mathieu", "oracle"]


def __getattr__(name):
    # lazy submodule access keeps ``import coherent_kernel`` free of numpy
    if name in __all__:
        import importlib

        return importlib.import_module(f"{__name__}.{name}")
    raise AttributeError(name)
