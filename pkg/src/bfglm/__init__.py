"""Zero-dimensional parametrizations from multiplication matrices over a
prime field, via block-Krylov sequences."""

__version__ = "0.1.0"
