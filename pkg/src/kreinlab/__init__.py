"""kreinlab: extension theory, Dirichlet-to-Neumann operators and Krein
resolvent formulas for second-order elliptic problems on nonsmooth strips,
at desk scale."""

__version__ = "0.1.0"
