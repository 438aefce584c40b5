"""Detection of logic-level usage violations of reusable smart-contract components."""

__version__ = "0.1.0"
