"""CLI package for the chained Bell calculators."""
