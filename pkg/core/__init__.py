"""Core machinery shared by the chained-Bell calculators."""
