"""Core data model: distributions, restrictions, trees, oracles and file formats."""
