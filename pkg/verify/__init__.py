"""Brute-force checkers, instance generation and reports."""
