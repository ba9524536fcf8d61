"""Exact measure-theoretic engine."""
