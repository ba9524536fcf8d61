"""Top-down tree builders."""
