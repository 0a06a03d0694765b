"""Models package for parameter schemas and numeric result containers."""
