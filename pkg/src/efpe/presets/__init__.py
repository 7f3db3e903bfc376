"""Checked-in run configurations, loadable by name with ``efpe run --preset``."""
