"""Bundled scenario files (*.cfg); load them via resolve_scenario()."""
