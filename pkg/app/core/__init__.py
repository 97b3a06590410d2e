"""Core infrastructure: settings, logging and scenario files."""
