"""Multi-robot relative localization toolkit."""
