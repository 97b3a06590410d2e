"""HTTP routers for the localization toolkit."""
