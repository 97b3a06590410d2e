"""Service layer package for domain logic."""
