"""Keeps the tests directory importable so suites can share ldp_enum."""
