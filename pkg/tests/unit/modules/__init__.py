"""Module unit tests."""
