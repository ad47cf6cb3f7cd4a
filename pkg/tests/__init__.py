"""Test suite for tblocality."""
