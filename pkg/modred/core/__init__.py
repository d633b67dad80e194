"""Shared utilities for all modred subpackages."""
