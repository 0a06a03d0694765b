"""Test package for the tripod simulator."""
