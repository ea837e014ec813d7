"""Utils tests."""
