"""JSONL streaming and camera/box geometry helpers."""
