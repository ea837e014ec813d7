"""Persistence for checkpoints and episode corpora."""
