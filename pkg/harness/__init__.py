"""Command-line harness: configuration, dispatch, emission and validation."""
