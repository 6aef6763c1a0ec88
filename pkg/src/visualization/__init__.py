"""Plot rendering package."""
