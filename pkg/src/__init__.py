"""Multiscale Markov forecasting package."""
