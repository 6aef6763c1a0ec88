"""Utilities package.""" 