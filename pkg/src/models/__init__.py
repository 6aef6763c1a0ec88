"""Models package.""" 