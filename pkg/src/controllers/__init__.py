"""Controllers package.""" 