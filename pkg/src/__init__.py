"""
sqar - self-weighted quantile estimation for heavy-tailed AR models
"""

__version__ = "1.0.0"
