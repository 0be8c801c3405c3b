"""Monte Carlo duration estimation for work-breakdown-structured projects."""

__version__ = "1.0.0"
