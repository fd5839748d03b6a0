"""UW-SVD preconditioned iterative MIMO detection toolkit."""

__version__ = "1.0.0"
