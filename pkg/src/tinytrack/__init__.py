"""Detection and tracking of tiny moving vehicles in registered wide-area video."""

__version__ = "0.1.0"
