"""Data acquisition over priced relational instances: quality, informativeness, correlation and purchase search."""

__version__ = "0.1.0"
