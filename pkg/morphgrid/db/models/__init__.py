# modules that foreign key to a class in a different module come after it
__all__ = [
    "run",
]
