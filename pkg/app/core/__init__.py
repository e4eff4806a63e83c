"""
Core Package - Configuration, Exceptions, Extended Reals, Seeding
"""
from .config import settings
from .exceptions import RescircuitError

__all__ = ["settings", "RescircuitError"]
