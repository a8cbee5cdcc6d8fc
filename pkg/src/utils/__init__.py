"""
Shared helpers: seeds and hashing, input validation, and display formatting.
"""

from .helpers import *
from .validators import *
from .formatters import *

__all__ = ['derive_seed', 'file_sha256', 'validate_simplex', 'format_vector', 'format_bound_table']
