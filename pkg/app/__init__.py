"""
Rescircuit v1.0.0
Random resistor networks on complete graphs and Galton-Watson trees
"""

__version__ = "1.0.0"
__license__ = "MIT"
