"""
ghlab - computational laboratory for Gromov-Hausdorff precompactness
"""

__version__ = "0.1.0"
__author__ = "ghlab developers"
