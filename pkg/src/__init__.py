"""
WCT Lab
Finite-dimensional laboratory for weighted conditional type operators T = M_w E M_u.
"""

__version__ = '1.0.0'
