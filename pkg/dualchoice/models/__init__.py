"""
Discrete probability measures on R^d
"""
