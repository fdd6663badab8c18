"""
Transport, quantile, evaluation and dataset services
"""
