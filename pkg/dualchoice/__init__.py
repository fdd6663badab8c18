"""
Dual Choice Evaluator: multivariate Yaari evaluation of discrete prospects
"""
