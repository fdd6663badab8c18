"""
Core functionality and configuration
"""
