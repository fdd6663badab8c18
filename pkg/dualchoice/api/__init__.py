"""
API routes for the application
"""
