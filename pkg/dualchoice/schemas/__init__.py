"""
Pydantic schemas for run configuration, reports and HTTP bodies
"""
