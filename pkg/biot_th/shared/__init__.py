"""
Shared utilities, models and errors
"""
