"""
Dump feature - mesh and matrix export
"""
