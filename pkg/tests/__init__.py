"""
Tests für FS Complexity.
"""
