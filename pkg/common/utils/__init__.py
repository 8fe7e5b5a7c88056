"""
Shared helpers for the proxnet pipeline.
"""
