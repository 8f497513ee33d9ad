"""
Tests for exterior-nls
"""
