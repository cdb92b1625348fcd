"""
Tests for Stage 4 Description Intelligence Pipeline.
"""
