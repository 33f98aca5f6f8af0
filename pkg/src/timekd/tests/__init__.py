"""
Test suite for TimeKD.
"""
