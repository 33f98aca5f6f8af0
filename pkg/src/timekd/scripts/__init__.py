"""
Utility scripts for TimeKD runs.
"""
