"""
Core utilities shared by every drlab app.
"""
