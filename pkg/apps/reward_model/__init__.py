"""
Centralized reward network over (state, joint action) and estimated difference rewards.
"""
