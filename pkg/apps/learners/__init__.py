"""
Policy-gradient learners: returns calculus, critics, and the six training algorithms.
"""
