"""
One-hidden-layer feedforward approximator with analytic gradients.
"""
