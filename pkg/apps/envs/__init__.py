"""
Multi-agent gridworld environments: multi-rover and predator-prey.
"""
