"""
Decentralized categorical policies, one per agent.
"""
