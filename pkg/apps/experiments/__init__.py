"""
Experiment orchestration: run configuration, seeded training, summaries, charts and bookkeeping.
"""
