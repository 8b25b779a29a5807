"""
Diagnostics: prediction-error datasets, ground-truth Q and the noise study.
"""
