"""drlab Django apps."""
