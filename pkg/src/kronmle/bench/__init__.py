"""Generative models, seeded experiments and figures."""
