"""Unsupervised morphological paradigm discovery"""
__version__ = "1.0.0"
