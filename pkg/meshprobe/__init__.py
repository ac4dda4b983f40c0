"""
meshprobe - wireless mesh measurement lab
"""
__version__ = "1.0.0"
