__version__ = "1.0.0"
__VERSION__ = __version__
