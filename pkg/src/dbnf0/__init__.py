"""dbnf0: F0 contour prediction with a DBN-pretrained deep neural network."""

__version__ = "0.1.0"

from .backend import backend_name

__all__ = ["backend_name", "__version__"]
