from .types import *  # noqa
