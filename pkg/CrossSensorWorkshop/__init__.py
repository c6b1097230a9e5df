# -*- coding: UTF-8 -*-

__author__ = 'Bruce Frank Wong'
__version__ = '0.1'


from .run import run, main
from .config import PACKAGE_PATH, CONFIGS
