# -*- coding: UTF-8 -*-

__author__ = 'Bruce Frank Wong'


from .run import run


run()
