# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


"""
Keeps the repository root on sys.path so the tests import the CrossSensorWorkshop package in place.
"""


collect_ignore = ['examples']
