# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from .metric import confusion, iou_from_confusion, mean_iou, relative_gain, random_point_validation
from .render import ppm_bytes, render_labelmap
from .report import UNDEFINED, build_report, write_report
