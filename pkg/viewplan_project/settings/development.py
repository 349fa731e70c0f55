from .base import *

DEBUG = True

LOGGING['loggers']['planning']['level'] = VIEWPLAN_LOG_LEVEL or 'DEBUG'
