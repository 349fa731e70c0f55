from .base import *

DEBUG = False

LOGGING['loggers']['planning']['level'] = VIEWPLAN_LOG_LEVEL or 'INFO'
