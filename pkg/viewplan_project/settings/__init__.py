import os

ENVIRONMENT = os.getenv('VIEWPLAN_ENVIRONMENT', 'development')

if ENVIRONMENT == 'production':
    from .production import *
else:
    from .development import *
