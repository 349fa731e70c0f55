import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'viewplan_project.settings')
os.environ.setdefault('VIEWPLAN_LOG_LEVEL', 'WARNING')
django.setup()
