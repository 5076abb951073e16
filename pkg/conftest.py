import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'gsgd_project.settings')
django.setup()
