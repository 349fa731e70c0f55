import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent.parent

SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "viewplan-insecure-local-key")

INSTALLED_APPS = [
    'planning',
]

# No models and no HTTP surface: the project only hosts management commands
DATABASES = {}

# Worker threads for coverage precomputation; 0 or 1 runs sequentially
VIEWPLAN_THREADS = int(os.getenv("VIEWPLAN_THREADS", os.cpu_count() or 1))

# Defaults for `train` flags the user leaves out
VIEWPLAN_TRAINING = {
    'hidden': 200,
    'alpha': 0.01,
    'mu_e': 0.5,
    'max_episodes': 100_000,
    'rcc': 0.99,
    'epsilon': 0.1,
    'epsilon_episodes': 50_000,
    'lambda_set': [0.0, 1.0],
    'init_scale': 0.1,
    'log_every': 1000,
}

VIEWPLAN_CURVE_WINDOW = 500
# (after, every): beyond episode `after`, keep every `every`-th learning-curve row
VIEWPLAN_CURVE_DOWNSAMPLE = (10_000, 100)

VIEWPLAN_LOG_LEVEL = os.getenv("VIEWPLAN_LOG_LEVEL")

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'planning': {
            'handlers': ['console'],
            'level': VIEWPLAN_LOG_LEVEL or 'INFO',
            'propagate': False,
        },
    },
}
