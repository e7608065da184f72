"""
Django settings for the IPM spectral laboratory.

The project has no web surface and no database: Django hosts the apps, the
management commands that form the CLI, and the test runner. Numerical knobs
are read from the environment (or a `.env` file) through django-environ.
"""

import os
from pathlib import Path
import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent
env = environ.Env(DEBUG=(bool, False))
env.read_env(os.path.join(BASE_DIR, ".env"))

SECRET_KEY = env("DJANGO_SECRET_KEY", default="dev-secret-key")
DEBUG = env.bool("DEBUG", default=False)
ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "core_utils",
    "spectral",
    "semigroup",
    "stability",
    "solver",
    "oracles",
    "experiments",
]

# No persistence layer: runs are written to disk as CSV/JSON/checkpoints.
DATABASES = {}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Logging

IPM_LOG_LEVEL = env("IPM_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        name: {"handlers": ["console"], "level": IPM_LOG_LEVEL, "propagate": False}
        for name in ("spectral", "semigroup", "stability", "solver", "oracles", "experiments")
    },
}

# Numerics

IPM_FFT_WORKERS = env.int("IPM_FFT_WORKERS", default=1)

# Smallness threshold for the perturbed-semigroup coefficient certificate.
IPM_PERTURBATION_DELTA = env.float("IPM_PERTURBATION_DELTA", default=0.05)

IPM_CFL_SAFETY = env.float("IPM_CFL_SAFETY", default=0.5)
IPM_CFL_LIMIT = env.float("IPM_CFL_LIMIT", default=1.0)

IPM_WRITE_CHECKPOINTS = env.bool("IPM_WRITE_CHECKPOINTS", default=True)

# Relative tolerances used by experiment pass/fail checks. `strict` is `default`
# tightened by 10x.
_DEFAULT_TOLERANCES = {
    "identity": 1e-12,
    "propagator": 1e-12,
    "linear_consistency": 1e-10,
    "mean_conservation": 1e-12,
    "exponent": 0.03,
    "exponent_identity": 0.02,
    "lemma_constant": 0.05,
    "saturation": 0.02,
    "form_margin": 1e-10,
}

IPM_TOLERANCE_PROFILES = {
    "default": _DEFAULT_TOLERANCES,
    "strict": {key: value / 10 for key, value in _DEFAULT_TOLERANCES.items()},
}
