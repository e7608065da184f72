from django.apps import AppConfig


class StabilityConfig(AppConfig):
    name = 'stability'
    verbose_name = 'Steady states and linear stability forms'
