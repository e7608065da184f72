from django.apps import AppConfig


class CoreUtilsConfig(AppConfig):
    name = 'core_utils'
    verbose_name = 'Shared errors and output formatting'
