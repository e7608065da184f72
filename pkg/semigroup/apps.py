from django.apps import AppConfig


class SemigroupConfig(AppConfig):
    name = 'semigroup'
    verbose_name = 'Linearized IPM semigroups'
