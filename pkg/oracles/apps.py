from django.apps import AppConfig


class OraclesConfig(AppConfig):
    name = 'oracles'
    verbose_name = 'Calculus-lemma oracles and decay fits'
