from django.apps import AppConfig


class MvpConfig(AppConfig):
    name = 'mvp'
    verbose_name = 'Mean value formulas on the Heisenberg group'
