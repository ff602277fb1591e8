from django.apps import AppConfig


class NonholonomicConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "nonholonomic"
    verbose_name = "Nonholonomic impact mechanics"
