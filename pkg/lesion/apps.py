from django.apps import AppConfig


class LesionConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'lesion'
    verbose_name = 'Segmentación de lesiones en PWI'
