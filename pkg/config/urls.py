"""
URL configuration for drlab: the admin over run bookkeeping.
"""

from django.contrib import admin
from django.urls import path

urlpatterns = [
    path("admin/", admin.site.urls),
]
