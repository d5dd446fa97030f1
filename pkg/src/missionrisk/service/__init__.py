"""HTTP service layer; see :mod:`missionrisk.service.app`."""

from .app import app, create_app

__all__ = ["app", "create_app"]
