"""HTTP service exposing processed sessions to the analytics interface."""

from xract.service.app import EVAL_FILE, INSIGHTS_FILE, create_app, serve

__all__ = ["EVAL_FILE", "INSIGHTS_FILE", "create_app", "serve"]
