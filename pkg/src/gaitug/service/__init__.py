"""HTTP service wrapping the analysis pipeline.

The CLI is a thin client of this app: by default it drives it in-process
through an ASGI transport, or against a remote server with --server.
"""

from .app import create_app

app = create_app()

__all__ = ["app", "create_app"]
