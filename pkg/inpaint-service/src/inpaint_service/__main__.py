"""Console entry point: serve the app with uvicorn."""

from __future__ import annotations

import os

import uvicorn

from .app import create_app


def main() -> None:
    uvicorn.run(
        create_app(),
        host=os.environ.get("INPAINT_HOST", "127.0.0.1"),
        port=int(os.environ.get("INPAINT_PORT", "8500")),
    )


if __name__ == "__main__":
    main()
