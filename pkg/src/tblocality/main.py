"""Entry point for tblocality CLI."""

from tblocality.cli.app import app

if __name__ == "__main__":
    app()
