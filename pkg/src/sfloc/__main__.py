"""Allow `python -m sfloc`."""

from .cli.main import cli


if __name__ == "__main__":
    cli()
