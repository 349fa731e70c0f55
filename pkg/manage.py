#!/usr/bin/env python
"""Command-line entry point for the view planning commands."""
import sys


def main():
    """Run a planning command and exit with its status."""
    from planning.cli import cli_dispatch

    sys.exit(cli_dispatch(sys.argv))


if __name__ == '__main__':
    main()
