"""Command registration entrypoint.

Each command module exposes a ``register(subparsers)`` function that adds its
sub-parser and binds its handler. ``main.py`` builds the top-level parser and
passes the sub-parser action here.
"""

from __future__ import annotations

import argparse

from tools import evaluate, predict, simulate, study, train, uq


def register_commands(subparsers: argparse._SubParsersAction) -> None:
    """Register every command module."""

    simulate.register(subparsers)
    train.register(subparsers)
    predict.register(subparsers)
    evaluate.register(subparsers)
    uq.register(subparsers)
    study.register(subparsers)
