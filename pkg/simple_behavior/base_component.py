#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Base pipeline component."""

import logging

from simple_behavior.config import RunConfig


class BaseComponent:
    """Base class for the pipeline components.

    :param config: The run configuration the component reads its parameters from
    :param log: The logger to use
    """

    log: logging.Logger

    config: RunConfig

    def __init__(self, config: RunConfig, log: logging.Logger) -> None:
        """Construct a new base component object."""

        self.log = log
        self.config = config
