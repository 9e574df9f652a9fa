#!/usr/bin/env python3

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

"""Behavior pipeline exceptions."""


class BehaviorException(Exception):
    """All pipeline exceptions inherit from this or instantiate it."""


class ValidationException(BehaviorException):
    """Raised when a domain value or an input record is invalid.

    :param message: The message for the exception
    :param line_number: The 1-based line of the input the error was found on (if any)
    """

    message: str
    line_number: int | None

    def __init__(self, message: str, line_number: int | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.line_number = line_number

    def __str__(self) -> str:
        """Generate and return the string representation of the object.

        :return: A string representation of the object
        """
        if self.line_number is None:
            return self.message

        return f"line {self.line_number}: {self.message}"


class UndefinedAngleException(ValidationException):
    """Raised when a turn angle is requested across a zero-length segment."""


class MissingInputException(BehaviorException):
    """Raised when an input file or upstream artifact does not exist."""


class InvariantException(BehaviorException):
    """Raised when an internal invariant of the pipeline is breached."""
