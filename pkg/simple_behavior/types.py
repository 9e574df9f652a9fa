"""Custom types for the library."""

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

from typing import NewType

# pylint: disable=invalid-name

SessionId = NewType("SessionId", str)
TrackId = NewType("TrackId", str)
CohortId = NewType("CohortId", str)
RegionName = NewType("RegionName", str)

OTHER_REGION = RegionName("other")
