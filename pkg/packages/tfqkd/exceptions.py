# -*- coding: utf-8 -*-
# ------------------------------------------------------------------------------
#
#   Copyright 2024 Valory AG
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.
#
# ------------------------------------------------------------------------------

"""This module contains the exceptions raised by the tfqkd package."""

from typing import Optional


class TFQKDError(Exception):
    """Base class of all tfqkd errors."""


class DomainError(TFQKDError, ValueError):
    """A numeric argument lies outside the domain of an operation."""


class ConfigError(TFQKDError):
    """A configuration value is missing or invalid."""

    def __init__(self, message: str, field: Optional[str] = None) -> None:
        """
        Initialize the error.

        :param message: human readable description.
        :param field: dotted path of the offending configuration field.
        """
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}" if field else message)


class EmptyTallyError(TFQKDError):
    """A simulation was requested with no pulses."""


class MissingSettingError(TFQKDError):
    """Counts for a required setting are missing."""

    def __init__(self, setting: str) -> None:
        """Initialize the error with the label of the missing setting."""
        self.setting = setting
        super().__init__(f"no pulses recorded for setting '{setting}'")


class InsufficientDataError(TFQKDError):
    """Too few usable data points for a fit."""
