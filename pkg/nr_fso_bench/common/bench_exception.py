#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 NR FSO Bench contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


class BenchException(Exception):
    """
    Bench Exception
    """
    def __init__(self, message: str, exit_code: int = EXIT_ERROR, stage: str = None):
        super().__init__(message)
        self.exit_code = exit_code
        self.stage = stage

    def get_exit_code(self) -> int:
        return self.exit_code

    def with_stage(self, stage: str) -> "BenchException":
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ConfigurationError(BenchException):
    """Invalid numerology, carrier, chain or scenario configuration"""


class InputError(BenchException):
    """Malformed input to an operation"""


class FormatError(BenchException):
    """Malformed file contents (frequency response CSV, IQ sidecar)"""


class UndefinedSnrError(BenchException):
    """SNR requested on a zero-power signal"""


class NoLockError(BenchException):
    """Carrier recovery loop did not lock"""


class SyncError(BenchException):
    """Synchronization correlation peak below threshold"""


class TruncationError(BenchException):
    """Capture too short for the requested demodulation"""


class EstimationError(BenchException):
    """Channel estimation failed"""


class EqualizationError(BenchException):
    """All subcarriers masked by the equalizer"""


class MeasurementError(BenchException):
    """PSD / ACLR measurement preconditions violated"""


class UndefinedEvmError(BenchException):
    """EVM requested against a zero-power reference"""


class IncompleteTestError(BenchException):
    """A measurement required by the test model is missing"""


class UsageError(BenchException):
    """Unknown flags, presets or subcommands"""
