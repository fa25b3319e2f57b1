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
from __future__ import annotations

import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

from nr_fso_bench.common.config import Config, get_cfg, init_cfg, DEFAULT_CONFIG_PATH
from nr_fso_bench.utils.log_helper import TRACE

logging.TRACE = TRACE
logging.addLevelName(logging.TRACE, "TRACE")
logging.Logger.trace = lambda inst, msg, *args, **kwargs: inst.log(logging.TRACE, msg, *args, **kwargs)
logging.trace = lambda msg, *args, **kwargs: logging.log(logging.TRACE, msg, *args, **kwargs)


class Globals:
    def __init__(self, path: str | Path = DEFAULT_CONFIG_PATH, console_level: Optional[Union[int, str]] = None):
        self._config = get_cfg(path)
        self._log = self._config.logging.apply(console_level=console_level)
        self.log.info(f"Loaded bench configuration from {path}; "
                      f"output directory {self._config.runtime.output_directory}")

    @property
    def config(self) -> Config:
        return self._config

    @property
    def log(self) -> logging.Logger:
        return self._log


@lru_cache(maxsize=1)
def get_globals(path: str | Path = DEFAULT_CONFIG_PATH, console_level: Optional[Union[int, str]] = None) -> Globals:
    """Load once, reuse everywhere."""
    return Globals(path=path, console_level=console_level)


def init_globals(path: str | Path, console_level: Optional[Union[int, str]] = None) -> Globals:
    """Call this once at startup if you want a non-default path or to reload."""
    init_cfg(path)
    get_globals.cache_clear()
    return get_globals(path, console_level)
