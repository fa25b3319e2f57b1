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
import logging
import os
import threading
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional, Union

TRACE = 5

DEFAULT_LOG_FORMAT = \
    '%(asctime)s - %(name)s - {%(filename)s:%(lineno)d} - [%(threadName)s-%(thread_id)s]- %(levelname)s - %(message)s'


class LogHelper:
    @staticmethod
    def make_logger(*, log_dir: Union[Path, str] = ".", log_file: str, log_level, log_retain: int, log_size: int,
                    logger: str, log_format: str = None, console_level: Optional[Union[int, str]] = None):
        """
        Sets up the bench logger: a rotating file handler under log_dir and, optionally,
        a console handler restricted to console_level.

       :param log_dir: Log directory, created if missing
       :param log_file: file name inside log_dir
       :param log_level: level of the bench logger
       :param log_retain: number of rotated files kept
       :param log_size: rotation size in bytes
       :param logger: logger name; package modules log to children of this name
       :param log_format: optional format override
       :param console_level: level for stderr output; None disables the console handler
       :return: logging.Logger object
        """
        if log_file is None:
            raise RuntimeError('The log file name must be specified in config or passed as an argument')

        log_path = Path(log_dir) / log_file

        if log_level is None:
            log_level = logging.INFO

        log = logging.getLogger(logger)
        log.setLevel(log_level)
        fmt = log_format if log_format is not None else DEFAULT_LOG_FORMAT

        # Re-initialisation (init_globals) must not stack handlers
        for h in list(log.handlers):
            if getattr(h, "_nr_bench", False):
                log.removeHandler(h)
                h.close()

        os.makedirs(os.path.dirname(log_path) or ".", exist_ok=True)

        file_handler = RotatingFileHandler(log_path, backupCount=int(log_retain), maxBytes=int(log_size))
        file_handler.addFilter(LogHelper.thread_id_filter)
        file_handler.setFormatter(logging.Formatter(fmt))
        file_handler._nr_bench = True
        log.addHandler(file_handler)

        if console_level is not None:
            console_handler = logging.StreamHandler()
            console_handler.setLevel(console_level)
            console_handler.addFilter(LogHelper.thread_id_filter)
            console_handler.setFormatter(logging.Formatter('%(levelname)s - %(name)s - %(message)s'))
            console_handler._nr_bench = True
            log.addHandler(console_handler)

        return log

    @staticmethod
    def thread_id_filter(record):
        """Inject thread_id to log records"""
        record.thread_id = threading.get_native_id()
        return record
