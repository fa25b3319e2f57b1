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
import signal
import threading

log = logging.getLogger(__name__)


class GracefulInterruptHandler(object):
    """
    Context manager used around scenario matrices: the first SIGINT/SIGTERM marks the run as
    interrupted so pending scenarios are skipped and finished reports are still written; the
    second one falls through to the original handler.
    """
    def __init__(self, signals=(signal.SIGINT, signal.SIGTERM)):
        self.signals = signals
        self.original_handlers = {}
        self.interrupted = False
        self.released = False
        self.count = 0

    def __enter__(self):
        self.interrupted = False
        self.released = False
        self.count = 0

        # signal.signal() may only be called from the main thread
        if threading.current_thread() is not threading.main_thread():
            self.released = True
            return self

        for sig in self.signals:
            self.original_handlers[sig] = signal.getsignal(sig)
            signal.signal(sig, self.handler)

        return self

    def handler(self, signum, frame):
        self.count += 1
        self.interrupted = True
        log.warning("Interrupt received (signal %s); finishing running scenarios", signum)
        if self.count > 1:
            self.release()
            signal.raise_signal(signum)

    def __exit__(self, type, value, tb):
        self.release()

    def release(self):
        if self.released:
            return False

        for sig in self.signals:
            signal.signal(sig, self.original_handlers[sig])

        self.released = True
        return True
