# coding:utf-8

import os
import sys
import datetime
import traceback
from threading import RLock

if os.name == 'nt':
    endl = '\r\n'
else:  # assume posix
    endl = '\n'

COLORS = {
    'ERROR': '\033[31m',
    'CRITICAL': '\033[31m',
    'WARN': '\033[33m',
    'DEBG': '\033[32m',
    'VERB': '\033[36m',
}
RESET = '\033[0m'


class Logger(object):
    CRITICAL = 5
    FATAL = CRITICAL
    ERROR = 4
    WARNING = 3
    WARN = WARNING
    INFO = 2
    DEBUG = 1
    VERBOSE = 0

    def __init__(self, stream=None, level=WARNING):
        self.logf = None
        self.level = level
        self.stream = stream or sys.stderr
        self.isatty = getattr(self.stream, 'isatty', lambda: False)()
        # color codes and line writes must not interleave between threads
        self._lock = RLock()

    @classmethod
    def getLogger(cls, *args, **kwargs):
        return cls(*args, **kwargs)

    def cleanup(self):
        if self.logf:
            _ = self.logf
            self.logf = None
            _.close()

    def set_logfile(self, fpath):
        if self.logf:
            self.logf.close()
        self.logf = open(fpath, "ab")

    def set_level(self, level):
        self.level = min(max(level, self.VERBOSE), self.CRITICAL)

    def enabled_for(self, level):
        return level >= self.level

    def _format(self, fmt, args):
        if not args:
            return fmt
        try:
            return fmt % args
        except (ValueError, TypeError):
            return '%s %r' % (fmt, args)

    def log(self, level, tag, fmt, *args):
        if not self.enabled_for(level):
            return
        msg = self._format(fmt, args)
        now = datetime.datetime.now()
        line = '%-4s - [%s] %s\n' % (tag, now.strftime('%X'), msg)
        with self._lock:
            try:
                if self.isatty and tag in COLORS:
                    self.stream.write(COLORS[tag] + line + RESET)
                else:
                    self.stream.write(line)
                self.stream.flush()
            except IOError:
                pass
            if self.logf:
                _ = '[%s] %s %s%s' % (now.strftime('%b %d %X'), tag, msg, endl)
                self.logf.write(_.encode("utf-8", 'replace'))

    def verbose(self, fmt, *args):
        self.log(self.VERBOSE, 'VERB', fmt, *args)

    def debug(self, fmt, *args):
        self.log(self.DEBUG, 'DEBG', fmt, *args)

    def info(self, fmt, *args):
        self.log(self.INFO, 'INFO', fmt, *args)

    def warning(self, fmt, *args):
        self.log(self.WARNING, 'WARN', fmt, *args)

    def warn(self, fmt, *args):
        self.warning(fmt, *args)

    def error(self, fmt, *args):
        self.log(self.ERROR, 'ERROR', fmt, *args)

    def exception(self, fmt, *args):
        self.error(fmt, *args)
        if self.enabled_for(self.ERROR):
            traceback.print_exc(file=self.stream)

    def critical(self, fmt, *args):
        self.log(self.CRITICAL, 'CRITICAL', fmt, *args)


# shared instance for library modules; the CLI adjusts its level
logger = Logger()
