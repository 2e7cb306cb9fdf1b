#!/usr/bin/env python3

from lowerbound_lab import cli

cli.start()
