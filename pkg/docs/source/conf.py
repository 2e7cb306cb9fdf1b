# Sphinx configuration for the lowerbound-lab API reference; built by docs/run.sh.

import os
import sys

import sphinx_rtd_theme

sys.path.insert(0, os.path.abspath('../..'))

project = 'lowerbound-lab'
author = 'lowerbound-lab developers'
copyright = '2026, %s' % author

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode']
autodoc_member_order = 'bysource'

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
