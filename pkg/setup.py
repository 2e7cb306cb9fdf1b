#!/usr/bin/env python3
import os
import importlib.util
from setuptools import setup

PROJ_NAME = 'lowerbound-lab'
PACKAGE_NAME = 'lowerbound_lab'

here = os.path.abspath(os.path.dirname(__file__))

try:
    README = open(os.path.join(here, 'README.md')).read()
except:  # noqa: E722 do not use bare 'except
    README = ""
try:
    CHANGELOG = open(os.path.join(here, 'CHANGELOG.md')).read()
except:  # noqa: E722 do not use bare 'except
    CHANGELOG = ""


def _load_version():
    spec = importlib.util.spec_from_file_location('version', os.path.join(here, '%s/const.py' % PACKAGE_NAME))
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod.__version__


VERSION = "%.2f" % _load_version()

packages = [
    'lowerbound_lab',
]
requires = ['numpy', 'scipy', 'gevent', 'msgpack', 'setproctitle']

setup(
    name=PROJ_NAME,
    version=VERSION,
    description='Numerical lab for lower-bound convergence criteria of positive operator semigroups',
    long_description=README + '\n\n' + CHANGELOG,
    long_description_content_type="text/markdown",
    packages=packages,
    include_package_data=True,
    install_requires=requires,
    extras_require={'test': ['pytest', 'hypothesis']},
    python_requires='>=3.7',
    license="Apache-2.0",
    zip_safe=False,
    classifiers=(
        'License :: OSI Approved :: Apache Software License',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: Implementation :: CPython',
        'Topic :: Scientific/Engineering :: Mathematics',
    ),
    entry_points={'console_scripts': ["lowerbound-lab = lowerbound_lab.cli:start"]},
)
