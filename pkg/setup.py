#!/usr/bin/env python
# -*- coding: utf-8 -*-#
#
# Copyright (C) 2024  The multivcg developers.
#
# This program is free software; you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by the
# Free Software Foundation; either version 3 of the License, or (at your
# option) any later version.
#
# This program is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the GNU
# General Public License for more details.
#
# You should have received a copy of the GNU General Public License along
# with this program.  If not, see <http://www.gnu.org/licenses/>.

import sys
python_version = sys.version_info[:2]
if python_version < (3, 6):
    raise RuntimeError("multivcg requires Python 3.6+")


## auxiliary functions
#
def read_whole_file(path):
    """
    Return file contents as a string.
    """
    with open(path, 'r') as stream:
        return stream.read()


## test runner setup
#
# See http://tox.readthedocs.org/en/latest/example/basic.html#integration-with-setuptools-distribute-test-commands
# on how to run tox when python setup.py test is run
#
from setuptools.command.test import test as TestCommand

class Tox(TestCommand):
    def finalize_options(self):
        TestCommand.finalize_options(self)
        self.test_args = []
        self.test_suite = True

    def run_tests(self):
        # import here, cause outside the eggs aren't loaded
        import tox
        errno = tox.cmdline(self.test_args)
        sys.exit(errno)


## real setup description begins here
#
from setuptools import setup, find_packages

setup(
    name="multivcg",
    version=read_whole_file('version.txt').strip(),
    description="Exact VCG auctions of multiple units of multiple resources, solved by joining valuation tensors.",
    long_description=read_whole_file('README.rst'),
    author="The multivcg developers",
    license="GPLv3+",
    keywords="auction vcg mechanism-design multi-resource multi-unit cloud pricing",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: GNU General Public License v3 or later (GPLv3+)",
        "Operating System :: POSIX :: Linux",
        "Operating System :: MacOS :: MacOS X",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    packages=find_packages(exclude=['tests', 'tests.*']),
    include_package_data=True,  # include files mentioned by MANIFEST.in
    entry_points={
        'console_scripts': [
            'multivcg = multivcg.__main__:main',
        ]
    },
    install_requires=[
        'future',
        'PyCLI',
        'click>=4.0',  ## click.confirm() for overwrite prompts
        'coloredlogs',
        'schema',
        'PyYAML',
        # numeric core
        'numpy>=1.17',  ## `np.random.Generator` and `SeedSequence`
        'scipy',
    ],
    tests_require=['tox', 'mock', 'hypothesis', 'pytest>=2.10'],  # read right-to-left
    cmdclass={'test': Tox},
)
