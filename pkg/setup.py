#!/usr/bin/env python
# encoding: utf-8

# The MIT License

# Copyright (c) 2024 Ina (http://www.ina.fr/)

# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in
# all copies or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN
# THE SOFTWARE.


import os
from setuptools import setup

KEYWORDS = '''
sketching
l1-norm
streaming-algorithms
independence-testing
subspace-embedding'''.strip().split('\n')

CLASSIFIERS=[
    'Development Status :: 3 - Alpha',
    'Intended Audience :: Developers',
    'Intended Audience :: Education',
    'Intended Audience :: Science/Research',
    'License :: OSI Approved :: MIT License',
    'Operating System :: OS Independent',
    'Programming Language :: Python :: 3',
    'Programming Language :: Python :: 3 :: Only',
    'Programming Language :: Python :: 3.7',
    'Programming Language :: Python :: 3.8',
    'Programming Language :: Python :: 3.9',
    'Programming Language :: Python :: 3.10',
    'Programming Language :: Python :: 3.11',
    'Topic :: Scientific/Engineering',
    'Topic :: Scientific/Engineering :: Mathematics',
    'Topic :: Software Development :: Libraries',
    'Topic :: Software Development :: Libraries :: Python Modules',
]

DESCRIPTION='inaL1Sketch is a Python toolbox of oblivious linear sketches for the l1 norm. \
It provides l1 subspace embeddings, entrywise norm estimation, turnstile streaming \
l1 estimation, streaming independence testing over tensor products and the Monte \
Carlo harness validating them, through an API and a command line program'

# read the contents of your README file
with open('README.md', 'r') as fid:
    long_description = fid.read()

version = {}
with open(os.path.join('inaL1Sketch', '_version.py')) as fid:
    exec(fid.read(), version)

setup(
    name = "inaL1Sketch",
    version = version['VERSION'],
    author = "Ina",
    test_suite="test_inaL1Sketch.py",
    description = DESCRIPTION,
    license = "MIT",
    install_requires=['numpy', 'scipy', 'pandas'],
    extras_require={'doc': ['sphinx-toolbox']},
    packages=['inaL1Sketch'],
    keywords = KEYWORDS,
    include_package_data = True,
    package_data = {'inaL1Sketch': ['schemas/*.json']},
    data_files = ['LICENSE'],
    long_description = long_description,
    long_description_content_type='text/markdown',
    scripts=[os.path.join('scripts', 'ina_l1sketch.py')],
    classifiers=CLASSIFIERS,
    python_requires='>=3.7',
)
