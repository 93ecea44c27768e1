#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

VERSION = '0.1.0'


def get_versions():
    return {'version': VERSION, 'full-revisionid': None, 'dirty': False, 'error': None, 'date': None}
