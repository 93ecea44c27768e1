#!/usr/bin/env python
# encoding: utf-8

# The MIT License
# Copyright (c) 2024 Ina (http://www.ina.fr/)
# See the LICENSE file distributed with this work for the full license text.

from .numerics import Rng, SketchOperator
from .countsketch import CountSketchOp, build_countsketch
from .subspace_embedding import MSketchOp, build_msketch, calibrated_config, derive_constants
from .entrywise_embedding import build_entrywise, calibrated_entrywise, estimate_entrywise_norm
from .heavy_hitter import HeavyHitterState, hh_build
from .l1_estimator import SubsamplingHHState, BoostedL1Estimator, shh_build, rough_estimate
from .tensor_independence import TensorIndependenceState, build_tensor_state, read_stream
from .oracle_harness import DistortionReport, empirical_distortion, exact_tvd
from .iid_design import plan_embedding, empirical_distortion_iid

from . import _version
__version__ = _version.get_versions()['version']
