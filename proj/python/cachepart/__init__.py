# Copyright 2026 The cachepart Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Set-partitioned shared cache simulator and partition optimizer."""

import json

from ._cachepart import (
    Cache,
    CacheConfig,
    ConfigError,
    DeadlockError,
    Experiment,
    InfeasibleError,
    ParseError,
    decompose_address,
    load_config,
    parse_config,
    profile,
    solve_min_misses,
)
from . import _cachepart as _core

__all__ = [
    "Cache",
    "CacheConfig",
    "ConfigError",
    "DeadlockError",
    "Experiment",
    "InfeasibleError",
    "ParseError",
    "decompose_address",
    "load_config",
    "optimize",
    "parse_config",
    "profile",
    "run",
    "solve_min_misses",
]


def optimize(config, curves):
    """Partition sizes for `config` given miss-curve CSV text; returns a dict."""
    return json.loads(_core.optimize(config, curves))


def run(config, assignment, curves, mode="both", seed=None):
    """Simulate `config` under `assignment` (dict or JSON text); returns the report dict."""
    if not isinstance(assignment, str):
        assignment = json.dumps(assignment)
    return json.loads(_core.run(config, assignment, curves, mode, seed))
