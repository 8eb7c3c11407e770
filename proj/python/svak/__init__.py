# Copyright (c) 2026 svak authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Speaker-verification attack toolkit (Python bindings of the C++ core)."""

from svak._core import (  # noqa: F401
    EerResult,
    SvakError,
    VerificationSystem,
    compute_eer,
    derive_seed,
    extract_features,
    feature_profile,
    feature_profile_names,
    generate_corpus,
    load_manifest,
    mean_ci,
    plda_score,
    read_audio,
    run_attack,
    run_benchmark,
    set_log_level,
    set_num_threads,
    write_report,
)

__all__ = [
    "EerResult",
    "SvakError",
    "VerificationSystem",
    "compute_eer",
    "derive_seed",
    "extract_features",
    "feature_profile",
    "feature_profile_names",
    "generate_corpus",
    "load_manifest",
    "mean_ci",
    "plda_score",
    "read_audio",
    "run_attack",
    "run_benchmark",
    "set_log_level",
    "set_num_threads",
    "write_report",
]
