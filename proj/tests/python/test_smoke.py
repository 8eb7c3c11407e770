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
"""Smoke tests for the Python bindings."""

import math

import numpy as np
import pytest

import svak


def test_eer_separated_and_reversed():
    assert svak.compute_eer([3.0, 4.0], [1.0, 2.0]).eer == 0.0
    assert svak.compute_eer([1.0, 2.0], [3.0, 4.0]).eer == 1.0


def test_eer_counts():
    r = svak.compute_eer([0.5, 1.5, 2.5], [0.0, 1.0])
    assert (r.n_target, r.n_nontarget) == (3, 2)
    assert 0.0 <= r.eer <= 1.0


def test_mean_ci_matches_student_t():
    x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    mean, half = svak.mean_ci(x)
    sd = np.std(x, ddof=1)
    assert mean == pytest.approx(3.5)
    # t(0.975, 5) from standard tables
    assert half == pytest.approx(2.5705818366 * sd / math.sqrt(len(x)), rel=1e-9)


def test_plda_scalar_origin():
    one = np.ones((1, 1))
    zero = np.zeros(1)
    score = svak.plda_score(zero, one, one, zero, zero)
    assert score == pytest.approx(0.5 * math.log(4.0 / 3.0), abs=1e-12)


def test_feature_profiles():
    names = svak.feature_profile_names()
    assert "attacker" in names
    for name in names:
        cfg = svak.feature_profile(name)
        assert cfg.output_dim > 0


def test_corpus_to_features(tmp_path):
    n = svak.generate_corpus(2, 2, 5, str(tmp_path))
    assert n == 4
    rows = svak.load_manifest(str(tmp_path / "manifest.jsonl"))
    assert len(rows) == 4
    samples, rate = svak.read_audio(rows[0]["path"])
    feats = svak.extract_features(samples, rate, "attacker")
    assert feats.shape[1] == svak.feature_profile("attacker").output_dim
    assert feats.shape[0] > 0
    assert np.isfinite(feats).all()


def test_errors_raise_svak_error():
    with pytest.raises(svak.SvakError):
        svak.compute_eer([], [1.0])
    with pytest.raises(svak.SvakError):
        svak.feature_profile("no-such-profile")
