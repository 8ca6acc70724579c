import json

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from gptc.linalg import haar_unitary, numerical_rank, orthonormal_span, permutation_matrix
from gptc.report import CheckReport


def test_numerical_rank_thresholds():
    assert numerical_rank(np.diag([1.0, 1e-6, 1e-12])) == 2
    assert numerical_rank(np.zeros((3, 3))) == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_haar_unitary_is_unitary(seed, n):
    U = haar_unitary(np.random.default_rng(seed), n)
    assert np.allclose(U.conj().T @ U, np.eye(n), atol=1e-12)


def test_permutation_matrix_sends_basis_vectors():
    P = permutation_matrix((2, 0, 1))
    assert np.allclose(P @ np.eye(3)[0], np.eye(3)[2])


def test_orthonormal_span():
    Q = orthonormal_span(np.array([[1.0, 2.0], [0.0, 0.0], [1.0, 2.0]]))
    assert Q.shape[1] == 1 and np.allclose(Q.T @ Q, 1)


def test_report_record_is_stable_json():
    r = CheckReport("x:y", 1e-12, 1e-9, witness={"m": np.eye(2)}, seed=3,
                    details={"b": np.float64(0.5), "a": (1, 2)})
    rec = json.loads(r.to_record())
    assert rec["pass"] is True and rec["witness"]["m"] == [[1.0, 0.0], [0.0, 1.0]]
    assert list(rec) == sorted(rec)
    assert r.to_record() == r.to_record()
    assert r.summary().startswith("PASS x:y")
    assert not CheckReport("z", 1e-9, 1e-9).passed
