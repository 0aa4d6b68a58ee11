import json

import numpy as np
import pytest

import wavefem as wf
from wavefem.spectral import (Spectrum, laplacian_pencil, laplacian_spectrum,
                              max_eigenvalue, null_space_dimension,
                              spectrum_to_csv, spectrum_to_json,
                              spurious_mode_report)

from conftest import assemble_all

PI2 = np.pi ** 2


def test_interval_dirichlet_spectrum():
    # continuum oracle: the Dirichlet Laplacian on [0, 1] has k^2 pi^2
    mesh = wf.generate_interval_mesh(64, 1.0)
    _, ops = assemble_all(mesh, "dirichlet")
    spec = laplacian_spectrum(ops)
    assert null_space_dimension(spec) == 0
    for k, lam in enumerate(spec.eigenvalues[:3], start=1):
        assert abs(lam - k ** 2 * PI2) / (k ** 2 * PI2) <= 1e-3


def test_square_neumann_spectrum(square_150):
    _, ops = assemble_all(square_150, "neumann")
    spec = laplacian_spectrum(ops)
    assert null_space_dimension(spec) == 1
    targets = [PI2, PI2, 2 * PI2]
    for lam, t in zip(spec.eigenvalues[1:4], targets):
        assert abs(lam - t) / t <= 5e-3


def test_square_dirichlet_spectrum(square_150):
    _, ops = assemble_all(square_150, "dirichlet")
    spec = laplacian_spectrum(ops)
    assert null_space_dimension(spec) == 0
    assert abs(spec.eigenvalues[0] - 2 * PI2) / (2 * PI2) <= 5e-3


def test_constant_vector_in_kernel(square_150):
    dofs, ops = assemble_all(square_150, "neumann")
    A, _ = laplacian_pencil(ops)
    ones = np.ones(dofs.m_h)
    scale = abs(A).max()
    assert np.abs(A @ ones).max() <= 1e-12 * scale


def test_operator_symmetric_psd(cube_44):
    _, ops = assemble_all(cube_44, "dirichlet")
    A, _ = laplacian_pencil(ops)
    rng = np.random.default_rng(5)
    scale = abs(A).max()
    for _ in range(10):
        x = rng.standard_normal(A.shape[0])
        y = rng.standard_normal(A.shape[0])
        assert x @ (A @ x) >= -1e-12 * scale * (x @ x)
        assert abs(x @ (A @ y) - y @ (A @ x)) <= 1e-12 * scale * np.linalg.norm(x) * np.linalg.norm(y)


def test_eigen_residuals(square_36):
    _, ops = assemble_all(square_36, "neumann")
    spec = laplacian_spectrum(ops, compute_vectors=True)
    A, M = laplacian_pencil(ops)
    normA = np.linalg.norm(A.toarray(), 2)
    for k in range(0, spec.eigenvalues.size, 7):
        v = spec.eigenvectors[:, k]
        r = A @ v - spec.eigenvalues[k] * (M @ v)
        assert np.linalg.norm(r) <= 1e-9 * normA * np.linalg.norm(v)


def test_iterative_matches_dense(square_36):
    _, ops = assemble_all(square_36, "dirichlet")
    dense = laplacian_spectrum(ops)
    iterative = laplacian_spectrum(ops, dense_cutoff=1)
    k = len(iterative.eigenvalues)
    assert np.abs(iterative.eigenvalues - dense.eigenvalues[:k]).max() \
        <= 1e-6 * dense.lambda_max
    assert abs(iterative.lambda_max - dense.lambda_max) <= 1e-6 * dense.lambda_max


def test_max_eigenvalue_paths(square_36):
    _, ops = assemble_all(square_36, "dirichlet")
    dense = max_eigenvalue(ops)
    iterative = max_eigenvalue(ops, dense_cutoff=1)
    assert abs(dense - iterative) <= 1e-6 * dense


def test_max_eigenvalue_grows_under_refinement():
    vals = []
    for n in (2, 4, 8):
        mesh = wf.generate_square_mesh(n)
        _, ops = assemble_all(mesh, "dirichlet")
        vals.append(max_eigenvalue(ops))
    assert vals[0] < vals[1] < vals[2]


def test_neumann_lambda2_converges():
    # the first nonzero eigenvalue approaches pi^2 from above
    errs = []
    for n in (4, 8, 16):
        mesh = wf.generate_square_mesh(n)
        _, ops = assemble_all(mesh, "neumann")
        spec = laplacian_spectrum(ops)
        errs.append(abs(spec.eigenvalues[1] - PI2))
    assert errs[0] > errs[1] > errs[2]


def test_spurious_transition_3d(cube_44, cube_200, cube_400):
    specs = []
    for mesh in (cube_44, cube_200, cube_400):
        _, ops = assemble_all(mesh, "dirichlet")
        specs.append(laplacian_spectrum(ops))
    report = spurious_mode_report(specs)
    nulls = [lev.null_count for lev in report.levels]
    assert nulls[0] > 0
    assert nulls[-1] == 0
    # smallest nonzero stays near 3 pi^2 across the sequence
    for lev in report.levels:
        assert abs(lev.smallest_nonzero - 3 * PI2) / (3 * PI2) <= 0.02


def test_single_level_report_unflagged(square_36):
    _, ops = assemble_all(square_36, "neumann")
    report = spurious_mode_report([laplacian_spectrum(ops)])
    assert not report.has_flags
    assert len(report.levels) == 1


def test_pesky_mode_flagging():
    # synthetic spectra: a mode sinking by more than half must be flagged
    good = Spectrum(np.array([0.0, 9.9, 20.0]), 20.0, 3, True)
    sinking = Spectrum(np.array([0.0, 3.1, 20.0]), 20.0, 3, True)
    report = spurious_mode_report([good, sinking])
    assert report.has_flags
    stable = Spectrum(np.array([0.0, 9.87, 19.9]), 19.9, 3, True)
    report = spurious_mode_report([good, stable])
    assert not report.has_flags


def test_2d_neumann_stable_under_refinement(square_150, square_1500):
    specs = []
    for mesh in (square_150, square_1500):
        _, ops = assemble_all(mesh, "neumann")
        specs.append(laplacian_spectrum(ops))
    report = spurious_mode_report(specs)
    assert not report.has_flags
    assert [lev.null_count for lev in report.levels] == [1, 1]


def test_exports(tmp_path, square_36):
    _, ops = assemble_all(square_36, "neumann")
    spec = laplacian_spectrum(ops)
    csv_path = tmp_path / "spec.csv"
    spectrum_to_csv(spec, str(csv_path))
    rows = csv_path.read_text().strip().splitlines()
    assert rows[0] == "index,eigenvalue"
    assert len(rows) == 1 + len(spec.eigenvalues)
    json_path = tmp_path / "spec.json"
    spectrum_to_json(spec, str(json_path), metadata={"bc": "neumann"})
    payload = json.loads(json_path.read_text())
    assert payload["null_space_dimension"] == 1
    assert payload["metadata"]["bc"] == "neumann"
