"""End-to-end acceptance checks, one test per criterion.

Run ``pytest tests/test_acceptance.py`` for a one-line PASS/FAIL summary per
criterion at the end of the session output.
"""
import itertools
import time

import numpy as np
import pytest

from dsep_cases import EXAMPLE_QUERIES, HAND_DERIVED
from trialtransport import oracle
from trialtransport.estimators import (standardize_beta, standardize_phi,
                                       standardized_standard_error, weight_beta, weight_phi)
from trialtransport.graph import BUILTINS, builtin, check_phi_equals_beta, check_phi_equals_gamma, d_separated
from trialtransport.io import data_path, load_table
from trialtransport.report import pct, reproduce_table2
from trialtransport.scm import enumerate_joint, random_scm, sample, sample_joint_counts, sharp_null
from trialtransport.table import ContingencyTable

acceptance = pytest.mark.acceptance
N_RANDOM = 100


def random_fig1_models(seed, n=N_RANDOM, **kw):
    rng = np.random.default_rng(seed)
    for i in range(n):
        levels = {"A": 3} if i % 4 == 3 else None
        yield random_scm(builtin("fig1"), rng, levels=levels, **kw)


@acceptance(1, "phi reproduction on Table 1")
def test_phi_reproduction():
    start = time.perf_counter()
    table = load_table(data_path("table1.csv"))
    phi1, phi0 = standardize_phi(table, 1, 0), standardize_phi(table, 0, 0)
    elapsed = time.perf_counter() - start
    assert abs(phi1 - 0.35047) <= 5e-4
    assert abs(phi0 - 0.35107) <= 5e-4
    assert (pct(phi1), pct(phi0)) == ("35.0%", "35.1%")
    assert abs((phi1 - phi0) - (-0.00060)) <= 5e-6
    assert elapsed < 1.0


@acceptance(2, "beta plug-in from Table 1")
def test_beta_plugin(table1):
    b1, b0 = standardize_beta(table1, 1), standardize_beta(table1, 0)
    assert abs(b1 - 0.3846) <= 5e-4
    assert abs(b0 - 0.3172) <= 5e-4
    assert abs(b1 - 0.386) <= 0.01 and abs(b0 - 0.322) <= 0.01
    note = reproduce_table2().notes["beta"]
    assert "not expected" in note


@acceptance(3, "gamma row sign pattern on the reference model")
def test_gamma_sign_pattern(reference_scm):
    g = oracle.gamma(reference_scm, 1, 0) - oracle.gamma(reference_scm, 0, 0)
    b = oracle.beta(reference_scm, 1) - oracle.beta(reference_scm, 0)
    p = oracle.phi_param(reference_scm, 1, 0) - oracle.phi_param(reference_scm, 0, 0)
    assert g < 0
    assert b > 0
    assert abs(p) < 0.01


@acceptance(4, "weighting equals standardization")
def test_weighting_equivalence(table1):
    rng = np.random.default_rng(4)
    tables = [table1]
    while len(tables) < N_RANDOM + 1:
        n_x = int(rng.integers(1, 5))
        n_a = 3 if len(tables) % 2 else 2
        counts = rng.integers(0, 1000, size=(2, n_x, n_a, 2))
        counts[1, :, :, 0] += 1
        counts[0, :, :, 0] += 1
        tables.append(ContingencyTable(counts))
    for t in tables:
        for a, ap in itertools.product(range(t.n_a), repeat=2):
            assert abs(weight_phi(t, a, ap) - standardize_phi(t, a, ap)) <= 1e-12
        for a in range(t.n_a):
            assert abs(weight_beta(t, a) - standardize_beta(t, a)) <= 1e-12
    assert sum(t.n_a == 3 for t in tables) >= 50


@acceptance(5, "identification chain")
def test_identification_chain():
    for scm in random_fig1_models(5, randomized_trial=True):
        for a in range(scm.variable("A").levels):
            chk = oracle.verify_identification(scm, a)
            assert chk.passed and chk.residual <= 1e-12
    broken = random_scm(builtin("fig1").add_edges(("U", "S")), np.random.default_rng(5),
                        randomized_trial=True)
    assert not oracle.verify_identification(broken, 1).passed


@acceptance(6, "consistency identity")
def test_consistency_identity():
    for scm in random_fig1_models(6):
        for a in range(scm.variable("A").levels):
            observed = oracle.observed_mean(scm, {"S": 0, "A": a})
            assert abs(oracle.gamma(scm, a, a) - observed) <= 1e-12


@acceptance(7, "edge-removal special cases and criterion soundness")
def test_special_cases():
    rng = np.random.default_rng(7)
    for name, target in [("fig3-i", "beta"), ("fig3-ii", "beta"),
                         ("fig4-noUY", "gamma"), ("fig4-noUA", "gamma")]:
        for _ in range(N_RANDOM):
            scm = random_scm(builtin(name), rng, randomized_trial=True)
            for a, ap in itertools.product((0, 1), repeat=2):
                other = oracle.beta(scm, a) if target == "beta" else oracle.gamma(scm, a, ap)
                assert abs(oracle.phi_param(scm, a, ap) - other) <= 1e-12
    for name in BUILTINS:
        dag = builtin(name)
        by_beta, by_gamma = check_phi_equals_beta(dag).holds, check_phi_equals_gamma(dag).holds
        for _ in range(N_RANDOM):
            scm = random_scm(dag, rng, randomized_trial=True)
            for a, ap in itertools.product((0, 1), repeat=2):
                phi = oracle.phi_param(scm, a, ap)
                if by_beta:
                    assert abs(phi - oracle.beta(scm, a)) <= 1e-12
                if by_gamma:
                    assert abs(phi - oracle.gamma(scm, a, ap)) <= 1e-12


@acceptance(8, "sharp-null contrasts")
def test_sharp_null(sharp_null_scm):
    # phi compares trial arms, so it needs U to leave trial treatment alone
    models = random_fig1_models(8, n=N_RANDOM, randomized_trial=True)
    for scm in [*models, sharp_null_scm]:
        scm = sharp_null(scm)
        n_a = scm.variable("A").levels
        for a, a_ref, ap in itertools.product(range(n_a), repeat=3):
            report = oracle.oracle_report(scm, a, a_ref, ap)
            for row in report.rows.values():
                assert abs(row.difference) <= 1e-12
    gap = max(abs(oracle.phi_param(sharp_null_scm, a, ap) - oracle.beta(sharp_null_scm, a))
              for a, ap in itertools.product((0, 1), repeat=2))
    assert gap >= 0.01


@acceptance(9, "Monte Carlo convergence and reproducible sampling")
def test_monte_carlo(reference_scm):
    start = time.perf_counter()
    n, seed = 10 ** 6, 20240501
    table = sample(reference_scm, n, seed)
    assert sample(reference_scm, n, seed) == table
    base = sample_joint_counts(reference_scm, n, seed, workers=1)
    for workers in (2, 4):
        assert np.array_equal(sample_joint_counts(reference_scm, n, seed, workers=workers), base)

    law = enumerate_joint(reference_scm).marginal(["S", "X", "A", "Y"])
    c = table.counts
    for a in (0, 1):
        true_risk = law[1, :, a, 1] / law[1, :, a].sum(axis=-1)
        checks = [
            (standardize_phi(table, a, 0), oracle.phi_param(reference_scm, a, 0), c[0, :, 0].sum(-1)),
            (standardize_beta(table, a), oracle.beta(reference_scm, a), c[0].sum(axis=(1, 2))),
        ]
        for estimate, truth, target in checks:
            se = standardized_standard_error(table, a, target, true_risk)
            assert abs(estimate - truth) <= 4 * se
    assert time.perf_counter() - start < 30


@acceptance(10, "d-separation suite")
def test_dsep_suite():
    assert len(HAND_DERIVED) >= 20
    for name, a, b, z, expected in EXAMPLE_QUERIES + HAND_DERIVED:
        assert d_separated(builtin(name), a, b, z) is expected, (name, a, b, z)
