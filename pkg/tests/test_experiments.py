import io
import json

import numpy as np
import pytest

from typicality.experiments import (
    ExperimentConfig,
    SummaryStats,
    exact_average_purity,
    mc_average_purity,
    purity_inequality_check,
    resolve_subspace,
    run_distance_experiment,
    run_expectation_experiment,
    summary_dict,
    write_trials_csv,
)
from typicality.linalg import BipartiteShape, partial_trace
from typicality.sampling import SampleStream, reduced_state_from_coords, sample_coords
from typicality.spin_chain import SpinChainModel, build_subspace
from typicality.subspace import (
    canonical_ensemble,
    from_basis_vectors,
    full_space,
    random_subspace,
)

CHAIN_SPEC = {"kind": "spin-chain", "n": 3, "k": 1, "num_excited": 1}


def test_config_validation_and_hash():
    cfg = ExperimentConfig(subspace=CHAIN_SPEC, trials=10, seed=1)
    assert cfg.config_hash() == ExperimentConfig(subspace=CHAIN_SPEC, trials=10, seed=1).config_hash()
    other = ExperimentConfig(subspace=CHAIN_SPEC, trials=11, seed=1)
    assert cfg.config_hash() != other.config_hash()
    with pytest.raises(ValueError):
        ExperimentConfig(subspace=CHAIN_SPEC, trials=0, seed=1)
    with pytest.raises(ValueError):
        ExperimentConfig(subspace=CHAIN_SPEC, trials=1, seed=-2)


def test_resolve_subspace_kinds(tmp_path):
    sub = resolve_subspace(CHAIN_SPEC)
    assert sub.dim_subspace == 3
    full = resolve_subspace({"kind": "full", "dim_system": 2, "dim_environment": 2})
    assert full.dim_subspace == 4
    path = tmp_path / "sub.json"
    sub_small = random_subspace(BipartiteShape(2, 2), 2, np.random.default_rng(3))
    sub_small.save(path)
    loaded = resolve_subspace({"kind": "file", "path": str(path)})
    assert loaded.dim_subspace == 2
    with pytest.raises(ValueError):
        resolve_subspace({"kind": "nope"})


def test_exact_average_purity_full_space():
    value = exact_average_purity(full_space(BipartiteShape(2, 2)))
    assert value == pytest.approx(0.8, abs=1e-12)
    # closed form (d_S + d_E) / (d_S d_E + 1) on other full spaces
    for d_s, d_e in ((2, 3), (3, 4), (2, 6)):
        value = exact_average_purity(full_space(BipartiteShape(d_s, d_e)))
        assert value == pytest.approx((d_s + d_e) / (d_s * d_e + 1), abs=1e-12)


def test_exact_average_purity_single_state():
    rng = np.random.default_rng(8)
    shape = BipartiteShape(2, 3)
    sub = random_subspace(shape, 1, rng)
    marginal = partial_trace(
        np.outer(sub.basis[0], sub.basis[0].conj()), shape, "system"
    )
    assert exact_average_purity(sub) == pytest.approx(
        float(np.trace(marginal @ marginal).real), abs=1e-12
    )


def test_exact_average_purity_one_hot_matches_dense_route():
    sub = build_subspace(SpinChainModel(n=5, k=2, num_excited=2))
    dense = from_basis_vectors(sub.shape, sub.basis)
    assert exact_average_purity(sub) == pytest.approx(exact_average_purity(dense), abs=1e-12)


def _doubled_space_purity_oracle(sub) -> float:
    """Literal doubled-space evaluation on tiny dimensions.

    Materializes the projector onto two copies of the subspace, symmetrizes
    it with the full swap of the copies, and contracts against the explicit
    system-swap operator.  Exponential in memory; oracle use only.
    """
    shape = sub.shape
    dim = shape.dim
    proj = sub.basis.T @ sub.basis.conj()
    doubled = np.kron(proj, proj)
    swap = np.zeros((dim * dim, dim * dim), dtype=complex)
    for x in range(dim):
        for y in range(dim):
            swap[y * dim + x, x * dim + y] = 1.0
    symmetric = (doubled + doubled @ swap @ doubled) / 2.0
    d_s, d_e = shape.dim_system, shape.dim_environment
    sys_swap = np.zeros((dim * dim, dim * dim), dtype=complex)
    for s in range(d_s):
        for e in range(d_e):
            for s2 in range(d_s):
                for e2 in range(d_e):
                    row = (s2 * d_e + e) * dim + (s * d_e + e2)
                    col = (s * d_e + e) * dim + (s2 * d_e + e2)
                    sys_swap[row, col] = 1.0
    d_r = sub.dim_subspace
    weight = 2.0 / (d_r * (d_r + 1))
    return float(np.trace(weight * symmetric @ sys_swap).real)


def test_exact_average_purity_against_doubled_space_oracle():
    oracle = _doubled_space_purity_oracle
    assert oracle(full_space(BipartiteShape(2, 2))) == pytest.approx(0.8, abs=1e-12)
    rng = np.random.default_rng(123)
    for d_s, d_e, d_r in ((2, 2, 3), (2, 3, 4), (3, 2, 2)):
        sub = random_subspace(BipartiteShape(d_s, d_e), d_r, rng)
        assert exact_average_purity(sub) == pytest.approx(oracle(sub), abs=1e-11)
    chain = build_subspace(SpinChainModel(n=3, k=1, num_excited=1))
    assert exact_average_purity(chain) == pytest.approx(oracle(chain), abs=1e-11)


def test_exact_average_purity_against_monte_carlo():
    sub = build_subspace(SpinChainModel(n=3, k=1, num_excited=1))
    exact = exact_average_purity(sub)
    mean, se = mc_average_purity(sub, trials=20_000, seed=99)
    assert abs(mean - exact) < 3 * se


def test_exact_average_purity_range_and_jensen():
    # samples are at least as pure as their average: <Tr rho^2> >= Tr <rho>^2
    rng = np.random.default_rng(19)
    for _ in range(15):
        d_s = int(rng.integers(1, 5))
        d_e = int(rng.integers(1, 7))
        d_r = int(rng.integers(1, min(12, d_s * d_e) + 1))
        sub = random_subspace(BipartiteShape(d_s, d_e), d_r, rng)
        value = exact_average_purity(sub)
        assert 1 / d_s - 1e-12 <= value <= 1 + 1e-12
        assert value >= canonical_ensemble(sub).system_purity - 1e-12


def test_purity_inequality_full_space_and_random():
    lhs, rhs = purity_inequality_check(full_space(BipartiteShape(2, 2)))
    assert lhs == pytest.approx(0.8, abs=1e-12)
    assert rhs == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(4)
    for _ in range(10):
        d_s = int(rng.integers(1, 5))
        d_e = int(rng.integers(1, 7))
        d_r = int(rng.integers(1, min(12, d_s * d_e) + 1))
        sub = random_subspace(BipartiteShape(d_s, d_e), d_r, rng)
        lhs, rhs = purity_inequality_check(sub)
        assert lhs <= rhs + 1e-10


def test_single_state_subspace_distances_vanish():
    cfg = ExperimentConfig(
        subspace={"kind": "spin-chain", "n": 4, "k": 2, "num_excited": 0},
        trials=50,
        seed=5,
    )
    result = run_distance_experiment(cfg)
    assert result.distance_stats.maximum < 1e-10


def test_three_spin_experiment_bounds():
    cfg = ExperimentConfig(subspace=CHAIN_SPEC, trials=2000, seed=11)
    result = run_distance_experiment(cfg)
    assert result.distance_stats.mean <= np.sqrt(2 / 3)
    assert result.all_bounds_satisfied
    names = {row.name for row in result.bound_rows}
    assert {"average_distance_eff", "average_distance_dr", "distance_tail",
            "operator_basis_tail"} <= names
    # at this scale the tail bound is vacuous yet still honored
    tail_row = next(r for r in result.bound_rows if r.name == "distance_tail")
    assert tail_row.vacuous and tail_row.satisfied
    avg_row = next(r for r in result.bound_rows if r.name == "average_distance_eff")
    assert not avg_row.vacuous and avg_row.satisfied
    stats = result.distance_stats
    assert stats.minimum <= stats.quantiles[50] <= stats.maximum
    assert all(0.0 <= f <= 1.0 for f in stats.tail_frequencies.values())
    assert np.all(result.distances >= 0) and np.all(result.distances <= 2 + 1e-9)
    d_s = result.subspace_info["dim_system"]
    assert np.all(result.purities >= 1 / d_s - 1e-9) and np.all(result.purities <= 1 + 1e-9)


def test_filtered_experiment_adds_bound_row():
    cfg = ExperimentConfig(
        subspace={"kind": "spin-chain", "n": 4, "k": 2, "num_excited": 2},
        trials=500,
        seed=3,
        filter={"kind": "typical-window", "half_width": 1.0},
    )
    result = run_distance_experiment(cfg)
    names = [row.name for row in result.bound_rows]
    assert "filtered_distance_tail" in names
    assert result.all_bounds_satisfied
    assert "filter_miss_weight" in result.subspace_info


def test_tail_rows_hold_across_seeds_and_chains():
    # empirical tail at the threshold never exceeds the bound plus 3 binomial
    # standard errors, on every run
    for seed in (1, 2, 3):
        for spec in (CHAIN_SPEC, {"kind": "spin-chain", "n": 6, "k": 2, "num_excited": 3}):
            result = run_distance_experiment(
                ExperimentConfig(subspace=spec, trials=800, seed=seed)
            )
            for row in result.bound_rows:
                assert row.satisfied, row


def test_filter_row_reproduces_filtered_formula():
    from typicality.bounds import filtered_distance_tail_bound, suggested_epsilon

    spec = {"kind": "spin-chain", "n": 6, "k": 2, "num_excited": 3}
    result = run_distance_experiment(ExperimentConfig(
        subspace=spec, trials=200, seed=8,
        filter={"kind": "typical-window", "half_width": 1.0},
    ))
    row = next(r for r in result.bound_rows if r.name == "filtered_distance_tail")
    info = result.subspace_info
    recomputed = filtered_distance_tail_bound(
        info["filter_support_dim"],
        info["filtered_effective_env_dim"],
        info["dim_subspace"],
        info["filter_miss_weight"],
        suggested_epsilon(info["dim_subspace"]),
    )
    assert row.threshold == pytest.approx(recomputed.threshold, rel=1e-12)
    assert row.formula_value == pytest.approx(recomputed.tail_bound, rel=1e-12)


def test_filter_from_file_matches_inline_spec(tmp_path):
    from typicality.filtering import save_filter
    from typicality.spin_chain import typical_projector, typical_window

    model = SpinChainModel(n=4, k=2, num_excited=2)
    filt = typical_projector(model, typical_window(model, 1.0))
    path = tmp_path / "filter.json"
    save_filter(filt, path)
    spec = {"kind": "spin-chain", "n": 4, "k": 2, "num_excited": 2}
    inline = run_distance_experiment(ExperimentConfig(
        subspace=spec, trials=100, seed=5,
        filter={"kind": "typical-window", "half_width": 1.0},
    ))
    from_file = run_distance_experiment(ExperimentConfig(
        subspace=spec, trials=100, seed=5,
        filter={"kind": "file", "path": str(path)},
    ))
    assert inline.subspace_info["filter_miss_weight"] == pytest.approx(
        from_file.subspace_info["filter_miss_weight"], abs=1e-14
    )
    assert np.array_equal(inline.distances, from_file.distances)


def test_experiment_deterministic_across_workers():
    base = dict(subspace={"kind": "spin-chain", "n": 4, "k": 2, "num_excited": 2},
                trials=300, seed=17)
    serial = run_distance_experiment(ExperimentConfig(**base, workers=1))
    parallel = run_distance_experiment(ExperimentConfig(**base, workers=3))
    assert np.array_equal(serial.distances, parallel.distances)
    assert np.array_equal(serial.purities, parallel.purities)
    assert np.array_equal(serial.max_coeff_devs, parallel.max_coeff_devs)

    buf_a, buf_b = io.StringIO(), io.StringIO()
    write_trials_csv(buf_a, serial)
    write_trials_csv(buf_b, parallel)
    assert buf_a.getvalue() == buf_b.getvalue()


def test_trial_values_match_direct_sampling():
    # records are exactly the per-stream samples, independent of harness
    cfg = ExperimentConfig(subspace=CHAIN_SPEC, trials=20, seed=23)
    result = run_distance_experiment(cfg)
    sub = resolve_subspace(CHAIN_SPEC)
    omega = canonical_ensemble(sub).system_state
    for i in (0, 7, 19):
        coords = sample_coords(3, SampleStream(23, i))
        rho = reduced_state_from_coords(sub, coords)
        expected = float(np.sum(np.abs(np.linalg.eigvalsh(rho - omega))))
        assert result.distances[i] == expected


def test_expectation_experiment():
    z = np.diag([1.0, -1.0]).astype(complex)
    cfg = ExperimentConfig(subspace=CHAIN_SPEC, trials=10_000, seed=29)
    result = run_expectation_experiment(cfg, [np.eye(2, dtype=complex), z])
    # identity deviations vanish
    assert result.observable_stats[0].maximum < 1e-12
    # <Tr(Z rho)> approaches Tr(Z Omega) = 1/3
    assert result.observable_targets[1] == pytest.approx(1 / 3, abs=1e-12)
    se = result.observable_stats[1].stddev / np.sqrt(10_000)
    assert abs(result.observable_means[1] - 1 / 3) < 5 * se
    assert result.family_stats is not None
    assert result.family_bound.satisfied


def test_expectation_deviation_shrinks_with_subspace_dimension():
    z = np.diag([1.0, -1.0]).astype(complex)
    spreads = []
    for n in (6, 8, 10):
        cfg = ExperimentConfig(
            subspace={"kind": "spin-chain", "n": n, "k": 1, "num_excited": n // 2},
            trials=2000,
            seed=31,
        )
        result = run_expectation_experiment(cfg, [z])
        spreads.append(result.observable_stats[0].stddev)
    assert spreads[0] > spreads[1] > spreads[2]


def test_summary_stats_consistency():
    values = np.random.default_rng(1).uniform(0, 1, 500)
    stats = SummaryStats.from_samples(values, [0.5])
    assert stats.minimum <= stats.quantiles[50] <= stats.quantiles[90] <= stats.maximum
    assert 0 <= stats.tail_frequencies[0.5] <= 1
    with pytest.raises(ValueError):
        SummaryStats.from_samples(np.array([]))


def test_csv_and_json_artifacts():
    cfg = ExperimentConfig(subspace=CHAIN_SPEC, trials=5, seed=2)
    result = run_distance_experiment(cfg)
    buf = io.StringIO()
    write_trials_csv(buf, result)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "trial,trace_distance,purity,max_coeff_dev"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[1]) == result.distances[0]

    payload = summary_dict(result)
    assert payload["schema_version"] == 1
    assert payload["seed"] == 2
    assert payload["config"]["trials"] == 5
    assert payload["config_hash"] == cfg.config_hash()
    json.dumps(payload)  # serializable
    assert len(payload["bounds"]) >= 4
