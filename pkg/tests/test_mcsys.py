import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distctl import catalog
from distctl import mcsys as ms
from distctl import randsys as rs
from distctl.errors import InvalidInputError, ResourceError


def test_three_channel_example_fixed_at_one():
    rep = ms.fixed_spectrum(catalog.three_channel_example())
    assert rep.fixed_eigenvalues == [1.0]
    assert {w.subset for w in rep.witnesses[1.0]} == {(1,), (1, 3)}
    assert all(w.rank == 2 for w in rep.witnesses[1.0])
    assert rep.deficiency_r == 1


def test_output_sharing_keeps_only_the_larger_witness():
    shared = catalog.output_sharing(catalog.three_channel_example(), catalog.output_sharing_cycle())
    rep = ms.fixed_spectrum(shared)
    assert rep.fixed_eigenvalues == [1.0]
    assert [w.subset for w in rep.witnesses[1.0]] == [(1, 3)]


def test_pencil_shape():
    sys = catalog.three_channel_example()
    P = ms.pencil(sys, 1.0, (1, 3))
    # rows: n + outputs of channel 2; columns: n + inputs of channels 1 and 3
    assert P.shape == (3 + 1, 3 + 2)


def test_transfer_graph_of_example():
    tg = ms.transfer_graph(catalog.three_channel_example())
    assert tg.sorted_arcs() == [(2, 1), (2, 3), (3, 1)]


def test_complex_fixed_pair_reported_with_conjugate():
    A = np.array([[0.0, -2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
    # the rotation block is invisible to every channel
    sys = ms.MultiChannelSystem(A, (np.eye(3)[:, [0]], np.eye(3)[:, [2]]),
                                (np.eye(3)[[2]], np.eye(3)[[2]]))
    fixed = sorted(ms.fixed_spectrum(sys).fixed_eigenvalues, key=lambda z: z.imag)
    assert len(fixed) == 2 and abs(fixed[0] + 2j) < 1e-9 and abs(fixed[1] - 2j) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([-1.0, 0.25, 3.0]))
def test_injected_mode_is_found_with_its_witness(seed, lam):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 4))
    sys, S, _ = rs.with_fixed_modes(rng, int(rng.integers(1, 4)), m, [lam])
    rep = ms.fixed_spectrum(sys)
    assert any(abs(z - lam) < 1e-7 for z in rep.fixed_eigenvalues)
    key = min(rep.witnesses, key=lambda z: abs(z - lam))
    assert tuple(S) in {w.subset for w in rep.witnesses[key]}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_exact_and_sampled_fixed_spectra_agree(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 4))
    sys, _, _ = rs.with_fixed_modes(rng, int(rng.integers(1, 3)), m, [round(float(rng.uniform(-2, 2)), 2)])
    exact = ms.fixed_spectrum(sys).fixed_eigenvalues
    sampled = ms.fixed_spectrum_sampling_oracle(sys, seed=seed)
    assert len(exact) == len(sampled)
    assert all(abs(a - b) < 1e-6 for a, b in zip(exact, sampled))


def test_subset_cap_is_enforced():
    sys = rs.random_system(np.random.default_rng(0), 2, 5)
    with pytest.raises(ResourceError):
        ms.fixed_spectrum(sys, subset_cap=4)


def test_system_round_trip(tmp_path):
    sys = catalog.discrete_fixed_mode_system()
    path = tmp_path / "s.json"
    path.write_text(json.dumps(ms.system_to_dict(sys)))
    back = ms.load_system(path)
    assert back.domain == ms.DISCRETE
    assert np.array_equal(back.A, sys.A)
    assert all(np.array_equal(a, b) for a, b in zip(back.Cs, sys.Cs))


@pytest.mark.parametrize("doc", [
    {"A": [[1.0, 0.0]], "channels": [{"B": [[1.0]], "C": [[1.0]]}]},
    {"A": [[1.0]], "channels": [{"B": [[1.0], [2.0]], "C": [[1.0]]}]},
    {"A": [[1.0]], "channels": []},
    {"A": [[1.0]], "channels": [{"B": [[1.0]], "C": [[1.0]]}], "domain": "hybrid"},
    {"channels": []},
])
def test_malformed_systems_are_rejected(doc):
    with pytest.raises(InvalidInputError):
        ms.system_from_dict(doc)
