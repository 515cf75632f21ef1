import dataclasses
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from cheshire.des import RNG_ID, Engine, EngineRunSpec, SpecError, Tally, run
from cheshire.des.engine import SLOTS
from cheshire.model import InterferometerConfig, Scenario, scenario_config
from cheshire.oracle import detection_probs


def _events(spec):
    buf = io.StringIO()
    run(spec, log=buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "index,path,fate,exit"
    return [(int(p), f) for _, p, f, _ in (l.split(",") for l in lines[1:])]


def _reference(spec):
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    u = rng.random((spec.warmup + spec.N, SLOTS))
    cfg = dataclasses.asdict(spec.config)
    return oracles.reference_events(cfg, spec.gamma, u)[spec.warmup:]


CASES = [
    scenario_config("REF", 0.4),
    scenario_config(Scenario("ABS1", {"pscatt1": 0.4, "zeta": 0.7}), 1.3),
    scenario_config(Scenario("ABS2", {"pscatt2": 0.6, "postselect": "both"}), 2.0),
    scenario_config(Scenario("MAG1", {"postselect": "H-only"}), -0.7),
    scenario_config("EMPTY", 3.5),
    InterferometerConfig(alpha=0.3, beta=1.9, mu1=0.5, mu2=2.0, theta1=0.4, theta2=-1.0,
                         T1=0.6, T2=0.9, phi1=1.0, phi2=-0.4, R=0.35, postselect="both",
                         zeta=0.2, pscatt1=0.3, pscatt2=0.5),
]


@pytest.mark.parametrize("config", CASES)
@pytest.mark.parametrize("gamma", [0.0, 0.65, 0.99])
def test_engine_matches_reference_event_loop(config, gamma):
    spec = EngineRunSpec(config, gamma=gamma, N=1500, seed=11, warmup=300)
    assert _events(spec) == _reference(spec)


@given(st.integers(0, 2**64 - 1), st.integers(0, 3000), st.sampled_from(CASES))
@settings(max_examples=30)
def test_tally_conserved(seed, N, config):
    t = run(EngineRunSpec(config, gamma=0.9, N=N, seed=seed, warmup=50))
    assert t.is_conserved() and t.emitted == N


def test_bit_identical_repeats():
    spec = EngineRunSpec(CASES[1], gamma=0.99, N=20000, seed=5)
    first = run(spec)
    assert all(run(spec) == first for _ in range(3))
    assert run(dataclasses.replace(spec, seed=6)) != first


def test_zero_messengers():
    t = run(EngineRunSpec(CASES[0], N=0))
    assert t == Tally() and t.is_conserved()


def test_tally_algebra():
    a = run(EngineRunSpec(CASES[2], N=3000, seed=1))
    b = run(EngineRunSpec(CASES[2], N=2000, seed=2))
    s = a + b
    assert s.emitted == 5000 and s.is_conserved()
    assert s.count("H", 1) == a.count("H", 1) + b.count("H", 1)
    assert Tally.from_dict(a.as_dict()) == a
    assert a.H == a.count("H", 1) + a.count("H", 2)


def test_unit_transmission_means_no_absorber():
    c = scenario_config(Scenario("REF", {"pscatt1": 0.9, "pscatt2": 0.9}))
    t = run(EngineRunSpec(c, N=5000))
    assert t.absorbed == 0 and t.scatter_discarded == 0


def test_zeta_acts_on_O_beam_only():
    c = scenario_config(Scenario("REF", {"postselect": "both", "zeta": 1.0}))
    t = run(EngineRunSpec(c, N=5000))
    assert t.O == 0 and t.H > 0 and t.zeta_lost > 0


@pytest.mark.parametrize("kw", [
    dict(gamma=1.0), dict(gamma=-0.1), dict(N=-1), dict(warmup=-5), dict(seed=-1),
    dict(seed=2**64), dict(rng_id="mt19937"), dict(N=1.5),
])
def test_spec_validation(kw):
    with pytest.raises(SpecError):
        EngineRunSpec(CASES[0], **kw)


@pytest.mark.parametrize("R", [0.0, 1.0])
def test_spec_needs_proper_splitter(R):
    with pytest.raises(SpecError):
        EngineRunSpec(CASES[0].replace(R=R))


def test_rng_id_is_recorded():
    assert EngineRunSpec(CASES[0]).rng_id == RNG_ID


def test_first_splitter_sends_fraction_T_into_path_1():
    N = 40000
    paths = [p for p, _ in _events(EngineRunSpec(scenario_config("REF"), gamma=0.99, N=N, seed=3))]
    frac = paths.count(1) / N
    assert frac == pytest.approx(0.78, abs=4 * math.sqrt(0.78 * 0.22 / N))


@pytest.mark.parametrize("name", ["REF", "ABS2", "MAG1"])
def test_converges_to_quantum_prediction(name):
    N = 200000
    for chi in (0.0, math.pi / 2):
        c = scenario_config(name, chi)
        t = run(EngineRunSpec(c, gamma=0.99, N=N, seed=17))
        for beam, p in zip("HO", detection_probs(c)):
            z = (t.count(beam) / N - p) / math.sqrt(p * (1 - p) / N)
            assert abs(z) < 5, (name, chi, beam, z)


def test_engine_object_runs_in_chunks():
    spec = EngineRunSpec(CASES[0], N=70000, seed=9)
    assert Engine(spec).run() == run(spec)
