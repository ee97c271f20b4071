import math
from collections import Counter

import numpy as np
import pytest
from scipy.optimize import minimize

from conftest import box
from rtchannel.raytracer import C0, Face, TraceConfig, mirror_point, scene_faces, trace_many, trace_paths
from rtchannel.scene import Scene, generate_synthetic_scene, ScenGenConfig

CFG = TraceConfig(max_reflection_order=2, carrier_frequency_hz=7e9, tx_power_w=1.0)


def friis(d, f=7e9):
    return (C0 / f) / (4 * math.pi * d)


def test_free_space_friis(free_space):
    paths = trace_paths(free_space, (100, 150, 10), (200, 150, 10), CFG)
    assert len(paths) == 1
    p = paths[0]
    assert p.order == 0
    assert abs(p.delay * 1e9 - 333.564) < 1e-3
    assert abs(abs(p.gain) - 3.408e-5) < 1e-8
    assert abs(p.gain) == pytest.approx(friis(100.0), rel=1e-14)
    assert p.delay == pytest.approx(100.0 / C0, rel=1e-15)
    assert p.gain.imag == 0 and p.gain.real > 0


def test_tx_power_scales_amplitude(free_space):
    g1 = abs(trace_paths(free_space, (0, 0, 5), (50, 0, 5), TraceConfig(0, 7e9, 1.0))[0].gain)
    g4 = abs(trace_paths(free_space, (0, 0, 5), (50, 0, 5), TraceConfig(0, 7e9, 4.0))[0].gain)
    assert g4 == pytest.approx(2 * g1, rel=1e-15)


def test_los_gain_scales_as_inverse_distance(free_space):
    ds = [10.0, 20.0, 55.5, 120.0, 250.0]
    g = [abs(trace_paths(free_space, (10, 10, 5), (10 + d, 10, 5), CFG)[0].gain) for d in ds]
    assert all(a > b for a, b in zip(g, g[1:]))
    for d, gi in zip(ds, g):
        assert gi * d == pytest.approx(g[0] * ds[0], rel=1e-13)


@pytest.mark.parametrize("d", [30.0, 100.0, 250.0])
def test_ground_reflection_geometry(d):
    s = Scene((-10, 300, -10, 300))
    paths = trace_paths(s, (0, 0, 16), (d, 0, 1.5), CFG)
    ground = [p for p in paths if p.order == 1]
    assert len(ground) == 1
    g = ground[0]
    bounce = g.vertices[1]
    assert bounce[0] == pytest.approx(d * 16 / 17.5, rel=1e-12)
    assert bounce[2] == pytest.approx(0.0, abs=1e-12)
    assert g.length == pytest.approx(math.hypot(d, 17.5), rel=1e-12)
    loss = 10 ** (-3.0 / 20)
    assert abs(g.gain) == pytest.approx(friis(math.hypot(d, 17.5)) * loss, rel=1e-12)


def test_single_wall_matches_mirrored_tx():
    wall = box(50, 10, 60, 20, 20.0)
    s = Scene((-10, 300, -10, 300), buildings=(wall,), terrain_material=None)
    tx, rx = np.array([40.0, 0.0, 5.0]), np.array([70.0, 4.0, 5.0])
    paths = trace_paths(s, tx, rx, CFG)
    refl = [p for p in paths if p.order == 1]
    assert len(refl) == 1
    # the south face y = 10 mirrors tx to (40, 20, 5)
    image = np.array([40.0, 20.0, 5.0])
    assert refl[0].length == pytest.approx(np.linalg.norm(rx - image), rel=1e-12)
    t = (10 - image[1]) / (rx[1] - image[1])
    expected_bounce = image + t * (rx - image)
    assert np.allclose(refl[0].vertices[1], expected_bounce, atol=1e-9)


def fermat_bounce(tx, rx, face_point, normal):
    """Specular point by direct minimisation of total path length over the plane."""
    n = np.asarray(normal, float)
    u = np.cross(n, [0, 0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0, 0])
    u /= np.linalg.norm(u)
    v = np.cross(n, u)

    def length(st):
        p = face_point + st[0] * u + st[1] * v
        return np.linalg.norm(p - tx) + np.linalg.norm(rx - p)

    res = minimize(length, [0.0, 0.0], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
    return res.fun


def test_first_order_lengths_satisfy_fermat():
    s = Scene((0, 120, 0, 120), buildings=(box(40, 40, 70, 60, 30.0),), terrain_material=None)
    rng = np.random.default_rng(3)
    faces = scene_faces(s)
    checked = 0
    for _ in range(60):
        tx = np.array([*rng.uniform(0, 120, 2), 10.0])
        rx = np.array([*rng.uniform(0, 120, 2), 1.5])
        if np.all((tx[:2] > 40) & (tx[:2] < 70)) or np.all((rx[:2] > 40) & (rx[:2] < 70)):
            continue
        for p in trace_paths(s, tx, rx, TraceConfig(1)):
            if p.order != 1:
                continue
            f = next(f for f in faces if abs(np.dot(f.normal, p.vertices[1]) - f.offset) < 1e-7)
            base = np.array([*f.p0, 10.0])
            assert p.length == pytest.approx(fermat_bounce(tx, rx, base, f.normal), rel=1e-8)
            checked += 1
    assert checked > 3


def test_enclosed_endpoints_have_no_paths():
    s = Scene((0, 200, 0, 200), buildings=(box(20, 20, 60, 60, 20.0), box(120, 120, 160, 160, 20.0)))
    assert trace_paths(s, (40, 40, 5), (140, 140, 1.5), CFG) == []


def test_mirror_point_examples():
    ground = Face((0.0, 0.0, 1.0), 0.0, 3.0, "ground")
    assert np.allclose(mirror_point((3, 4, 7.5), ground), (3, 4, -7.5))
    wall = Face((1.0, 0.0, 0.0), 5.0, 3.0, "wall")
    assert np.allclose(mirror_point((2, 0, 0), wall), (8, 0, 0))
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        f = Face(tuple(n), rng.normal(), 0.0, "wall")
        p = rng.normal(size=3) * 100
        assert np.allclose(mirror_point(mirror_point(p, f), f), p, atol=1e-12, rtol=0)


@pytest.fixture(scope="module")
def town():
    return generate_synthetic_scene(21, ScenGenConfig(size=150.0, building_count=10,
                                                        keep_out=((75.0, 75.0, 8.0),)))


def _signature(paths):
    return sorted((abs(p.gain), p.delay) for p in paths)


def test_reciprocity(town):
    rng = np.random.default_rng(1)
    n_paths = 0
    for _ in range(25):
        a = np.array([*rng.uniform(0, 150, 2), rng.uniform(1, 20)])
        b = np.array([*rng.uniform(0, 150, 2), rng.uniform(1, 20)])
        fwd, rev = _signature(trace_paths(town, a, b, CFG)), _signature(trace_paths(town, b, a, CFG))
        assert len(fwd) == len(rev)
        for (g1, d1), (g2, d2) in zip(fwd, rev):
            assert g1 == pytest.approx(g2, rel=1e-12)
            assert d1 == pytest.approx(d2, rel=1e-12)
        n_paths += len(fwd)
    assert n_paths > 25


def test_delay_lower_bound_and_bounce_losses(town):
    rng = np.random.default_rng(2)
    tx = np.array([75.0, 75.0, 16.0])
    rxs = np.column_stack([rng.uniform(0, 150, 300), rng.uniform(0, 150, 300), np.full(300, 1.5)])
    amp0 = (C0 / 7e9) / (4 * math.pi)
    orders = Counter()
    for rx, paths in zip(rxs, trace_many(town, tx, rxs, CFG)):
        d0 = np.linalg.norm(rx - tx) / C0
        delays = [p.delay for p in paths]
        assert delays == sorted(delays)
        for p in paths:
            orders[p.order] += 1
            assert p.order == len(p.vertices) - 2
            assert p.delay == pytest.approx(sum(np.linalg.norm(np.subtract(b, a)) for a, b in
                                                zip(p.vertices, p.vertices[1:])) / C0, rel=1e-12)
            if p.order == 0:
                assert p.delay == pytest.approx(d0, rel=1e-15)
            else:
                assert p.delay > d0
                # each bounce costs at least the 0.5 dB metal loss
                assert abs(p.gain) * p.length / amp0 <= 10 ** (-0.5 * p.order / 20) * (1 + 1e-12)
    assert orders[0] and orders[1] and orders[2]


def test_batch_equals_single(town):
    rng = np.random.default_rng(5)
    tx = (75.0, 75.0, 16.0)
    rxs = np.column_stack([rng.uniform(0, 150, 40), rng.uniform(0, 150, 40), np.full(40, 1.5)])
    batch = trace_many(town, tx, rxs, CFG)
    for rx, paths in zip(rxs, batch):
        assert trace_paths(town, tx, rx, CFG) == paths
    assert trace_many(town, tx, rxs, CFG) == batch


def test_order_zero_config_gives_only_los(town):
    paths = trace_paths(town, (75, 75, 16), (10, 10, 1.5), TraceConfig(0))
    assert all(p.order == 0 for p in paths) and len(paths) <= 1


def test_higher_order_contains_lower(town):
    tx, rx = (75, 75, 16), (20, 130, 1.5)
    lo = {(round(p.delay * 1e15), p.order) for p in trace_paths(town, tx, rx, TraceConfig(1))}
    hi = {(round(p.delay * 1e15), p.order) for p in trace_paths(town, tx, rx, TraceConfig(2))}
    assert lo <= hi


def test_debug_dump_is_json_lines(free_space):
    import json
    p = trace_paths(free_space, (0, 0, 5), (30, 40, 5), CFG)[0]
    doc = json.loads(p.to_json())
    assert doc["order"] == 0 and doc["delay_ns"] == pytest.approx(50 / C0 * 1e9)


@pytest.mark.parametrize("kw", [dict(max_reflection_order=-1), dict(carrier_frequency_hz=0),
                                dict(tx_power_w=0.0)])
def test_trace_config_validation(kw):
    with pytest.raises(ValueError):
        TraceConfig(**kw)


def test_coincident_tx_rx_rejected(free_space):
    with pytest.raises(ValueError):
        trace_paths(free_space, (1, 1, 1), (1, 1, 1))
