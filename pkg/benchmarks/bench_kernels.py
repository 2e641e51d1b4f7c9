"""Timing comparison: compiled kernels vs. the NumPy fallback.

Run after building the extension (pip install -e . --no-build-isolation):

    python benchmarks/bench_kernels.py

Times each kernel on representative shapes plus two end-to-end paths
(environment step with 19-ray sensing, one SAC update) under each backend.
"""

import importlib
import os
import subprocess
import sys
import time

import numpy as np


def _timeit(fn, min_time=0.3):
    fn()  # warm up
    n = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(n):
            fn()
        dt = time.perf_counter() - t0
        if dt >= min_time:
            return dt / n
        n = max(n * 2, int(n * min_time / max(dt, 1e-9)))


def bench_kernels(impl, label):
    from curricar.geometry import TrackKind, build_track

    rng = np.random.default_rng(0)
    track = build_track(TrackKind.CIRCUIT)
    angles = np.linspace(-np.pi / 2, np.pi / 2, 19) + 0.3
    seg, arc = track._seg_table, track._arc_table

    sizes = [23, 64, 64]
    ws = [np.ascontiguousarray(rng.standard_normal((a, b)) * 0.1)
          for a, b in zip(sizes[:-1], sizes[1:])]
    ws += [np.ascontiguousarray(rng.standard_normal((64, 2)) * 0.1) for _ in range(2)]
    bs = [np.zeros(w.shape[1]) for w in ws]
    x = rng.standard_normal(23)

    n_par = 20000
    params = rng.standard_normal(n_par)
    grads = rng.standard_normal(n_par)
    m = np.zeros(n_par)
    v = np.zeros(n_par)

    rows = [
        ("raycast 19 rays", _timeit(lambda: impl.raycast(10.0, 1.0, angles, seg, arc, 200.0))),
        ("actor forward (1 obs)", _timeit(lambda: impl.mlp_forward1(x, ws, bs, impl.HEAD_GAUSSIAN))),
        ("adam step (20k params)", _timeit(lambda: impl.adam_update(params, grads, m, v, 1, 1e-4, 0.9, 0.999, 1e-8))),
    ]
    print(f"\n[{label}]")
    for name, dt in rows:
        print(f"  {name:<26} {dt * 1e6:9.1f} us")
    return dict(rows)


def bench_end_to_end(label):
    from curricar.curriculum import TrainSettings
    from curricar.env import DrivingEnv
    from curricar.sac import ReplayBuffer, SacAgent, SacHyperParams

    settings = TrainSettings()
    env = DrivingEnv(settings.env_config(
        importlib.import_module("curricar.geometry").TrackKind.CIRCUIT,
        importlib.import_module("curricar.vehicle").Weather.CLEAR,
    ))
    obs = env.reset(seed=0)
    hyper = SacHyperParams(hidden_width=64, warmup_steps=64)
    agent = SacAgent(hyper=hyper, seed=0)
    buffer = ReplayBuffer(10000, 23, 2, seed=0)
    for _ in range(256):
        a = agent.select_action(obs.vector)
        res = env.step(a)
        buffer.push(obs.vector, a, res.reward, res.observation.vector, False)
        obs = env.reset() if res.done else res.observation

    def env_step():
        nonlocal obs
        res = env.step(agent.select_action(obs.vector))
        obs = env.reset() if res.done else res.observation

    rows = [
        ("env step + action", _timeit(env_step)),
        ("sac update (batch 64)", _timeit(lambda: agent.update(buffer))),
    ]
    print(f"\n[{label}] end to end")
    for name, dt in rows:
        print(f"  {name:<26} {dt * 1e6:9.1f} us")


def main():
    backend = os.environ.get("CURRICAR_BACKEND", "auto")
    if backend == "auto":
        # child processes pin one backend each so both get measured
        for forced in ("cython", "numpy"):
            env = dict(os.environ, CURRICAR_BACKEND=forced)
            code = subprocess.call([sys.executable, __file__], env=env)
            if code != 0 and forced == "cython":
                print("compiled backend unavailable; numpy numbers only")
        return

    import curricar._kernels as k

    print(f"active backend: {k.BACKEND}")
    bench_kernels(k, f"kernels ({k.BACKEND})")
    bench_end_to_end(f"pipeline ({k.BACKEND})")


if __name__ == "__main__":
    main()
