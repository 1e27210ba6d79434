#!/usr/bin/env python3
"""Random sweep: integrator extensions on strongly connected graphs.

Each trial draws a jointly controllable and observable plant with injected
fixed modes, a random strongly connected graph, and sets every n_i to the
deficiency bound r. The extension should have an empty fixed spectrum in
every trial. With --below, n_i = r - 1 is also checked, counting how often
one fewer state per agent leaves a fixed mode.
"""

from __future__ import annotations

import argparse
import collections
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from distctl import extend as ex
from distctl import mcsys as ms
from distctl import randsys as rs


@dataclass
class SweepConfig:
    trials: int = 100
    seed: int = 0
    n_max: int = 5
    m_max: int = 4
    below: bool = False


def draw(rng, cfg):
    m = int(rng.integers(2, cfg.m_max + 1))
    copies = int(rng.integers(1, min(2, m // 2) + 1))
    n_dense = int(rng.integers(1, cfg.n_max - copies + 1))
    lam = float(rng.choice([-1.0, 0.5, 2.0]))
    sys, _, _ = rs.with_fixed_modes(rng, n_dense, m, [lam] * copies, max_width=int(rng.integers(1, 3)))
    return sys


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in asdict(SweepConfig()).items():
        if isinstance(default, bool):
            ap.add_argument(f"--{name.replace('_', '-')}", action="store_true")
        else:
            ap.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    cfg = SweepConfig(**vars(ap.parse_args()))

    t0 = time.perf_counter()
    counts = collections.Counter()
    by_r = collections.Counter()
    seed = cfg.seed
    while counts["trials"] < cfg.trials:
        rng = np.random.default_rng(seed)
        seed += 1
        sys = draw(rng, cfg)
        if not (ms.jointly_controllable(sys) and ms.jointly_observable(sys)):
            counts["rejected draws"] += 1
            continue
        graph = rs.random_strong_graph(rng, sys.m)
        r = ms.deficiency_bound(sys)
        by_r[r] += 1
        counts["trials"] += 1
        counts["empty at n_i=r"] += ex.check_no_fixed_spectrum_strong(sys, graph, [r] * sys.m).verdict
        if cfg.below and r >= 1:
            ext = ex.build_extension(sys, graph, [r - 1] * sys.m)
            counts["fixed at n_i=r-1"] += not ms.fixed_spectrum(ext.system).empty
    result = {"config": asdict(cfg), "counts": dict(counts), "deficiency_histogram": dict(sorted(by_r.items())),
              "seconds": round(time.perf_counter() - t0, 3)}
    print(json.dumps(result, sort_keys=True, indent=2))


if __name__ == "__main__":
    main()
