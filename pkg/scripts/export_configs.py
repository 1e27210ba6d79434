#!/usr/bin/env python3
"""Write the built-in example plants and graphs to configs/ as CLI input files."""

import json
from pathlib import Path

from distctl import catalog
from distctl.graphs import graph_to_dict
from distctl.mcsys import system_to_dict

FILES = {
    "three_channel": lambda: system_to_dict(catalog.three_channel_example()),
    "cycle3": lambda: graph_to_dict(catalog.output_sharing_cycle()),
    "delayed_desk": lambda: system_to_dict(catalog.delayed_desk_system()),
    "two_cycles_delays": lambda: graph_to_dict(catalog.two_cycles_delays()),
    "two_cycles_longer_delays": lambda: graph_to_dict(catalog.two_cycles_longer_delays()),
    "selective_holding": lambda: system_to_dict(catalog.selective_holding_system()),
    "setpoint_desk": lambda: system_to_dict(catalog.setpoint_desk_system()),
    "discrete_fixed_mode": lambda: system_to_dict(catalog.discrete_fixed_mode_system()),
}

if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "configs"
    out.mkdir(exist_ok=True)
    for name, build in FILES.items():
        (out / f"{name}.json").write_text(json.dumps(build(), sort_keys=True, indent=2) + "\n")
        print(out / f"{name}.json")
