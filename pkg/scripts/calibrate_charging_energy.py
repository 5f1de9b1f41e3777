#!/usr/bin/env python3
"""Calibrate the per-vehicle charging energy for the midsize fixture.

With a single energy value e for every od pair, total charging power is
e * (total EV flow) regardless of the equilibrium split, so hitting a target
charging share of total load is a closed-form calculation:

    e = share / (1 - share) * total_base_load / total_ev_flow.

Writes data/siouxfalls_39bus/coupling.csv with the calibrated value frozen in.
Run from the repository root: python3 scripts/calibrate_charging_energy.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from roadgrid.io import parse_power_case, parse_tntp, write_coupling

DATA = pathlib.Path(__file__).resolve().parents[1] / "data" / "siouxfalls_39bus"
TARGET_SHARE = 0.185
DEMAND_SCALE = 0.01
EV_SHARE = 0.2
# road node -> power bus correspondence of the two test systems
COUPLING = {1: 1, 2: 4, 4: 6, 5: 11, 10: 13, 11: 16, 13: 19, 14: 2,
            15: 23, 19: 25, 20: 27, 21: 32}


def main() -> None:
    net = parse_tntp(DATA / "SiouxFalls_net.tntp", DATA / "SiouxFalls_trips.tntp",
                     demand_scale=DEMAND_SCALE)
    power = parse_power_case(DATA / "case39.m")
    total_load = sum(b.base_load for b in power.buses)
    ev_total = EV_SHARE * sum(net.conventional_od.values())
    e = TARGET_SHARE / (1.0 - TARGET_SHARE) * total_load / ev_total
    charging = e * ev_total
    share = charging / (total_load + charging)
    print(f"base load {total_load:.2f} MW, ev flow {ev_total:.2f} veh/h")
    print(f"e = {e:.6f} MWh/vehicle -> charging {charging:.2f} MW, share {share:.4%}")
    write_coupling(COUPLING, {s: 0.0 for s in COUPLING}, {s: e for s in COUPLING},
                   DATA / "coupling.csv")
    print(f"wrote {DATA / 'coupling.csv'}")


if __name__ == "__main__":
    main()
