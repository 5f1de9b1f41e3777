"""File formats: road network (TNTP), power case (MATPOWER-style tables),
coupling CSV, scenario CSV, flat key=value run configs, and result bundles.

All numeric output is printed with 17 significant digits so a parse/emit
round trip reproduces every finite float bit-exactly.
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParseError, ValidationError
from .network import (CoupledSystem, GeneratorSpec, PowerBranch, PowerBus, PowerNetwork,
                      RenewableSiteSpec, RoadLink, TransportNetwork, UtilityCoefficients)
from .scenarios import Scenario, ScenarioSet
from .solution import PriceSet, ScenarioState, SystemState

F = "%.17g"  # float format used by every emitter


# ---------------------------------------------------------------------------
# TNTP road network + trips

def _tntp_metadata(lines, path):
    meta = {}
    idx = 0
    for idx, line in enumerate(lines):
        t = line.strip()
        if t == "<END OF METADATA>":
            return meta, idx + 1
        if t.startswith("<") and ">" in t:
            key, _, val = t.partition(">")
            meta[key[1:].strip()] = val.strip()
    raise ParseError(path, "missing <END OF METADATA>")


def parse_tntp(net_path, trips_path, demand_scale: float = 1.0,
               fft_divisor: float = 1.0, fft_scale: float = 1.0) -> TransportNetwork:
    """Read the standard tab-separated network/trips pair.

    demand_scale multiplies both the od demands and the link capacities;
    free-flow times are divided by fft_divisor (60 for files in minutes) and
    then multiplied by fft_scale.
    """
    net_path, trips_path = Path(net_path), Path(trips_path)
    lines = net_path.read_text().splitlines()
    meta, start = _tntp_metadata(lines, net_path)
    try:
        n_nodes = int(meta["NUMBER OF NODES"])
        n_links = int(meta["NUMBER OF LINKS"])
    except KeyError as exc:
        raise ParseError(net_path, f"malformed header: missing {exc}") from None
    links = []
    for line in lines[start:]:
        t = line.strip()
        if not t or t.startswith("~") or t.startswith("<"):
            continue
        fields = t.rstrip(";").split()
        if len(fields) < 10:
            raise ParseError(net_path, f"link row with {len(fields)} fields: {t!r}")
        try:
            init, term = int(fields[0]), int(fields[1])
            capacity, _length, fft = float(fields[2]), float(fields[3]), float(fields[4])
            b, power = float(fields[5]), float(fields[6])
        except ValueError:
            raise ParseError(net_path, f"non-numeric field in link row: {t!r}") from None
        if not (1 <= init <= n_nodes and 1 <= term <= n_nodes):
            raise ParseError(net_path, f"link references node outside 1..{n_nodes}: {t!r}")
        links.append(RoadLink(
            id=len(links) + 1, tail=init, head=term,
            free_flow_time=fft / fft_divisor * fft_scale,
            capacity=capacity * demand_scale,
            bpr_alpha=b, bpr_beta=power))
    if len(links) != n_links:
        raise ParseError(net_path, f"expected {n_links} links, found {len(links)}")

    od = {}
    tlines = trips_path.read_text().splitlines()
    _tmeta, tstart = _tntp_metadata(tlines, trips_path)
    origin = None
    for line in tlines[tstart:]:
        t = line.strip()
        if not t or t.startswith("~"):
            continue
        if t.lower().startswith("origin"):
            try:
                origin = int(t.split()[1])
            except (IndexError, ValueError):
                raise ParseError(trips_path, f"malformed origin header: {t!r}") from None
            continue
        if origin is None:
            raise ParseError(trips_path, f"demand row before any origin: {t!r}")
        for cell in t.split(";"):
            cell = cell.strip()
            if not cell:
                continue
            dest_str, _, val_str = cell.partition(":")
            try:
                dest, val = int(dest_str), float(val_str)
            except ValueError:
                raise ParseError(trips_path, f"malformed od cell {cell!r}") from None
            if val > 0 and dest != origin:
                od[(origin, dest)] = val * demand_scale
    return TransportNetwork(
        nodes=tuple(range(1, n_nodes + 1)), links=tuple(links),
        ev_origins={}, charging_destinations={}, conventional_od=od,
        charging_energy={}, utility=UtilityCoefficients(1.0, 1.0))


def write_tntp(net: TransportNetwork, net_path, trips_path) -> None:
    net_path, trips_path = Path(net_path), Path(trips_path)
    out = [f"<NUMBER OF ZONES> {len(net.nodes)}",
           f"<NUMBER OF NODES> {len(net.nodes)}",
           "<FIRST THRU NODE> 1",
           f"<NUMBER OF LINKS> {len(net.links)}",
           "<END OF METADATA>", "",
           "~ \tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;"]
    for lk in net.links:
        out.append("\t%d\t%d\t%s\t%s\t%s\t%s\t%s\t0\t0\t1\t;" % (
            lk.tail, lk.head, F % lk.capacity, F % lk.free_flow_time,
            F % lk.free_flow_time, F % lk.bpr_alpha, F % lk.bpr_beta))
    net_path.write_text("\n".join(out) + "\n")
    total = sum(net.conventional_od.values())
    out = [f"<NUMBER OF ZONES> {len(net.nodes)}",
           f"<TOTAL OD FLOW> {F % total}",
           "<END OF METADATA>", ""]
    by_origin: dict[int, list] = {}
    for (r, s), v in sorted(net.conventional_od.items()):
        by_origin.setdefault(r, []).append((s, v))
    for r in sorted(by_origin):
        out.append(f"Origin {r}")
        row = "".join(f"    {s} : {F % v};" for s, v in by_origin[r])
        out.append(row)
        out.append("")
    trips_path.write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# MATPOWER-style power case

_TABLE_RE = re.compile(r"mpc\.(\w+)\s*=\s*\[(.*?)\];", re.S)
_SCALAR_RE = re.compile(r"mpc\.(\w+)\s*=\s*([0-9.eE+-]+)\s*;")


def _case_tables(text, path):
    tables = {}
    for name, body in _TABLE_RE.findall(text):
        rows = []
        for line in body.splitlines():
            line = line.split("%")[0].strip().rstrip(";")
            if not line:
                continue
            try:
                rows.append([float(x) for x in line.split()])
            except ValueError:
                raise ParseError(path, f"non-numeric value in mpc.{name}: {line!r}") from None
        tables[name] = rows
    for name, val in _SCALAR_RE.findall(text):
        tables.setdefault("_scalars", {})[name] = float(val)
    return tables


def parse_power_case(path) -> PowerNetwork:
    """Read the bus/branch/gen/gencost tables (plus an optional renewable table).

    Branch susceptance is baseMVA divided by reactance, so flows come out in MW
    per radian of angle difference. The optional table

        mpc.renewable = [bus invest_quad invest_lin operate_lin capital_cost];

    declares candidate renewable sites.
    """
    path = Path(path)
    tables = _case_tables(path.read_text(), path)
    for required in ("bus", "branch", "gen", "gencost"):
        if required not in tables:
            raise ParseError(path, f"missing mpc.{required} table")
    base_mva = tables.get("_scalars", {}).get("baseMVA", 100.0)

    gens = {}
    for gi, row in enumerate(tables["gen"]):
        bus, pmax, pmin = int(row[0]), row[8], row[9]
        status = row[7] if len(row) > 7 else 1.0
        cost = tables["gencost"][gi]
        if int(cost[0]) != 2:
            raise ParseError(path, f"gencost row {gi}: only polynomial model 2 is supported")
        ncoef = int(cost[3])
        coefs = cost[4:4 + ncoef]
        quad, lin, const = 0.0, 0.0, 0.0
        if ncoef == 3:
            quad, lin, const = coefs
        elif ncoef == 2:
            lin, const = coefs
        elif ncoef == 1:
            const = coefs[0]
        else:
            raise ParseError(path, f"gencost row {gi}: unsupported polynomial degree {ncoef - 1}")
        if status == 0:
            continue
        if bus in gens:
            raise ParseError(path, f"more than one in-service generator at bus {bus}")
        gens[bus] = GeneratorSpec(lower=max(pmin, 0.0), upper=pmax,
                                  cost_quadratic=quad, cost_linear=lin, cost_constant=const)

    sites = {}
    for row in tables.get("renewable", []):
        sites[int(row[0])] = RenewableSiteSpec(
            invest_quadratic=row[1], invest_linear=row[2],
            operate_linear=row[3], unit_capital_cost=row[4])

    buses = []
    for row in tables["bus"]:
        bid, btype, pd = int(row[0]), int(row[1]), row[2]
        buses.append(PowerBus(id=bid, base_load=pd, generator=gens.get(bid),
                              renewable_site=sites.get(bid), is_reference=btype == 3))
    branches = []
    for row in tables["branch"]:
        fbus, tbus, x, rate_a = int(row[0]), int(row[1]), row[3], row[5]
        if x == 0:
            raise ParseError(path, f"branch {fbus}-{tbus} has zero reactance")
        limit = rate_a if rate_a > 0 else 1e9  # MATPOWER uses 0 for unlimited
        branches.append(PowerBranch(id=len(branches) + 1, from_bus=fbus, to_bus=tbus,
                                    susceptance=base_mva / x, limit=limit))
    return PowerNetwork(tuple(buses), tuple(branches), budget=0.0)


def write_power_case(pw: PowerNetwork, path, base_mva: float = 100.0) -> None:
    path = Path(path)
    out = ["function mpc = case_export", "mpc.version = '2';",
           f"mpc.baseMVA = {F % base_mva};", "", "mpc.bus = ["]
    for b in pw.buses:
        btype = 3 if b.is_reference else (2 if b.generator else 1)
        out.append(f"\t{b.id}\t{btype}\t{F % b.base_load}\t0\t0\t0\t1\t1\t0\t345\t1\t1.06\t0.94;")
    out += ["];", "", "mpc.gen = ["]
    gen_buses = [b for b in pw.buses if b.generator is not None]
    for b in gen_buses:
        g = b.generator
        out.append(f"\t{b.id}\t0\t0\t0\t0\t1\t{F % base_mva}\t1\t{F % g.upper}\t{F % g.lower};")
    out += ["];", "", "mpc.branch = ["]
    for br in pw.branches:
        x = base_mva / br.susceptance
        out.append(f"\t{br.from_bus}\t{br.to_bus}\t0\t{F % x}\t0\t{F % br.limit}\t0\t0\t0\t0\t1\t-360\t360;")
    out += ["];", "", "mpc.gencost = ["]
    for b in gen_buses:
        g = b.generator
        out.append(f"\t2\t0\t0\t3\t{F % g.cost_quadratic}\t{F % g.cost_linear}\t{F % g.cost_constant};")
    out += ["];"]
    site_buses = [b for b in pw.buses if b.renewable_site is not None]
    if site_buses:
        out += ["", "% candidate renewable sites: bus invest_quad invest_lin operate_lin capital_cost",
                "mpc.renewable = ["]
        for b in site_buses:
            s = b.renewable_site
            out.append(f"\t{b.id}\t{F % s.invest_quadratic}\t{F % s.invest_linear}"
                       f"\t{F % s.operate_linear}\t{F % s.unit_capital_cost};")
        out += ["];"]
    path.write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# coupling and scenarios

def parse_coupling(path):
    """Rows road_node,power_bus,beta0,e_rs_default -> (coupling, beta0, energy default)."""
    path = Path(path)
    coupling, beta0, energy = {}, {}, {}
    rows = _read_csv(path)
    if not rows:
        raise ParseError(path, "no charging destinations")
    for row in rows:
        try:
            s, bus = int(row["road_node"]), int(row["power_bus"])
            b0, e = float(row["beta0"]), float(row["e_rs_default"])
        except (KeyError, ValueError) as exc:
            raise ParseError(path, f"bad coupling row {row!r} ({exc})") from None
        if s in coupling:
            raise ParseError(path, f"duplicate road node {s}")
        coupling[s] = bus
        beta0[s] = b0
        energy[s] = e
    return coupling, beta0, energy


def write_coupling(coupling, beta0, energy, path) -> None:
    lines = ["road_node,power_bus,beta0,e_rs_default",
             "# units: -,-,utility,MWh/vehicle"]
    for s in sorted(coupling):
        lines.append(f"{s},{coupling[s]},{F % beta0[s]},{F % energy[s]}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_scenarios(path) -> ScenarioSet:
    rows = _read_csv(Path(path))
    factors: dict[str, dict[int, float]] = {}
    probs: dict[str, float] = {}
    order: list[str] = []
    for row in rows:
        sid = row["scenario_id"]
        if sid not in factors:
            factors[sid] = {}
            order.append(sid)
        factors[sid][int(row["bus_id"])] = float(row["factor"])
        probs[sid] = float(row["probability"])
    return ScenarioSet(tuple(Scenario(sid, factors[sid], probs[sid]) for sid in order))


def write_scenarios(scenario_set: ScenarioSet, path) -> None:
    lines = ["scenario_id,bus_id,factor,probability",
             "# units: -,-,capacity fraction,probability"]
    for scen in scenario_set:
        for bus in sorted(scen.factors):
            lines.append(f"{scen.id},{bus},{F % scen.factors[bus]},{F % scen.probability}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_csv(path: Path) -> list[dict]:
    lines = [ln for ln in path.read_text().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        return []
    header = [h.strip() for h in lines[0].split(",")]
    return [dict(zip(header, (c.strip() for c in ln.split(",")))) for ln in lines[1:]]


# ---------------------------------------------------------------------------
# run configuration

@dataclass
class RunConfig:
    network: Path
    trips: Path
    power_case: Path
    coupling: Path
    scenarios: Optional[Path] = None
    sample_count: int = 0
    sample_lo: float = 0.5
    sample_hi: float = 1.5
    seed: int = 0
    beta1: float = 1.0
    beta2: float = 0.1
    ev_share: float = 0.0
    ev_origins: dict[int, float] = field(default_factory=dict)
    budget: float = 0.0
    demand_scale: float = 1.0
    fft_divisor: float = 1.0
    fft_scale: float = 1.0
    alpha: float = 1.0
    eps: float = 1e-3
    max_iter: int = 500
    qp_tol: float = 1e-9
    traffic_tol: float = 1e-6
    traffic_max_iter: int = 3000
    parallelism: int = 1
    nonnegative_charging: bool = False
    polish: bool = False
    outdir: Path = Path("out")

    def admm_config(self, init_seed=None):
        from .admm import AdmmConfig
        return AdmmConfig(alpha=self.alpha, eps=self.eps, max_iter=self.max_iter,
                          qp_tol=self.qp_tol, traffic_tol=self.traffic_tol,
                          traffic_max_iter=self.traffic_max_iter,
                          parallelism=self.parallelism,
                          nonnegative_charging=self.nonnegative_charging,
                          polish=self.polish, init_seed=init_seed)


_BOOLS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def read_config(path) -> RunConfig:
    path = Path(path)
    base = path.parent
    raw: dict[str, str] = {}
    for ln in path.read_text().splitlines():
        t = ln.split("#")[0].strip()
        if not t:
            continue
        if "=" not in t:
            raise ParseError(path, f"expected key = value, got {t!r}")
        key, _, val = t.partition("=")
        raw[key.strip()] = val.strip()

    def take(key, conv, default):
        if key not in raw:
            return default
        val = raw.pop(key)
        if conv is bool:
            if val.lower() not in _BOOLS:
                raise ParseError(path, f"{key}: expected a boolean, got {val!r}")
            return _BOOLS[val.lower()]
        return conv(val)

    ev_origins = {}
    for key in [k for k in raw if k.startswith("ev_origin.")]:
        ev_origins[int(key.split(".", 1)[1])] = float(raw.pop(key))

    def path_of(key, required=True):
        if key not in raw:
            if required:
                raise ParseError(path, f"missing required key {key}")
            return None
        return (base / raw.pop(key)).resolve()

    cfg = RunConfig(
        network=path_of("network"), trips=path_of("trips"),
        power_case=path_of("power_case"), coupling=path_of("coupling"),
        scenarios=path_of("scenarios", required=False),
        sample_count=take("sample_count", int, 0),
        sample_lo=take("sample_lo", float, 0.5),
        sample_hi=take("sample_hi", float, 1.5),
        seed=take("seed", int, 0),
        beta1=take("beta1", float, 1.0), beta2=take("beta2", float, 0.1),
        ev_share=take("ev_share", float, 0.0), ev_origins=ev_origins,
        budget=take("budget", float, 0.0),
        demand_scale=take("demand_scale", float, 1.0),
        fft_divisor=take("fft_divisor", float, 1.0),
        fft_scale=take("fft_scale", float, 1.0),
        alpha=take("alpha", float, 1.0), eps=take("eps", float, 1e-3),
        max_iter=take("max_iter", int, 500),
        qp_tol=take("qp_tol", float, 1e-9),
        traffic_tol=take("traffic_tol", float, 1e-6),
        traffic_max_iter=take("traffic_max_iter", int, 3000),
        parallelism=take("parallelism", int, 1),
        nonnegative_charging=take("nonnegative_charging", bool, False),
        polish=take("polish", bool, False),
        outdir=(base / raw.pop("outdir")).resolve() if "outdir" in raw else Path("out").resolve(),
    )
    if raw:
        raise ParseError(path, f"unknown keys: {sorted(raw)}")
    for p in (cfg.network, cfg.trips, cfg.power_case, cfg.coupling, cfg.scenarios):
        if p is not None and not Path(p).exists():
            raise ParseError(path, f"referenced file does not exist: {p}")
    if cfg.scenarios is None and cfg.sample_count < 1:
        raise ParseError(path, "either scenarios or sample_count must be given")
    return cfg


def build_system(cfg: RunConfig) -> tuple[CoupledSystem, ScenarioSet]:
    """Assemble the coupled system and scenario set a config describes."""
    net = parse_tntp(cfg.network, cfg.trips, demand_scale=cfg.demand_scale,
                     fft_divisor=cfg.fft_divisor, fft_scale=cfg.fft_scale)
    coupling, beta0, energy_default = parse_coupling(cfg.coupling)
    ev_origins = dict(cfg.ev_origins)
    if not ev_origins and cfg.ev_share > 0:
        production: dict[int, float] = {}
        for (r, _s), v in net.conventional_od.items():
            production[r] = production.get(r, 0.0) + v
        ev_origins = {r: cfg.ev_share * v for r, v in production.items() if v > 0}
    if not ev_origins:
        raise ValidationError("no ev origins: set ev_share or ev_origin.<node> keys")
    energy = {(r, s): energy_default[s] for r in ev_origins for s in coupling}
    net = dataclasses.replace(
        net, ev_origins=ev_origins, charging_destinations=beta0,
        charging_energy=energy, utility=UtilityCoefficients(cfg.beta1, cfg.beta2))
    power = parse_power_case(cfg.power_case)
    power = dataclasses.replace(power, budget=cfg.budget)
    system = CoupledSystem(transport=net, power=power, coupling=coupling)
    if cfg.scenarios is not None:
        scenario_set = read_scenarios(cfg.scenarios)
    else:
        from .scenarios import sample_uniform
        scenario_set = sample_uniform(power.renewable_buses(), cfg.sample_count,
                                      cfg.sample_lo, cfg.sample_hi, cfg.seed)
    return system, scenario_set


# ---------------------------------------------------------------------------
# result bundles

def write_trace(trace, path) -> None:
    lines = ["iter,gap1,gap2,gap,expected_objective,wall_ms",
             "# units: -,relative,relative,relative,$,ms"]
    for row in trace:
        lines.append(f"{row.iteration},{F % row.gap1},{F % row.gap2},{F % row.gap},"
                     f"{F % row.expected_objective},{F % row.wall_ms}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_result_bundle(outdir, state: SystemState, prices: PriceSet, meta: dict,
                        trace=None) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if trace is not None:
        write_trace(trace, outdir / "trace.csv")

    lines = ["bus,z", "# units: -,MW"]
    for i, z in sorted(state.z.items()):
        lines.append(f"{i},{F % z}")
    (outdir / "investment.csv").write_text("\n".join(lines) + "\n")

    lines = ["scenario,bus,u,g_renewable,g_conventional,p,d,theta",
             "# units: -,-,MW,MW,MW,MW,MW,rad"]
    for sid, st in state.scenarios.items():
        buses = sorted(set(st.u) | set(st.g_conventional) | set(st.p) | set(st.d) | set(st.theta))
        for i in buses:
            cells = [sid, str(i)]
            for table in (st.u, st.g_renewable, st.g_conventional, st.p, st.d, st.theta):
                cells.append(F % table[i] if i in table else "")
            lines.append(",".join(cells))
    (outdir / "power_state.csv").write_text("\n".join(lines) + "\n")

    lines = ["scenario,branch,flow", "# units: -,-,MW"]
    for sid, st in state.scenarios.items():
        for i, v in sorted(st.flows.items()):
            lines.append(f"{sid},{i},{F % v}")
    (outdir / "branch_flows.csv").write_text("\n".join(lines) + "\n")

    lines = ["scenario,link,flow", "# units: -,-,vehicles/hour"]
    for sid, st in state.scenarios.items():
        for i, v in sorted(st.link_flows.items()):
            lines.append(f"{sid},{i},{F % v}")
    (outdir / "road_link_flows.csv").write_text("\n".join(lines) + "\n")

    lines = ["scenario,origin,destination,q", "# units: -,-,-,vehicles/hour"]
    for sid, st in state.scenarios.items():
        for i, r in enumerate(st.origins):
            for j, s in enumerate(st.destinations):
                lines.append(f"{sid},{r},{s},{F % st.od_flows[i, j]}")
    (outdir / "od_flows.csv").write_text("\n".join(lines) + "\n")

    lines = ["scenario,origin,destination,kind,link,flow", "# units: -,-,-,-,-,vehicles/hour"]
    for sid, st in state.scenarios.items():
        for c_idx, (r, s, kind) in enumerate(st.class_ods):
            for k, lk in enumerate(st.link_ids):
                lines.append(f"{sid},{r},{s},{kind},{lk},{F % st.class_flows[c_idx, k]}")
    (outdir / "class_flows.csv").write_text("\n".join(lines) + "\n")

    lines = ["scenario,bus,rho", "# units: -,-,$/MWh"]
    for sid, row in prices.rho.items():
        for i, v in sorted(row.items()):
            lines.append(f"{sid},{i},{F % v}")
    (outdir / "prices_electricity.csv").write_text("\n".join(lines) + "\n")

    lines = ["scenario,destination,lambda", "# units: -,-,$/MWh"]
    for sid, row in prices.lam.items():
        for s, v in sorted(row.items()):
            lines.append(f"{sid},{s},{F % v}")
    (outdir / "prices_charging.csv").write_text("\n".join(lines) + "\n")


def read_result_bundle(outdir) -> tuple[SystemState, PriceSet, dict]:
    outdir = Path(outdir)
    meta = json.loads((outdir / "meta.json").read_text())

    z = {int(r["bus"]): float(r["z"]) for r in _read_csv(outdir / "investment.csv")}

    power_rows = _read_csv(outdir / "power_state.csv")
    flow_rows = _read_csv(outdir / "branch_flows.csv")
    link_rows = _read_csv(outdir / "road_link_flows.csv")
    od_rows = _read_csv(outdir / "od_flows.csv")
    class_rows = _read_csv(outdir / "class_flows.csv")
    rho_rows = _read_csv(outdir / "prices_electricity.csv")
    lam_rows = _read_csv(outdir / "prices_charging.csv")

    sids = []
    for r in power_rows:
        if r["scenario"] not in sids:
            sids.append(r["scenario"])
    states = {}
    for sid in sids:
        u, gs, gc, p, d, theta = {}, {}, {}, {}, {}, {}
        for r in power_rows:
            if r["scenario"] != sid:
                continue
            i = int(r["bus"])
            for key, table in (("u", u), ("g_renewable", gs), ("g_conventional", gc),
                               ("p", p), ("d", d), ("theta", theta)):
                if r[key] != "":
                    table[i] = float(r[key])
        flows = {int(r["branch"]): float(r["flow"]) for r in flow_rows if r["scenario"] == sid}
        link_flows = {int(r["link"]): float(r["flow"]) for r in link_rows if r["scenario"] == sid}
        od = {(int(r["origin"]), int(r["destination"])): float(r["q"])
              for r in od_rows if r["scenario"] == sid}
        origins = tuple(sorted({r for r, _ in od}))
        dests = tuple(sorted({s for _, s in od}))
        q = np.array([[od[(r, s)] for s in dests] for r in origins])
        cls_map: dict[tuple[int, int, str], dict[int, float]] = {}
        for r in class_rows:
            if r["scenario"] != sid:
                continue
            key = (int(r["origin"]), int(r["destination"]), r["kind"])
            cls_map.setdefault(key, {})[int(r["link"])] = float(r["flow"])
        ev_keys = [k for k in cls_map if k[2] == "ev"]
        cv_keys = [k for k in cls_map if k[2] == "cv"]
        class_ods = tuple(sorted(ev_keys) + sorted(cv_keys))
        link_order = []
        if class_ods:
            for r in class_rows:  # preserve the writer's column order
                if r["scenario"] == sid and (int(r["origin"]), int(r["destination"]), r["kind"]) == class_ods[0]:
                    link_order.append(int(r["link"]))
        else:
            link_order = sorted(link_flows)
        class_flows = np.array([[cls_map[key][lk] for lk in link_order] for key in class_ods]) \
            if class_ods else np.zeros((0, len(link_order)))
        states[sid] = ScenarioState(
            scenario_id=sid, u=u, g_renewable=gs, g_conventional=gc, p=p, d=d,
            theta=theta, flows=flows, link_flows=link_flows,
            link_ids=tuple(link_order),
            class_flows=class_flows, class_ods=class_ods, od_flows=q,
            origins=origins, destinations=dests)
    rho = {}
    for r in rho_rows:
        rho.setdefault(r["scenario"], {})[int(r["bus"])] = float(r["rho"])
    lam = {}
    for r in lam_rows:
        lam.setdefault(r["scenario"], {})[int(r["destination"])] = float(r["lambda"])
    return SystemState(z=z, scenarios=states), PriceSet(rho, lam), meta
