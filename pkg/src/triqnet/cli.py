"""Command-line runner: ``triqnet <command> [options]``.

Each run writes ``manifest.json`` to the output directory before any result
file. Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 failed check.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__, circuits, config as cfgmod, device, measurement, privacy, qss
from .errors import NumericalError, UsageError
from .params import CHANNEL_ENDPOINTS
from .qmath import bell_states, fidelity_pure, ghz_state

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- output helpers -------------------------------------------------------------

def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class Run:
    """Output directory plus manifest bookkeeping for one invocation."""

    def __init__(self, args, cfg, command):
        self.out = args.out
        self.cfg = cfg
        self.outputs = []
        os.makedirs(self.out, exist_ok=True)
        self.manifest = {
            "command": command,
            "argv": sys.argv[1:],
            "config_hash": cfg.hash(),
            "seed": cfg.simulation.seed,
            "tier": cfg.simulation.tier,
            "version": __version__,
            "started": _now(),
            "finished": None,
            "outputs": self.outputs,
        }
        self._write_manifest()

    def _write_manifest(self):
        with open(os.path.join(self.out, "manifest.json"), "w", encoding="utf-8") as f:
            json.dump(self.manifest, f, indent=2, sort_keys=True)
            f.write("\n")

    def path(self, name):
        p = os.path.join(self.out, name)
        self.outputs.append(p)
        return p

    def write_text(self, name, text):
        with open(self.path(name), "w", encoding="utf-8", newline="") as f:
            f.write(text)

    def write_json(self, name, obj):
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def finish(self):
        self.manifest["finished"] = _now()
        self._write_manifest()


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def matrix_csv(m) -> str:
    m = np.asarray(m)
    rows = [(i, j, float(m[i, j].real), float(m[i, j].imag))
            for i in range(m.shape[0]) for j in range(m.shape[1])]
    return _csv(["row", "col", "re", "im"], rows)


def _tier(args, cfg) -> str:
    return "ideal" if args.ideal else cfg.simulation.tier


def _readout(cfg, labels, args):
    if getattr(args, "ideal_readout", False):
        return None
    return measurement.ReadoutModel.from_params(cfg.device, labels)


def _tomography(run, cfg, args, rho, labels, target):
    ro = _readout(cfg, labels, args)
    counts = measurement.tomography_measure(rho, cfg.simulation.shots, ro, seed=cfg.simulation.seed)
    run.write_text("counts.csv", counts.to_csv())
    rec = measurement.reconstruct(counts, ro)
    run.write_text("rho_tomo.csv", matrix_csv(rec.matrix))
    return {"shots_per_setting": cfg.simulation.shots, "fidelity_tomo": fidelity_pure(rec, target)}


# --- commands -------------------------------------------------------------------

def cmd_transfer(args, cfg, run):
    q_e, q_r, ch = cfg.device.endpoints(args.channel)
    st = device.run_transfer(q_e, q_r, ch, dt=cfg.simulation.dt, ideal=args.ideal)
    half = device.run_half_transfer(q_e, q_r, ch, dt=cfg.simulation.dt, ideal=args.ideal)
    summary = {"channel": ch.label, "emitter": q_e.label, "receiver": q_r.label,
               "ideal": bool(args.ideal), "eta_t": st.eta_t, "F_Bell": half.F_Bell,
               "eta_t_half": half.eta_t}
    run.write_json("transfer.json", summary)
    if args.chevron:
        det = np.arange(-125.0, 125.0 + 1e-9, 2.5)
        times = np.arange(0.0, 400.0 + 1e-9, 4.0)
        pe = device.rabi_chevron(q_e, ch, det, times, ideal=args.ideal)
        rows = [(float(d), float(t), float(pe[i, j])) for i, d in enumerate(det) for j, t in enumerate(times)]
        run.write_text("chevron.csv", _csv(["detuning_MHz", "time_ns", "P_e"], rows))
    print(f"{ch.label}: eta_t={st.eta_t:.4f} F_Bell={half.F_Bell:.4f}")


def cmd_bell(args, cfg, run):
    ch = cfg.device.channel(args.channel)
    src, dst = CHANNEL_ENDPOINTS[ch.label]
    c = circuits.bell_circuit(src, dst, ch.label)
    rho = circuits.run_circuit(c, _tier(args, cfg), cfg.device, dt=cfg.simulation.dt)
    target = bell_states()["psi-"]
    out = {"channel": ch.label, "qubits": list(c.qubits), "tier": _tier(args, cfg),
           "fidelity": fidelity_pure(rho, target)}
    run.write_text("rho.csv", matrix_csv(rho.matrix))
    if args.tomo:
        out.update(_tomography(run, cfg, args, rho, c.qubits, target))
    run.write_json("bell.json", out)
    print(f"Bell {src}{dst}: fidelity={out['fidelity']:.4f}")


def cmd_swap(args, cfg, run):
    tier = _tier(args, cfg)
    res = circuits.run_swap_protocol(tier, args.variant, cfg.device, dt=cfg.simulation.dt)
    targets = circuits.swap_targets(args.variant)
    outcomes = {}
    for k, (p, rho) in res.items():
        outcomes[k] = {"probability": p,
                       "fidelity": fidelity_pure(rho, targets[k]) if rho is not None else None}
    chosen = res[args.outcome][1]
    out = {"tier": tier, "variant": args.variant, "outcome": args.outcome,
           "fidelity": outcomes[args.outcome]["fidelity"], "outcomes": outcomes}
    run.write_text(f"rho_{args.outcome}.csv", matrix_csv(chosen.matrix))
    if args.tomo:
        out.update(_tomography(run, cfg, args, chosen, ("A2", "B2"), targets[args.outcome]))
    run.write_json("swap.json", out)
    print(f"swap {args.outcome}: p={outcomes[args.outcome]['probability']:.4f} "
          f"fidelity={out['fidelity']:.4f}")


def _ghz(args, cfg, run, which):
    tier = _tier(args, cfg)
    kw = {"dd": not args.no_dd, "dt": cfg.simulation.dt}
    if which == "ghz3":
        rho = circuits.run_ghz3(tier, cfg.device, **kw)
        labels = circuits.GHZ3_QUBITS
    else:
        rho = circuits.run_ghz5(tier, cfg.device, **kw)
        labels = circuits.GHZ5_QUBITS
    target = ghz_state(len(labels))
    out = {"tier": tier, "qubits": list(labels), "dd": not args.no_dd,
           "fidelity": fidelity_pure(rho, target)}
    run.write_text("rho.csv", matrix_csv(rho.matrix))
    if args.tomo:
        out.update(_tomography(run, cfg, args, rho, labels, target))
    run.write_json(f"{which}.json", out)
    print(f"{which} ({tier}): fidelity={out['fidelity']:.4f}")


def cmd_ghz3(args, cfg, run):
    _ghz(args, cfg, run, "ghz3")


def cmd_ghz5(args, cfg, run):
    _ghz(args, cfg, run, "ghz5")


def _qss_state(args, cfg):
    source = "ideal" if args.ideal else args.source
    return qss.source_state(source, args.attack, cfg.device, dt=cfg.simulation.dt)


def cmd_qss(args, cfg, run):
    rho = _qss_state(args, cfg)
    ro = None if not args.readout else measurement.ReadoutModel.from_params(cfg.device, ("A2", "C1", "B2"))
    rounds = args.rounds or cfg.simulation.rounds
    log = qss.run_rounds(rounds, rho, ro, seed=cfg.simulation.seed, workers=args.workers)
    report = qss.sift_and_decode(log)
    run.write_text("rounds.jsonl", log.to_jsonl())
    run.write_text("report.json", report.to_json() + "\n")
    print(f"QBER={report.qber:.4f} (raw {report.error_raw:.4f}) verdict={report.verdict}")


def cmd_sweep(args, cfg, run):
    thetas = args.thetas if args.thetas is not None else cfg.simulation.theta_E
    if not thetas:
        raise UsageError("empty theta grid")
    rows = [qss.sweep_row(t) for t in thetas]
    run.write_text("sweep.csv", _csv(qss.SWEEP_COLUMNS, [[r[c] for c in qss.SWEEP_COLUMNS] for r in rows]))
    if args.phi:
        table = qss.phi_sweep(cfg.simulation.phi_A, qss.source_state("ideal"),
                              rounds=args.rounds, seed=cfg.simulation.seed)
        run.write_text("phi_sweep.csv", _csv(["phi_A", "blue_sum", "red_sum"], table.tolist()))
    print(f"wrote {len(rows)} sweep rows")


def cmd_tomo(args, cfg, run):
    tier = _tier(args, cfg)
    if args.state == "ghz3":
        rho, labels = circuits.run_ghz3(tier, cfg.device, dt=cfg.simulation.dt), circuits.GHZ3_QUBITS
    elif args.state == "ghz5":
        rho, labels = circuits.run_ghz5(tier, cfg.device, dt=cfg.simulation.dt), circuits.GHZ5_QUBITS
    else:
        c = circuits.bell_circuit("A2", "C1", "a2c1")
        rho, labels = circuits.run_circuit(c, tier, cfg.device, dt=cfg.simulation.dt), c.qubits
    target = ghz_state(len(labels)) if args.state != "bell" else bell_states()["psi-"]
    out = {"state": args.state, "tier": tier, "fidelity": fidelity_pure(rho, target)}
    out.update(_tomography(run, cfg, args, rho, labels, target))
    run.write_json("tomo.json", out)
    print(f"tomography {args.state}: fidelity={out['fidelity_tomo']:.4f}")


def cmd_privacy(args, cfg, run):
    rho = _qss_state(args, cfg)
    cq = privacy.cq_from_measurement(rho, "x")
    pb = privacy.privacy_bound(rho)
    dw = privacy.dw_bound(cq, rho)
    out = {"theta_E": args.attack, "source": "ideal" if args.ideal else args.source,
           "privacy_bound": pb, "dw_bound": dw,
           "guessing_probability_B": qss.guessing_probability(rho, "B"),
           "guessing_probability_C": qss.guessing_probability(rho, "C"),
           "mermin": qss.mermin_value(rho),
           "holevo_x": privacy.holevo(privacy.Ensemble(cq.probs, [s for s in cq.states if s is not None]))
           if not cq.omitted else None,
           "vacuous": pb <= 0}
    run.write_json("privacy.json", out)
    print(f"privacy bound={pb:.4f} bits, DW bound={dw:.4f} bits" + (" (vacuous)" if pb <= 0 else ""))


def _checks(cfg):
    """(name, passed, detail) for the built-in consistency checks."""
    out = []
    thetas = [i * (math.pi / 2) / 8 for i in range(9)]
    rows = [qss.sweep_row(t) for t in thetas]

    def mono(col, sign):
        v = [r[col] for r in rows]
        return all(sign * (b - a) >= -1e-12 for a, b in zip(v, v[1:]))

    out.append(("privacy_bound non-increasing", mono("privacy_bound", -1), ""))
    out.append(("fidelity non-increasing", mono("fidelity", -1), ""))
    out.append(("qber non-decreasing", mono("qber_sifted", +1), ""))
    out.append(("Eve linear entropy non-decreasing", mono("linear_entropy_E", +1), ""))
    g = ghz_state(3).density()
    pb = privacy.privacy_bound(g)
    out.append(("privacy_bound(GHZ) = 1", abs(pb - 1) < 1e-9, f"{pb!r}"))
    mv = qss.mermin_value(g)
    out.append(("mermin(GHZ) = 4", abs(mv - 4) < 1e-9, f"{mv!r}"))
    a = qss.run_rounds(4096, g, seed=cfg.simulation.seed, workers=1).to_jsonl()
    b = qss.run_rounds(4096, g, seed=cfg.simulation.seed, workers=4).to_jsonl()
    out.append(("round log independent of workers", a == b, ""))
    return out


def cmd_check(args, cfg, run):
    results = _checks(cfg)
    run.write_json("check.json", [{"name": n, "passed": bool(p), "detail": d} for n, p, d in results])
    for n, p, d in results:
        print(f"{'PASS' if p else 'FAIL'} {n}" + (f" ({d})" if d and not p else ""))
    return EXIT_OK if all(p for _, p, _ in results) else EXIT_CHECK


# --- argument parsing -------------------------------------------------------------

def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _angles(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated angles in radians") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--seed", type=_seed, help="64-bit seed (overrides the config)")
    common.add_argument("--out", default="triqnet_out", help="output directory")
    common.add_argument("--ideal", action="store_true", help="disable all noise")
    common.add_argument("--tier", choices=cfgmod.TIER_CHOICES, help="simulation tier")
    common.add_argument("--workers", type=int, help="worker threads (capped by TRIQNET_THREADS)")
    common.add_argument("--shots", type=int, help="tomography shots per setting (overrides the config)")

    p = _Parser(prog="triqnet", description="Three-node quantum network simulator")
    p.add_argument("--version", action="version", version=f"triqnet {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("transfer", cmd_transfer, "state transfer and half transfer through one channel")
    sp.add_argument("--channel", required=True)
    sp.add_argument("--chevron", action="store_true", help="also write the vacuum-Rabi chevron")

    sp = add("bell", cmd_bell, "Bell pair across one channel")
    sp.add_argument("--channel", default="a2c1")
    sp.add_argument("--tomo", action="store_true")
    sp.add_argument("--ideal-readout", action="store_true")

    sp = add("swap", cmd_swap, "entanglement swapping between A2 and B2")
    sp.add_argument("--variant", choices=("X/2", "Y/2"), default="X/2")
    sp.add_argument("--outcome", choices=("gg", "ge", "eg", "ee"), default="gg")
    sp.add_argument("--tomo", action="store_true")
    sp.add_argument("--ideal-readout", action="store_true")

    for name, fn in (("ghz3", cmd_ghz3), ("ghz5", cmd_ghz5)):
        sp = add(name, fn, f"{name.upper()} state preparation")
        sp.add_argument("--tomo", action="store_true")
        sp.add_argument("--no-dd", action="store_true", help="omit decoupling pulses")
        sp.add_argument("--ideal-readout", action="store_true")

    for name, fn, help_ in (("qss", cmd_qss, "secret-sharing rounds"),
                            ("privacy", cmd_privacy, "privacy bounds for one state")):
        sp = add(name, fn, help_)
        sp.add_argument("--source", choices=("ideal", "circuit", "device"), default="ideal")
        sp.add_argument("--attack", type=float, default=None, metavar="THETA_E")
        if name == "qss":
            sp.add_argument("--rounds", type=int)
            sp.add_argument("--readout", action="store_true", help="apply readout assignment errors")

    sp = add("sweep", cmd_sweep, "attack-angle sweep of all metrics")
    sp.add_argument("--thetas", type=_angles, help="comma-separated theta_E values")
    sp.add_argument("--phi", action="store_true", help="also write the phi_A sweep")
    sp.add_argument("--rounds", type=int, default=None, help="shots per phi_A point (exact if omitted)")

    sp = add("tomo", cmd_tomo, "tomography of a prepared state")
    sp.add_argument("--state", choices=("bell", "ghz3", "ghz5"), default="ghz3")
    sp.add_argument("--ideal-readout", action="store_true")

    add("check", cmd_check, "built-in consistency checks")
    return p


def _resolve_config(args):
    cfg = cfgmod.load(args.config) if args.config else cfgmod.Config()
    if args.seed is not None:
        cfg.simulation.seed = args.seed
    if args.shots is not None:
        if args.shots < 1:
            raise UsageError("--shots must be >= 1")
        cfg.simulation.shots = args.shots
    if args.tier is not None:
        cfg.simulation.tier = args.tier
    if args.ideal:
        cfg.simulation.tier = "ideal"
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "rounds", None) is not None and args.rounds < 1:
            raise UsageError("--rounds must be >= 1")
        cfg = _resolve_config(args)
        run = Run(args, cfg, args.command)
        code = args.func(args, cfg, run)
        run.finish()
        return EXIT_OK if code is None else code
    except UsageError as exc:
        print(f"triqnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"triqnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
