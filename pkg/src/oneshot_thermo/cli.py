"""Command-line harness: every computation as a subcommand with config-file
driven, deterministic runs.

Configs are flat ``key = value`` text files ('#' comments allowed); nested
component lists use dotted keys (``component.1.weight``).  Flags override
file keys.  Unknown keys are rejected.  Identical configs produce
byte-identical output; the version and the canonicalized config are echoed
into the output metadata (JSON header object / CSV '#' comment block).

Exit codes: 0 success, 1 numerical failure (selftest mismatch), 2 config
error (with a machine-readable JSON line on stderr).
"""

import argparse
import math
import sys

import numpy as np

from . import __version__
from .coherence import (
    LadderReference,
    dephase_distill_protocol,
    reference_frame_describe,
    reference_frame_externalize,
    reference_frame_formation_protocol,
)
from .divergences import divergence_report
from .errors import ConfigError, OneShotThermoError
from .lattice import (
    FiniteMixture,
    IIDMixed,
    IIDPure,
    LocalHamiltonianSpec,
    MarkovFamily,
    gap_scan,
    ising_chain,
    mixture_scan,
    spatial_variance,
)
from .operators import DensityOperator, HermitianOperator
from .serialize import dumps_csv, dumps_json
from .thermo import gibbs, lorenz_curve, work_distillable, work_formation

COMMANDS = ("divergence", "lorenz", "work", "protocol", "gap-scan",
            "mixture-scan", "variance")

_COMMON_KEYS = {"output", "format", "beta", "epsilon"}
_KEYS = {
    "divergence": {"rho", "sigma"},
    "lorenz": {"rho", "hamiltonian"},
    "work": {"rho", "hamiltonian", "quantity", "battery_step"},
    "protocol": {"rho", "hamiltonian", "protocol", "delta", "levels"},
    "gap-scan": {"state", "model", "coupling", "field", "local_term",
                 "boundary_term", "site_dim", "support", "n_list", "bin_width"},
    "mixture-scan": {"model", "coupling", "field", "local_term", "boundary_term",
                     "site_dim", "support", "n_list", "bin_width", "direct_max_n"},
    "variance": {"state", "observable", "n_list"},
}

SCAN_HEADER = ("n", "eps", "d_min_rate", "d_max_rate", "umegaki_rate",
               "gap_rate", "method", "err_bound")


def parse_config_file(path):
    pairs = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            pairs[key.strip()] = value.strip()
    return pairs


def _validate_keys(command, pairs):
    allowed = _COMMON_KEYS | _KEYS[command] | {"command"}
    for key in pairs:
        base = key.split(".")[0]
        if base == "component" and command in ("mixture-scan", "variance"):
            parts = key.split(".")
            if len(parts) == 3 and parts[1].isdigit() and parts[2] in ("weight", "state"):
                continue
            raise ConfigError(f"malformed component key {key!r}")
        if key not in allowed and base not in allowed:
            raise ConfigError(f"unknown key {key!r} for command {command!r}")
    if "command" in pairs and pairs["command"] != command:
        raise ConfigError(
            f"config is for command {pairs['command']!r}, invoked as {command!r}"
        )


def _get_float(pairs, key, default=None, lo=None, hi=None):
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        v = float(pairs[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: not a number: {pairs[key]!r}")
    if lo is not None and v < lo or hi is not None and v >= hi:
        raise ConfigError(f"key {key!r} = {v!r} outside valid range")
    return v


def _get_int_list(pairs, key):
    if key not in pairs:
        raise ConfigError(f"missing required key {key!r}")
    try:
        return [int(x) for x in pairs[key].replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"key {key!r}: expected integers, got {pairs[key]!r}")


def _load_operator(path, cls=HermitianOperator):
    import json

    try:
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))
    except FileNotFoundError:
        raise ConfigError(f"input file not found: {path!r}")
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad operator file {path!r}: {exc}")


_NAMED_KETS = {
    "up": [1.0, 0.0],
    "down": [0.0, 1.0],
    "plus": [2 ** -0.5, 2 ** -0.5],
    "minus": [2 ** -0.5, -(2 ** -0.5)],
}


def parse_family(text):
    """Parse a state-family spec string (iid_pure / iid_mixed / markov)."""
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    rest = rest.strip()
    try:
        if kind == "iid_pure":
            if rest in _NAMED_KETS:
                return IIDPure(np.array(_NAMED_KETS[rest]))
            return IIDPure(np.array([float(x) for x in rest.split()]))
        if kind == "iid_mixed":
            probs = np.array([float(x) for x in rest.split()])
            return IIDMixed(DensityOperator.diagonal(probs))
        if kind == "markov":
            rows = [r.strip() for r in rest.split(";") if r.strip()]
            m = np.array([[float(x) for x in r.split()] for r in rows])
            return MarkovFamily.from_transition(m)
    except (ValueError, OneShotThermoError) as exc:
        raise ConfigError(f"bad state family {text!r}: {exc}")
    raise ConfigError(f"unknown state family kind {kind!r}")


def _parse_components(pairs):
    comps = {}
    for key, value in pairs.items():
        parts = key.split(".")
        if parts[0] != "component":
            continue
        idx = int(parts[1])
        comps.setdefault(idx, {})[parts[2]] = value
    if not comps:
        return None
    weights, families = [], []
    for idx in sorted(comps):
        entry = comps[idx]
        if "weight" not in entry or "state" not in entry:
            raise ConfigError(f"component {idx} needs both weight and state")
        weights.append(float(entry["weight"]))
        families.append(parse_family(entry["state"]))
    return FiniteMixture(tuple(weights), tuple(families))


def _lattice_spec(pairs):
    model = pairs.get("model", "ising")
    if model == "ising":
        return ising_chain(_get_float(pairs, "coupling", 0.0),
                           _get_float(pairs, "field", 0.0))
    if model == "custom":
        local = _load_operator(pairs["local_term"]) if "local_term" in pairs else None
        if local is None:
            raise ConfigError("custom model needs local_term")
        boundary = (_load_operator(pairs["boundary_term"])
                    if "boundary_term" in pairs else None)
        site_dim = int(_get_float(pairs, "site_dim"))
        support = int(_get_float(pairs, "support"))
        return LocalHamiltonianSpec(site_dim, support, local, boundary)
    raise ConfigError(f"unknown model {model!r}")


def _emit(pairs, command, payload_json, csv_header, csv_rows):
    fmt = pairs.get("format", "csv" if csv_header else "json")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    meta = {"version": __version__, "command": command}
    meta.update({k: pairs[k] for k in sorted(pairs)})
    if fmt == "json":
        text = dumps_json({"meta": meta, "result": payload_json}, indent=2)
    else:
        if csv_header is None:
            raise ConfigError(f"command {command!r} has no CSV form; use format = json")
        text = dumps_csv(csv_header, csv_rows, metadata=meta)
    out = pairs.get("output")
    if out:
        mode = "w", "utf-8"
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_divergence(pairs):
    rho = _load_operator(pairs.get("rho") or _missing("rho"), DensityOperator)
    sigma = _load_operator(pairs.get("sigma") or _missing("sigma"), DensityOperator)
    eps = _get_float(pairs, "epsilon", 0.0, lo=0.0, hi=1.0)
    report = divergence_report(rho, sigma, eps)
    rows = []
    for name, est in (("umegaki", report.umegaki), ("d_min", report.d_min),
                      ("d_max", report.d_max), ("d_hyp", report.d_hyp)):
        rows.append((name, est.value, est.lo, est.hi, est.exact))
    return report.to_json_dict(), ("quantity", "value", "lo", "hi", "exact"), rows


def _missing(key):
    raise ConfigError(f"missing required key {key!r}")


def _run_lorenz(pairs):
    rho = _load_operator(pairs.get("rho") or _missing("rho"), DensityOperator)
    ham = _load_operator(pairs.get("hamiltonian") or _missing("hamiltonian"))
    ens = gibbs(ham, _get_float(pairs, "beta", lo=0.0))
    curve = lorenz_curve(rho, ens)
    rows = curve.csv_rows()
    return {"vertices": [list(r) for r in rows]}, ("x", "y"), rows


def _run_work(pairs):
    rho = _load_operator(pairs.get("rho") or _missing("rho"), DensityOperator)
    ham = _load_operator(pairs.get("hamiltonian") or _missing("hamiltonian"))
    ens = gibbs(ham, _get_float(pairs, "beta", lo=0.0))
    eps = _get_float(pairs, "epsilon", 0.0, lo=0.0, hi=1.0)
    quantity = pairs.get("quantity", "both")
    if quantity not in ("formation", "distillation", "both"):
        raise ConfigError(f"unknown quantity {quantity!r}")
    quotes = []
    if quantity in ("formation", "both"):
        quotes.append(work_formation(rho, ens, eps))
    if quantity in ("distillation", "both"):
        quotes.append(work_distillable(rho, ens, eps))
    payload = {"quotes": [q.to_json_dict() for q in quotes]}
    rows = [(q.quantity.value, q.work, q.epsilon, q.exact) for q in quotes]
    return payload, ("quantity", "work", "epsilon", "exact"), rows


def _run_protocol(pairs):
    rho = _load_operator(pairs.get("rho") or _missing("rho"), DensityOperator)
    ham = _load_operator(pairs.get("hamiltonian") or _missing("hamiltonian"))
    ens = gibbs(ham, _get_float(pairs, "beta", lo=0.0))
    eps = _get_float(pairs, "epsilon", 0.0, lo=0.0, hi=1.0)
    delta = _get_float(pairs, "delta", 1e-2, lo=0.0)
    which = pairs.get("protocol", "dephase-distill")
    if which == "dephase-distill":
        work, ledger, diag = dephase_distill_protocol(rho, ens, eps, delta)
        payload = {
            "protocol": which,
            "work": work,
            "ledger": ledger.to_json_dict(),
            "waste_nats": diag["waste_nats"],
            "beta_delta": diag["beta_delta"],
        }
        return payload, None, None
    if which == "reference-frame":
        levels = int(_get_float(pairs, "levels", 8, lo=1))
        work, ledger, diag = reference_frame_formation_protocol(rho, ens, eps, delta, levels)
        payload = {
            "protocol": which,
            "work": work,
            "ledger": ledger.to_json_dict(),
            "recovery_trace_distance": diag["recovery_trace_distance"],
            "ladder_levels": levels,
        }
        return payload, None, None
    raise ConfigError(f"unknown protocol {which!r}")


def _scan_rows_payload(rows):
    return [
        {
            "n": r.n, "eps": r.epsilon, "d_min_rate": r.d_min_rate,
            "d_max_rate": r.d_max_rate, "umegaki_rate": r.umegaki_rate,
            "gap_rate": r.gap_rate, "method": r.method, "err_bound": r.err_bound,
        }
        for r in rows
    ]


def _run_gap_scan(pairs):
    family = parse_family(pairs.get("state") or _missing("state"))
    spec = _lattice_spec(pairs)
    beta = _get_float(pairs, "beta", lo=0.0)
    eps = _get_float(pairs, "epsilon", 0.0, lo=0.0, hi=1.0)
    n_list = _get_int_list(pairs, "n_list")
    bw = _get_float(pairs, "bin_width", 1e-3, lo=0.0)
    rows = gap_scan(family, spec, beta, eps, n_list, bin_width=bw)
    return {"rows": _scan_rows_payload(rows)}, SCAN_HEADER, [r.csv_row() for r in rows]


def _run_mixture_scan(pairs):
    mixture = _parse_components(pairs)
    if mixture is None:
        raise ConfigError("mixture-scan needs component.N.weight/state keys")
    spec = _lattice_spec(pairs)
    beta = _get_float(pairs, "beta", lo=0.0)
    eps = _get_float(pairs, "epsilon", 0.0, lo=0.0, hi=1.0)
    n_list = _get_int_list(pairs, "n_list")
    bw = _get_float(pairs, "bin_width", 1e-3, lo=0.0)
    direct = int(_get_float(pairs, "direct_max_n", 20))
    res = mixture_scan(list(zip(mixture.weights, mixture.components)), spec, beta,
                       eps, n_list, bin_width=bw, direct_max_n=direct)
    payload = {
        "rows": _scan_rows_payload(res.rows),
        "component_limits": list(res.component_limits),
        "potential_spread": res.potential_spread,
        "reversible": res.reversible,
        "direct_rows": _scan_rows_payload(res.direct_rows),
    }
    meta_rows = [r.csv_row() for r in res.rows]
    return payload, SCAN_HEADER, meta_rows


def _run_variance(pairs):
    mixture = _parse_components(pairs)
    family = mixture if mixture is not None else parse_family(
        pairs.get("state") or _missing("state"))
    obs_text = pairs.get("observable", "sigma_z")
    if obs_text == "sigma_z":
        obs = HermitianOperator.diagonal([1.0, -1.0])
    else:
        obs = _load_operator(obs_text)
    n_list = _get_int_list(pairs, "n_list")
    rows = [(n, spatial_variance(family, obs, n)) for n in sorted(n_list)]
    return {"rows": [list(r) for r in rows]}, ("n", "variance"), rows


_RUNNERS = {
    "divergence": _run_divergence,
    "lorenz": _run_lorenz,
    "work": _run_work,
    "protocol": _run_protocol,
    "gap-scan": _run_gap_scan,
    "mixture-scan": _run_mixture_scan,
    "variance": _run_variance,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oneshot-thermo",
        description="One-shot thermodynamics numerics (divergences, "
                    "thermo-majorization, coherence protocols, chain rate scans).",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (flags win)")
        p.add_argument("--epsilon", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--output")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--selftest", action="store_true",
                       help="run this command's oracle suite and exit")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.selftest:
        from .selftest import run_selftest

        ok, lines = run_selftest(args.command)
        for line in lines:
            print(line)
        return 0 if ok else 1
    try:
        pairs = parse_config_file(args.config) if args.config else {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, _, v = item.partition("=")
            pairs[k.strip()] = v.strip()
        for name in ("epsilon", "beta", "output", "format"):
            val = getattr(args, name)
            if val is not None:
                pairs[name] = str(val) if not isinstance(val, str) else val
        _validate_keys(args.command, pairs)
        payload, header, rows = _RUNNERS[args.command](pairs)
        _emit(pairs, args.command, payload, header, rows)
        return 0
    except ConfigError as exc:
        sys.stderr.write(dumps_json({"error": "config", "message": str(exc)}))
        return 2
    except OneShotThermoError as exc:
        sys.stderr.write(dumps_json({
            "error": type(exc).__name__, "message": str(exc)}))
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(dumps_json({"error": "config", "message": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
