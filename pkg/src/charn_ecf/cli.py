"""Command line interface: ``charn-ecf {test,simulate,montecarlo,rerun}``.

Every output carries a manifest with the fully resolved configuration, and
``charn-ecf rerun <manifest-or-report.json>`` replays it.
"""

import argparse
import hashlib
import json
import logging
import sys

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, FitConfig, bootstrap_test
from .ecf import WeightSpec
from .exceptions import CharnError
from .montecarlo import ALPHAS, DESK_N, PAPER_N, ExperimentConfig, run_experiment
from .timeseries import HYPOTHESES, MODEL_IDS, TimeSeries, simulate, study_model

logger = logging.getLogger("charn_ecf")

EXIT_OK, EXIT_ERROR, EXIT_REJECT = 0, 1, 2


class InputError(CharnError):
    pass


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def read_series_text(text, source="<input>"):
    """Floats, one per line, oldest first; blank lines are skipped."""
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        token = line.strip()
        if not token:
            continue
        try:
            value = float(token)
        except ValueError:
            raise InputError(f"{source}:{lineno}: not a number: {token!r}") from None
        if not np.isfinite(value):
            raise InputError(f"{source}:{lineno}: non-finite value {token!r}")
        values.append(value)
    return values


def read_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InputError(f"{path}:{lineno}: expected key=value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _str_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _add_method_flags(p):
    p.add_argument("--k", type=int, default=1, help="number of lags in the statistic")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--boot-reps", type=int, default=200)
    p.add_argument("--weight", choices=["laplace", "gauss"], default="gauss")
    p.add_argument("--gamma", type=_float_list, default=[0.5],
                   help="one value for all coordinates or k+1 comma-separated values")
    p.add_argument("--a-n-quantile", type=float, default=0.975)
    p.add_argument("--a-n", type=float, default=None, help="absolute truncation bound")
    p.add_argument("--bandwidth", default="silverman",
                   help="silverman | fixed:<c> | power:<rho>")
    p.add_argument("--kernel", choices=["epanechnikov", "quartic", "triweight"],
                   default="epanechnikov")
    p.add_argument("--smoothing", default="n^-1/4", help="bootstrap smoothing bandwidth h")
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--refit", type=_bool, default=True)
    p.add_argument("--shrink", type=_bool, default=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="charn-ecf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test a series for independence of innovations and past")
    p.add_argument("input", help="file with one float per line, or - for stdin")
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--exit-on-reject", action="store_true",
                   help="exit with status 2 when the null is rejected")
    _add_method_flags(p)

    p = sub.add_parser("simulate", help="simulate a series from one of the study models")
    p.add_argument("--config")
    p.add_argument("--model", choices=MODEL_IDS, default="AR_i")
    p.add_argument("--hypothesis", choices=HYPOTHESES, default="null")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "plain"], default="csv")
    p.add_argument("--out")

    p = sub.add_parser("montecarlo", help="rejection-frequency tables")
    p.add_argument("--config")
    p.add_argument("--model", type=_str_list, default=list(MODEL_IDS))
    p.add_argument("--hypothesis", type=_str_list, default=list(HYPOTHESES))
    p.add_argument("--n-list", type=_int_list, default=list(DESK_N))
    p.add_argument("--alphas", type=_float_list, default=list(ALPHAS))
    p.add_argument("--mc-reps", type=int, default=200)
    p.add_argument("--paper-scale", type=_bool, nargs="?", const=True, default=False,
                   help="400 Monte Carlo x 400 bootstrap replicates over n=50..400")
    p.add_argument("--out-csv")
    p.add_argument("--out-text")
    _add_method_flags(p)

    p = sub.add_parser("rerun", help="replay a manifest or a report containing one")
    p.add_argument("manifest")
    p.add_argument("--out", help="override the recorded output path ('-' for stdout)")
    return parser


def parse_args(argv):
    """Parse ``argv``, letting ``--config`` supply defaults that flags override."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in read_config_file(args.config).items():
            if key not in known or key in ("config", "input", "help"):
                raise InputError(f"{args.config}: unknown key {key!r} for '{args.command}'")
            action = known[key]
            if action.type is not None:
                value = action.type(value)
            elif isinstance(action.const, bool):
                value = _bool(value)
            defaults[key] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------------------
# configuration objects from arguments
# ---------------------------------------------------------------------------


def _weight(cfg):
    gammas = list(cfg["gamma"])
    k = cfg["k"]
    if len(gammas) == 1:
        gammas = gammas * (k + 1)
    if len(gammas) != k + 1:
        raise InputError(f"--gamma needs 1 or k+1={k + 1} values, got {len(gammas)}")
    return WeightSpec(cfg["weight"], tuple(gammas))


def _fit_config(cfg):
    bw = cfg["bandwidth"]
    return FitConfig(bandwidth=bw, kernel=cfg["kernel"], truncation=cfg["a_n"],
                     truncation_quantile=cfg["a_n_quantile"])


def _boot_config(cfg, replicates=None):
    smoothing = cfg["smoothing"]
    if smoothing != "n^-1/4":
        smoothing = float(smoothing)
    return BootstrapConfig(
        replicates=replicates or cfg["boot_reps"], smoothing=smoothing, burn_in=cfg["burn_in"],
        alpha=cfg["alpha"], seed=cfg["seed"], refit=cfg["refit"], shrink=cfg["shrink"],
        workers=cfg["threads"],
    )


def _resolved(args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("config", "verbose")}
    return cfg


def _manifest(command, cfg, extra=None):
    out = {"subcommand": command, "version": __version__, "config": cfg}
    out.update(extra or {})
    return out


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_test(cfg, target=None):
    source = cfg["input"]
    if source == "-":
        text = sys.stdin.read()
    else:
        with open(source) as fh:
            text = fh.read()
    values = read_series_text(text, source)
    k = cfg["k"]
    boot = _boot_config(cfg)
    minimum = k + max(boot.min_kept, 2)
    if len(values) < minimum:
        raise InputError(
            f"series has {len(values)} values; the test needs at least {minimum} "
            f"({k} pre-sample lag(s) + {max(boot.min_kept, 2)} observations)"
        )
    report = bootstrap_test(TimeSeries(values, k), k, _fit_config(cfg), _weight(cfg), boot)
    body = report.to_dict()
    body.pop("bootstrap_statistics")
    digest = hashlib.sha256(text.encode()).hexdigest()
    body["manifest"] = _manifest("test", cfg, {"input_sha256": digest})
    _write(target or cfg["out"], _dump_json(body))
    if cfg["exit_on_reject"] and report.reject:
        return EXIT_REJECT
    return EXIT_OK


def cmd_simulate(cfg, target=None):
    model = study_model(cfg["model"], cfg["hypothesis"], burn_in=cfg["burn_in"])
    series = simulate(model, cfg["n"], cfg["k"], cfg["seed"])
    if cfg["format"] == "plain":
        text = "".join(f"{v!r}\n" for v in series.values.tolist())
    else:
        lines = ["t,x"]
        lines += [f"{i - cfg['k'] + 1},{v!r}" for i, v in enumerate(series.values.tolist())]
        text = "\n".join(lines) + "\n"
    out = target or cfg["out"]
    _write(out, text)
    if out not in (None, "-"):
        _write(out + ".manifest.json", _dump_json(_manifest("simulate", cfg)))
    return EXIT_OK


def experiment_configs(cfg):
    configs = []
    for model in cfg["model"]:
        for hyp in cfg["hypothesis"]:
            kwargs = dict(
                alphas=tuple(cfg["alphas"]),
                weight=_weight(cfg),
                fit_config=_fit_config(cfg),
                master_seed=cfg["seed"],
                k=cfg["k"],
            )
            if cfg["paper_scale"]:
                configs.append(ExperimentConfig.paper_scale(
                    model, hyp, boot=_boot_config(cfg, 400), **kwargs))
            else:
                configs.append(ExperimentConfig(
                    model, hyp, n_list=tuple(cfg["n_list"]), mc_replicates=cfg["mc_reps"],
                    boot=_boot_config(cfg), **kwargs))
    return configs


def cmd_montecarlo(cfg, target=None):
    if cfg["paper_scale"]:
        cfg = dict(cfg, n_list=list(PAPER_N), mc_reps=400, boot_reps=400)
    table = run_experiment(experiment_configs(cfg), parallelism=cfg["threads"])
    logger.info("monte carlo finished in %.1f s", table.wall_time)
    manifest = _manifest("montecarlo", cfg)
    text = table.to_text() + "\n# manifest: " + json.dumps(manifest, sort_keys=True) + "\n"
    if target is not None:
        # replay to a new place: the text table, manifest unchanged
        _write(target, text)
        return EXIT_OK
    if cfg["out_csv"]:
        _write(cfg["out_csv"], table.to_csv())
        _write(cfg["out_csv"] + ".manifest.json", _dump_json(manifest))
    if cfg["out_text"] or not cfg["out_csv"]:
        _write(cfg["out_text"], text)
    return EXIT_OK


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "montecarlo": cmd_montecarlo}


def cmd_rerun(path, out=None):
    with open(path) as fh:
        doc = json.load(fh)
    manifest = doc.get("manifest", doc)
    command = manifest.get("subcommand")
    if command not in COMMANDS:
        raise InputError(f"{path}: no replayable manifest found")
    cfg = dict(manifest["config"])
    if command == "test" and cfg["input"] != "-":
        with open(cfg["input"]) as fh:
            digest = hashlib.sha256(fh.read().encode()).hexdigest()
        if digest != manifest.get("input_sha256"):
            raise InputError(f"{cfg['input']} changed since the manifest was written")
    # the recorded configuration stays untouched so the manifest replays verbatim
    return COMMANDS[command](cfg, out)


def main(argv=None):
    try:
        args = parse_args(argv)
    except CharnError as exc:
        print(f"charn-ecf: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rerun":
            return cmd_rerun(args.manifest, args.out)
        return COMMANDS[args.command](_resolved(args))
    except (CharnError, ValueError, OSError) as exc:
        print(f"charn-ecf: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
