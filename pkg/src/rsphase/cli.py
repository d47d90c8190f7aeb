"""Command-line interface: curve emission, threshold reports, and sweeps.

Every subcommand writes CSV/JSON artifacts with a reproducibility header
(seed, version, config hash) and produces byte-identical bodies when re-run
with the same configuration.  Floats are printed with 17 significant digits,
comma delimiter, LF line endings.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, amp, channel, potential, thresholds
from .prior import prior_from_spec, two_point, two_point_entropy

MODES = ("channel", "potential", "thresholds", "phase", "amp", "figure1",
         "figure2", "selftest")


class SpecError(ValueError):
    """Configuration failed validation; the message names the field."""


def _fmt(x) -> str:
    return f"{float(x):.17g}"


@dataclass
class SweepSpec:
    """Validated description of one CLI job."""

    mode: str
    out: str = "."
    seed: int = 0
    jobs: int = 1
    prior: dict | None = None
    epsilons: list = field(default_factory=list)
    snrs: list = field(default_factory=list)
    rs: list = field(default_factory=list)
    kinds: list = field(default_factory=lambda: ["mmse", "amp"])
    delta: float | None = None
    snr: float | None = None
    epsilon: float | None = None
    p: int | None = None
    sigma2: float | None = None
    n_seeds: int | None = None
    t_max: int = 50
    s_min: float = 1e-3
    s_max: float = 50.0
    s_points: int = 200
    t_min: float = 0.02
    t_max_grid: float = 3.0
    t_points: int = 150

    def content_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k not in ("out", "jobs")}
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.content_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def resolve_prior(self):
        if self.prior is not None:
            return prior_from_spec(self.prior)
        if self.epsilon is not None:
            return two_point(self.epsilon)
        raise SpecError("prior: either a prior spec or an epsilon is required")

    def validate(self):
        if self.mode not in MODES:
            raise SpecError(f"mode: unknown mode {self.mode!r}")
        if self.jobs < 1:
            raise SpecError(f"jobs: must be >= 1, got {self.jobs}")
        grids = {"epsilons": self.epsilons, "snrs": self.snrs, "rs": self.rs}
        if self.mode == "phase":
            for name in ("epsilons", "snrs", "rs"):
                if not grids[name]:
                    raise SpecError(f"{name}: phase mode requires a non-empty grid")
            for e in self.epsilons:
                if not 0.0 < e < 1.0:
                    raise SpecError(f"epsilons: value {e!r} outside (0, 1)")
            for v in self.snrs:
                if not v > 0.0:
                    raise SpecError(f"snrs: value {v!r} must be positive")
            for k in self.kinds:
                if k not in ("mmse", "amp"):
                    raise SpecError(f"kinds: {k!r} is not 'mmse' or 'amp'")
            if not self.kinds:
                raise SpecError("kinds: phase mode requires at least one kind")
        if self.mode == "figure1" and not self.epsilons:
            raise SpecError("epsilons: figure1 mode requires a non-empty list")
        if self.mode == "figure2":
            if not self.rs:
                raise SpecError("rs: figure2 mode requires a non-empty list")
            if self.snr is None:
                raise SpecError("snr: figure2 mode requires a value")
            if self.epsilon is None:
                raise SpecError("epsilon: figure2 mode requires a value (0 for the limit)")
        if self.mode == "channel" and self.prior is None and self.epsilon is None:
            raise SpecError("prior: channel mode requires a prior spec or epsilon")
        if self.mode == "potential":
            if self.delta is None or self.snr is None:
                raise SpecError("delta/snr: potential mode requires both")
            if self.prior is None and self.epsilon is None:
                raise SpecError("prior: potential mode requires a prior spec or epsilon")
        if self.mode == "thresholds":
            if self.epsilon is None:
                raise SpecError("epsilon: thresholds mode requires a value")
            if self.snr is None and (self.p is None or self.sigma2 is None):
                raise SpecError("snr: thresholds mode requires snr or (p, sigma2)")
        if self.mode == "amp":
            if self.p is None:
                raise SpecError("p: amp mode requires the signal dimension")
            if self.n_seeds is None or self.n_seeds < 1:
                raise SpecError("n_seeds: amp mode requires at least one seed")
            if self.delta is None or self.snr is None:
                raise SpecError("delta/snr: amp mode requires both")
            if self.prior is None and self.epsilon is None:
                raise SpecError("prior: amp mode requires a prior spec or epsilon")
        if self.s_points < 2 or self.t_points < 2:
            raise SpecError("grid: s_points and t_points must be >= 2")
        if not (0 < self.s_min < self.s_max):
            raise SpecError("grid: need 0 < s_min < s_max")
        if not (0 < self.t_min < self.t_max_grid):
            raise SpecError("grid: need 0 < t_min < t_max_grid")
        return self


def _header(spec: SweepSpec, columns: str) -> list:
    return [
        f"# rsphase {__version__}",
        f"# mode={spec.mode} seed={spec.seed}",
        f"# config_sha256={spec.config_hash()}",
        f"# columns: {columns}",
    ]


def _write_csv(path: str, comment_lines: list, header_row: list, rows: list,
               trailing_comments: list = ()):
    buf = io.StringIO()
    for line in comment_lines:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header_row)
    for row in rows:
        writer.writerow(row)
    for line in trailing_comments:
        buf.write(line + "\n")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _run_channel(spec: SweepSpec) -> list:
    prior = spec.resolve_prior()
    s_grid = np.geomspace(spec.s_min, spec.s_max, spec.s_points)
    curve = channel.channel_curve(prior, s_grid)
    rows = [[_fmt(s), _fmt(i), _fmt(m), curve.mode]
            for s, i, m in zip(curve.s_grid, curve.i_values, curve.m_values)]
    path = os.path.join(spec.out, "channel.csv")
    _write_csv(path, _header(spec, "s,i_nats,mmse,mode"),
               ["s", "i_nats", "mmse", "mode"], rows)
    return [path]


def _run_potential(spec: SweepSpec) -> list:
    prior = spec.resolve_prior()
    land = potential.minimize(spec.delta, spec.snr, prior)
    lo, hi = land.bracket
    s_grid = np.geomspace(lo * (1 - potential.BRACKET_PAD),
                          hi * (1 + potential.BRACKET_PAD), spec.s_points)
    rows = []
    for s in s_grid:
        f_val = potential.potential(spec.delta, spec.snr, prior, s)
        fp_val = potential.potential_deriv(spec.delta, spec.snr, prior, s)
        rows.append([_fmt(s), _fmt(f_val), _fmt(fp_val)])
    summary = ("# summary: f_star=" + _fmt(land.f_star)
               + " s_lower_star=" + _fmt(land.s_lower_star)
               + " s_upper_star=" + _fmt(land.s_upper_star)
               + " s_amp=" + _fmt(land.s_amp)
               + " multi_minima=" + str(land.multi_minima).lower())
    path = os.path.join(spec.out, "potential.csv")
    _write_csv(path, _header(spec, "s,F,Fprime"), ["s", "F", "Fprime"], rows,
               trailing_comments=[summary])
    return [path]


def _run_thresholds(spec: SweepSpec) -> list:
    rep = thresholds.report(spec.epsilon, spec.snr, p=spec.p, sigma2=spec.sigma2)
    d = rep.as_dict()
    path = os.path.join(spec.out, "thresholds.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(d, fh, sort_keys=True, indent=2)
        fh.write("\n")
    width = max(len(k) for k in d)
    lines = [f"{k.ljust(width)}  {_fmt(v)}" for k, v in sorted(d.items())]
    text = "\n".join(lines)
    print(text)
    txt_path = os.path.join(spec.out, "thresholds.txt")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return [path, txt_path]


def _phase_cell(cell):
    eps, snr, r, kind = cell
    try:
        value = thresholds.transition_check(eps, snr, r, kind)
        return _fmt(value), ""
    except Exception as exc:                      # cell failures are non-fatal
        return "", f"{type(exc).__name__}: {exc}"


def _run_phase(spec: SweepSpec) -> list:
    cells = [(e, v, r, k) for e in spec.epsilons for v in spec.snrs
             for r in spec.rs for k in spec.kinds]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_phase_cell, cells, chunksize=1))
    else:
        results = [_phase_cell(c) for c in cells]
    rows = []
    for (eps, snr, r, kind), (value, err) in zip(cells, results):
        rows.append([_fmt(eps), _fmt(snr), _fmt(r), kind, value, err])
    path = os.path.join(spec.out, "phase.csv")
    _write_csv(path, _header(spec, "epsilon,snr,r,kind,m_value,error"),
               ["epsilon", "snr", "r", "kind", "m_value", "error"], rows)
    return [path]


def _run_amp(spec: SweepSpec) -> list:
    prior = spec.resolve_prior()
    p = spec.p
    n = max(1, round(spec.delta * p))
    sigma2 = p / spec.snr
    delta_real = n / p
    s_amp = potential.smallest_stationary(delta_real, spec.snr, prior)
    m_star, _ = channel.mmse_eval(prior, s_amp)
    rows = []
    finals = []
    for k in range(spec.n_seeds):
        seed = spec.seed + k
        inst = amp.generate(prior, n, p, sigma2, seed)
        trace = amp.run_amp(inst, prior, t_max=spec.t_max)
        for t in range(trace.iterations + 1):
            rows.append([str(seed), str(t), _fmt(trace.mse[t]),
                         _fmt(trace.se_mse[t]), _fmt(trace.residual_var[t])])
        finals.append(float(trace.mse[-1]))
    path = os.path.join(spec.out, "amp.csv")
    _write_csv(path, _header(spec, "seed,t,mse_empirical,mse_se_predicted,tau2"),
               ["seed", "t", "mse_empirical", "mse_se_predicted", "tau2"], rows)
    summary = {
        "p": p,
        "n": n,
        "delta": delta_real,
        "snr": spec.snr,
        "sigma2": sigma2,
        "n_seeds": spec.n_seeds,
        "t_max": spec.t_max,
        "base_seed": spec.seed,
        "s_amp": s_amp,
        "mse_predicted": m_star,
        "mse_final_mean": float(np.mean(finals)),
        "mse_final_per_seed": finals,
        "abs_gap_to_prediction": abs(float(np.mean(finals)) - m_star),
        "config_sha256": spec.config_hash(),
    }
    sum_path = os.path.join(spec.out, "amp_summary.json")
    with open(sum_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return [path, sum_path]


def _run_figure1(spec: SweepSpec) -> list:
    t_grid = np.linspace(spec.t_min, spec.t_max_grid, spec.t_points)
    rows = []
    for eps in spec.epsilons:
        h = two_point_entropy(eps)
        prior = two_point(eps)
        s_vals = 2.0 * h * t_grid
        i_vals, _ = channel.mutual_info_eval_curve(prior, s_vals)
        m_vals, _ = channel.mmse_eval_curve(prior, s_vals)
        for t, i_val, m_val in zip(t_grid, i_vals, m_vals):
            rows.append([_fmt(eps), _fmt(t), _fmt(i_val / h), _fmt(m_val)])
    path = os.path.join(spec.out, "figure1.csv")
    _write_csv(path, _header(spec, "epsilon,t,i_norm,m_value"),
               ["epsilon", "t", "i_norm", "m_value"], rows)
    return [path]


def _run_figure2(spec: SweepSpec) -> list:
    t_grid = np.linspace(spec.t_min, spec.t_max_grid, spec.t_points)
    eps = spec.epsilon
    rows = []
    for r in spec.rs:
        if eps == 0.0:
            vals = potential.limit_potential(r, spec.snr, t_grid)
            mode = "limit"
        else:
            vals = potential.normalized_curve(eps, r, spec.snr, t_grid)
            mode = (channel.MODE_APPROX if eps < channel.APPROX_EPSILON
                    else channel.MODE_QUADRATURE)
        for t, v in zip(t_grid, vals):
            rows.append([_fmt(t), _fmt(v), _fmt(r), mode])
    path = os.path.join(spec.out, "figure2.csv")
    _write_csv(path, _header(spec, "t,F_norm,r,mode"),
               ["t", "F_norm", "r", "mode"], rows)
    return [path]


def _selftest_checks():
    from .prior import DiscretePrior, entropy, sample

    eps = 0.1
    prior = two_point(eps)
    h = entropy(prior)

    def check_moments():
        for e in (0.5, 0.1, 1e-4, 1e-8):
            pr = two_point(e)
            w, a = pr.weight_array, pr.atom_array
            assert abs(float(w @ a)) <= 1e-10
            assert abs(float(w @ (a * a)) - 1.0) <= 1e-10
        return "two-point moments standardized"

    def check_i_mmse():
        for s in (0.3, 3.0):
            hstep = 1e-4 * max(s, 1.0)
            lhs = (channel.mutual_info(prior, s + hstep)
                   - channel.mutual_info(prior, s - hstep)) / (2 * hstep)
            rhs = 0.5 * channel.mmse(prior, s)
            assert abs(lhs - rhs) <= 1e-5, f"I'(s) vs M/2 gap {abs(lhs - rhs):.2e}"
        return "information derivative matches half the MMSE"

    def check_bounds():
        big_l = thresholds.l_constant(prior)
        for s in (0.05, 0.5, 2.0, 8.0):
            m = channel.mmse(prior, s)
            i = channel.mutual_info(prior, s)
            assert m <= 1.0 / (1.0 + s) + 1e-9
            assert i <= min(0.5 * math.log1p(s), h) + 1e-9
            assert i >= min(0.5 * s, h) - big_l - 1e-9
        return "channel bound suite holds"

    def check_threshold_identity():
        for snr in (0.3, 1.0, 12.0):
            lhs = thresholds.delta_amp(h, snr) / thresholds.delta_mmse(h, snr)
            assert abs(lhs - thresholds.r_amp(snr)) <= 1e-10
            assert thresholds.r_amp(snr) > 1.0
        return "threshold ratio identity holds"

    def check_se_fixed_point():
        delta = 1.3 * thresholds.delta_amp(h, 8.0)
        s_limit, _ = amp.state_evolution(prior, delta, 8.0, tol=1e-9)
        s_station = potential.smallest_stationary(delta, 8.0, prior)
        assert abs(s_limit - s_station) <= 1e-6 * s_station
        return "state evolution reaches the smallest stationary point"

    def check_q_approx():
        e = 1e-6
        s0 = 2.0 * e * math.log(1.0 / e)
        grid = np.geomspace(0.1 * s0, 10.0 * s0, 50)
        pr = two_point(e)
        gap = max(abs(channel.mmse(pr, s) - channel.mmse_q_approx(e, s)) for s in grid)
        assert gap <= 0.05, f"sup gap {gap:.3f}"
        return "tail surrogate tracks the sparse MMSE"

    def check_sampling():
        draws = sample(prior, 200_000, seed=7)
        assert abs(float(np.mean(draws))) <= 4.0 / math.sqrt(200_000)
        assert np.array_equal(draws, sample(prior, 200_000, seed=7))
        return "prior sampling is standardized and deterministic"

    return [check_moments, check_i_mmse, check_bounds, check_threshold_identity,
            check_se_fixed_point, check_q_approx, check_sampling]


def _run_selftest(spec: SweepSpec) -> list:
    failures = 0
    for fn in _selftest_checks():
        try:
            msg = fn()
            print(f"PASS {fn.__name__}: {msg}")
        except AssertionError as exc:
            failures += 1
            print(f"FAIL {fn.__name__}: {exc}")
        except Exception as exc:
            failures += 1
            print(f"FAIL {fn.__name__}: {type(exc).__name__}: {exc}")
    if failures:
        raise SystemExit(1)
    return []


_RUNNERS = {
    "channel": _run_channel,
    "potential": _run_potential,
    "thresholds": _run_thresholds,
    "phase": _run_phase,
    "amp": _run_amp,
    "figure1": _run_figure1,
    "figure2": _run_figure2,
    "selftest": _run_selftest,
}


def run(spec: SweepSpec) -> list:
    """Validate a spec, execute it, and return the paths written."""
    spec.validate()
    if spec.mode != "selftest":
        os.makedirs(spec.out, exist_ok=True)
    return _RUNNERS[spec.mode](spec)


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from exc


def _str_list(text: str) -> list:
    return [v.strip() for v in text.split(",") if v.strip() != ""]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsphase",
        description="Replica-symmetric channel curves, potential minimizers, "
                    "phase-transition thresholds, and AMP experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="mode", required=True)

    # All defaults are None so that values from --config are only overridden
    # by flags the user actually typed; SweepSpec carries the real defaults.
    def common(sp):
        sp.add_argument("--config", help="JSON file with spec fields (flags override)")
        sp.add_argument("--out", help="output directory (default: .)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int)

    sp = sub.add_parser("channel", help="emit (s, I, M) curve for one prior")
    common(sp)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--s-min", type=float)
    sp.add_argument("--s-max", type=float)
    sp.add_argument("--points", type=int)

    sp = sub.add_parser("potential", help="emit the potential, its derivative, and minimizers")
    common(sp)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--snr", type=float)
    sp.add_argument("--points", type=int)

    sp = sub.add_parser("thresholds", help="print and write a threshold report")
    common(sp)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--snr", type=float)
    sp.add_argument("--p", type=int)
    sp.add_argument("--sigma2", type=float)

    sp = sub.add_parser("phase", help="sweep transition checks over (epsilon, snr, r)")
    common(sp)
    sp.add_argument("--epsilons", type=_float_list)
    sp.add_argument("--snrs", type=_float_list)
    sp.add_argument("--rs", type=_float_list)
    sp.add_argument("--kinds", type=_str_list)

    sp = sub.add_parser("amp", help="run AMP on synthetic instances across seeds")
    common(sp)
    sp.add_argument("--p", type=int)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--snr", type=float)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--seeds", type=int, help="number of seeds")
    sp.add_argument("--t-max", type=int)

    sp = sub.add_parser("figure1", help="normalized channel curves for an epsilon list")
    common(sp)
    sp.add_argument("--epsilons", type=_float_list)
    sp.add_argument("--t-min", type=float)
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--points", type=int)

    sp = sub.add_parser("figure2", help="normalized potential curves for an r list")
    common(sp)
    sp.add_argument("--epsilon", type=float, help="0 selects the limit curve")
    sp.add_argument("--snr", type=float)
    sp.add_argument("--rs", type=_float_list)
    sp.add_argument("--t-min", type=float)
    sp.add_argument("--t-max", type=float)
    sp.add_argument("--points", type=int)

    sp = sub.add_parser("selftest", help="run the quick property battery")
    common(sp)
    return parser


def _spec_from_args(args) -> SweepSpec:
    base = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
        if not isinstance(base, dict):
            raise SpecError("config: top level must be a JSON object")
    spec = SweepSpec(mode=args.mode)
    for key, value in base.items():
        if not hasattr(spec, key):
            raise SpecError(f"config: unknown field {key!r}")
        setattr(spec, key, value)
    spec.mode = args.mode

    def take(attr, spec_field=None):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(spec, spec_field or attr, value)

    for attr in ("out", "seed", "jobs", "epsilon", "delta", "snr", "p", "sigma2"):
        take(attr)
    take("epsilons")
    take("snrs")
    take("rs")
    take("kinds")
    take("seeds", "n_seeds")
    take("s_min")
    take("s_max")
    if args.mode == "amp":
        take("t_max")
    if args.mode in ("channel", "potential"):
        take("points", "s_points")
    if args.mode in ("figure1", "figure2"):
        take("points", "t_points")
        take("t_min")
        take("t_max", "t_max_grid")
    if (args.mode == "figure2" and getattr(args, "t_max", None) is None
            and "t_max_grid" not in base):
        spec.t_max_grid = 6.0   # wide enough to show the upper-branch minima
    return spec


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = _spec_from_args(args)
        paths = run(spec)
    except SpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
