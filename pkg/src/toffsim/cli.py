"""Command-line experiment harness.

Every subcommand is a thin orchestration over the library: it resolves a
configuration (built-in defaults, then an optional JSON config file, then
flags), runs seeded trials, and emits a machine-readable report.  All
sampling uses counter-based per-trial substreams, so trial results are
independent of evaluation order and a run is reproducible bit-for-bit from
its seed; trials are reduced serially in trial order here, and the
substream design means a worker pool would produce the same report.

Reports are JSON by default (schema `toffsim-report/1`, keys sorted, one
wall_time_seconds field that reproducibility comparisons must ignore) or
CSV for the plot-ready trial tables.  Exit codes: 0 success, 1 for
configuration problems, 2 when --check is passed and a built-in
verification fails.  Column layouts are documented in docs/output-schema.md.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .concat import (
    CodeParams,
    progressive_schedule,
    standard_concat_levels,
)
from .core import QuantumState, apply_gate, fidelity, tensor
from .distill import (
    MixedAncilla,
    combine_states,
    distill_tree,
    expected_ops,
    fidelity_after_rounds,
    pair_supply,
    success_probability,
)
from .error_models import (
    BlockEnsemble,
    PauliChannel,
    UnitaryErrorSet,
    accumulated_flip_angle,
    alpha3_decoherent,
    ensemble_distill_fidelity,
    ensemble_log_tan,
    parity_bias,
)
from .gadgets import (
    DATA_LABELS,
    default_correction_table,
    ideal_toffoli_output,
    toffoli_gadget,
)
from .noisy_meas import (
    apply_bitwise_probe,
    cat_readout_distribution,
    eigenstring_state,
    eigenstring_weight,
    measure_cphase_noisy,
    prepare_even_cat,
    prepare_raw_ancilla,
)
from .rng import trial_rng

SCHEMA = "toffsim-report/1"

_BRANCHES = tuple(itertools.product((1, -1), (1, -1), (1, -1)))


def _branch_key(branch) -> str:
    return ",".join(f"{m:+d}" for m in branch)


def _parse_branch(text: str):
    parts = tuple(int(p) for p in text.split(","))
    if len(parts) != 3 or any(p not in (1, -1) for p in parts):
        raise ValueError("branch must be three comma-separated +1/-1 values")
    return parts


class _Check:
    """One named pass/fail verification inside a run."""

    def __init__(self):
        self.items: List[dict] = []

    def add(self, name: str, passed: bool, detail: str):
        self.items.append({"name": name, "passed": bool(passed), "detail": detail})

    @property
    def all_passed(self) -> bool:
        return all(item["passed"] for item in self.items)


# -- config plumbing -------------------------------------------------------------

_DEFAULTS = {
    "toffoli-verify": {
        "trials": 20,
        "tolerance": 1e-10,
        "corrupt_branch": None,
    },
    "distill": {
        "alpha3": 0.5,
        "levels": 3,
        "trials": 2000,
    },
    "noisy-meas": {
        "n": 8,
        "model": "decoherent",
        "mode": "effective",
        "p": 0.05,
        "q": 0.0,
        "ratio": 0.05,
        "trials": None,  # resolved: 20000 effective, 2000 exact
    },
    "ensemble": {
        "n": 50,
        "levels": 6,
        "model": "decoherent",
        "p": 0.01,
        "q": 0.0,
        "defect_fraction": None,  # resolved: 0.02 decoherent, 0.0 unitary
        "defect_p": 0.9,
        "distribution": "gaussian",
        "trials": 200,
        "k_max": 400,
    },
    "estimate": {
        "targets": [-9.0, -100.0],
        "physical_error_log10": -3.0,
        "gate_penalty": 2.0,
        "first_block": 1000,
        "block_size": 1000,
        "threshold_log10": -2.0,
        "scaling_exponent": None,  # None -> library default
        "prefactor_log10": 0.0,
        "strategies": ["progressive", "standard"],
    },
}


def _resolve_config(command: str, args) -> dict:
    cfg = dict(_DEFAULTS[command])
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(loaded)
    if args.trials is not None:
        if "trials" not in cfg:
            raise ValueError(f"{command} takes no --trials")
        cfg["trials"] = args.trials
    return cfg


def _random_data_state(rng: np.random.Generator) -> QuantumState:
    vec = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    return QuantumState.from_vector(DATA_LABELS, vec)


# -- subcommands -------------------------------------------------------------------

def _cmd_toffoli_verify(cfg: dict, seed: int):
    trials = int(cfg["trials"])
    tol = float(cfg["tolerance"])
    if trials < 1:
        raise ValueError("trials must be >= 1")
    corrupt = cfg["corrupt_branch"]
    if corrupt is not None:
        corrupt = _parse_branch(corrupt) if isinstance(corrupt, str) else tuple(corrupt)
    table = default_correction_table()
    if corrupt is not None:
        if corrupt not in _BRANCHES:
            raise ValueError("corrupt_branch must be a +1/-1 outcome triple")
        # prepending a stray X on the first data qubit breaks any branch
        table = table.replaced(corrupt, ("X_A",) + table[corrupt])

    inputs = [_random_data_state(trial_rng(seed, t)) for t in range(trials)]
    ideals = [ideal_toffoli_output(s) for s in inputs]
    branch_rows = []
    flagged = []
    worst = 1.0
    for branch in _BRANCHES:
        fids = []
        for inp, ideal in zip(inputs, ideals):
            res = toffoli_gadget(inp, postselect=branch, table=table)
            fids.append(fidelity(res.output, ideal))
        lo, mean = min(fids), sum(fids) / len(fids)
        worst = min(worst, lo)
        if lo < 1.0 - tol:
            flagged.append(_branch_key(branch))
        branch_rows.append({
            "branch": _branch_key(branch),
            "min_fidelity": lo,
            "mean_fidelity": mean,
            "corrections": list(table[branch]),
        })

    truth_passed = 0
    for i, bits in enumerate(itertools.product("01", repeat=3)):
        state = QuantumState.basis(DATA_LABELS, "".join(bits))
        res = toffoli_gadget(state, rng=trial_rng(seed, 100_000 + i))
        if fidelity(res.output, ideal_toffoli_output(state)) >= 1.0 - tol:
            truth_passed += 1

    results = {
        "branches": branch_rows,
        "worst_fidelity": worst,
        "flagged_branches": flagged,
        "truth_table_passed": truth_passed,
        "truth_table_total": 8,
    }
    checks = _Check()
    if corrupt is None:
        checks.add("branch fidelity", worst >= 1.0 - tol,
                   f"worst fidelity {worst!r} against tolerance {tol}")
        checks.add("truth table", truth_passed == 8, f"{truth_passed}/8 basis inputs")
    else:
        checks.add("negative control", flagged == [_branch_key(corrupt)],
                   f"flagged branches {flagged}, corrupted {_branch_key(corrupt)}")
    header = ("branch", "min_fidelity", "mean_fidelity", "corrections")
    rows = [(r["branch"], r["min_fidelity"], r["mean_fidelity"],
             " ".join(r["corrections"])) for r in branch_rows]
    return results, (header, rows), checks


def _cmd_distill(cfg: dict, seed: int):
    alpha3 = float(cfg["alpha3"])
    levels = int(cfg["levels"])
    trials = int(cfg["trials"])
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    raw = MixedAncilla.from_excess_weight(alpha3)

    trajectory = [alpha3 ** (2**k) for k in range(levels + 1)]
    formula = fidelity_after_rounds(alpha3, levels)

    # postselected circuit tree: combine 2^levels leaves pairwise
    states = [raw.to_state((f"x{i}", f"y{i}")) for i in range(2**levels)]
    while len(states) > 1:
        states = [combine_states(states[i], states[i + 1])[0]
                  for i in range(0, len(states), 2)]
    pair_target = QuantumState.from_vector(states[0].labels, [1.0, 1.0, 1.0, 0.0])
    circuit_fidelity = fidelity(states[0], pair_target)

    level_probs = []
    for k in range(levels):
        level_input = MixedAncilla.from_excess_weight(trajectory[k])
        level_probs.append(success_probability(level_input, level_input))
    # Wald chain: one top output needs 1/P attempts at the top level, each
    # attempt consumes two outputs of the level below, and so on down.
    needed = 1.0
    exp_attempts = exp_successes = 0.0
    for prob in reversed(level_probs):
        attempts_here = needed / prob
        exp_attempts += attempts_here
        exp_successes += needed
        needed = 2.0 * attempts_here
    expected_leaves = needed  # demand leaving the bottom level

    rows = []
    total_attempts = total_successes = total_leaves = 0
    for t in range(trials):
        out = distill_tree(pair_supply(raw), levels, rng=trial_rng(seed, t))
        total_attempts += out.combine_attempts
        total_successes += out.combine_successes
        total_leaves += out.leaves_used
        rows.append((t, out.combine_attempts, out.combine_successes, out.leaves_used))
    freq = total_successes / total_attempts if total_attempts else float("nan")
    # per-attempt Bernoulli spread; approximate since the attempt count is random
    freq_se = (math.sqrt(freq * (1.0 - freq) / total_attempts)
               if total_attempts else 0.0)
    expected_freq = exp_successes / exp_attempts if levels else float("nan")

    results = {
        "alpha3": alpha3,
        "levels": levels,
        "alpha_trajectory": trajectory,
        "fidelity_formula": formula,
        "fidelity_circuit": circuit_fidelity,
        "level_success_probabilities": level_probs,
        "sampled": {
            "trials": trials,
            "mean_combine_attempts": total_attempts / trials,
            "mean_leaves_used": total_leaves / trials,
            "expected_attempts": exp_attempts,
            "expected_leaves": expected_leaves,
            "success_frequency": freq,
            "success_frequency_expected": expected_freq,
            "success_frequency_se": freq_se,
        },
        "expected_ops_default_params": expected_ops(levels),
    }
    checks = _Check()
    checks.add("tree fidelity vs closed form",
               abs(circuit_fidelity - formula) <= 1e-10,
               f"circuit {circuit_fidelity!r} vs formula {formula!r}")
    if levels:
        gap = abs(freq - expected_freq)
        checks.add("combine success frequency", gap <= 4.0 * freq_se,
                   f"observed {freq:.6f}, expected {expected_freq:.6f}, "
                   f"4se {4 * freq_se:.6f}")
    return results, (("trial", "combine_attempts", "combine_successes",
                      "leaves_used"), rows), checks


def _eigenstring_exhaustive(n: int) -> Tuple[int, int]:
    """Check the parity-transfer identity on all 4^n eigenstrings; exact."""
    cat = prepare_even_cat(n)
    a_labels = tuple(f"a{i+1}" for i in range(n))
    b_labels = tuple(f"b{i+1}" for i in range(n))
    odd_cat = apply_gate(cat.state, "X", cat.state.labels[0])
    passed = total = 0
    for symbols in itertools.product("1234", repeat=n):
        x = "".join(symbols)
        pairs = eigenstring_state(x, a_labels, b_labels)
        joint = apply_bitwise_probe(pairs, a_labels, b_labels, prepare_even_cat(n))
        want_cat = odd_cat if eigenstring_weight(x) else cat.state
        expected = tensor(pairs, want_cat)
        total += 1
        if fidelity(joint, expected) >= 1.0 - 1e-12:
            passed += 1
    return passed, total


def _cmd_noisy_meas(cfg: dict, seed: int):
    n = int(cfg["n"])
    model = cfg["model"]
    mode = cfg["mode"]
    if model not in ("decoherent", "unitary"):
        raise ValueError("model must be 'decoherent' or 'unitary'")
    if mode not in ("exact", "effective"):
        raise ValueError("mode must be 'exact' or 'effective'")
    if model == "unitary" and mode != "exact":
        raise ValueError("the unitary model requires exact mode")
    trials = cfg["trials"]
    trials = (20_000 if mode == "effective" else 2_000) if trials is None else int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")

    if model == "decoherent":
        errors = PauliChannel.uniform(n, float(cfg["p"]), float(cfg["q"]))
    else:
        errors = UnitaryErrorSet.uniform_ratio(n, float(cfg["ratio"]))

    plus_plus = QuantumState.from_vector(("a", "b"), [1.0, 1.0, 1.0, 1.0])
    rows = []
    n_plus = n_minus_true_given_plus = 0
    corr_sum = 0.0
    corr_trials = 0
    alpha_readings = []
    for t in range(trials):
        res = measure_cphase_noisy(plus_plus, errors, mode=mode, rng=trial_rng(seed, t))
        reported = res.reported_outcome
        true = res.true_eigenvalue
        estimate: object = ""
        if model == "decoherent":
            corr_sum += reported * true
            corr_trials += 1
            if reported == +1:
                n_plus += 1
                n_minus_true_given_plus += true == -1
                f_run = n_minus_true_given_plus / n_plus
                if f_run < 1.0:
                    estimate = 3.0 * f_run / (1.0 - f_run)
        elif reported == +1:
            reading, _ = MixedAncilla.from_state(res.logical_state)
            estimate = float(complex(reading.a3).real)
            alpha_readings.append(estimate)
        rows.append((t, n, model, reported, "" if true is None else true, estimate))

    results = {
        "n": n,
        "model": model,
        "mode": mode,
        "trials": trials,
        "reported_plus_frequency": n_plus / trials if model == "decoherent" else
            sum(1 for r in rows if r[3] == 1) / trials,
    }
    checks = _Check()
    if model == "decoherent":
        bias = parity_bias(errors)
        alpha = alpha3_decoherent(errors)
        f = n_minus_true_given_plus / n_plus if n_plus else float("nan")
        se_f = math.sqrt(f * (1.0 - f) / n_plus) if n_plus else float("inf")
        est = 3.0 * f / (1.0 - f)
        se_est = 3.0 * se_f / (1.0 - f) ** 2
        corr = corr_sum / corr_trials
        se_corr = math.sqrt(max(1.0 - bias * bias, 0.0) / corr_trials)
        results.update({
            "alpha3_estimate": est,
            "alpha3_estimate_se": se_est,
            "alpha3_formula": alpha.value,
            "mean_reported_times_true": corr,
            "parity_bias": bias,
        })
        checks.add("alpha3 Monte Carlo vs closed form",
                   abs(est - alpha.value) <= 4.0 * se_est,
                   f"estimate {est:.5f} +- {se_est:.5f}, formula {alpha.value:.5f}")
        checks.add("reported-true correlation vs parity bias",
                   abs(corr - bias) <= 4.0 * se_corr,
                   f"mean {corr:.5f} vs bias {bias:.5f} (4se {4 * se_corr:.5f})")
    else:
        sigma = accumulated_flip_angle(errors)
        tan2 = math.tan(sigma) ** 2
        spread = max(abs(a - tan2) for a in alpha_readings) if alpha_readings else 0.0
        results.update({
            "flip_angle": sigma,
            "tan_squared": tan2,
            "alpha3_readings_max_deviation": spread,
        })
        checks.add("coherent contamination reading",
                   bool(alpha_readings) and spread <= 1e-9,
                   f"max |a3 - tan^2 sigma| = {spread!r} over {len(alpha_readings)} runs")

    if mode == "exact" and n <= 3:
        passed, total = _eigenstring_exhaustive(n)
        results["eigenstring_checks"] = {"passed": passed, "total": total}
        checks.add("eigenstring parity transfer", passed == total,
                   f"{passed}/{total} strings")

    raw = prepare_raw_ancilla(errors, mode=mode, rng=trial_rng(seed, trials))
    results["raw_preparation"] = {
        "attempts": raw.attempts,
        "alpha3_reading": float(complex(raw.alpha.a3).real),
    }
    header = ("trial", "n", "model", "reported", "true", "alpha3_estimate")
    return results, (header, rows), checks


def _cmd_ensemble(cfg: dict, seed: int):
    trials = int(cfg["trials"])
    k_max = int(cfg["k_max"])
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ens_keys = {k: cfg[k] for k in
                ("n", "levels", "model", "p", "q", "defect_fraction", "defect_p",
                 "distribution")}
    if ens_keys["defect_fraction"] is None:
        ens_keys["defect_fraction"] = 0.02 if cfg["model"] == "decoherent" else 0.0
    ensemble = BlockEnsemble(seed=seed, **ens_keys)
    checks = _Check()

    if ensemble.model == "decoherent":
        empirical = np.empty(trials)
        log_contamination = np.empty(trials)
        sampled_analytic = np.empty(trials)
        rows = []
        for t in range(trials):
            fid = ensemble_distill_fidelity(ensemble, rng=trial_rng(seed, t))
            empirical[t] = fid.empirical
            log_contamination[t] = math.log(fid.alpha_product)
            sampled_analytic[t] = fid.analytic
            rows.append((t, fid.empirical, log_contamination[t], fid.analytic))
        marginal = ensemble_distill_fidelity(ensemble,
                                             rng=trial_rng(seed, 0)).analytic_marginal
        mean = float(empirical.mean())
        se = float(empirical.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        log_mean = float(log_contamination.mean())
        log_se = (float(log_contamination.std(ddof=1) / math.sqrt(trials))
                  if trials > 1 else 0.0)
        log_expected = ensemble.block_count * ensemble.expected_log_alpha3()
        median = float(np.median(empirical))
        typical = 3.0 / (3.0 + math.exp(log_expected))
        results = {
            "model": "decoherent",
            "trials": trials,
            "blocks_per_cascade": ensemble.block_count,
            "empirical_mean": mean,
            "empirical_se": se,
            "empirical_median": median,
            "log_contamination_mean": log_mean,
            "log_contamination_se": log_se,
            "log_contamination_expected": log_expected,
            "typical_fidelity_predicted": typical,
            "analytic_marginal": marginal,
            "analytic_sampled_mean": float(sampled_analytic.mean()),
            "mean_flip_probability": ensemble.mean_flip_probability(),
        }
        # summed log-contamination concentrates, so a plain 4-sigma gate is sound
        checks.add("log contamination vs exact expectation",
                   abs(log_mean - log_expected) <= max(4.0 * log_se, 1e-9),
                   f"mean {log_mean:.4f} vs expected {log_expected:.4f} "
                   f"(4se {4 * log_se:.4f})")
        # the fidelity prediction is typical-case: compare infidelity decades
        med_decades = math.log10(max(1.0 - median, 1e-300))
        typ_decades = math.log10(max(1.0 - typical, 1e-300))
        checks.add("median fidelity vs typical prediction",
                   abs(med_decades - typ_decades) <= 0.5,
                   f"median infidelity 1e{med_decades:.2f}, "
                   f"predicted 1e{typ_decades:.2f}")
        header = ("trial", "empirical_fidelity", "log_contamination",
                  "analytic_sampled")
        return results, (header, rows), checks

    est = ensemble_log_tan(ensemble, trials=trials, rng=trial_rng(seed, 0),
                           k_max=k_max)
    results = {
        "model": "unitary",
        "distribution": ensemble.distribution,
        "trials": trials,
        "p_times_n": ensemble.p * ensemble.n,
        "monte_carlo": est.monte_carlo,
        "monte_carlo_se": est.standard_error,
        "series": est.series,
        "closed_form": est.closed_form,
        "bound": est.bound,
        "series_terms": est.series_terms,
    }
    ok_sc = abs(est.series - est.closed_form) <= 0.2 * abs(est.closed_form)
    ok_mc = abs(est.monte_carlo - est.series) <= max(0.2 * abs(est.series),
                                                     4.0 * est.standard_error)
    ok_bound = est.monte_carlo <= est.bound + 4.0 * est.standard_error
    checks.add("series vs closed form", ok_sc,
               f"series {est.series:.6g}, closed {est.closed_form:.6g}")
    checks.add("Monte Carlo vs series", ok_mc,
               f"mc {est.monte_carlo:.6g} +- {est.standard_error:.2g}")
    checks.add("below coarse bound", ok_bound,
               f"mc {est.monte_carlo:.6g} vs bound {est.bound:.6g}")
    rows = [("monte_carlo", est.monte_carlo), ("monte_carlo_se", est.standard_error),
            ("series", est.series), ("closed_form", est.closed_form),
            ("bound", est.bound)]
    return results, (("method", "value"), rows), checks


def _cmd_estimate(cfg: dict, seed: int):
    del seed  # deterministic command; seed is echoed in the report envelope
    params_kwargs = {
        "threshold_log10": float(cfg["threshold_log10"]),
        "prefactor_log10": float(cfg["prefactor_log10"]),
    }
    if cfg["scaling_exponent"] is not None:
        params_kwargs["scaling_exponent"] = float(cfg["scaling_exponent"])
    params = CodeParams(**params_kwargs)
    strategies = list(cfg["strategies"])
    unknown = set(strategies) - {"progressive", "standard"}
    if unknown:
        raise ValueError(f"unknown strategies: {sorted(unknown)}")
    targets = [float(t) for t in cfg["targets"]]
    if not targets:
        raise ValueError("at least one target required")

    rows = []
    out_targets = []
    for target in targets:
        entry = {"target_log10": target}
        for strategy in strategies:
            fn = progressive_schedule if strategy == "progressive" else standard_concat_levels
            kwargs = dict(params=params,
                          physical_error_log10=float(cfg["physical_error_log10"]),
                          gate_penalty=float(cfg["gate_penalty"]))
            if strategy == "progressive":
                kwargs["first_block"] = int(cfg["first_block"])
            else:
                kwargs["block_size"] = int(cfg["block_size"])
            try:
                schedule = fn(target, **kwargs)
            except ValueError as exc:
                entry[strategy] = {"error": str(exc)}
                continue
            entry[strategy] = {
                "depth": schedule.depth,
                "achieved": schedule.achieved,
                "levels": [
                    {"level": lv.level, "block_size": lv.block_size,
                     "failure_log10": lv.failure_log10,
                     "gate_failure_log10": lv.gate_failure_log10}
                    for lv in schedule.levels
                ],
            }
            for lv in schedule.levels:
                rows.append((strategy, target, lv.level, lv.block_size,
                             lv.failure_log10, lv.gate_failure_log10))
        out_targets.append(entry)

    results = {"targets": out_targets}
    checks = _Check()
    prog_by_target = {e["target_log10"]: e.get("progressive") for e in out_targets}
    one = prog_by_target.get(-9.0)
    if one and "error" not in one:
        exp1 = one["levels"][0]["failure_log10"]
        checks.add("single-level exponent", one["depth"] == 1 and -10.0 <= exp1 <= -8.0,
                   f"depth {one['depth']}, exponent {exp1!r}")
    two = prog_by_target.get(-100.0)
    if two and "error" not in two:
        expf = two["levels"][-1]["failure_log10"]
        checks.add("two-level exponent", two["depth"] == 2 and -850.0 <= expf <= -810.0,
                   f"depth {two['depth']}, exponent {expf!r}")
    header = ("strategy", "target_log10", "level", "block_size",
              "failure_log10", "gate_failure_log10")
    return results, (header, rows), checks


_COMMANDS = {
    "toffoli-verify": _cmd_toffoli_verify,
    "distill": _cmd_distill,
    "noisy-meas": _cmd_noisy_meas,
    "ensemble": _cmd_ensemble,
    "estimate": _cmd_estimate,
}


# -- entry point --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit 1 (config error), not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toffsim",
                     description="Seeded experiments on measurement-based Toffoli "
                                 "gates, ancilla purification, and noisy parity "
                                 "readout.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("toffoli-verify", "branch-complete gadget equivalence against a direct Toffoli"),
        ("distill", "pair-ancilla purification trees, closed forms vs sampling"),
        ("noisy-meas", "noisy cat-block parity measurement statistics"),
        ("ensemble", "block-ensemble fidelity or log-tangent statistics"),
        ("estimate", "log-space concatenation schedules"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--trials", type=int, default=None,
                       help="override the trial count")
        p.add_argument("--out", metavar="PATH", help="write the report here "
                                                     "(default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--check", action="store_true",
                       help="exit 2 unless all built-in verifications pass")
        if name == "toffoli-verify":
            p.add_argument("--corrupt-branch", metavar="M1,M2,M3", default=None,
                           help="negative control: corrupt this branch's correction")
    return parser


def _render_csv(header: Sequence[str], rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.seed < 0:
        print("toffsim: error: seed must be >= 0", file=sys.stderr)
        return 1

    try:
        cfg = _resolve_config(args.command, args)
        if args.command == "toffoli-verify" and args.corrupt_branch is not None:
            cfg["corrupt_branch"] = args.corrupt_branch
        started = time.perf_counter()
        results, table, checks = _COMMANDS[args.command](cfg, args.seed)
        elapsed = time.perf_counter() - started
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"toffsim: error: {exc}", file=sys.stderr)
        return 1

    if args.format == "csv":
        text = _render_csv(*table)
    else:
        report = {
            "schema": SCHEMA,
            "command": args.command,
            "seed": args.seed,
            "parameters": cfg,
            "results": results,
            "checks": checks.items,
            "versions": {
                "toffsim": __version__,
                "numpy": np.__version__,
                "kernel_backend": BACKEND,
            },
            "wall_time_seconds": elapsed,
        }
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    if args.check and not checks.all_passed:
        for item in checks.items:
            if not item["passed"]:
                print(f"toffsim: check failed: {item['name']}: {item['detail']}",
                      file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
