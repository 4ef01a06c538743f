"""``lowbmm`` command line: simulate | fit | estimate-alpha | summarize | evaluate | bench.

Machine-readable results go to files (or standard output); progress and
diagnostics go to standard error.  Exit codes: 0 success, 1 internal error,
2 usage or configuration error, 3 invalid input data, 4 file-system error,
5 computation error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict

import jsonschema

from . import io as lio
from .alpha import estimate_alpha
from .bench import METRICS, run_benchmark
from .config import ConfigFileError, ExperimentConfig, load_config, override, scenario_from_mapping
from .datagen import apply_noise_swaps, gen_rank_consistency, gen_top_rank
from .metrics import evaluate
from .postprocess import (
    EmptySamplesError,
    heatplot_table,
    posterior_point_estimates,
    selection_frequencies,
    top_probability_selection,
    topk_inclusion_probabilities,
    trace_table,
    violin_table,
)
from .sampler import ConfigError, SamplerConfig, run_chains
from .seeding import derive_seed

log = logging.getLogger("lowbmm")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_INPUT, EXIT_IO, EXIT_COMPUTE = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _resolve_seed(cfg: ExperimentConfig) -> int:
    if cfg.seed is None:
        cfg.seed = derive_seed(None)
        log.info("no seed given; using %d", cfg.seed)
    return cfg.seed


# --------------------------------------------------------------------------
# commands


def cmd_simulate(args, cfg: ExperimentConfig) -> int:
    sim = override(cfg.simulate, generator=args.generator, n=args.n, n_star=args.n_star, N=args.N,
                   alpha=args.alpha, noise_levels=args.noise_levels, noise_fraction=args.noise_fraction)
    seed = _resolve_seed(cfg)
    gen = gen_top_rank if sim.generator == "top_rank" else gen_rank_consistency
    ds, truth = gen(sim.n, sim.n_star, sim.N, sim.alpha, seed=derive_seed(seed, 0))
    if sim.noise_levels:
        ds = apply_noise_swaps(ds, truth, sim.noise_levels, sim.noise_fraction, seed=derive_seed(seed, 1))
    ds.provenance = {**asdict(sim), "seed": seed}
    lio.write_dataset(args.out, ds)
    lio.write_truth(args.truth, truth, ds)
    log.info("wrote %d x %d rankings to %s", ds.N, ds.n, args.out)
    return EXIT_OK


def cmd_fit(args, cfg: ExperimentConfig) -> int:
    fit = override(cfg.fit, alpha=args.alpha, n_star=args.n_star, iterations=args.iterations,
                   swap_L=args.swap_L, leap_l=args.leap_l, burn_in=args.burn_in, thin=args.thin,
                   progress_every=args.progress_every, from_scores=args.from_scores or None)
    if fit.alpha is None or fit.n_star is None:
        raise UsageError("fit needs --alpha and --n-star (or fit.alpha / fit.n_star in the config)")
    seed = _resolve_seed(cfg)
    ds = lio.read_dataset(args.data, from_scores=fit.from_scores)
    scfg = SamplerConfig(alpha=float(fit.alpha), n_star=fit.n_star, iterations=fit.iterations,
                         swap_L=fit.swap_L, leap_l=fit.leap_l, burn_in=fit.burn_in, thin=fit.thin,
                         seed=seed)
    scfg.resolved().validate(ds.n)
    t0 = time.perf_counter()
    samples = run_chains(ds.rows, scfg, chains=cfg.chains, workers=cfg.threads,
                         progress_every=fit.progress_every)
    log.info("%d chain(s), %d stored draws in %.2f s; acceptance rho %.3f, set %.3f", cfg.chains,
             len(samples), time.perf_counter() - t0, samples.acceptance_rho, samples.acceptance_aset)
    lio.write_draws(args.draws, samples, ds.item_ids)
    if args.summary:
        _write_summary(args.summary, samples, ds.item_ids, cfg.summarize)
    return EXIT_OK


def _write_summary(path, samples, item_ids, opts):
    summary = posterior_point_estimates(samples, opts.k)
    top = None
    if opts.K is not None:
        if opts.K > samples.n_star:
            raise UsageError(f"K must be <= n* = {samples.n_star}")
        picked = top_probability_selection(samples, opts.K, opts.c, summary)
        probs = topk_inclusion_probabilities(samples, opts.K)
        top = {"K": opts.K, "c": opts.c, "items": [item_ids[i] for i in picked],
               "probabilities": {item_ids[i]: float(probs[i]) for i in summary.ordering()}}
        log.info("top selection: %d of %d items with P(top-%d) > %g", len(picked), samples.n_star, opts.K, opts.c)
    doc = lio.summary_document(summary, samples, item_ids, selection_frequencies(samples), top)
    lio.write_json(path, doc, "summary")
    return summary


def cmd_estimate_alpha(args, cfg: ExperimentConfig) -> int:
    opts = override(cfg.alpha, grid=args.grid, reps=args.reps, n_star=args.n_star,
                    from_scores=args.from_scores or None)
    seed = _resolve_seed(cfg)
    ds = lio.read_dataset(args.data, from_scores=opts.from_scores)
    if opts.n_star is not None and opts.n_star > ds.n:
        raise UsageError(f"n_star must be <= n = {ds.n}")
    res = estimate_alpha(ds, opts.grid, opts.reps, seed, n_star=opts.n_star, workers=cfg.threads)
    if args.out:
        rows = res.table()
        lio.validate_rows(rows, "alpha_grid_row")
        lio.write_table(args.out, rows)
    doc = {"N": ds.N, "n": ds.n, "n_star": opts.n_star, "reps": opts.reps, "grid": res.grid,
           "mean_distances": res.mean_dists, "observed_mean": res.observed_mean,
           "alpha_hat_n": res.alpha_hat_n, "alpha_hat_nstar": res.alpha_hat_nstar}
    if args.json:
        lio.write_json(args.json, doc, "alpha")
    chosen = res.alpha_hat_n if res.alpha_hat_nstar is None else res.alpha_hat_nstar
    print(repr(float(chosen)))
    return EXIT_OK


def cmd_summarize(args, cfg: ExperimentConfig) -> int:
    opts = override(cfg.summarize, k=args.k, K=args.K, c=args.c, Ks=args.Ks, top=args.top, floor=args.floor)
    samples, item_ids = lio.read_draws(args.draws)
    summary = _write_summary(args.summary, samples, item_ids, opts)
    if args.heatplot:
        rows = heatplot_table(samples, summary, item_ids)
        lio.validate_rows(rows, "heatplot_row")
        lio.write_table(args.heatplot, rows)
    if args.trace:
        rows = trace_table(samples, summary, item_ids, opts.top)
        lio.validate_rows(rows, "trace_row")
        lio.write_table(args.trace, rows)
    if args.violin:
        Ks = opts.Ks or sorted({max(1, samples.n_star // 4), max(1, samples.n_star // 2), samples.n_star})
        if max(Ks) > samples.n_star:
            raise UsageError(f"every K must be <= n* = {samples.n_star}")
        rows = violin_table(samples, Ks, item_ids, opts.floor)
        lio.validate_rows(rows, "violin_row")
        lio.write_table(args.violin, rows)
    return EXIT_OK


def cmd_evaluate(args, cfg: ExperimentConfig) -> int:
    truth, item_ids = lio.read_truth(args.truth)
    est, _ = lio.read_summary(args.summary, item_ids)
    if len(est.a_hat) != truth.n_star:
        raise lio.InputError("summary and truth disagree on n*")
    report = evaluate(truth, est, len(item_ids)).as_dict()
    if args.out:
        lio.write_json(args.out, report, "evaluation")
    else:
        doc = lio._clean(report)
        lio.validate(doc, "evaluation")
        sys.stdout.write(lio.dumps(doc))
    return EXIT_OK


def cmd_bench(args, cfg: ExperimentConfig) -> int:
    bench = override(cfg.bench, methods=args.methods, repetitions=args.repetitions,
                     timing=args.timing or None)
    scenarios = list(bench.scenarios)
    if args.n is not None:
        fields = {"generator": args.generator or "top_rank", "n": args.n, "n_star": args.n_star, "N": args.N,
                  "alpha": args.alpha, "iterations": args.iterations, "swap_L": args.swap_L,
                  "leap_l": args.leap_l, "noise_levels": args.noise_levels}
        if None in (args.n_star, args.N, args.alpha):
            raise UsageError("a scenario on the command line needs --n, --n-star, --N and --alpha")
        scenarios = [scenario_from_mapping({k: v for k, v in fields.items() if v is not None}, "command line")]
    if not scenarios:
        raise UsageError("no scenario: give --n/--n-star/--N/--alpha or bench.scenarios in the config")
    seed = _resolve_seed(cfg)
    results, table = [], []
    metrics = [m for m in METRICS if bench.timing or m != "wall_time_sec"]
    for i, sc in enumerate(scenarios):
        log.info("scenario %d/%d: %s", i + 1, len(scenarios), sc)
        res = run_benchmark(sc, bench.methods, bench.repetitions, seed, workers=cfg.threads)
        agg = {m: {k: v for k, v in entry.items() if k in metrics or k in ("repetitions", "failures")}
               for m, entry in res.aggregate.items()}
        results.append({"scenario": asdict(sc), "aggregate": agg, "repetitions": bench.repetitions, "seed": seed})
        for row in res.rows:
            table.append({"scenario": i, **row})
        for m, entry in agg.items():
            log.info("  %-7s p=%.3f d_norm=%s d_R=%s", m, entry["coverage"]["mean"] or float("nan"),
                     entry["d_norm"]["mean"], entry["d_R"]["mean"])
    cols = ["scenario", "method", "rep", "n_corr", *metrics, "acceptance_rho", "acceptance_aset", "error"]
    if args.rows:
        lio.write_table(args.rows, table, cols)
    doc = {"results": results}
    if args.out:
        lio.write_json(args.out, doc, "bench")
    else:
        doc = lio._clean(doc)
        lio.validate(doc, "bench")
        sys.stdout.write(lio.dumps(doc))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _global_options(parser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d, help="master seed (64-bit integer)")
    parser.add_argument("--chains", type=int, default=d, help="independent chains for fit")
    parser.add_argument("--threads", type=int, default=d, help="worker threads")
    parser.add_argument("--config", default=d, help="YAML or JSON configuration file")
    parser.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)
    parser.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lowbmm", allow_abbrev=False, description="Variable selection for rank data with the "
                                "lower-dimensional Bayesian Mallows model.")
    _global_options(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_, allow_abbrev=False)
        _global_options(sp, suppress=True)
        sp.set_defaults(func=func)
        return sp

    def scenario_flags(sp):
        sp.add_argument("--generator", choices=["top_rank", "rank_consistency"])
        sp.add_argument("--n", type=int, help="number of items")
        sp.add_argument("--n-star", type=int, help="number of relevant items")
        sp.add_argument("--N", type=int, help="number of assessors")
        sp.add_argument("--alpha", type=float, help="Mallows scale parameter")
        sp.add_argument("--noise-levels", type=int)

    sp = command("simulate", cmd_simulate, "simulate a ranking dataset with known relevant items")
    scenario_flags(sp)
    sp.add_argument("--noise-fraction", type=float)
    sp.add_argument("-o", "--out", required=True, help="dataset CSV to write")
    sp.add_argument("--truth", required=True, help="ground-truth JSON to write")

    sp = command("fit", cmd_fit, "run the sampler on a ranking CSV")
    sp.add_argument("data", help="ranking CSV (header of item ids)")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--n-star", type=int)
    sp.add_argument("--iterations", "-M", type=int)
    sp.add_argument("--swap-L", type=int, help="items exchanged per set proposal")
    sp.add_argument("--leap-l", type=int, help="leap size of the consensus proposal")
    sp.add_argument("--burn-in", type=int)
    sp.add_argument("--thin", type=int)
    sp.add_argument("--progress-every", type=int, help="log progress every this many iterations")
    sp.add_argument("--from-scores", action="store_true", help="rank each row, largest value first")
    sp.add_argument("--draws", required=True, help="draw log to write (.npz for the binary format)")
    sp.add_argument("--summary", help="also write a summary JSON")
    sp.add_argument("--k", type=int, help="size of the highest probability set")

    sp = command("estimate-alpha", cmd_estimate_alpha, "choose alpha by matching mean pairwise distances")
    sp.add_argument("data")
    sp.add_argument("--grid", type=_floats, help="comma-separated ascending alpha values")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--n-star", type=int, help="rescale the estimate to this dimension")
    sp.add_argument("--from-scores", action="store_true")
    sp.add_argument("-o", "--out", help="grid table CSV")
    sp.add_argument("--json", help="result JSON")

    sp = command("summarize", cmd_summarize, "posterior summaries and plot tables from a draw log")
    sp.add_argument("draws")
    sp.add_argument("--summary", required=True, help="summary JSON to write")
    sp.add_argument("--k", type=int, help="size of the highest probability set")
    sp.add_argument("--K", type=int, help="top-K for the top probability selection")
    sp.add_argument("--c", type=float, help="probability cut-off for the top probability selection")
    sp.add_argument("--Ks", type=_ints, help="comma-separated K values for the violin table")
    sp.add_argument("--top", type=int, help="items in the trace table")
    sp.add_argument("--floor", type=float, help="drop violin entries at or below this probability")
    sp.add_argument("--heatplot", help="heatplot table CSV")
    sp.add_argument("--trace", help="trace table CSV")
    sp.add_argument("--violin", help="violin table CSV")

    sp = command("evaluate", cmd_evaluate, "compare a summary with the ground truth")
    sp.add_argument("summary")
    sp.add_argument("truth")
    sp.add_argument("-o", "--out", help="evaluation JSON (default: standard output)")

    sp = command("bench", cmd_bench, "repeated simulate-fit-evaluate runs")
    scenario_flags(sp)
    sp.add_argument("--iterations", "-M", type=int)
    sp.add_argument("--swap-L", type=int)
    sp.add_argument("--leap-l", type=int)
    sp.add_argument("--methods", type=lambda s: [m for m in s.split(",") if m])
    sp.add_argument("--repetitions", type=int)
    sp.add_argument("--timing", action="store_true", help="include wall times (not reproducible)")
    sp.add_argument("--rows", help="per-repetition CSV")
    sp.add_argument("-o", "--out", help="aggregate JSON (default: standard output)")
    return p


def _setup_logging(verbose: int, quiet: bool) -> None:
    level = logging.WARNING if quiet else (logging.DEBUG if verbose > 1 else logging.INFO)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s", "%H:%M:%S"))
    root = logging.getLogger("lowbmm")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    for key in ("seed", "chains", "threads"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    return cfg.check()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(getattr(args, "verbose", 0), getattr(args, "quiet", False))
    try:
        cfg = _load(args)
        if args.command == "fit" and args.k is not None:
            cfg.summarize = override(cfg.summarize, k=args.k)
        return args.func(args, cfg)
    except (UsageError, ConfigFileError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (lio.InputError, jsonschema.ValidationError) as exc:
        log.error("invalid input: %s", getattr(exc, "message", exc))
        return EXIT_INPUT
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (EmptySamplesError, ValueError, FloatingPointError) as exc:
        log.error("%s", exc)
        return EXIT_COMPUTE
    except Exception:  # pragma: no cover - reported with traceback
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
