"""Command line front end: ``inpaint``, ``analyze``, ``verify`` and ``bench``.

Exit codes: 0 success, 1 verification failed, 2 invalid arguments,
3 unsupported audio format, 4 no usable transition, 5 internal error.
"""

import argparse
import json
import sys

from . import __version__
from .audio_io import decimate, downmix_mono, read_audio, write_audio
from .bench import run_bench
from .config import AlgoConfig
from .errors import InpaintError, InvalidArgument, InvalidGap
from .exports import export_features, export_magnitudes
from .pipeline import analyze, inpaint, verify_redundant
from .simgraph import full_graph, reduced_stage
from .stft import stft, window_for

EXIT_VERIFY_FAILED = 1

_STAGE_NAMES = {"w0": "W0", "w": "W", "ws": "Ws"}


def _add_gap_args(p, required):
    g = p.add_argument_group("gap", "one or more [start, end) intervals, given "
                             "either in seconds or in samples")
    g.add_argument("--gap-start", type=float, action="append", metavar="S",
                   help="gap start in seconds (repeat for several gaps)")
    g.add_argument("--gap-end", type=float, action="append", metavar="E")
    g.add_argument("--gap-start-sample", type=int, action="append", metavar="N")
    g.add_argument("--gap-end-sample", type=int, action="append", metavar="N")
    p.set_defaults(_gap_required=required)


def _gaps(args, sample_rate):
    seconds = args.gap_start is not None or args.gap_end is not None
    samples = args.gap_start_sample is not None or args.gap_end_sample is not None
    if seconds and samples:
        raise InvalidArgument("give gaps in seconds or in samples, not both")
    if seconds:
        starts, ends = args.gap_start or [], args.gap_end or []
        starts = [int(round(s * sample_rate)) for s in starts]
        ends = [int(round(e * sample_rate)) for e in ends]
    elif samples:
        starts, ends = args.gap_start_sample or [], args.gap_end_sample or []
    else:
        if args._gap_required:
            raise InvalidArgument("at least one gap is required")
        return []
    if len(starts) != len(ends):
        raise InvalidArgument("every gap start needs a matching gap end")
    gaps = list(zip(starts, ends))
    for s, e in gaps:
        if s < 0 or e <= s:
            raise InvalidGap(f"invalid gap [{s}, {e}): need 0 <= start < end")
    return gaps


def _config(args):
    return AlgoConfig.load(args.config) if args.config else AlgoConfig()


def _write_json(path, data):
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def cmd_inpaint(args):
    cfg = _config(args)
    buf = read_audio(args.input)
    gaps = _gaps(args, buf.sample_rate)
    result = inpaint(buf, gaps, cfg)
    write_audio(args.output, result.buffer, args.subtype)
    if args.export_graph:
        for i, graph in enumerate(result.graphs):
            path = args.export_graph
            if len(result.graphs) > 1:
                stem, dot, ext = path.rpartition(".")
                path = f"{stem}.gap{i}.{ext}" if dot else f"{path}.gap{i}"
            graph.ws.to_csv(path)
    report = result.report(seed=args.seed, include_timings=args.timings)
    report["input"] = args.input
    report["config"] = cfg.to_dict()
    if args.report:
        _write_json(args.report, report)
    for g in report["gaps"]:
        t = g["transition"]
        print(f"gap [{g['gap']['start_sample']}, {g['gap']['end_sample']}): "
              f"frames {t['l0']}->{t['k0']} ... {t['l1']}->{t['k1']}, "
              f"objective {t['objective']:.3f}, mismatch {t['mismatch']}")
    return 0


def cmd_analyze(args):
    cfg = _config(args)
    buf = read_audio(args.input)
    gaps = _gaps(args, buf.sample_rate)
    analysis = analyze(buf, cfg)
    gap_specs = [analysis.gap(s, e) for s, e in gaps]
    fm = analysis.masked(gap_specs)
    params = cfg.graph_params(analysis.frame_rate)
    stage = _STAGE_NAMES[args.stage]
    if args.full:
        graph = full_graph(fm, params, stage)
    else:
        if len(gap_specs) != 1:
            raise InvalidArgument(
                "the reduced graph needs exactly one gap; use --full for the "
                "graph of the whole signal")
        graph = reduced_stage(fm, gap_specs[0], params, stage)
    graph.to_csv(args.export)
    print(f"{stage}: {len(graph)} edges over {graph.n} frames -> {args.export}")
    if args.export_features:
        for path in export_features(analysis.features, args.export_features):
            print(f"features -> {path}")
    if args.export_stft:
        sd, _ = decimate(downmix_mono(buf), cfg.max_rate)
        params_s = cfg.stft_params()
        export_magnitudes(stft(sd.mono, params_s, window_for(params_s)), args.export_stft)
        print(f"STFT magnitudes -> {args.export_stft}")
    return 0


def cmd_verify(args):
    cfg = _config(args)
    buf = read_audio(args.input)
    trials = verify_redundant(buf, args.gap_length, args.trials, args.seed, cfg,
                              align=not args.no_align)
    for i, t in enumerate(trials):
        print(f"trial {i}: gap [{t.gap_start}, {t.gap_end}) error {t.error:.3e} "
              f"{'PASS' if t.passed else 'FAIL'}")
    ok = all(t.passed for t in trials)
    print("PASS" if ok else "FAIL")
    if args.report:
        _write_json(args.report, {
            "seed": args.seed, "gap_length": args.gap_length, "passed": ok,
            "trials": [{"gap_start": t.gap_start, "gap_end": t.gap_end,
                        "error": t.error, "mismatch": t.mismatch,
                        "passed": t.passed} for t in trials]})
    return 0 if ok else EXIT_VERIFY_FAILED


def cmd_bench(args):
    cfg = _config(args)
    buffers = [read_audio(p) for p in args.input]
    report = run_bench(buffers, args.reps, cfg, args.gap_length, names=args.input)
    print(f"{'stage':<24}{'mean s/min':>12}{'std':>10}")
    for stage, (mean, std) in report.stage_table().items():
        print(f"{stage:<24}{mean:>12.3f}{std:>10.3f}")
    print(f"feature extraction share: {100 * report.feature_share():.1f}%")
    fit = report.linear_fit()
    if fit is not None:
        print(f"linear fit: {fit[0]:.3f} s/min, intercept {fit[1]:.3f} s, "
              f"R^2 {fit[2]:.4f}")
    if args.report:
        _write_json(args.report, report.to_dict())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="graphinpaint",
        description="Conceal long gaps in audio by copying similar material "
                    "found through a spectral self-similarity graph.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inpaint", help="conceal one or more gaps")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_gap_args(p, required=True)
    p.add_argument("--config", help="JSON file with AlgoConfig fields")
    p.add_argument("--export-graph", metavar="CSV",
                   help="write the reduced sparse graph as an edge list")
    p.add_argument("--report", metavar="JSON", help="write a JSON report ('-' for stdout)")
    p.add_argument("--seed", type=int, default=0, help="recorded in the report")
    p.add_argument("--subtype", choices=("PCM_16", "PCM_24", "FLOAT"),
                   help="output sample format (default: same as input)")
    p.add_argument("--timings", action="store_true",
                   help="include per-stage wall-clock timings in the report")
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("analyze", help="export a similarity graph stage")
    p.add_argument("--input", required=True)
    p.add_argument("--stage", choices=sorted(_STAGE_NAMES), required=True)
    p.add_argument("--full", action="store_true",
                   help="graph over all frames instead of the gap neighbourhood")
    p.add_argument("--export", required=True, metavar="CSV")
    _add_gap_args(p, required=False)
    p.add_argument("--config")
    p.add_argument("--export-features", metavar="PREFIX",
                   help="also write PREFIX_F1.csv and PREFIX_F2.csv")
    p.add_argument("--export-stft", metavar="CSV",
                   help="also write the STFT magnitudes of the analysed signal")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="check exact recovery on a doubled signal")
    p.add_argument("--input", required=True)
    p.add_argument("--gap-length", type=float, required=True, metavar="SECONDS")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.add_argument("--no-align", action="store_true",
                   help="do not trim the input to a whole number of hops")
    p.add_argument("--report", metavar="JSON")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="per-stage timings per minute of audio")
    p.add_argument("--input", required=True, nargs="+")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--gap-length", type=float, default=2.0, metavar="SECONDS")
    p.add_argument("--config")
    p.add_argument("--report", metavar="JSON")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InpaintError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # surfaced as an internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return InpaintError.exit_code


if __name__ == "__main__":
    sys.exit(main())
