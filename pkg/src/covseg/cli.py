"""``covseg`` command line: segment, spectrum, synth."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import CovsegError, RangeError
from .ingestion import load_rates, to_log_returns
from .report import build_report, render_files, series_text, spectrum_text, write_files
from .segmentation import SplitConfig, delta_spectrum, segment_recursive
from .synthetic import RNG_NAME, load_scenario, sample_scenario


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="delimited rate file with a header row")
    p.add_argument("--delimiter", choices=["comma", "tab"], default=None, help="default: auto-detect")
    p.add_argument("--timestamp-column", default=None, help="default: first column")
    p.add_argument("--alignment", choices=["intersect", "error_on_gap"], default="intersect")
    p.add_argument("--returns", choices=["log", "diff"], default="log")
    p.add_argument("--margin-factor", type=int, default=3, help="t_min = k*M + 1 (default k=3)")
    p.add_argument("--jitter", type=float, default=0.0, help="diagonal ridge as a fraction of trace/M")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covseg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="recursively segment a rate file")
    _add_input_flags(seg)
    seg.add_argument("--delta0", type=float, default=None, help="split threshold (default 10*M)")
    seg.add_argument("--max-depth", type=int, default=30)
    seg.add_argument("--refine", action="store_true", help="re-optimise boundaries after bisection")
    seg.add_argument("--seed", type=int, default=None, help="ignored; segmentation is deterministic")
    seg.add_argument("--out-dir", required=True)

    spec = sub.add_parser("spectrum", help="dump the split-gain spectrum of one range")
    _add_input_flags(spec)
    spec.add_argument("--range", dest="window", default=None, help="start:end half-open column range")
    spec.add_argument("--out", default=None, help="default: stdout")

    syn = sub.add_parser("synth", help="sample a scenario file into a rate file")
    syn.add_argument("scenario")
    syn.add_argument("--out", required=True, help="output rate file; truth goes to <stem>.truth.csv")
    syn.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    return parser


def _load(args):
    delim = {"comma": ",", "tab": "\t", None: None}[args.delimiter]
    table = load_rates(args.input, delimiter=delim, timestamp_column=args.timestamp_column)
    return to_log_returns(table, alignment=args.alignment, returns=args.returns)


def _parse_window(text, total):
    if text is None:
        return None
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise RangeError(f"range out of bounds: cannot parse {text!r} as start:end") from None
    if a < 0 or b > total or a >= b:
        raise RangeError(f"range out of bounds: [{a}, {b}) not within [0, {total})")
    return a, b


def cmd_segment(args) -> int:
    data = _load(args)
    config = SplitConfig(
        delta0=args.delta0,
        min_margin_factor=args.margin_factor,
        max_depth=args.max_depth,
        jitter_epsilon=args.jitter,
        refine=args.refine,
    )
    result = segment_recursive(data, config)
    extra = {"returns": args.returns, "alignment": args.alignment}
    report = build_report(data, result, extra)
    write_files(args.out_dir, render_files(report))
    print(f"{len(result.segments)} segments written to {args.out_dir}")
    return 0


def cmd_spectrum(args) -> int:
    data = _load(args)
    window = _parse_window(args.window, data.T)
    config = SplitConfig(min_margin_factor=args.margin_factor, jitter_epsilon=args.jitter)
    text = spectrum_text(data, delta_spectrum(data, window, config))
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_files(Path(args.out).parent, {Path(args.out).name: text})
    return 0


def cmd_synth(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        from dataclasses import replace

        scenario = replace(scenario, seed=args.seed)
    data, truth = sample_scenario(scenario)
    out = Path(args.out)
    truth_text = f"# seed={scenario.seed}\n# rng={RNG_NAME}\nboundary\n" + "".join(f"{b}\n" for b in truth)
    write_files(out.parent, {out.name: series_text(data), out.stem + ".truth.csv": truth_text})
    print(json.dumps({"columns": data.T, "series": data.M, "boundaries": truth}))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"segment": cmd_segment, "spectrum": cmd_spectrum, "synth": cmd_synth}[args.command]
    try:
        return handler(args)
    except CovsegError as exc:
        print(f"covseg: error code={exc.code} message={json.dumps(str(exc))}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"covseg: error code=invalid_argument message={json.dumps(str(exc))}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
