"""End-to-end batch demo: synthesize two formation lines, fit, aggregate.

Line A cells come from a tight electrode-state distribution; line B gets
the same distribution plus extra formation lithium loss (y0 shifted
down: lithium that left the positive and never came back), standing in
for a process drift.  Each cell is fitted blind, features are derived
and areal-normalized, and the script writes box-plot summaries and a
correlation matrix, then prints the lines side by side so the drift is
visible in q_sei without plotting anything.
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from dvafit import (  # noqa: E402
    CellRecord,
    FitConfig,
    SynthSpec,
    analytic_reference_curves,
    correlate,
    derive_features,
    fit,
    generate,
    implied_v_min,
    normalize_areal,
    random_feasible_theta,
    summarize_by_batch,
)
from dvafit.dataio import format_float  # noqa: E402

V_MAX = 4.1
AREA_CM2 = 14 * 79.20  # 14 positive faces at 79.20 cm^2 each

METRICS = ("areal_q_sei", "areal_q_li", "npr_practical", "qn_tilde", "qp_tilde")


def synth_cell(rng, u_pos, u_neg, noise, y0_shift=0.0):
    theta = random_feasible_theta(
        rng, u_pos, u_neg, v_max=V_MAX, y0_range=(0.92 - y0_shift, 0.97 - y0_shift)
    )
    spec = SynthSpec(
        theta_true=theta,
        noise_sigma_v=noise,
        sample_count=500,
        seed=int(rng.integers(2**31)),
        v_min=implied_v_min(theta, u_pos, u_neg),
        v_max=V_MAX,
    )
    return generate(spec, u_pos, u_neg)


def fit_record(cell_id, batch_id, series, u_pos, u_neg, cfg):
    result = fit(series, u_pos, u_neg, cfg)
    record = CellRecord(
        cell_id=cell_id,
        batch_id=batch_id,
        theta=result.theta,
        features=derive_features(result.theta),
        areal_basis_cm2=AREA_CM2,
    )
    return CellRecord(
        cell_id=record.cell_id,
        batch_id=record.batch_id,
        theta=record.theta,
        features=normalize_areal(record),
        areal_basis_cm2=record.areal_basis_cm2,
    )


def write_summary_csv(path, by_metric):
    lines = ["batch_id,metric,count,mean,std,min,q1,median,q3,max"]
    for metric, per_batch in by_metric.items():
        for batch_id, s in sorted(per_batch.items()):
            std = format_float(s.std) if s.std is not None else ""
            lines.append(
                ",".join(
                    [batch_id, metric, str(s.count)]
                    + [format_float(v) for v in (s.mean,)]
                    + [std]
                    + [format_float(v) for v in (s.minimum, s.q1, s.median, s.q3, s.maximum)]
                )
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_correlation_csv(path, corr):
    lines = ["metric," + ",".join(corr.metrics)]
    for name, row in zip(corr.metrics, corr.matrix):
        cells = ["" if np.isnan(v) else format_float(float(v)) for v in row]
        lines.append(name + "," + ",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells-per-line", type=int, default=4)
    ap.add_argument("--noise", type=float, default=0.001, help="voltage noise sigma in V")
    ap.add_argument("--y0-shift", type=float, default=0.04, help="line B formation-loss drift")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="batch_demo_out")
    args = ap.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    u_pos, u_neg = analytic_reference_curves()
    cfg = FitConfig(seed=args.seed)
    rng = np.random.default_rng(args.seed)

    records = []
    for line, shift in (("lineA", 0.0), ("lineB", args.y0_shift)):
        for i in range(args.cells_per_line):
            series, _ = synth_cell(rng, u_pos, u_neg, args.noise, y0_shift=shift)
            records.append(fit_record(f"{line}_{i:02d}", line, series, u_pos, u_neg, cfg))
            print(f"fitted {records[-1].cell_id}")

    by_metric = {m: summarize_by_batch(records, m) for m in METRICS}
    summary_path = os.path.join(args.out_dir, "batch_summary.csv")
    write_summary_csv(summary_path, by_metric)

    corr = correlate(records, METRICS)
    corr_path = os.path.join(args.out_dir, "correlations.csv")
    write_correlation_csv(corr_path, corr)
    if corr.degenerate:
        print(f"zero-variance metrics: {', '.join(corr.degenerate)}")

    print(f"\n{'metric':>16} {'lineA median':>14} {'lineB median':>14}")
    for metric, per_batch in by_metric.items():
        a, b = per_batch["lineA"].median, per_batch["lineB"].median
        print(f"{metric:>16} {a:>14.4f} {b:>14.4f}")
    print(f"\nwrote {summary_path} and {corr_path}")


if __name__ == "__main__":
    main()
