"""One-off calibration: criterion-4/5/6 signals over 5 paired seeds."""
import json
import time

from mafs.pipeline import run_bench

t0 = time.time()
rows, summary = run_bench(
    n=500,
    d=2000,
    feature_type="continuous",
    outcome_type="continuous",
    methods=("mafs", "cancelout", "earfs", "earfs_filter_init"),
    replications=5,
    seed=20250810,
)
print(f"total {time.time()-t0:.0f}s")
for s in summary:
    print(
        f"{s.method:18s} ratio={s.ratio_pct:4.1f} mean={s.mean_overall:.3f} ci={s.ci95:.3f} "
        + " ".join(f"{f}={v:.2f}" for f, v in s.mean_per_form.items())
    )
payload = {
    "rows": [
        {
            "rep": r.replication, "seed": r.seed, "method": r.method,
            "ratio": r.ratio_pct, "n_selected": r.n_selected,
            "overall": r.overall, "per_form": r.per_form, "seconds": r.select_seconds,
        }
        for r in rows
    ]
}
with open("calibration.json", "w") as fh:
    json.dump(payload, fh, indent=1)
print("wrote calibration.json")
