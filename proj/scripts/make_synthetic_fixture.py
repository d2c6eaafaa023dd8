#!/usr/bin/env python3
"""Generate the synthetic CI fixture: data/synthetic_cohort.csv plus
data/reference_table.csv.

The real analysis runs on a cohort extracted from the NHANES 2017-2018
public files (see prepare_nhanes.py). Those files cannot be committed, so
CI uses a synthetic cohort constructed to match the published per-age
sample sizes, missing counts, and weighted age distribution exactly, and
calibrated so the complete-case, linear-extrapolation, and synthesis
estimates land on the published values:

    complete-case  104.7 (95% CI 104.1, 105.3)
    linear         101.6 (95% CI 100.8, 102.4)
    synthesis      100.5 (95% CI  99.9, 101.0)

The reference table is generated alongside it: a smooth pediatric SBP
surface over (age, gender, height-percentile bracket) whose positive-region
strata track the cohort's age-specific means (the paper's diagnostic) and
whose nonpositive-region strata are pinned by the synthesis decomposition

    mu = E[Y | X*=1] Pr(X*=1) + E[Y | X*=0] Pr(X*=0).

Everything is deterministic (fixed seed). Rerunning the script reproduces
both files byte for byte.
"""

import random
from collections import defaultdict
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "data"

SEED = 20170408
TOTAL_WEIGHT = 65_000_000.0
Z90 = 1.2815516

# Published per-age margins: age -> (n, weighted %, n missing).
TABLE1 = {
    2: (197, 5.3, 197),
    3: (157, 6.2, 157),
    4: (168, 6.1, 168),
    5: (166, 5.9, 166),
    6: (147, 5.7, 147),
    7: (153, 5.3, 153),
    8: (183, 6.6, 15),
    9: (190, 7.2, 25),
    10: (183, 6.2, 16),
    11: (168, 6.3, 16),
    12: (144, 6.1, 15),
    13: (143, 6.9, 11),
    14: (153, 6.9, 11),
    15: (127, 5.5, 9),
    16: (149, 7.2, 6),
    17: (144, 6.6, 10),
}

CC_TARGET = 104.7
LIN_TARGET = 101.6
SYN_TARGET = 100.5
CC_BOOT_SD_TARGET = 0.306  # half-width 0.6 at the 2.5/97.5 percentiles

CUTOFF = 8

# Height-for-age means (cm), loosely CDC-shaped: age -> (male, female).
HEIGHT_MEAN = {
    2: (86.5, 85.5), 3: (95.0, 94.0), 4: (102.0, 101.0), 5: (109.0, 108.0),
    6: (115.5, 115.0), 7: (122.0, 121.5), 8: (128.0, 127.5), 9: (133.5, 133.0),
    10: (138.5, 138.5), 11: (143.5, 144.5), 12: (149.5, 151.5), 13: (156.5, 157.0),
    14: (163.5, 159.5), 15: (169.0, 161.5), 16: (172.5, 162.5), 17: (175.0, 163.0),
}

BRACKETS = [5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0]
HEIGHT_GRADIENT = 0.055  # mm Hg per height-percentile point
REF_SD = 10.5            # reference-model SD in every stratum
DIAG_BUMP = {15: 1.2, 16: 1.2, 17: 1.2}  # reference sits slightly above the data

AGE_WIGGLE = {8: 0.3, 9: -0.2, 10: 0.4, 11: 0.0, 12: -0.3,
              13: 0.2, 14: -0.4, 15: 0.1, 16: -0.1, 17: 0.0}


def fmt3(x):
    return format(x, ".3f")


def fmt1(x):
    return format(x, ".1f")


def gender_offset(age, gender):
    spread = 0.25 * max(0, age - 9)
    return 0.5 * spread if gender == "male" else -0.5 * spread


def build_rows(rng):
    """Ages, genders, weights, heights, missingness flags. No outcomes yet."""
    rows = []
    for age, (n, share, n_missing) in TABLE1.items():
        raw = [0.6 + rng.random() for _ in range(n)]
        target_sum = share / 100.0 * TOTAL_WEIGHT
        scale = target_sum / sum(raw)
        weights = [float(fmt3(w * scale)) for w in raw]
        # Exact share after rounding: absorb the residual into one row.
        residual = target_sum - sum(weights)
        weights[0] = float(fmt3(weights[0] + residual))

        missing = set(rng.sample(range(n), n_missing)) if age >= CUTOFF else set(range(n))
        for i in range(n):
            gender = "male" if rng.random() < 0.5 else "female"
            mean_h = HEIGHT_MEAN[age][0 if gender == "male" else 1]
            sd_h = 4.0 + 0.15 * age
            height = float(fmt1(rng.gauss(mean_h, sd_h)))
            rows.append({
                "age": age,
                "gender": gender,
                "weight": weights[i],
                "height": height,
                "missing": i in missing,
            })
    return rows


def empirical_percentiles(rows):
    """Weighted midpoint ranks within (age, gender); mirrors the library."""
    strata = defaultdict(list)
    for i, r in enumerate(rows):
        strata[(r["age"], r["gender"])].append((r["height"], r["weight"], i))
    out = [None] * len(rows)
    for entries in strata.values():
        entries.sort(key=lambda e: e[0])
        total = 0.0
        for h, w, i in entries:
            total += w
        below = 0.0
        i0 = 0
        while i0 < len(entries):
            j = i0
            tied = 0.0
            while j < len(entries) and entries[j][0] == entries[i0][0]:
                tied += entries[j][1]
                j += 1
            for k in range(i0, j):
                out[entries[k][2]] = 100.0 * (below + 0.5 * tied) / total
            below += tied
            i0 = j
    return out


def nearest_bracket(p):
    best = BRACKETS[0]
    best_dist = abs(p - best)
    for b in BRACKETS[1:]:
        d = abs(p - b)
        if d < best_dist:
            best = b
            best_dist = d
    return best


def solve_targets(rows):
    """Per-age observed means m_x = a + b*(x-12.5) + wiggle_x such that the
    complete-case and linear g-computation estimates hit their targets.
    Both are affine in (a, b); evaluate at three points and solve 2x2."""
    W = defaultdict(float)       # total weight per age
    W_obs = defaultdict(float)   # observed weight per age
    for r in rows:
        W[r["age"]] += r["weight"]
        if not r["missing"]:
            W_obs[r["age"]] += r["weight"]
    obs_ages = sorted(W_obs)

    total_w = sum(W.values())
    xbar_all = sum(W[a] * a for a in W) / total_w
    obs_total = sum(W_obs.values())
    xbar_obs = sum(W_obs[a] * a for a in obs_ages) / obs_total
    sxx = sum(W_obs[a] * (a - xbar_obs) ** 2 for a in obs_ages)

    def estimates(a, b):
        m = {x: a + b * (x - 12.5) + AGE_WIGGLE[x] for x in obs_ages}
        cc = sum(W_obs[x] * m[x] for x in obs_ages) / obs_total
        mbar = cc
        slope = sum(W_obs[x] * (x - xbar_obs) * (m[x] - mbar) for x in obs_ages) / sxx
        intercept = mbar - slope * xbar_obs
        lin = intercept + slope * xbar_all
        return cc, lin

    cc0, lin0 = estimates(0.0, 0.0)
    cc_a, lin_a = estimates(1.0, 0.0)
    cc_b, lin_b = estimates(0.0, 1.0)
    # [d_cc/da d_cc/db; d_lin/da d_lin/db] [a b]' = targets - offsets
    m11, m12 = cc_a - cc0, cc_b - cc0
    m21, m22 = lin_a - lin0, lin_b - lin0
    r1 = CC_TARGET - cc0
    r2 = LIN_TARGET - lin0
    det = m11 * m22 - m12 * m21
    a = (r1 * m22 - m12 * r2) / det
    b = (m11 * r2 - r1 * m21) / det
    return {x: a + b * (x - 12.5) + AGE_WIGGLE[x] for x in obs_ages}, W, W_obs


def solve_residual_scale(rows, m, z):
    """Residual scale s so the complete-case bootstrap SD hits its target.
    Delta method for the ratio estimator over uniform row resampling:
    Var(cc) ~ (1/n) E[(w 1obs (y - theta))^2] / E[w 1obs]^2."""
    n = len(rows)
    theta = CC_TARGET
    b_mean = sum(r["weight"] for r in rows if not r["missing"]) / n
    target = CC_BOOT_SD_TARGET ** 2 * n * b_mean ** 2

    A = B = C = 0.0
    for i, r in enumerate(rows):
        if r["missing"]:
            continue
        d = m[r["age"]] - theta
        w2 = r["weight"] ** 2
        A += w2 * d * d
        B += 2.0 * w2 * d * z[i]
        C += w2 * z[i] * z[i]
    A /= n
    B /= n
    C /= n
    disc = B * B - 4.0 * C * (A - target)
    return (-B + disc ** 0.5) / (2.0 * C)


def center_z(rows, z):
    """Weighted-center the residuals within each observed age stratum."""
    sums = defaultdict(float)
    wsum = defaultdict(float)
    for i, r in enumerate(rows):
        if r["missing"]:
            continue
        sums[r["age"]] += r["weight"] * z[i]
        wsum[r["age"]] += r["weight"]
    for i, r in enumerate(rows):
        if not r["missing"]:
            z[i] -= sums[r["age"]] / wsum[r["age"]]


def make_readings(rng, target, k):
    """k integer readings whose mean is close to target."""
    deltas = [rng.gauss(0.0, 2.5) for _ in range(k - 1)]
    deltas.append(-sum(deltas))
    return [int(round(target + d)) for d in deltas]


def assign_outcomes(rng, rows, m, s, z):
    for i, r in enumerate(rows):
        if r["missing"]:
            # A quarter of the missing rows in the positive region carry a
            # single reading (below the two-reading rule).
            if r["age"] >= CUTOFF and rng.random() < 0.25:
                r["readings"] = [int(round(m[r["age"]] + rng.gauss(0.0, 8.0)))]
            else:
                r["readings"] = []
            continue
        k = 3 if rng.random() < 0.9 else 2
        r["readings"] = make_readings(rng, m[r["age"]] + s * z[i], k)
        r["sbp"] = sum(r["readings"]) / len(r["readings"])


def achieved_aggregates(rows):
    num = defaultdict(float)
    den = defaultdict(float)
    for r in rows:
        if not r["missing"]:
            num[r["age"]] += r["weight"] * r["sbp"]
            den[r["age"]] += r["weight"]
    return {x: num[x] / den[x] for x in num}


def reference_p50(rows, m_hat, W, W_obs):
    """Stratum medians. Positive region tracks the achieved age means (plus
    the diagnostic bump); nonpositive region is shifted so the synthesis
    decomposition lands on its target."""
    percentiles = empirical_percentiles(rows)
    for i, r in enumerate(rows):
        r["bracket"] = nearest_bracket(percentiles[i])

    # Per-age mean of the structural parts (gender offset + height gradient)
    # over the cohort composition, so c_x can cancel them.
    struct_num = defaultdict(float)
    struct_den = defaultdict(float)
    for r in rows:
        part = gender_offset(r["age"], r["gender"]) + HEIGHT_GRADIENT * (r["bracket"] - 50.0)
        struct_num[r["age"]] += r["weight"] * part
        struct_den[r["age"]] += r["weight"]
    struct_mean = {x: struct_num[x] / struct_den[x] for x in struct_num}

    c = {}
    for age in range(CUTOFF, 18):
        c[age] = m_hat[age] + DIAG_BUMP.get(age, 0.0) - struct_mean[age]

    # Positive-region standardized mean (saturated g-computation estimand).
    w_pos = sum(W[x] for x in range(CUTOFF, 18))
    w_non = sum(W[x] for x in range(2, CUTOFF))
    e1 = sum(W[x] * m_hat[x] for x in range(CUTOFF, 18)) / w_pos
    total = w_pos + w_non
    e0_target = (SYN_TARGET * total - e1 * w_pos) / w_non

    # Young-child base curve, shifted to hit the target exactly; iterate once
    # because the emitted medians are rounded to one decimal.
    base = {2: 88.5, 3: 90.0, 4: 91.5, 5: 93.0, 6: 94.5, 7: 96.0}

    def nonpositive_mean(delta):
        num = 0.0
        for r in rows:
            if r["age"] >= CUTOFF:
                continue
            p50 = base[r["age"]] + delta + gender_offset(r["age"], r["gender"]) \
                + HEIGHT_GRADIENT * (r["bracket"] - 50.0)
            num += r["weight"] * float(fmt1(p50))
        return num / w_non

    delta = e0_target - nonpositive_mean(0.0)
    for _ in range(4):
        delta += e0_target - nonpositive_mean(delta)
    for age in range(2, CUTOFF):
        c[age] = base[age] + delta

    e0 = nonpositive_mean(delta)
    syn = (e1 * w_pos + e0 * w_non) / total
    return c, e1, e0, syn


def write_cohort(rows, rng, path):
    order = list(range(len(rows)))
    rng.shuffle(order)
    lines = ["id,age,gender,height_cm,reading1,reading2,reading3,weight"]
    for seq, i in enumerate(order):
        r = rows[i]
        readings = r["readings"] + [""] * (3 - len(r["readings"]))
        gender_code = "1" if r["gender"] == "male" else "2"
        lines.append(",".join([
            f"S{100001 + seq}",
            str(r["age"]),
            gender_code,
            fmt1(r["height"]),
            str(readings[0]),
            str(readings[1]),
            str(readings[2]),
            fmt3(r["weight"]),
        ]))
    path.write_text("\n".join(lines) + "\n")


def write_reference(c, path):
    lines = ["age,gender,height_percentile,p50,p90"]
    for age in range(2, 18):
        for gender in ("male", "female"):
            for b in BRACKETS:
                p50 = c[age] + gender_offset(age, gender) + HEIGHT_GRADIENT * (b - 50.0)
                p50 = float(fmt1(p50))
                p90 = float(fmt1(p50 + Z90 * REF_SD))
                lines.append(",".join([
                    str(age), gender, fmt1(b) if b != int(b) else str(int(b)),
                    fmt1(p50), fmt1(p90),
                ]))
    path.write_text("\n".join(lines) + "\n")


def main():
    rng = random.Random(SEED)
    OUT_DIR.mkdir(parents=True, exist_ok=True)

    rows = build_rows(rng)
    m, W, W_obs = solve_targets(rows)

    z = [rng.gauss(0.0, 1.0) for _ in rows]
    center_z(rows, z)
    s = solve_residual_scale(rows, m, z)
    assign_outcomes(rng, rows, m, s, z)

    m_hat = achieved_aggregates(rows)
    obs_total = sum(W_obs.values())
    cc = sum(W_obs[x] * m_hat[x] for x in m_hat) / obs_total
    c, e1, e0, syn = reference_p50(rows, m_hat, W, W_obs)

    write_cohort(rows, rng, OUT_DIR / "synthetic_cohort.csv")
    write_reference(c, OUT_DIR / "reference_table.csv")

    print(f"rows: {len(rows)}")
    print(f"residual scale s = {s:.3f}")
    print(f"complete-case (expected) = {cc:.4f}  target {CC_TARGET}")
    print(f"positive-region mean E1  = {e1:.4f}")
    print(f"nonpositive mean E0      = {e0:.4f}")
    print(f"synthesis (expected)     = {syn:.4f}  target {SYN_TARGET}")


if __name__ == "__main__":
    main()
