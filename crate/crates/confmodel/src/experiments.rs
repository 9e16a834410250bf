//! Verification experiments: Monte Carlo estimates against exact values and
//! the surrogate's predictions.

use std::collections::BTreeMap;

use confmodel_core::exact::{
    enumerate_exact, enumerate_exact_bipartite, exact_ex_i, exact_ey_ij, exact_ez,
    exact_factorial_ex_i, visit_matchings, ExactSummary,
};
use confmodel_core::rng::{replicate_rng, tag};
use confmodel_core::{BipartiteDegreePair, DegreeSequence, SurrogateModel};
use serde_json::json;

use crate::error::{HarnessError, Result};
use crate::families::DegreeFamily;
use crate::montecarlo::{percentile_interval, z_histogram, zhat_histogram, Ensemble, Histogram};
use crate::report::ExperimentReport;

pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const CI_LEVEL: f64 = 0.95;
pub const MIN_TV_REPLICATES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbEstimate {
    pub p_hat: f64,
    pub se: f64,
    pub replicates: u64,
}

impl ProbEstimate {
    pub fn from_histogram(h: &Histogram) -> Self {
        let n = h.total();
        let p = h.frequency(0);
        Self {
            p_hat: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            replicates: n,
        }
    }

    /// `|p̂ - target| ≤ k·se`, with exact equality required when `se = 0`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.p_hat - target).abs() <= k * self.se
    }
}

pub fn describe(ens: &Ensemble) -> serde_json::Value {
    let short = |d: &[u32]| -> serde_json::Value {
        if d.len() <= 24 {
            json!(d)
        } else {
            json!(format!("{} vertices", d.len()))
        }
    };
    match ens {
        Ensemble::General(ds) => json!({"degrees": short(ds.degrees()), "N": ds.total()}),
        Ensemble::Bipartite(bp) => {
            json!({"s": short(bp.left()), "t": short(bp.right()), "N": bp.total()})
        }
    }
}

/// Simplicity frequency over `replicates` independent pairings.
pub fn estimate_prob_simple(ens: &Ensemble, replicates: u64, seed: u64) -> Result<ProbEstimate> {
    if replicates == 0 {
        return Err(HarnessError::Parse("replicates must be at least 1".into()));
    }
    let h = z_histogram(ens, replicates, seed, "estimate");
    Ok(ProbEstimate::from_histogram(&h))
}

pub fn estimate_report(ens: &Ensemble, replicates: u64, seed: u64) -> Result<ExperimentReport> {
    let est = estimate_prob_simple(ens, replicates, seed)?;
    let model = ens.surrogate();
    let mut r = ExperimentReport::new("estimate", seed)
        .with_config("ensemble", describe(ens))
        .with_config("replicates", replicates);
    r.estimate("p_simple", est.p_hat, est.se, replicates);
    r.exact("prob_simple_asymptotic", model.prob_simple());
    let pred = model.prob_simple();
    r.verdict(
        "p_simple within 4 se of prediction",
        est.within(pred, 4.0),
        format!("|{:.6} - {:.6}| vs 4 se = {:.6}", est.p_hat, pred, 4.0 * est.se),
    );
    Ok(r)
}

// ---------------------------------------------------------------------------
// moment gaps

#[derive(Debug, Clone, PartialEq)]
pub struct MomentGapConfig {
    pub family: DegreeFamily,
    pub sizes: Vec<u64>,
    pub orders: Vec<usize>,
    pub replicates: u64,
    pub seed: u64,
    pub bootstrap: usize,
    pub slope_threshold: f64,
    /// Largest allowed ratio between the biggest and smallest `Σ d_i² / N`.
    pub max_ratio_growth: f64,
    /// Use `Z` with its exact mean as a control variate for `Z^m`.
    pub control_variate: bool,
}

impl MomentGapConfig {
    pub fn new(family: DegreeFamily, sizes: Vec<u64>, orders: Vec<usize>) -> Self {
        Self {
            family,
            sizes,
            orders,
            replicates: 1_000_000,
            seed: 0,
            bootstrap: DEFAULT_BOOTSTRAP,
            slope_threshold: -0.4,
            max_ratio_growth: 4.0,
            control_variate: true,
        }
    }
}

/// Mean of `Z^m`, optionally adjusted by the control variate `Z` with known
/// mean, together with its standard error.
fn moment_estimate(h: &Histogram, m: u32, exact_mean: Option<f64>) -> (f64, f64) {
    let n = h.total() as f64;
    let a = h.raw_moment(m);
    let var_a = (h.raw_moment(2 * m) - a * a).max(0.0);
    let Some(mu) = exact_mean else {
        return (a, (var_a / n).sqrt());
    };
    let b = h.raw_moment(1);
    let var_b = h.raw_moment(2) - b * b;
    if var_b <= 0.0 {
        return (a, (var_a / n).sqrt());
    }
    let cov = h.raw_moment(m + 1) - a * b;
    let beta = cov / var_b;
    let resid = (var_a - cov * cov / var_b).max(0.0);
    (a - beta * (b - mu), (resid / n).sqrt())
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn log_abs(x: f64) -> f64 {
    x.abs().max(f64::MIN_POSITIVE).ln()
}

pub fn moment_gap_study(cfg: &MomentGapConfig) -> Result<ExperimentReport> {
    if cfg.orders.is_empty() || cfg.orders.contains(&0) {
        return Err(HarnessError::Parse("orders must be positive".into()));
    }
    let max_order = *cfg.orders.iter().max().expect("nonempty");
    let ensembles = cfg
        .sizes
        .iter()
        .map(|&s| cfg.family.instantiate(s))
        .collect::<Result<Vec<_>>>()?;
    let totals: Vec<f64> = ensembles.iter().map(|e| e.total() as f64).collect();
    let span = totals.iter().cloned().fold(f64::MIN, f64::max) / totals.iter().cloned().fold(f64::MAX, f64::min);
    if totals.len() < 4 || span < 30.0 {
        return Err(HarnessError::Parse(format!(
            "slope test needs at least 4 sizes spanning 30x in N (got {} sizes, span {span:.1}x)",
            totals.len()
        )));
    }
    let ratios: Vec<f64> = ensembles.iter().map(Ensemble::square_ratio).collect();
    let (rmin, rmax) = ratios
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    if rmax > cfg.max_ratio_growth * rmin {
        return Err(HarnessError::AssumptionViolated(format!(
            "sum d^2 / N ranges from {rmin:.3} to {rmax:.3} across sizes (allowed factor {})",
            cfg.max_ratio_growth
        )));
    }

    let mut r = ExperimentReport::new("moment-gap", cfg.seed)
        .with_config("family", cfg.family.to_string())
        .with_config("sizes", json!(cfg.sizes))
        .with_config("orders", json!(cfg.orders))
        .with_config("replicates", cfg.replicates)
        .with_config("bootstrap", cfg.bootstrap as u64)
        .with_config("slope_threshold", cfg.slope_threshold)
        .with_config("control_variate", cfg.control_variate);

    let needs_mc = |ens: &Ensemble| cfg.orders.iter().any(|&m| m >= 2 || ens.is_bipartite());
    // gaps[size][order] and bootstrap draws boot[b][size][order]
    let mut gaps = vec![vec![0.0; cfg.orders.len()]; ensembles.len()];
    let mut ses = vec![vec![0.0; cfg.orders.len()]; ensembles.len()];
    let mut boot = vec![vec![vec![0.0; cfg.orders.len()]; ensembles.len()]; cfg.bootstrap];
    for (si, ens) in ensembles.iter().enumerate() {
        let total = ens.total();
        let model = ens.surrogate().with_max_order(max_order.max(1));
        let zhat = model.zhat_moments(max_order)?;
        let exact_mean = match ens {
            Ensemble::General(ds) => Some(exact_ez(ds)?),
            Ensemble::Bipartite(_) => None,
        };
        if let Some(mu) = exact_mean {
            r.exact(format!("EZ[N={total}]"), mu);
        }
        r.exact(format!("sum_d2_over_N[N={total}]"), ratios[si]);
        let hist = if needs_mc(ens) {
            let task = format!("moment-gap/N={total}");
            Some(z_histogram(ens, cfg.replicates, cfg.seed, &task))
        } else {
            None
        };
        let cv = if cfg.control_variate { exact_mean } else { None };
        for (oi, &m) in cfg.orders.iter().enumerate() {
            r.exact(format!("EZhat^{m}[N={total}]"), zhat[m - 1]);
            let (emp, se) = match (m, exact_mean) {
                (1, Some(mu)) => (mu, 0.0),
                _ => moment_estimate(hist.as_ref().expect("histogram"), m as u32, cv),
            };
            gaps[si][oi] = emp - zhat[m - 1];
            ses[si][oi] = se;
            if m > 1 || exact_mean.is_none() {
                r.estimate(format!("EZ^{m}[N={total}]"), emp, se, cfg.replicates);
            }
        }
        if let Some(h) = &hist {
            let t = tag(&format!("moment-gap/bootstrap/N={total}"));
            for (b, draw) in boot.iter_mut().enumerate() {
                let mut rng = replicate_rng(cfg.seed, t, b as u64);
                let hb = h.resample(&mut rng);
                for (oi, &m) in cfg.orders.iter().enumerate() {
                    draw[si][oi] = match (m, exact_mean) {
                        (1, Some(_)) => gaps[si][oi],
                        _ => moment_estimate(&hb, m as u32, cv).0 - zhat[m - 1],
                    };
                }
            }
        } else {
            for draw in boot.iter_mut() {
                draw[si].clone_from(&gaps[si]);
            }
        }
    }

    let xs: Vec<f64> = totals.iter().map(|n| n.ln()).collect();
    for (oi, &m) in cfg.orders.iter().enumerate() {
        let mut indistinguishable = true;
        let mut scaled = Vec::new();
        for (si, &n) in totals.iter().enumerate() {
            let mut draws: Vec<f64> = boot.iter().map(|d| d[si][oi]).collect();
            let ci = if draws.is_empty() {
                (gaps[si][oi], gaps[si][oi])
            } else {
                percentile_interval(&mut draws, CI_LEVEL)
            };
            let g = gaps[si][oi];
            let zhat_m = r.exact_refs[&format!("EZhat^{m}[N={}]", ensembles[si].total())];
            let zero_gap = g.abs() <= 1e-12 * (1.0 + zhat_m.abs());
            if !(zero_gap || (ci.0 <= 0.0 && 0.0 <= ci.1 && ses[si][oi] > 0.0)) {
                indistinguishable = false;
            }
            let label_n = ensembles[si].total();
            r.estimate(format!("gap[m={m},N={label_n}]"), g, ses[si][oi], cfg.replicates).ci = Some(ci);
            let sg = g.abs() * n.sqrt();
            scaled.push(sg);
            r.estimate(format!("gap_sqrtN[m={m},N={label_n}]"), sg, ses[si][oi] * n.sqrt(), cfg.replicates);
        }
        let spread = scaled.iter().cloned().fold(f64::MIN, f64::max)
            / scaled.iter().cloned().fold(f64::MAX, f64::min);
        r.estimate(format!("gap_sqrtN_spread[m={m}]"), spread, 0.0, cfg.replicates);
        if indistinguishable {
            r.verdict(
                format!("moment gap m={m}"),
                true,
                "gaps statistically indistinguishable from 0 at every size".to_string(),
            );
            continue;
        }
        let ys: Vec<f64> = (0..totals.len()).map(|si| log_abs(gaps[si][oi])).collect();
        let slope = ols_slope(&xs, &ys);
        let mut slopes: Vec<f64> = boot
            .iter()
            .map(|d| {
                let yb: Vec<f64> = (0..totals.len()).map(|si| log_abs(d[si][oi])).collect();
                ols_slope(&xs, &yb)
            })
            .collect();
        let ci = if slopes.is_empty() {
            (slope, slope)
        } else {
            percentile_interval(&mut slopes, CI_LEVEL)
        };
        let se = if slopes.len() > 1 {
            let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
            (slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (slopes.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        r.estimate(format!("slope[m={m}]"), slope, se, cfg.replicates).ci = Some(ci);
        let exact_side = ses.iter().all(|s| s[oi] == 0.0);
        let passed = slope <= cfg.slope_threshold && (exact_side || ci.1 < 0.0);
        r.verdict(
            format!("moment gap m={m}"),
            passed,
            format!(
                "slope {slope:.4} (95% CI {:.4}..{:.4}) vs threshold {}",
                ci.0, ci.1, cfg.slope_threshold
            ),
        );
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// total variation

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    pub tv_hat: f64,
    pub ci: (f64, f64),
    /// Bootstrap estimate of the upward bias of the plug-in estimator.
    pub bias: f64,
    pub replicates: u64,
}

pub fn tv_from_histograms(z: &Histogram, zhat: &Histogram, bootstrap: usize, seed: u64, task: &str) -> TvEstimate {
    let tv_hat = z.total_variation(zhat);
    let t = tag(task);
    let mut draws: Vec<f64> = (0..bootstrap)
        .map(|b| {
            let mut rng = replicate_rng(seed, t, b as u64);
            z.resample(&mut rng).total_variation(&zhat.resample(&mut rng))
        })
        .collect();
    let bias = if draws.is_empty() {
        0.0
    } else {
        draws.iter().sum::<f64>() / draws.len() as f64 - tv_hat
    };
    let ci = if draws.is_empty() {
        (tv_hat, tv_hat)
    } else {
        percentile_interval(&mut draws, CI_LEVEL)
    };
    TvEstimate {
        tv_hat,
        ci,
        bias,
        replicates: z.total(),
    }
}

/// Plug-in total variation distance between the pmfs of `Z` and `Ẑ`, with
/// equal sample sizes on both sides.
pub fn tv_distance_estimate(ens: &Ensemble, replicates: u64, seed: u64, bootstrap: usize) -> Result<TvEstimate> {
    if replicates < MIN_TV_REPLICATES {
        return Err(HarnessError::Parse(format!(
            "total variation needs at least {MIN_TV_REPLICATES} replicates per side"
        )));
    }
    let total = ens.total();
    let z = z_histogram(ens, replicates, seed, &format!("tv/Z/N={total}"));
    let zhat = zhat_histogram(&ens.surrogate(), replicates, seed, &format!("tv/Zhat/N={total}"));
    Ok(tv_from_histograms(&z, &zhat, bootstrap, seed, &format!("tv/bootstrap/N={total}")))
}

pub const TV_BIAS_NOTE: &str = "plug-in total variation is biased upward at finite sample sizes; \
     the bootstrap bias estimate is reported alongside each value and not subtracted";

pub fn tv_study(family: DegreeFamily, sizes: &[u64], replicates: u64, seed: u64, bootstrap: usize) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("tv", seed)
        .with_config("family", family.to_string())
        .with_config("sizes", json!(sizes))
        .with_config("replicates", replicates)
        .with_config("bootstrap", bootstrap as u64);
    r.note(TV_BIAS_NOTE);
    let mut results = Vec::new();
    for &size in sizes {
        let ens = family.instantiate(size)?;
        let est = tv_distance_estimate(&ens, replicates, seed, bootstrap)?;
        let key = format!("{}={size}", family.size_key());
        r.estimate(format!("tv[{key}]"), est.tv_hat, 0.0, replicates).ci = Some(est.ci);
        r.estimate(format!("tv_bias[{key}]"), est.bias, 0.0, replicates);
        results.push((key, est));
    }
    if results.len() >= 2 {
        let all_zero = results.iter().all(|(_, e)| e.tv_hat == 0.0);
        for w in results.windows(2) {
            let ((ka, a), (kb, b)) = (&w[0], &w[1]);
            r.verdict(
                format!("tv non-increasing {ka} -> {kb}"),
                b.ci.0 <= a.ci.1,
                format!("{:.5} [{:.5},{:.5}] -> {:.5} [{:.5},{:.5}]", a.tv_hat, a.ci.0, a.ci.1, b.tv_hat, b.ci.0, b.ci.1),
            );
        }
        let (first, last) = (&results[0].1, &results[results.len() - 1].1);
        r.verdict(
            "tv decreases over the size range",
            all_zero || last.ci.1 < first.ci.0,
            format!("first CI lower {:.5}, last CI upper {:.5}", first.ci.0, last.ci.1),
        );
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// dichotomy

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFamily {
    pub family: DegreeFamily,
    pub sizes: Vec<u64>,
    pub bounded: bool,
    /// For bounded families: every estimate must exceed this floor.
    pub floor: Option<f64>,
    /// For unbounded families: the estimate at the largest size must fall
    /// below this value.
    pub vanish: Option<f64>,
}

impl SweepFamily {
    pub fn new(family: DegreeFamily, sizes: Vec<u64>) -> Self {
        Self {
            family,
            sizes,
            bounded: family.is_bounded(),
            floor: None,
            vanish: None,
        }
    }
}

pub fn dichotomy_sweep(families: &[SweepFamily], replicates: u64, seed: u64) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("dichotomy", seed).with_config("replicates", replicates);
    let described: Vec<serde_json::Value> = families
        .iter()
        .map(|f| {
            json!({"family": f.family.to_string(), "sizes": f.sizes, "bounded": f.bounded,
                   "floor": f.floor, "vanish": f.vanish})
        })
        .collect();
    r.config.insert("families".into(), json!(described));
    for fam in families {
        let mut estimates = Vec::new();
        for &size in &fam.sizes {
            let ens = fam.family.instantiate(size)?;
            let model = ens.surrogate();
            let key = format!("{}[{}={size}]", fam.family, fam.family.size_key());
            let h = z_histogram(&ens, replicates, seed, &format!("dichotomy/{key}"));
            let est = ProbEstimate::from_histogram(&h);
            r.estimate(format!("p_simple/{key}"), est.p_hat, est.se, replicates);
            r.exact(format!("prob_simple_asymptotic/{key}"), model.prob_simple());
            r.exact(format!("loop_bound/{key}"), (-model.sum_lambda_i()).exp());
            r.exact(format!("sum_d2_over_N/{key}"), ens.square_ratio());
            estimates.push((key, est, model.prob_simple()));
        }
        if estimates.is_empty() {
            continue;
        }
        if fam.bounded {
            let floor = fam.floor.unwrap_or_else(|| {
                0.5 * estimates.iter().map(|e| e.2).fold(f64::MAX, f64::min)
            });
            let worst = estimates.iter().map(|e| e.1.p_hat).fold(f64::MAX, f64::min);
            r.verdict(
                format!("{} stays above floor", fam.family),
                worst > floor,
                format!("min p_simple {worst:.5} vs floor {floor:.5}"),
            );
        } else {
            let trend = estimates
                .windows(2)
                .all(|w| w[1].1.p_hat <= w[0].1.p_hat + 4.0 * w[0].1.se.hypot(w[1].1.se));
            r.verdict(
                format!("{} p_simple non-increasing", fam.family),
                trend,
                "each estimate at most 4 combined se above the previous one".to_string(),
            );
            if let Some(v) = fam.vanish {
                let last = estimates.last().expect("nonempty");
                r.verdict(
                    format!("{} vanishes", fam.family),
                    last.1.p_hat < v,
                    format!("p_simple {:.5} at {} vs {v}", last.1.p_hat, last.0),
                );
            }
        }
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// splitting

pub fn splitting_comparison(ds: &DegreeSequence, a: f64, replicates: u64, seed: u64, margin: f64) -> Result<ExperimentReport> {
    let split = ds.split(a)?;
    let mut r = ExperimentReport::new("split", seed)
        .with_config("ensemble", describe(&Ensemble::General(ds.clone())))
        .with_config("A", a)
        .with_config("replicates", replicates)
        .with_config("margin", margin);
    let raw_ens = Ensemble::General(ds.clone());
    let raw = ProbEstimate::from_histogram(&z_histogram(&raw_ens, replicates, seed, "split/raw"));
    let unchanged = &split == ds;
    let sp = if unchanged {
        raw
    } else {
        let split_ens = Ensemble::General(split.clone());
        ProbEstimate::from_histogram(&z_histogram(&split_ens, replicates, seed, "split/split"))
    };
    r.estimate("p_simple/raw", raw.p_hat, raw.se, replicates);
    r.estimate("p_simple/split", sp.p_hat, sp.se, replicates);
    r.exact("sum_squares_over_N/raw", ds.square_ratio());
    r.exact("sum_squares_over_N/split", split.square_ratio());
    r.exact("split_vertices_added", (split.len() - ds.len()) as f64);
    let bound = (-(a - 1.0) / 2.0).exp();
    r.exact("bound_exp_-(A-1)/2", bound);
    let split_loop = (-(split.sum_d2() as f64) / (2.0 * split.total() as f64)).exp();
    r.exact("bound_exp_-sum_split_d2/2N", split_loop);
    if unchanged {
        r.note("sequence already satisfies the square bound; the split sequence is identical");
    }
    let tol = 4.0 * raw.se.hypot(sp.se);
    r.verdict(
        "raw <= split",
        raw.p_hat <= sp.p_hat + tol,
        format!("{:.5} <= {:.5} + {tol:.5}", raw.p_hat, sp.p_hat),
    );
    if ds.square_ratio() > a {
        r.verdict(
            "raw <= exp(-(A-1)/2) + margin",
            raw.p_hat <= bound + margin,
            format!("{:.5} <= {bound:.5} + {margin}", raw.p_hat),
        );
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// bipartite diagnostics

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteConfig {
    pub m_max: usize,
    pub replicates: u64,
    pub seed: u64,
    /// Finite-scale proxy for the `Ω(N)` tail conditions.
    pub omega_threshold: f64,
    /// Finite-scale proxy for the `O(N²)` pair condition.
    pub r1_bound: f64,
}

impl Default for BipartiteConfig {
    fn default() -> Self {
        Self {
            m_max: 3,
            replicates: 100_000,
            seed: 0,
            omega_threshold: 0.05,
            r1_bound: 10.0,
        }
    }
}

pub fn bipartite_conditions(bp: &BipartiteDegreePair, cfg: &BipartiteConfig) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("bipartite", cfg.seed)
        .with_config("ensemble", describe(&Ensemble::Bipartite(bp.clone())))
        .with_config("m_max", cfg.m_max as u64)
        .with_config("replicates", cfg.replicates)
        .with_config("omega_threshold", cfg.omega_threshold)
        .with_config("r1_bound", cfg.r1_bound);
    let r1 = bp.pair_ratio();
    r.exact("r1", r1);
    r.verdict(
        "pair condition r1 bounded",
        r1 <= cfg.r1_bound,
        format!("r1 = {r1:.5} vs {}", cfg.r1_bound),
    );
    let mut tails_hold = true;
    for m in 1..=cfg.m_max {
        let (left, right) = bp.tail_ratios(m);
        r.exact(format!("tail_ratio_s[m={m}]"), left);
        r.exact(format!("tail_ratio_t[m={m}]"), right);
        let ok = left >= cfg.omega_threshold && right >= cfg.omega_threshold;
        tails_hold &= ok;
        r.verdict(
            format!("tail conditions m={m}"),
            ok,
            format!("s-side {left:.5}, t-side {right:.5} vs {}", cfg.omega_threshold),
        );
    }
    let model = SurrogateModel::from_bipartite(bp);
    let pred = model.prob_simple();
    r.exact("prob_simple_product_form", pred);
    if cfg.replicates > 0 {
        let ens = Ensemble::Bipartite(bp.clone());
        let est = ProbEstimate::from_histogram(&z_histogram(&ens, cfg.replicates, cfg.seed, "bipartite"));
        r.estimate("p_simple", est.p_hat, est.se, cfg.replicates);
        let max_deg = bp.left().iter().chain(bp.right()).copied().max().unwrap_or(0);
        let small = f64::from(max_deg) <= (bp.total() as f64).sqrt();
        if small && tails_hold {
            r.verdict(
                "p_simple within 4 se of product form",
                est.within(pred, 4.0),
                format!("|{:.5} - {pred:.5}| vs 4 se = {:.5}", est.p_hat, 4.0 * est.se),
            );
        } else {
            r.note("degrees are not small relative to N or tail conditions fail; product form reported only");
        }
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// oracle suite

/// Fixed corpus of small ensembles (every `N ≤ 10`).
pub fn oracle_corpus() -> Vec<Ensemble> {
    let general: &[&[u32]] = &[
        &[2], &[1, 1], &[2, 2], &[2, 2, 2], &[4, 2, 2], &[3, 3, 2], &[4], &[3, 1], &[2, 1, 1],
        &[1, 1, 1, 1], &[3, 3], &[4, 4], &[2, 2, 2, 2], &[3, 3, 1, 1], &[5, 1, 1, 1], &[6],
        &[2, 2, 1, 1], &[3, 1, 1, 1], &[4, 1, 1], &[6, 2, 2], &[2, 2, 2, 2, 2], &[3, 3, 3, 1],
        &[5, 3, 1, 1], &[4, 4, 2], &[1, 1, 1, 1, 1, 1], &[3, 2, 2, 1], &[8, 1, 1], &[5, 5],
        &[2, 2, 2, 1, 1], &[0, 2, 2, 0],
    ];
    let bipartite: &[(&[u32], &[u32])] = &[
        (&[2], &[2]), (&[1, 1], &[1, 1]), (&[2, 2], &[2, 2]), (&[2, 1], &[1, 1, 1]), (&[3], &[1, 1, 1]),
        (&[2, 2, 1], &[3, 2]), (&[3, 2], &[2, 2, 1]), (&[4, 1], &[2, 2, 1]), (&[2, 2], &[1, 1, 1, 1]),
        (&[3, 1, 1], &[2, 2, 1]),
    ];
    let mut out: Vec<Ensemble> = general
        .iter()
        .map(|d| Ensemble::General(DegreeSequence::new(d.to_vec()).expect("valid corpus entry")))
        .collect();
    out.extend(bipartite.iter().map(|(s, t)| {
        Ensemble::Bipartite(BipartiteDegreePair::new(s.to_vec(), t.to_vec()).expect("valid corpus entry"))
    }));
    out
}

pub fn label(ens: &Ensemble) -> String {
    match ens {
        Ensemble::General(ds) => format!("{:?}", ds.degrees()).replace(' ', ""),
        Ensemble::Bipartite(bp) => {
            format!("s={:?},t={:?}", bp.left(), bp.right()).replace(' ', "")
        }
    }
}

pub fn exact_summary(ens: &Ensemble, max_total: u64) -> Result<ExactSummary> {
    Ok(match ens {
        Ensemble::General(ds) => enumerate_exact(ds, max_total)?,
        Ensemble::Bipartite(bp) => enumerate_exact_bipartite(bp, max_total)?,
    })
}

/// Per-vertex and per-pair expectations by enumeration:
/// `E X_i`, `E (X_i)_2` and `E Y_ij` with `Y_ij = C(X_ij, 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedExpectations {
    pub ex: Vec<f64>,
    pub ex_falling2: Vec<f64>,
    pub ey: BTreeMap<(usize, usize), f64>,
}

pub fn enumerated_expectations(ds: &DegreeSequence, max_total: u64) -> Result<EnumeratedExpectations> {
    let n = ds.len();
    let mut sx = vec![0u64; n];
    let mut sx2 = vec![0u64; n];
    let mut sy: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let leaves = visit_matchings(ds, max_total, |p| {
        let stats = p.collision_stats();
        for (&v, &x) in &stats.loops {
            let x = u64::from(x);
            sx[v as usize] += x;
            sx2[v as usize] += x * x.saturating_sub(1);
        }
        for (&(u, v), &x) in &stats.multiplicities {
            let x = u64::from(x);
            *sy.entry((u as usize, v as usize)).or_insert(0) += x * x.saturating_sub(1) / 2;
        }
    })? as f64;
    let mut ey = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            ey.insert((i, j), sy.get(&(i, j)).copied().unwrap_or(0) as f64 / leaves);
        }
    }
    Ok(EnumeratedExpectations {
        ex: sx.iter().map(|&s| s as f64 / leaves).collect(),
        ex_falling2: sx2.iter().map(|&s| s as f64 / leaves).collect(),
        ey,
    })
}

pub const CLOSED_FORM_RTOL: f64 = 1e-10;

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= CLOSED_FORM_RTOL * b.abs()
}

/// Largest relative disagreement between the closed forms and enumeration,
/// or `None` when everything agrees.
pub fn closed_form_mismatch(ds: &DegreeSequence, max_total: u64) -> Result<Option<String>> {
    let en = enumerated_expectations(ds, max_total)?;
    for i in 0..ds.len() {
        let checks = [
            ("E X", exact_ex_i(ds, i)?, en.ex[i]),
            ("E (X)_1", exact_factorial_ex_i(ds, i, 1)?, en.ex[i]),
        ];
        for (what, a, b) in checks {
            if !close(a, b) {
                return Ok(Some(format!("{what}_{i}: closed form {a} vs enumeration {b}")));
            }
        }
        if ds.total() >= 4 {
            let a = exact_factorial_ex_i(ds, i, 2)?;
            if !close(a, en.ex_falling2[i]) {
                return Ok(Some(format!("E (X)_2 at {i}: closed form {a} vs enumeration {}", en.ex_falling2[i])));
            }
        }
    }
    if ds.total() >= 4 {
        for (&(i, j), &b) in &en.ey {
            let a = exact_ey_ij(ds, i, j)?;
            if !close(a, b) {
                return Ok(Some(format!("E Y_{i}{j}: closed form {a} vs enumeration {b}")));
            }
        }
    }
    Ok(None)
}

pub fn oracle_suite(max_total: u64, replicates: u64, seed: u64) -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("oracle", seed)
        .with_config("max_N", max_total)
        .with_config("replicates", replicates);
    for ens in oracle_corpus().into_iter().filter(|e| e.total() <= max_total) {
        let name = label(&ens);
        let exact = exact_summary(&ens, max_total.max(10))?;
        let p = exact.prob_simple();
        r.exact(format!("p_simple/{name}"), p);
        let h = z_histogram(&ens, replicates, seed, &format!("oracle/{name}"));
        let est = ProbEstimate::from_histogram(&h);
        r.estimate(format!("p_simple/{name}"), est.p_hat, est.se, replicates);
        r.verdict(
            format!("monte carlo vs enumeration {name}"),
            est.within(p, 4.0),
            format!("|{:.6} - {p:.6}| vs 4 se = {:.6}", est.p_hat, 4.0 * est.se),
        );
        if let Ensemble::General(ds) = &ens {
            let mismatch = closed_form_mismatch(ds, max_total.max(10))?;
            r.verdict(
                format!("closed forms vs enumeration {name}"),
                mismatch.is_none(),
                mismatch.unwrap_or_else(|| format!("agree to relative {CLOSED_FORM_RTOL}")),
            );
        }
        if name == "[2,2,2]" && replicates >= MIN_TV_REPLICATES {
            let counts: Vec<u64> = (0..=exact.z_counts.keys().max().copied().unwrap_or(0))
                .map(|z| exact.z_counts.get(&z).copied().unwrap_or(0))
                .collect();
            let exact_hist = Histogram::from_counts(counts);
            let zhat = zhat_histogram(&ens.surrogate(), replicates, seed, "oracle/tv/[2,2,2]");
            let tv = exact_hist.total_variation(&zhat);
            r.estimate("tv_exact_vs_zhat/[2,2,2]", tv, 0.0, replicates);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use confmodel_core::degrees::make_ones;

    #[test]
    fn trivial_probabilities() {
        let ones = Ensemble::General(DegreeSequence::new(vec![1, 1]).unwrap());
        let e = estimate_prob_simple(&ones, 100, 1).unwrap();
        assert_eq!((e.p_hat, e.se), (1.0, 0.0));
        let loop_only = Ensemble::General(DegreeSequence::new(vec![2]).unwrap());
        assert_eq!(estimate_prob_simple(&loop_only, 100, 1).unwrap().p_hat, 0.0);
        assert!(estimate_prob_simple(&ones, 0, 1).is_err());
    }

    #[test]
    fn control_variate_is_unbiased_for_first_moment() {
        let h = Histogram::from_counts(vec![10, 20, 5, 1]);
        let mu = 0.9;
        let (est, se) = moment_estimate(&h, 1, Some(mu));
        assert!((est - mu).abs() < 1e-12);
        assert!(se < 1e-9);
    }

    #[test]
    fn ols_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 0.5, 0.0, -0.5];
        assert!((ols_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn tv_of_ones_is_zero() {
        let ens = Ensemble::General(make_ones(50).unwrap());
        let est = tv_distance_estimate(&ens, MIN_TV_REPLICATES, 2, 50).unwrap();
        assert_eq!(est.tv_hat, 0.0);
        assert_eq!(est.ci, (0.0, 0.0));
        assert!(tv_distance_estimate(&ens, 10, 2, 50).is_err());
    }

    #[test]
    fn ones_family_has_zero_gaps() {
        let mut cfg = MomentGapConfig::new(DegreeFamily::Ones, vec![10, 40, 100, 400], vec![1, 2]);
        cfg.replicates = 200;
        cfg.bootstrap = 20;
        let r = moment_gap_study(&cfg).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        assert_eq!(r.find("gap[m=2,N=400]").unwrap().value, 0.0);
    }

    #[test]
    fn moment_gap_rejects_growing_ratio() {
        let cfg = MomentGapConfig::new(
            DegreeFamily::PowerBlock { exponent: 0.8 },
            vec![100, 1000, 10_000, 100_000],
            vec![1],
        );
        assert!(matches!(moment_gap_study(&cfg), Err(HarnessError::AssumptionViolated(_))));
        let few = MomentGapConfig::new(DegreeFamily::Regular { d: 3 }, vec![100, 200], vec![1]);
        assert!(moment_gap_study(&few).is_err());
    }

    #[test]
    fn split_of_satisfied_sequence_is_identical() {
        let ds = DegreeSequence::new(vec![2, 2, 2]).unwrap();
        let r = splitting_comparison(&ds, 2.0, 1000, 4, 0.05).unwrap();
        assert_eq!(r.find("p_simple/raw").unwrap().value, r.find("p_simple/split").unwrap().value);
        assert!(r.passed());
    }

    #[test]
    fn corpus_shape() {
        let corpus = oracle_corpus();
        assert!(corpus.len() >= 30);
        assert!(corpus.iter().all(|e| e.total() <= 10));
        assert!(corpus.iter().any(Ensemble::is_bipartite));
        let labels: Vec<String> = corpus.iter().map(label).collect();
        for required in ["[2]", "[1,1]", "[2,2]", "[2,2,2]", "[4,2,2]", "[3,3,2]"] {
            assert!(labels.iter().any(|l| l == required), "{required}");
        }
    }

    #[test]
    fn closed_forms_match_on_small_sequence() {
        let ds = DegreeSequence::new(vec![3, 3, 2]).unwrap();
        assert_eq!(closed_form_mismatch(&ds, 10).unwrap(), None);
    }

    #[test]
    fn bipartite_all_ones() {
        let bp = BipartiteDegreePair::new(vec![1; 10], vec![1; 10]).unwrap();
        let cfg = BipartiteConfig { replicates: 1000, ..BipartiteConfig::default() };
        let r = bipartite_conditions(&bp, &cfg).unwrap();
        assert_eq!(r.exact_refs["r1"], 0.0);
        assert_eq!(r.find("p_simple").unwrap().value, 1.0);
        assert!(r.passed(), "{:?}", r.verdicts);
    }
}
