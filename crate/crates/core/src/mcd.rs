//! Fast minimum-covariance-determinant estimator over the continuous block.
//!
//! The search seeds (p+1)-point elemental subsets (all of them when that is
//! cheap enough, otherwise a seeded random sample), inflates each to an
//! h-subset, concentrates twice, carries the best candidates to convergence,
//! and rescales the winning subset's moments by the usual consistency and
//! small-sample correction factors. Raw distances against a chi-square
//! cutoff then give the binary weight vector, and the final location and
//! scatter are the weighted moments rescaled once more.
//!
//! Determinism: every trial draws from a stream derived only from
//! (seed, trial index), and all ties (distance ranks, equal determinants)
//! break toward the lower row index / lexicographically smaller subset.

use crate::chi2::{chi2_cdf, chi2_quantile};
use crate::matrix::{weighted_moments, Matrix, SymmetricPosDef, DEFAULT_RANK_TOL};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McdError {
    #[error("MCD needs n > p + 1 rows (n = {n}, p = {p})")]
    TooFewRows { n: usize, p: usize },
    #[error("column {} of the continuous block is constant; MCD scatter would be singular", column + 1)]
    ConstantColumn { column: usize },
    #[error("exact fit: {} observations lie on a lower-dimensional affine subspace (rows {})", subset.len(), format_subset(subset))]
    ExactFit { subset: Vec<usize> },
    #[error("only {active} observations kept by the reweighting cutoff; need at least {needed} for a nonsingular weighted covariance")]
    TooFewWeights { active: usize, needed: usize },
    #[error("weighted covariance is singular at column {}", column + 1)]
    SingularWeighted { column: usize },
    #[error("invalid MCD configuration: {message}")]
    InvalidConfig { message: String },
}

fn format_subset(subset: &[usize]) -> String {
    const SHOW: usize = 10;
    let mut s: Vec<String> = subset.iter().take(SHOW).map(|i| (i + 1).to_string()).collect();
    if subset.len() > SHOW {
        s.push("...".to_string());
    }
    s.join(", ")
}

/// Tuning for the MCD search.
#[derive(Debug, Clone)]
pub struct McdConfig {
    /// Subset fraction in [0.5, 1]; 0.5 gives the maximal-breakdown
    /// h = floor((n + p + 1) / 2), 1 gives the classical estimator.
    pub alpha: f64,
    /// Random elemental starts when full enumeration is too large.
    pub n_trials: usize,
    /// Candidates carried from two concentration steps to full convergence.
    pub n_keep: usize,
    /// Chi-square probability for the reweighting cutoff.
    pub reweight_prob: f64,
    pub seed: u64,
    /// Apply the finite-sample correction factors.
    pub small_sample_correction: bool,
    /// Replace the computed rescale factor c entirely.
    pub c_override: Option<f64>,
}

impl Default for McdConfig {
    fn default() -> Self {
        McdConfig {
            alpha: 0.5,
            n_trials: 500,
            n_keep: 10,
            reweight_prob: 0.975,
            seed: 1,
            small_sample_correction: true,
            c_override: None,
        }
    }
}

/// Result of the MCD fit over an n x p continuous block.
#[derive(Debug, Clone, PartialEq)]
pub struct McdFit {
    /// Reweighted location T_rob.
    pub location: Vec<f64>,
    /// Reweighted scatter C_rob, all correction factors applied.
    pub scatter: SymmetricPosDef,
    /// Best-subset mean.
    pub raw_location: Vec<f64>,
    /// Best-subset covariance times the raw correction factors.
    pub raw_scatter: SymmetricPosDef,
    /// Binary reweighting vector, one entry per observation.
    pub weights: Vec<u8>,
    /// Rescale factor applied to the weighted covariance.
    pub c: f64,
    /// Sorted optimal h-subset.
    pub best_subset: Vec<usize>,
    /// log det of the best subset's sample covariance (divisor h - 1),
    /// before any correction factor.
    pub best_logdet: f64,
    /// Subset size used by the search.
    pub h: usize,
}

impl McdFit {
    pub fn sum_weights(&self) -> usize {
        self.weights.iter().map(|&w| w as usize).sum()
    }

    /// Build a fit directly from a binary weight vector and rescale factor.
    ///
    /// This is the estimator contract the rest of the pipeline consumes: any
    /// weighted location/scatter estimator can be plugged in this way. The
    /// raw fields coincide with the final ones.
    pub fn from_weights(x2: &Matrix, weights: Vec<u8>, c: f64) -> Result<Self, McdError> {
        if weights.len() != x2.rows() {
            return Err(McdError::InvalidConfig {
                message: format!(
                    "weight vector length {} does not match {} rows",
                    weights.len(),
                    x2.rows()
                ),
            });
        }
        if !(c > 0.0) {
            return Err(McdError::InvalidConfig { message: format!("c must be positive, got {c}") });
        }
        let p = x2.cols();
        let active: usize = weights.iter().map(|&w| w as usize).sum();
        if active < p + 2 {
            return Err(McdError::TooFewWeights { active, needed: p + 2 });
        }
        let (mean, cov) = weighted_moments(x2, &weights)
            .map_err(|e| McdError::InvalidConfig { message: e.to_string() })?;
        let mut scaled = cov.clone();
        scale_in_place(&mut scaled, c);
        let scatter = SymmetricPosDef::from_matrix(&scaled, DEFAULT_RANK_TOL)
            .map_err(|rd| McdError::SingularWeighted { column: rd.column })?;
        let logdet = SymmetricPosDef::from_matrix(&cov, DEFAULT_RANK_TOL)
            .map_err(|rd| McdError::SingularWeighted { column: rd.column })?
            .log_det();
        let subset: Vec<usize> =
            weights.iter().enumerate().filter(|(_, &w)| w == 1).map(|(i, _)| i).collect();
        Ok(McdFit {
            location: mean.clone(),
            scatter: scatter.clone(),
            raw_location: mean,
            raw_scatter: scatter,
            weights,
            c,
            best_subset: subset,
            best_logdet: logdet,
            h: active,
        })
    }
}

/// h for a given subset fraction: floor(2*n2 - n + 2*(n - n2)*alpha) with
/// n2 = floor((n + p + 1) / 2), clamped to [n2, n].
pub fn subset_size(alpha: f64, n: usize, p: usize) -> usize {
    let n2 = (n + p + 1) / 2;
    let h = (2.0 * n2 as f64 - n as f64 + 2.0 * (n - n2) as f64 * alpha).floor() as usize;
    h.clamp(n2.min(n), n)
}

/// Asymptotic consistency factor for an alpha-trimmed covariance:
/// alpha / P(chi2_{p+2} <= chi2 quantile(alpha, p)). Equals 1 at alpha = 1.
pub fn consistency_factor(alpha_actual: f64, p: usize) -> f64 {
    assert!(alpha_actual > 0.0 && alpha_actual <= 1.0, "alpha_actual must lie in (0, 1]");
    if alpha_actual >= 1.0 {
        return 1.0;
    }
    let q = chi2_quantile(alpha_actual, p).expect("alpha_actual checked in (0, 1)");
    alpha_actual / chi2_cdf(q, p + 2)
}

/// Which estimation stage a small-sample factor corrects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionStage {
    Raw,
    Reweighted,
}

/// Finite-sample correction factor for the MCD covariance, from the
/// simulation-fitted approximations of Pison, Van Aelst and Willems.
/// Always >= 1 for realistic n and tends to 1 as n grows.
pub fn small_sample_factor(n: usize, p: usize, alpha: f64, stage: CorrectionStage) -> f64 {
    assert!(p >= 1 && n > p, "need n > p >= 1");
    assert!((0.5..=1.0).contains(&alpha), "alpha must lie in [0.5, 1]");
    let nf = n as f64;
    let (fp500, fp875) = match (stage, p) {
        (CorrectionStage::Raw, 1) => (
            1.0 - (0.262024211897096f64).exp() / nf.powf(0.604756680630497),
            1.0 - (-0.351584646688712f64).exp() / nf.powf(1.01646567502486),
        ),
        (CorrectionStage::Raw, 2) => (
            1.0 - (0.673292623522027f64).exp() / nf.powf(0.691365864961895),
            1.0 - (0.446537815635445f64).exp() / nf.powf(1.06690782995919),
        ),
        (CorrectionStage::Raw, _) => (
            fitted_fp(p, nf, -1.42764571687802, 1.26263336932151, -1.06141115981725, 1.28907991440387),
            fitted_fp(p, nf, -0.455179464070565, 1.11192541278794, -0.294241208320834, 1.09649329149811),
        ),
        (CorrectionStage::Reweighted, 1) => (
            1.0 - (1.11098143415027f64).exp() / nf.powf(1.5182890270453),
            1.0 - (-0.66046776772861f64).exp() / nf.powf(0.88939595831888),
        ),
        (CorrectionStage::Reweighted, 2) => (
            1.0 - (3.11101712909049f64).exp() / nf.powf(1.91401056721863),
            1.0 - (0.79473550581058f64).exp() / nf.powf(1.10081930350091),
        ),
        (CorrectionStage::Reweighted, _) => (
            fitted_fp(p, nf, -1.02842572724793, 1.67659883081926, -0.26800273450853, 1.35968562893582),
            fitted_fp(p, nf, -0.544482443573914, 1.25994483222292, -0.343791072183285, 1.25159004257133),
        ),
    };
    let fp = if alpha <= 0.875 {
        fp500 + (fp875 - fp500) / 0.375 * (alpha - 0.5)
    } else {
        fp875 + (1.0 - fp875) / 0.125 * (alpha - 0.875)
    };
    1.0 / fp
}

/// General-dimension branch of the fitted approximation: solve the 2x2
/// system through the two anchor sample sizes q = 2, 3 (times p^2).
fn fitted_fp(p: usize, n: f64, alfaq2: f64, betaq2: f64, alfaq3: f64, betaq3: f64) -> f64 {
    let pf = p as f64;
    let y2 = (-alfaq2 / pf.powf(betaq2)).ln();
    let y3 = (-alfaq3 / pf.powf(betaq3)).ln();
    let a2 = -(2.0 * pf * pf / n).ln();
    let a3 = -(3.0 * pf * pf / n).ln();
    // [1 a2; 1 a3] [c0 c1]' = [y2 y3]'
    let det = a3 - a2;
    let c0 = (y2 * a3 - a2 * y3) / det;
    let c1 = (y3 - y2) / det;
    1.0 - c0.exp() / n.powf(c1)
}

fn scale_in_place(m: &mut Matrix, s: f64) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            m.set(i, j, m.get(i, j) * s);
        }
    }
}

fn indicator(n: usize, subset: &[usize]) -> Vec<u8> {
    let mut w = vec![0u8; n];
    for &i in subset {
        w[i] = 1;
    }
    w
}

/// Moments of a subset (divisor |subset| - 1), or the subset itself as an
/// exact-fit error when its covariance is singular.
fn subset_moments(x2: &Matrix, subset: &[usize]) -> Result<(Vec<f64>, SymmetricPosDef), McdError> {
    let w = indicator(x2.rows(), subset);
    let (mean, cov) = weighted_moments(x2, &w)
        .map_err(|_| McdError::ExactFit { subset: subset.to_vec() })?;
    let spd = SymmetricPosDef::from_matrix(&cov, DEFAULT_RANK_TOL)
        .map_err(|_| McdError::ExactFit { subset: subset.to_vec() })?;
    Ok((mean, spd))
}

fn squared_distances(x2: &Matrix, mean: &[f64], spd: &SymmetricPosDef) -> Vec<f64> {
    let p = x2.cols();
    let mut dev = vec![0.0; p];
    (0..x2.rows())
        .map(|i| {
            for (j, v) in x2.row(i).iter().enumerate() {
                dev[j] = v - mean[j];
            }
            spd.quad_form(&dev)
        })
        .collect()
}

/// Indices of the h smallest distances, ties broken by lower index,
/// returned sorted ascending.
fn smallest_h(d: &[f64], h: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("distances are finite").then(a.cmp(&b)));
    let mut subset: Vec<usize> = order[..h].to_vec();
    subset.sort_unstable();
    subset
}

/// One concentration step: rank all observations by distance under the
/// subset's own moments and keep the h nearest. The new subset's covariance
/// determinant never exceeds the old one.
pub fn c_step(x2: &Matrix, subset: &[usize]) -> Result<Vec<usize>, McdError> {
    let (mean, spd) = subset_moments(x2, subset)?;
    let d = squared_distances(x2, &mean, &spd);
    Ok(smallest_h(&d, subset.len()))
}

/// Concentrate from any starting subset to an h-subset (used to inflate
/// elemental subsets).
fn concentrate_to_h(x2: &Matrix, start: &[usize], h: usize) -> Result<Vec<usize>, McdError> {
    let (mean, spd) = subset_moments(x2, start)?;
    let d = squared_distances(x2, &mean, &spd);
    Ok(smallest_h(&d, h))
}

fn log_det_of_subset(x2: &Matrix, subset: &[usize]) -> Result<f64, McdError> {
    let (_, spd) = subset_moments(x2, subset)?;
    Ok(spd.log_det())
}

/// Exact C(n, k), None on overflow (treated as "more than any trial count").
fn combinations(n: usize, k: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc)
}

/// Lexicographic (p+1)-combination enumeration.
struct Combinations {
    n: usize,
    k: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations { n, k, current: Some((0..k).collect()) }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let c = self.current.as_mut().unwrap();
        // advance
        let mut i = self.k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if c[i] < self.n - (self.k - i) {
                c[i] += 1;
                for j in i + 1..self.k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn sample_distinct(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut picked = std::collections::BTreeSet::new();
    while picked.len() < k {
        picked.insert(rng.random_range(0..n));
    }
    picked.into_iter().collect()
}

fn validate(cfg: &McdConfig) -> Result<(), McdError> {
    let bad = |message: String| Err(McdError::InvalidConfig { message });
    if !(0.5..=1.0).contains(&cfg.alpha) {
        return bad(format!("alpha must lie in [0.5, 1], got {}", cfg.alpha));
    }
    if cfg.n_trials == 0 || cfg.n_keep == 0 {
        return bad("n_trials and n_keep must be at least 1".to_string());
    }
    if !(cfg.reweight_prob > 0.0 && cfg.reweight_prob < 1.0) {
        return bad(format!("reweight_prob must lie in (0, 1), got {}", cfg.reweight_prob));
    }
    if let Some(c) = cfg.c_override {
        if !(c > 0.0) {
            return bad(format!("c_override must be positive, got {c}"));
        }
    }
    Ok(())
}

/// Run the full MCD pipeline over the continuous block.
pub fn fast_mcd(x2: &Matrix, cfg: &McdConfig) -> Result<McdFit, McdError> {
    validate(cfg)?;
    let (n, p) = (x2.rows(), x2.cols());
    if n <= p + 1 {
        return Err(McdError::TooFewRows { n, p });
    }
    if let Some(&column) = crate::classical::constant_columns(x2).first() {
        return Err(McdError::ConstantColumn { column });
    }
    let h = subset_size(cfg.alpha, n, p);
    if h == n {
        return classical_fit(x2, cfg);
    }

    // stage 1: elemental starts, inflation, two concentration steps
    let enumerate_all = combinations(n, p + 1)
        .map(|total| total <= cfg.n_trials as u128)
        .unwrap_or(false);
    let mut candidates: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut push_candidate = |subset: Vec<usize>, x2: &Matrix| -> Result<(), McdError> {
        let mut s = concentrate_to_h(x2, &subset, h)?;
        for _ in 0..2 {
            s = c_step(x2, &s)?;
        }
        let ld = log_det_of_subset(x2, &s)?;
        candidates.push((ld, s));
        Ok(())
    };

    if enumerate_all {
        for elemental in Combinations::new(n, p + 1) {
            // singular elementals carry no metric; skip them
            if subset_moments(x2, &elemental).is_err() {
                continue;
            }
            push_candidate(elemental, x2)?;
        }
        if candidates.is_empty() {
            return Err(McdError::ExactFit { subset: (0..n).collect() });
        }
    } else {
        for trial in 0..cfg.n_trials {
            let mut rng = trial_rng(cfg.seed, trial as u64);
            let mut elemental = sample_distinct(&mut rng, n, p + 1);
            // extend a degenerate elemental subset with further random
            // points until its covariance is nonsingular
            while subset_moments(x2, &elemental).is_err() {
                if elemental.len() == n {
                    return Err(McdError::ExactFit { subset: elemental });
                }
                loop {
                    let extra = rng.random_range(0..n);
                    if !elemental.contains(&extra) {
                        elemental.push(extra);
                        elemental.sort_unstable();
                        break;
                    }
                }
            }
            push_candidate(elemental, x2)?;
        }
    }

    // stage 2: carry the best candidates to convergence
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("log dets are finite").then_with(|| a.1.cmp(&b.1)));
    candidates.dedup_by(|a, b| a.1 == b.1);
    candidates.truncate(cfg.n_keep);

    let mut best: Option<(f64, Vec<usize>)> = None;
    for (_, mut subset) in candidates {
        for _ in 0..200 {
            let next = c_step(x2, &subset)?;
            if next == subset {
                break;
            }
            subset = next;
        }
        let ld = log_det_of_subset(x2, &subset)?;
        let better = match &best {
            None => true,
            Some((bld, bsub)) => ld < *bld || (ld == *bld && subset < *bsub),
        };
        if better {
            best = Some((ld, subset));
        }
    }
    let (best_logdet, best_subset) = best.expect("at least one candidate survives");

    // stage 3: raw moments, correction, reweighting
    let (raw_location, raw_cov) =
        weighted_moments(x2, &indicator(n, &best_subset)).expect("h >= 2 active weights");
    let raw_factor = consistency_factor(h as f64 / n as f64, p)
        * if cfg.small_sample_correction {
            small_sample_factor(n, p, cfg.alpha, CorrectionStage::Raw)
        } else {
            1.0
        };
    let mut raw_scaled = raw_cov;
    scale_in_place(&mut raw_scaled, raw_factor);
    let raw_scatter = SymmetricPosDef::from_matrix(&raw_scaled, DEFAULT_RANK_TOL)
        .map_err(|_| McdError::ExactFit { subset: best_subset.clone() })?;

    let cutoff =
        chi2_quantile(cfg.reweight_prob, p).expect("reweight_prob validated in (0, 1)");
    let d = squared_distances(x2, &raw_location, &raw_scatter);
    let weights: Vec<u8> = d.iter().map(|&v| u8::from(v <= cutoff)).collect();
    let sum_w: usize = weights.iter().map(|&w| w as usize).sum();
    if sum_w < p + 2 {
        return Err(McdError::TooFewWeights { active: sum_w, needed: p + 2 });
    }

    // stage 4: reweighted moments and the final rescale factor
    let (location, weighted_cov) =
        weighted_moments(x2, &weights).expect("sum_w >= p + 2 >= 2");
    let c = cfg.c_override.unwrap_or_else(|| {
        if sum_w == n {
            1.0
        } else {
            consistency_factor(sum_w as f64 / n as f64, p)
                * if cfg.small_sample_correction {
                    small_sample_factor(n, p, cfg.alpha, CorrectionStage::Reweighted)
                } else {
                    1.0
                }
        }
    });
    let mut final_cov = weighted_cov;
    scale_in_place(&mut final_cov, c);
    let scatter = SymmetricPosDef::from_matrix(&final_cov, DEFAULT_RANK_TOL)
        .map_err(|rd| McdError::SingularWeighted { column: rd.column })?;

    Ok(McdFit {
        location,
        scatter,
        raw_location,
        raw_scatter,
        weights,
        c,
        best_subset,
        best_logdet,
        h,
    })
}

/// alpha = 1 (h = n): no trimming. The fit is the classical estimator with
/// every weight 1 and no correction factors.
fn classical_fit(x2: &Matrix, cfg: &McdConfig) -> Result<McdFit, McdError> {
    let n = x2.rows();
    let weights = vec![1u8; n];
    let (location, cov) = weighted_moments(x2, &weights).expect("n >= p + 2 rows");
    let logdet = SymmetricPosDef::from_matrix(&cov, DEFAULT_RANK_TOL)
        .map_err(|_| McdError::ExactFit { subset: (0..n).collect() })?
        .log_det();
    let c = cfg.c_override.unwrap_or(1.0);
    let mut final_cov = cov;
    scale_in_place(&mut final_cov, c);
    let scatter = SymmetricPosDef::from_matrix(&final_cov, DEFAULT_RANK_TOL)
        .map_err(|rd| McdError::SingularWeighted { column: rd.column })?;
    Ok(McdFit {
        location: location.clone(),
        scatter: scatter.clone(),
        raw_location: location,
        raw_scatter: scatter,
        weights,
        c,
        best_subset: (0..n).collect(),
        best_logdet: logdet,
        h: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(values: &[f64]) -> Matrix {
        Matrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn subset_size_defaults() {
        assert_eq!(subset_size(0.5, 59, 2), 31);
        assert_eq!(subset_size(0.5, 5, 1), 3);
        assert_eq!(subset_size(1.0, 59, 2), 59);
        // n2 = 51: floor(2*51 - 100 + 2*49*0.75) = floor(75.5) = 75
        assert_eq!(subset_size(0.75, 100, 2), 75);
    }

    #[test]
    fn c_step_reaches_fixed_point_on_spec_example() {
        let x = one_d(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        // start {3,4,5} in 1-based rows
        let s1 = c_step(&x, &[2, 3, 4]).unwrap();
        assert_eq!(s1, vec![1, 2, 3]);
        let s2 = c_step(&x, &s1).unwrap();
        assert_eq!(s2, s1, "fixed point");
    }

    #[test]
    fn c_step_identity_on_fixed_point() {
        let x = one_d(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(c_step(&x, &[0, 1, 2]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn enumeration_finds_tie_broken_global_optimum() {
        // {1,2,3} and {2,3,4} both have variance 1; lexicographic tie-break
        // picks the earlier rows
        let x = one_d(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        let fit = fast_mcd(&x, &McdConfig::default()).unwrap();
        assert_eq!(fit.h, 3);
        assert_eq!(fit.best_subset, vec![0, 1, 2]);
        assert_eq!(fit.best_logdet, 0.0); // log var = log 1
    }

    #[test]
    fn c_step_determinant_never_increases() {
        // seeded pseudo-random 2-D data, several concentration sequences
        let mut rng = trial_rng(99, 0);
        let vals: Vec<f64> = (0..60).map(|_| rng.random_range(-4.0..4.0)).collect();
        let x = Matrix::new(30, 2, vals).unwrap();
        let h = subset_size(0.5, 30, 2);
        for t in 0..5u64 {
            let mut r = trial_rng(7, t);
            let start = sample_distinct(&mut r, 30, h);
            let mut prev = log_det_of_subset(&x, &start).unwrap();
            let mut s = start;
            for _ in 0..20 {
                let next = c_step(&x, &s).unwrap();
                let ld = log_det_of_subset(&x, &next).unwrap();
                assert!(ld <= prev + 1e-12, "determinant increased: {prev} -> {ld}");
                if next == s {
                    break;
                }
                s = next;
                prev = ld;
            }
        }
    }

    #[test]
    fn consistency_factor_properties() {
        assert_eq!(consistency_factor(1.0, 2), 1.0);
        let half = consistency_factor(0.5, 2);
        assert!(half > 2.0 && half < 3.5, "got {half}");
        // frozen from an independent numeric evaluation of the truncated
        // chi-square moment
        assert!((half - 3.2588913532709274).abs() < 1e-9);
        // monotone decreasing in alpha
        let mut prev = half;
        for k in 1..=10 {
            let a = 0.5 + 0.05 * k as f64;
            let v = consistency_factor(a.min(1.0), 2);
            assert!(v < prev + 1e-12, "not decreasing at alpha={a}");
            prev = v;
        }
    }

    #[test]
    fn small_sample_factor_values() {
        let raw = small_sample_factor(59, 2, 0.5, CorrectionStage::Raw);
        assert!((1.0..=1.15).contains(&raw), "raw factor {raw}");
        assert!((raw - 1.1324733880535343).abs() < 1e-12);
        let rew = small_sample_factor(59, 2, 0.5, CorrectionStage::Reweighted);
        assert!((rew - 1.009239798004365).abs() < 1e-12);
        // approaches 1 from above as n grows
        let big = small_sample_factor(10_000, 2, 0.5, CorrectionStage::Reweighted);
        assert!(big >= 1.0 && big - 1.0 < 1e-3);
        // p > 2 branch is finite and sane
        let p5 = small_sample_factor(200, 5, 0.5, CorrectionStage::Raw);
        assert!(p5 > 1.0 && p5 < 1.5, "p=5 factor {p5}");
    }

    #[test]
    fn brute_force_oracle_small_case() {
        // n = 15, p = 2, cluster plus 3 gross outliers; the best h-subset
        // must match exhaustive enumeration over all C(15, 9) subsets
        let mut vals = Vec::new();
        let mut rng = trial_rng(17, 0);
        for _ in 0..12 {
            vals.push(rng.random_range(-1.0..1.0));
            vals.push(rng.random_range(-1.0..1.0));
        }
        for k in 0..3 {
            vals.push(50.0 + k as f64);
            vals.push(-40.0 - k as f64);
        }
        let x = Matrix::new(15, 2, vals).unwrap();
        let h = subset_size(0.5, 15, 2);
        assert_eq!(h, 9);

        let mut best: Option<(f64, Vec<usize>)> = None;
        for subset in Combinations::new(15, h) {
            if let Ok(ld) = log_det_of_subset(&x, &subset) {
                let better = match &best {
                    None => true,
                    Some((bld, _)) => ld < *bld,
                };
                if better {
                    best = Some((ld, subset));
                }
            }
        }
        let (oracle_ld, oracle_subset) = best.unwrap();

        let cfg = McdConfig { n_trials: 600, ..McdConfig::default() };
        let fit = fast_mcd(&x, &cfg).unwrap();
        assert_eq!(fit.best_subset, oracle_subset);
        assert_eq!(fit.best_logdet, oracle_ld);
    }

    #[test]
    fn alpha_one_is_classical_with_unit_weights() {
        let x = one_d(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        let cfg = McdConfig { alpha: 1.0, ..McdConfig::default() };
        let fit = fast_mcd(&x, &cfg).unwrap();
        assert_eq!(fit.weights, vec![1; 5]);
        assert_eq!(fit.c, 1.0);
        assert!((fit.location[0] - 22.0).abs() < 1e-12);
    }

    #[test]
    fn determinism_bitwise() {
        let mut rng = trial_rng(3, 0);
        let vals: Vec<f64> = (0..80).map(|_| rng.random_range(-5.0..5.0)).collect();
        let x = Matrix::new(40, 2, vals).unwrap();
        let cfg = McdConfig { seed: 42, ..McdConfig::default() };
        let a = fast_mcd(&x, &cfg).unwrap();
        let b = fast_mcd(&x, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_fit_reported_with_subset() {
        // 6 of 8 points on a line in 2-D: h = 5 of them are affinely dependent
        let vals = vec![
            0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 5.0, 5.0, 1.0, 7.0, 6.0, 2.0,
        ];
        let x = Matrix::new(8, 2, vals).unwrap();
        let err = fast_mcd(&x, &McdConfig::default()).unwrap_err();
        assert!(matches!(err, McdError::ExactFit { .. }), "got {err:?}");
    }

    #[test]
    fn constant_column_rejected() {
        let x = Matrix::new(5, 2, vec![1.0, 3.0, 1.0, 4.0, 1.0, 5.0, 1.0, 6.0, 1.0, 7.0]).unwrap();
        assert!(matches!(
            fast_mcd(&x, &McdConfig::default()),
            Err(McdError::ConstantColumn { column: 0 })
        ));
    }

    #[test]
    fn from_weights_matches_weighted_moments() {
        let x = one_d(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        let fit = McdFit::from_weights(&x, vec![1, 1, 1, 1, 0], 1.0).unwrap();
        assert!((fit.location[0] - 2.5).abs() < 1e-15);
        assert!((fit.scatter.entry(0, 0) - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(fit.sum_weights(), 4);
    }
}
