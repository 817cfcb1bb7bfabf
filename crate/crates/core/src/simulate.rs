// SPDX-License-Identifier: MIT
//! Linear-Gaussian dynamic models over a template, data generation, OLS
//! adjustment estimates and the variance comparison between adjustment sets.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::identify::AdjustmentSet;
use crate::oracle::rows_to_csv;
use crate::unroll::{FtDagTemplate, MicroQuery};

/// Draws whose companion matrix has a spectral radius at or above this are rejected.
pub const STABILITY_BOUND: f64 = 0.95;
/// Coefficient draws attempted before [`sample_linear_model`] gives up.
pub const MAX_DRAWS: usize = 200;
/// Length of the simulation run that accepted draws must survive.
pub const PROBE_HORIZON: usize = 500;

/// A linear structural model with Gaussian noise: every series is a weighted
/// sum of its template parents plus independent noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDtdscm {
    template: FtDagTemplate,
    /// Keyed by `(edge index, lag)`.
    coefficients: BTreeMap<(usize, u32), f64>,
    noise_sd: Vec<f64>,
    /// Per series: `(parent, lag, coefficient)`.
    inputs: Vec<Vec<(usize, u32, f64)>>,
    order: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientJson {
    pub edge: [String; 2],
    pub lag: u32,
    pub coefficient: f64,
}

impl LinearDtdscm {
    /// Needs exactly one coefficient per `(edge, lag)` of the template and one
    /// positive noise scale per series.
    pub fn new(template: FtDagTemplate, coefficients: BTreeMap<(usize, u32), f64>, noise_sd: Vec<f64>) -> Result<Self> {
        let g = template.scg();
        if noise_sd.len() != g.len() || noise_sd.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidConfig(
                "one positive noise scale per series is required".into(),
            ));
        }
        let mut expected = Vec::new();
        for (i, set) in template.lags().iter().enumerate() {
            for lag in set.iter() {
                expected.push((i, lag));
            }
        }
        let keys: Vec<(usize, u32)> = coefficients.keys().copied().collect();
        if keys != expected {
            return Err(Error::InvalidConfig(
                "coefficients must cover exactly the (edge, lag) pairs of the template".into(),
            ));
        }
        if coefficients.values().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("coefficients must be finite".into()));
        }
        let mut inputs = vec![Vec::new(); g.len()];
        for (&(e, lag), &c) in &coefficients {
            let (a, b) = g.edges()[e];
            inputs[b].push((a, lag, c));
        }
        let order = template.lag0_topological_order();
        Ok(LinearDtdscm {
            template,
            coefficients,
            noise_sd,
            inputs,
            order,
        })
    }

    pub fn template(&self) -> &FtDagTemplate {
        &self.template
    }

    pub fn coefficients(&self) -> &BTreeMap<(usize, u32), f64> {
        &self.coefficients
    }

    pub fn coefficient(&self, a: usize, b: usize, lag: u32) -> Option<f64> {
        let e = self.template.scg().edge_index(a, b)?;
        self.coefficients.get(&(e, lag)).copied()
    }

    pub fn noise_sd(&self) -> &[f64] {
        &self.noise_sd
    }

    pub fn coefficients_json(&self) -> Vec<CoefficientJson> {
        let g = self.template.scg();
        self.coefficients
            .iter()
            .map(|(&(e, lag), &c)| {
                let (a, b) = g.edges()[e];
                CoefficientJson {
                    edge: [g.name(a).to_string(), g.name(b).to_string()],
                    lag,
                    coefficient: c,
                }
            })
            .collect()
    }

    /// Spectral radius of the companion form of the reduced-form VAR.
    pub fn spectral_radius(&self) -> f64 {
        let n = self.template.scg().len();
        let p = self.template.gamma_max() as usize;
        let mut a = vec![DMatrix::<f64>::zeros(n, n); p + 1];
        for (b, list) in self.inputs.iter().enumerate() {
            for &(src, lag, c) in list {
                a[lag as usize][(b, src)] += c;
            }
        }
        // The lag-0 part is nilpotent, so I - A0 is always invertible.
        let m = (DMatrix::identity(n, n) - &a[0])
            .try_inverse()
            .expect("lag-0 structure is acyclic");
        let mut comp = DMatrix::<f64>::zeros(n * p, n * p);
        for (k, ak) in a.iter().enumerate().skip(1) {
            let block = &m * ak;
            comp.view_mut((0, (k - 1) * n), (n, n)).copy_from(&block);
        }
        for k in 1..p {
            comp.view_mut((k * n, (k - 1) * n), (n, n))
                .copy_from(&DMatrix::identity(n, n));
        }
        comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < STABILITY_BOUND
    }

    /// Simulates `horizon` slices and reports whether every value stays finite
    /// and below `1e6` in magnitude.
    pub fn stays_bounded(&self, horizon: usize, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.simulate(horizon, &mut rng)
            .iter()
            .all(|v| v.is_finite() && v.abs() < 1e6)
    }

    /// Simulates one replicate of `len` slices starting from zeros.
    fn simulate(&self, len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.noise_sd.len();
        let mut v = vec![0.0; len * n];
        for t in 0..len {
            for &s in &self.order {
                let eps: f64 = StandardNormal.sample(rng);
                let mut x = self.noise_sd[s] * eps;
                for &(a, lag, c) in &self.inputs[s] {
                    let lag = lag as usize;
                    if lag <= t {
                        x += c * v[(t - lag) * n + a];
                    }
                }
                v[t * n + s] = x;
            }
        }
        v
    }
}

/// Draws coefficients with `|c|` uniform in `[coef_low, coef_high]` and a random
/// sign, and noise scales uniform in `[0.5, 1.5]`, until the model is stable.
pub fn sample_linear_model(tmpl: &FtDagTemplate, coef_low: f64, coef_high: f64, seed: u64) -> Result<LinearDtdscm> {
    if !(coef_low > 0.0 && coef_low <= coef_high && coef_high.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "coefficient bounds [{coef_low}, {coef_high}] must satisfy 0 < low <= high"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let mut coefficients = BTreeMap::new();
        for (i, set) in tmpl.lags().iter().enumerate() {
            for lag in set.iter() {
                let mag = rng.random_range(coef_low..=coef_high);
                let c = if rng.random_bool(0.5) { mag } else { -mag };
                coefficients.insert((i, lag), c);
            }
        }
        let noise_sd = (0..tmpl.scg().len()).map(|_| rng.random_range(0.5..=1.5)).collect();
        let model = LinearDtdscm::new(tmpl.clone(), coefficients, noise_sd)?;
        if model.is_stable() && model.stays_bounded(PROBE_HORIZON, seed) {
            return Ok(model);
        }
    }
    Err(Error::Unstable(MAX_DRAWS))
}

/// Independent replicates of a multivariate series.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub replicates: usize,
    pub horizon: usize,
    pub names: Vec<String>,
    /// Replicate-major, then time, then series.
    values: Vec<f64>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    replicate: usize,
    time: usize,
    series: &'a str,
    value: f64,
}

impl Dataset {
    pub fn series_count(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, replicate: usize, time: usize, series: usize) -> f64 {
        let n = self.names.len();
        self.values[(replicate * self.horizon + time) * n + series]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Long format: `replicate,time,series,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut rows = Vec::with_capacity(self.values.len());
        for r in 0..self.replicates {
            for t in 0..self.horizon {
                for (s, name) in self.names.iter().enumerate() {
                    rows.push(CsvRow {
                        replicate: r,
                        time: t,
                        series: name,
                        value: self.get(r, t, s),
                    });
                }
            }
        }
        rows_to_csv(&rows)
    }
}

/// Simulates `n_replicates` independent runs of `burn_in + horizon` slices and
/// keeps the last `horizon` of each. Replicate `r` draws from stream `r` of `seed`.
pub fn generate(
    model: &LinearDtdscm,
    n_replicates: usize,
    horizon: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Dataset> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be positive".into()));
    }
    let n = model.noise_sd.len();
    let len = burn_in + horizon;
    let chunks: Vec<Vec<f64>> = (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut v = model.simulate(len, &mut rng);
            v.drain(..burn_in * n);
            v
        })
        .collect();
    Ok(Dataset {
        replicates: n_replicates,
        horizon,
        names: model.template.scg().names().to_vec(),
        values: chunks.concat(),
    })
}

/// Sum over directed paths from the treatment to the outcome of the product of
/// the coefficients along the path.
pub fn true_effect(model: &LinearDtdscm, q: &MicroQuery) -> Result<f64> {
    q.validate(model.template.scg())?;
    let n = model.noise_sd.len();
    let g = q.gamma as usize;
    // f[t][s]: summed path weight from X@-gamma to s at slice t (t = 0 is -gamma).
    let mut f = vec![vec![0.0; n]; g + 1];
    for t in 0..=g {
        for &s in &model.order {
            if t == 0 && s == q.treatment {
                f[0][s] = 1.0;
                continue;
            }
            let mut acc = 0.0;
            for &(a, lag, c) in &model.inputs[s] {
                let lag = lag as usize;
                if lag <= t {
                    acc += c * f[t - lag][a];
                }
            }
            f[t][s] = acc;
        }
    }
    Ok(f[g][q.outcome])
}

/// Which time points of each replicate serve as `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnchorPolicy {
    /// Only the last slice; rows are independent across replicates.
    #[default]
    Last,
    /// Every slice with a full covariate window.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectEstimate {
    pub point: f64,
    /// Classical OLS standard error; understated when anchors overlap in time.
    pub se: f64,
    #[serde(skip)]
    pub set_used: AdjustmentSet,
    pub n: usize,
}

/// Coefficient of `X@-gamma` in the least-squares regression of `Y@0` on an
/// intercept, `X@-gamma` and `z`.
pub fn ols_effect(data: &Dataset, q: &MicroQuery, z: &AdjustmentSet, anchors: AnchorPolicy) -> Result<EffectEstimate> {
    let (x, y) = (q.treatment_var(), q.outcome_var());
    if z.contains(&y) {
        return Err(Error::MalformedRegression("the outcome cannot be a regressor".into()));
    }
    if z.contains(&x) {
        return Err(Error::MalformedRegression(
            "the treatment is already a regressor".into(),
        ));
    }
    if x == y {
        return Err(Error::MalformedRegression("treatment and outcome coincide".into()));
    }
    let ns = data.series_count();
    let mut cols = vec![x];
    cols.extend(z.iter().copied());
    if let Some(v) = cols.iter().chain([&y]).find(|v| v.series >= ns || v.offset > 0) {
        return Err(Error::InvalidQuery(format!(
            "variable {}@{} is not in the data",
            v.series, v.offset
        )));
    }
    let depth = cols.iter().map(|v| -v.offset).max().unwrap_or(0).max(0) as usize;
    if depth >= data.horizon {
        return Err(Error::InsufficientRows {
            rows: 0,
            columns: cols.len() + 1,
        });
    }
    let times: Vec<usize> = match anchors {
        AnchorPolicy::Last => vec![data.horizon - 1],
        AnchorPolicy::All => (depth..data.horizon).collect(),
    };
    let k = cols.len() + 1;
    let rows = data.replicates * times.len();
    if rows <= k + 2 {
        return Err(Error::InsufficientRows { rows, columns: k });
    }
    let row = |r: usize, t: usize, buf: &mut [f64]| -> f64 {
        buf[0] = 1.0;
        for (j, v) in cols.iter().enumerate() {
            buf[j + 1] = data.get(r, (t as i32 + v.offset) as usize, v.series);
        }
        data.get(r, t, y.series)
    };
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut xty = DVector::<f64>::zeros(k);
    let mut buf = vec![0.0; k];
    for r in 0..data.replicates {
        for &t in &times {
            let yv = row(r, t, &mut buf);
            for i in 0..k {
                xty[i] += buf[i] * yv;
                for j in 0..=i {
                    xtx[(i, j)] += buf[i] * buf[j];
                }
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[(j, i)] = xtx[(i, j)];
        }
    }
    let sv = xtx.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smin.is_nan() || smin <= smax * 1e-12 {
        return Err(Error::RankDeficient);
    }
    let inv = xtx.cholesky().ok_or(Error::RankDeficient)?.inverse();
    let beta = &inv * &xty;
    let mut rss = 0.0;
    for r in 0..data.replicates {
        for &t in &times {
            let yv = row(r, t, &mut buf);
            let fit: f64 = buf.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            rss += (yv - fit).powi(2);
        }
    }
    let sigma2 = rss / (rows - k) as f64;
    Ok(EffectEstimate {
        point: beta[1],
        se: (sigma2 * inv[(1, 1)]).sqrt(),
        set_used: z.clone(),
        n: rows,
    })
}

/// Burn-in slices discarded before each replicate is recorded.
pub const BURN_IN: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSummary {
    pub set: Vec<String>,
    pub mean: f64,
    pub empirical_variance: f64,
    pub bias: f64,
    /// Standard error of `mean`.
    pub se_of_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub query: crate::unroll::MicroQueryJson,
    pub true_effect: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub sets: BTreeMap<String, SetSummary>,
}

impl VarianceReport {
    pub fn variance(&self, name: &str) -> Option<f64> {
        self.sets.get(name).map(|s| s.empirical_variance)
    }

    /// `Var(a) <= (1 + slack) Var(b)`.
    pub fn ordered(&self, a: &str, b: &str, slack: f64) -> Option<bool> {
        Some(self.variance(a)? <= (1.0 + slack) * self.variance(b)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

/// `reps` independent cohorts of `n` replicates each; every named set gives one
/// OLS estimate per cohort, anchored at the last slice.
pub fn variance_experiment(
    model: &LinearDtdscm,
    q: &MicroQuery,
    sets: &BTreeMap<String, AdjustmentSet>,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<VarianceReport> {
    let g = model.template.scg();
    q.validate(g)?;
    if reps < 2 {
        return Err(Error::InvalidConfig("at least two repetitions are needed".into()));
    }
    let truth = true_effect(model, q)?;
    let depth = sets
        .values()
        .flat_map(|z| z.iter().map(|v| -v.offset))
        .chain([q.gamma as i32])
        .max()
        .unwrap_or(0) as usize;
    let names: Vec<&String> = sets.keys().collect();
    let estimates: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = seed ^ (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let data = generate(model, n, depth + 1, BURN_IN, rep_seed)?;
            names
                .iter()
                .map(|k| Ok(ols_effect(&data, q, &sets[*k], AnchorPolicy::Last)?.point))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for (j, name) in names.iter().enumerate() {
        let xs: Vec<f64> = estimates.iter().map(|e| e[j]).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        out.insert(
            (*name).clone(),
            SetSummary {
                set: sets[*name].labels(g),
                mean,
                empirical_variance: var,
                bias: mean - truth,
                se_of_mean: (var / reps as f64).sqrt(),
            },
        );
    }
    Ok(VarianceReport {
        query: q.to_wire(g),
        true_effect: truth,
        n,
        reps,
        seed,
        sets: out,
    })
}
