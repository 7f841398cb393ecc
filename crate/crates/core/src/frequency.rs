//! Dirichlet sampling and the frequency of Simpson's paradox among randomly
//! generated tables.
//!
//! Dirichlet vectors are normalised gamma variates. Gamma variates come from
//! the Marsaglia–Tsang squeeze method (shape ≥ 1) with the boost
//! `G(a) = G(a + 1) · U^{1/a}` for shape < 1. Everything is carried in log
//! space and normalised with a max shift, so components never underflow to
//! exactly zero for any reasonable shape. Normal variates use the ziggurat
//! sampler of `rand_distr`; the generator is ChaCha8 with per-chunk streams
//! (see [`crate::parallel`]). Changing any of these changes the frozen
//! estimates in the tests.

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::contingency::{detect_simpson, paradox_by_sign_products, JointTable};
use crate::parallel::{chunk_rng, map_chunks, CHUNK_SIZE};
use crate::{Error, Result};

/// Parameters of a Dirichlet density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpec {
    alphas: Vec<f64>,
}

impl DirichletSpec {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::InvalidDirichlet(format!("need at least 2 weights, got {}", alphas.len())));
        }
        if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidDirichlet(format!("weight {a} is not positive")));
        }
        Ok(Self { alphas })
    }

    pub fn symmetric(alpha: f64, n: usize) -> Result<Self> {
        Self::new(vec![alpha; n])
    }

    /// The non-informative choice `α_k = 1/n`.
    pub fn non_informative(n: usize) -> Result<Self> {
        Self::symmetric(1.0 / n as f64, n)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    /// One draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    /// One draw written into `out`, which must have length [`Self::dim`].
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim());
        for (slot, &a) in out.iter_mut().zip(&self.alphas) {
            *slot = ln_gamma_variate(rng, a);
        }
        normalize_log_weights(out);
    }
}

fn normalize_log_weights(logs: &mut [f64]) {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in logs.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in logs.iter_mut() {
        *v /= sum;
    }
}

/// Logarithm of a Gamma(shape, 1) variate.
pub fn ln_gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.sample(Open01);
        return ln_gamma_variate(rng, shape + 1.0) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = rng.sample(Open01);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

/// Monte Carlo estimate of the paradox frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub alpha: f64,
    pub fraction: f64,
    /// Binomial standard error `sqrt(f(1 − f)/n)`.
    pub stderr: f64,
    pub n_samples: u64,
    pub n_paradox: u64,
    /// Draws with a zero conditioning margin, counted as non-paradox.
    pub n_zero_margin: u64,
    pub seed: u64,
}

/// Draws `n_samples` tables from the symmetric 8-dimensional Dirichlet with
/// parameter `alpha` and counts those where both sign-product inequalities
/// hold (either orientation of the paradox).
pub fn estimate_frequency(alpha: f64, n_samples: u64, seed: u64, threads: Option<usize>) -> Result<FrequencyEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidDirichlet("n_samples must be at least 1".into()));
    }
    let spec = DirichletSpec::symmetric(alpha, 8)?;
    let partials = map_chunks(n_samples, CHUNK_SIZE, seed, threads, |rng, _, len| {
        let mut cells = [0.0; 8];
        let (mut hits, mut zero) = (0u64, 0u64);
        for _ in 0..len {
            spec.sample_into(rng, &mut cells);
            match paradox_by_sign_products(&table_from_draw(cells)) {
                Some(true) => hits += 1,
                Some(false) => {}
                None => zero += 1,
            }
        }
        (hits, zero)
    });
    let (n_paradox, n_zero_margin) = partials.into_iter().fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let fraction = n_paradox as f64 / n_samples as f64;
    Ok(FrequencyEstimate {
        alpha,
        fraction,
        stderr: (fraction * (1.0 - fraction) / n_samples as f64).sqrt(),
        n_samples,
        n_paradox,
        n_zero_margin,
        seed,
    })
}

fn table_from_draw(cells: [f64; 8]) -> JointTable {
    // draws sum to one up to rounding; from_weights renormalises exactly
    JointTable::from_weights(cells).expect("Dirichlet draw is a probability vector")
}

/// Paradox tables accepted by rejection, with the number of draws spent.
#[derive(Clone, Debug)]
pub struct ParadoxSample {
    pub tables: Vec<JointTable>,
    pub draws: u64,
}

impl ParadoxSample {
    pub fn acceptance_rate(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.tables.len() as f64 / self.draws as f64
        }
    }
}

/// Default draw budget for [`sample_paradox_tables`].
pub const REJECTION_BUDGET: u64 = 1_000_000_000;

/// `n_tables` tables from the symmetric 8-dimensional Dirichlet that
/// [`detect_simpson`] classifies as a paradox.
pub fn sample_paradox_tables(alpha: f64, n_tables: usize, seed: u64) -> Result<ParadoxSample> {
    sample_paradox_tables_with_budget(alpha, n_tables, seed, REJECTION_BUDGET)
}

pub fn sample_paradox_tables_with_budget(alpha: f64, n_tables: usize, seed: u64, budget: u64) -> Result<ParadoxSample> {
    let spec = DirichletSpec::symmetric(alpha, 8)?;
    let mut tables = Vec::with_capacity(n_tables);
    let mut draws = 0u64;
    let mut chunk = 0u64;
    let mut cells = [0.0; 8];
    while tables.len() < n_tables {
        let mut rng = chunk_rng(seed, chunk);
        for _ in 0..CHUNK_SIZE {
            if tables.len() == n_tables {
                break;
            }
            if draws == budget {
                return Err(Error::BudgetExceeded { draws });
            }
            draws += 1;
            spec.sample_into(&mut rng, &mut cells);
            let table = table_from_draw(cells);
            if matches!(detect_simpson(&table), Ok(r) if r.status.is_paradox()) {
                tables.push(table);
            }
        }
        chunk += 1;
    }
    Ok(ParadoxSample { tables, draws })
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// KS statistic between `q1 + q2` from Dirichlet(α, α, α, α) and the first
/// component of Dirichlet(2α, 2α), `n` draws per side.
pub fn aggregation_ks(alpha: f64, n: u64, seed: u64, threads: Option<usize>) -> Result<f64> {
    let four = DirichletSpec::symmetric(alpha, 4)?;
    let two = DirichletSpec::symmetric(2.0 * alpha, 2)?;
    let draw = |spec: &DirichletSpec, stream_seed: u64, fold: fn(&[f64]) -> f64| -> Vec<f64> {
        map_chunks(n, CHUNK_SIZE, stream_seed, threads, |rng, _, len| {
            let mut buf = vec![0.0; spec.dim()];
            (0..len)
                .map(|_| {
                    spec.sample_into(rng, &mut buf);
                    fold(&buf)
                })
                .collect::<Vec<_>>()
        })
        .concat()
    };
    let aggregated = draw(&four, seed, |q| q[0] + q[1]);
    let direct = draw(&two, seed.wrapping_add(0x9E37_79B9_7F4A_7C15), |q| q[0]);
    Ok(ks_statistic(&aggregated, &direct))
}
