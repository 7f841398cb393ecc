//! Simpson's paradox for jointly Gaussian variables with a Gaussian common
//! cause.
//!
//! The observed vector is `y = (a, b)` with `a ∈ R^{nA}`, `b ∈ R^{nB}`; the
//! cause is `x ∈ R^{nX}` with `x ~ N(0, Σ)` and `y | x ~ N(C x, Q)`, where
//! `Q = diag(A, B)` is block diagonal: given `x`, `a` and `b` are independent.
//! Marginally `⟨y yᵀ⟩ = Q + C Σ Cᵀ`, written in blocks as
//! `[[A + J, K], [Kᵀ, B + L]]`, and the covariance of `a` given `b` is the
//! Schur complement `A + J − K (B + L)⁻¹ Kᵀ`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::parallel::{chunk_rng, map_chunks};
use crate::{sign_with_tol, Error, Result};

/// Relative eigenvalue floor for positive-definiteness.
pub const SPD_REL_TOL: f64 = 1e-10;
/// Largest accepted condition number of `B + L`.
pub const MAX_CONDITION: f64 = 1e12;

fn check_spd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!("{name} is {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(format!("{name} (non-finite entry)")));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite(format!("{name} (not symmetric)")));
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.max();
    if max <= 0.0 || eig.min() <= SPD_REL_TOL * max {
        return Err(Error::NotPositiveDefinite(name.to_string()));
    }
    Ok(())
}

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse())
}

/// Covariance blocks and coupling of a Gaussian common-cause model.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCauseModel {
    cov_a: DMatrix<f64>,
    cov_b: DMatrix<f64>,
    cov_x: DMatrix<f64>,
    coupling: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    #[serde(rename = "covA")]
    cov_a: Vec<Vec<f64>>,
    #[serde(rename = "covB")]
    cov_b: Vec<Vec<f64>>,
    #[serde(rename = "covX")]
    cov_x: Vec<Vec<f64>>,
    coupling: Vec<Vec<f64>>,
}

/// Row-major nested arrays to a matrix.
pub fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!("{name} is empty or ragged")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl GaussianCauseModel {
    pub fn new(cov_a: DMatrix<f64>, cov_b: DMatrix<f64>, cov_x: DMatrix<f64>, coupling: DMatrix<f64>) -> Result<Self> {
        check_spd("covA", &cov_a)?;
        check_spd("covB", &cov_b)?;
        check_spd("covX", &cov_x)?;
        let (na, nb, nx) = (cov_a.nrows(), cov_b.nrows(), cov_x.nrows());
        if coupling.nrows() != na + nb || coupling.ncols() != nx {
            return Err(Error::DimensionMismatch(format!(
                "coupling is {}x{}, expected {}x{}",
                coupling.nrows(),
                coupling.ncols(),
                na + nb,
                nx
            )));
        }
        if coupling.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch("coupling has a non-finite entry".into()));
        }
        if na + nb > 64 || nx > 64 {
            return Err(Error::DimensionMismatch("dimensions above 64 are not supported".into()));
        }
        Ok(Self { cov_a, cov_b, cov_x, coupling })
    }

    /// The minimal model: scalar `a1, a2, b` and a scalar cause.
    /// `coupling = [c11, c21, c31]`.
    pub fn minimal(cov_a: [[f64; 2]; 2], cov_b: f64, cov_x: f64, coupling: [f64; 3]) -> Result<Self> {
        Self::new(
            DMatrix::from_fn(2, 2, |i, j| cov_a[i][j]),
            DMatrix::from_element(1, 1, cov_b),
            DMatrix::from_element(1, 1, cov_x),
            DMatrix::from_column_slice(3, 1, &coupling),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ModelJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(
            matrix_from_rows("covA", &raw.cov_a)?,
            matrix_from_rows("covB", &raw.cov_b)?,
            matrix_from_rows("covX", &raw.cov_x)?,
            matrix_from_rows("coupling", &raw.coupling)?,
        )
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(ModelJson {
            cov_a: matrix_to_rows(&self.cov_a),
            cov_b: matrix_to_rows(&self.cov_b),
            cov_x: matrix_to_rows(&self.cov_x),
            coupling: matrix_to_rows(&self.coupling),
        })
        .expect("matrices serialize")
    }

    pub fn n_a(&self) -> usize {
        self.cov_a.nrows()
    }
    pub fn n_b(&self) -> usize {
        self.cov_b.nrows()
    }
    pub fn n_x(&self) -> usize {
        self.cov_x.nrows()
    }
    pub fn cov_a(&self) -> &DMatrix<f64> {
        &self.cov_a
    }
    pub fn cov_b(&self) -> &DMatrix<f64> {
        &self.cov_b
    }
    pub fn cov_x(&self) -> &DMatrix<f64> {
        &self.cov_x
    }
    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    /// `Q = diag(A, B)`, the covariance of `y` given `x`.
    pub fn q(&self) -> DMatrix<f64> {
        let (na, nb) = (self.n_a(), self.n_b());
        let mut q = DMatrix::zeros(na + nb, na + nb);
        q.view_mut((0, 0), (na, na)).copy_from(&self.cov_a);
        q.view_mut((na, na), (nb, nb)).copy_from(&self.cov_b);
        q
    }
}

/// `⟨y yᵀ⟩ = Q + C Σ Cᵀ`.
pub fn marginal_covariance(model: &GaussianCauseModel) -> DMatrix<f64> {
    let c = &model.coupling;
    let m = model.q() + c * &model.cov_x * c.transpose();
    // symmetrise away rounding
    (&m + m.transpose()) * 0.5
}

/// Covariance of `a` given `b`: `A + J − K (B + L)⁻¹ Kᵀ`.
pub fn conditional_cov_a_given_b(model: &GaussianCauseModel) -> Result<DMatrix<f64>> {
    let (na, nb) = (model.n_a(), model.n_b());
    let c = &model.coupling;
    let ccov = c * &model.cov_x * c.transpose();
    let j = ccov.view((0, 0), (na, na)).into_owned();
    let k = ccov.view((0, na), (na, nb)).into_owned();
    let l = ccov.view((na, na), (nb, nb)).into_owned();
    let bl = &model.cov_b + l;
    let eig = SymmetricEigen::new(bl.clone()).eigenvalues;
    let (min, max) = (eig.min(), eig.max());
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::IllConditionedBlock(cond));
    }
    let bl_inv = spd_inverse(&bl).ok_or(Error::IllConditionedBlock(cond))?;
    let out = &model.cov_a + j - &k * bl_inv * k.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// The same conditional covariance by a second route: invert the full
/// marginal covariance and invert its upper-left (precision) block.
pub fn conditional_cov_via_precision(model: &GaussianCauseModel) -> Result<DMatrix<f64>> {
    let na = model.n_a();
    let full = marginal_covariance(model);
    let precision = full
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("marginal covariance".into()))?;
    let block = precision.view((0, 0), (na, na)).into_owned();
    block
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("precision block".into()))
}

/// Continuous paradox test on a 3×3 covariance over `(a1, a2, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousReport {
    /// `σ[a1, a2]`.
    pub marginal: f64,
    /// `σ[a1, a2 | b] = σ12 − σ13 σ23 / σ33`.
    pub conditional: f64,
    pub paradox: bool,
}

pub fn detect_continuous_simpson(cov3: &DMatrix<f64>) -> Result<ContinuousReport> {
    if cov3.nrows() != 3 || cov3.ncols() != 3 {
        return Err(Error::DimensionMismatch(format!("expected 3x3, got {}x{}", cov3.nrows(), cov3.ncols())));
    }
    let s33 = cov3[(2, 2)];
    if s33 <= 1e-12 * cov3.trace() {
        return Err(Error::DegenerateB);
    }
    check_spd("cov3", cov3)?;
    let marginal = cov3[(0, 1)];
    let conditional = marginal - cov3[(0, 2)] * cov3[(1, 2)] / s33;
    Ok(ContinuousReport { marginal, conditional, paradox: marginal * conditional < 0.0 })
}

/// Closed forms for the minimal model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTriple {
    /// `⟨a1 a2⟩ = A12 + C11 C21 Σ`.
    pub marginal_a1a2: f64,
    /// `σ[a1, a2 | b] = A12 + C11 C21 Σ ε`.
    pub b_conditional_a1a2: f64,
    /// `σ[a1, a2 | x] = A12`.
    pub x_conditional_a1a2: f64,
    /// `ε = B / (B + C31² Σ)`.
    pub epsilon: f64,
    pub paradox: bool,
    /// Under a paradox, whether `sign(A12) = sign(σ[a1, a2 | b])`.
    pub fine_sign_matches_cause: Option<bool>,
}

pub fn minimal_case(model: &GaussianCauseModel) -> Result<CovarianceTriple> {
    if model.n_a() != 2 || model.n_b() != 1 || model.n_x() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "minimal case needs nA=2, nB=1, nX=1; got {}, {}, {}",
            model.n_a(),
            model.n_b(),
            model.n_x()
        )));
    }
    let a12 = model.cov_a[(0, 1)];
    let b = model.cov_b[(0, 0)];
    let s = model.cov_x[(0, 0)];
    let (c11, c21, c31) = (model.coupling[(0, 0)], model.coupling[(1, 0)], model.coupling[(2, 0)]);
    let epsilon = b / (b + c31 * c31 * s);
    let shared = c11 * c21 * s;
    let marginal = a12 + shared;
    let conditional = a12 + shared * epsilon;
    let paradox = marginal * conditional < 0.0;
    Ok(CovarianceTriple {
        marginal_a1a2: marginal,
        b_conditional_a1a2: conditional,
        x_conditional_a1a2: a12,
        epsilon,
        paradox,
        fine_sign_matches_cause: paradox.then(|| a12.signum() == conditional.signum()),
    })
}

/// A two-component cause with `Σ = s·I`, `C31 = 0` and `B = 1` that shows the
/// continuous paradox (`⟨a1a2⟩ > 0`, `σ[a1,a2|b] < 0`) for large `s` while
/// `A12` has the requested sign, so the cause-conditional sign can follow
/// either option.
pub fn two_component_counterexample(scale: f64, positive: bool) -> Result<GaussianCauseModel> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("covX = {scale} I")));
    }
    let a12 = if positive { 0.5 } else { -0.5 };
    GaussianCauseModel::new(
        DMatrix::from_row_slice(2, 2, &[1.0, a12, a12, 1.0]),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_diagonal_element(2, 2, scale),
        DMatrix::from_row_slice(3, 2, &[1.0, 1.0, -1.0, 2.0, 0.0, 1.0]),
    )
}

/// Large-`s` limit of `σ[a1, a2 | b]` for a model with `Σ = s·I`, `C31 = 0`:
/// `A12 + s C11 C21`.
pub fn large_scale_b_conditional(model: &GaussianCauseModel) -> f64 {
    let s = model.cov_x[(0, 0)];
    model.cov_a[(0, 1)] + s * model.coupling[(0, 0)] * model.coupling[(1, 0)]
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Random minimal model: `A = L Lᵀ + 1e-3 I` with `L` uniform in
/// `[−1, 1]`, coupling uniform in `[−1, 1]`, `Σ` and `B` log-uniform in
/// `[1e-2, 1e2]`.
pub fn random_minimal_model<R: Rng + ?Sized>(rng: &mut R) -> GaussianCauseModel {
    let mut u = || rng.random::<f64>() * 2.0 - 1.0;
    let l = DMatrix::from_fn(2, 2, |_, _| u());
    let cov_a = &l * l.transpose() + DMatrix::identity(2, 2) * 1e-3;
    let coupling = DMatrix::from_fn(3, 1, |_, _| u());
    let cov_b = DMatrix::from_element(1, 1, log_uniform(rng, 1e-2, 1e2));
    let cov_x = DMatrix::from_element(1, 1, log_uniform(rng, 1e-2, 1e2));
    GaussianCauseModel::new((&cov_a + cov_a.transpose()) * 0.5, cov_b, cov_x, coupling)
        .expect("sampler produces valid models")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Summary {
    pub n_models: u64,
    pub n_paradox: u64,
    /// Paradox models where `sign(A12)` equals the `b`-conditional sign.
    pub n_fine_agree: u64,
    /// Largest scaled gap between closed forms and the generic path.
    pub max_closed_form_residual: f64,
    pub seed: u64,
}

impl Theorem2Summary {
    pub fn holds(&self) -> bool {
        self.n_fine_agree == self.n_paradox
    }
}

/// Checks the minimal-case sign theorem on `n_models` random models and
/// compares the closed forms with the generic matrix path.
pub fn theorem2_suite(n_models: u64, seed: u64, threads: Option<usize>) -> Result<Theorem2Summary> {
    let parts = map_chunks(n_models, 8192, seed, threads, |rng, _, len| -> Result<(u64, u64, f64)> {
        let (mut hits, mut agree, mut worst) = (0u64, 0u64, 0.0f64);
        for _ in 0..len {
            let m = random_minimal_model(rng);
            let triple = minimal_case(&m)?;
            let marginal = marginal_covariance(&m);
            let cond = conditional_cov_a_given_b(&m)?;
            let scale = 1.0 + m.cov_a[(0, 1)].abs() + (m.coupling[(0, 0)] * m.coupling[(1, 0)] * m.cov_x[(0, 0)]).abs();
            worst = worst
                .max((triple.marginal_a1a2 - marginal[(0, 1)]).abs() / scale)
                .max((triple.b_conditional_a1a2 - cond[(0, 1)]).abs() / scale);
            if triple.paradox {
                hits += 1;
                if triple.fine_sign_matches_cause == Some(true) {
                    agree += 1;
                }
            }
        }
        Ok((hits, agree, worst))
    });
    let mut summary = Theorem2Summary { n_models, n_paradox: 0, n_fine_agree: 0, max_closed_form_residual: 0.0, seed };
    for part in parts {
        let (h, a, w) = part?;
        summary.n_paradox += h;
        summary.n_fine_agree += a;
        summary.max_closed_form_residual = summary.max_closed_form_residual.max(w);
    }
    Ok(summary)
}

/// Second moments `Σ y yᵀ / n` of `n` draws from the generative model
/// (`x` first, then `y | x`).
pub fn monte_carlo_covariance(model: &GaussianCauseModel, n: u64, seed: u64, threads: Option<usize>) -> DMatrix<f64> {
    let ny = model.n_a() + model.n_b();
    let lx = model.cov_x.clone().cholesky().expect("covX is SPD").l();
    let lq = model.q().cholesky().expect("Q is SPD").l();
    let parts = map_chunks(n, 1 << 14, seed, threads, |rng, _, len| {
        let mut acc = DMatrix::<f64>::zeros(ny, ny);
        for _ in 0..len {
            let zx = DMatrix::from_fn(model.n_x(), 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let zy = DMatrix::from_fn(ny, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = &model.coupling * (&lx * zx) + &lq * zy;
            acc += &y * y.transpose();
        }
        acc
    });
    parts.into_iter().fold(DMatrix::zeros(ny, ny), |a, b| a + b) / n as f64
}

/// Sign of the off-diagonal entry with a relative dead zone.
pub fn covariance_sign(value: f64, scale: f64) -> i8 {
    sign_with_tol(value, 1e-12 * scale.max(1.0))
}

/// Worst relative residual for each matrix identity over a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityDiagnostics {
    pub instances: u64,
    pub max_dim: usize,
    pub woodbury: f64,
    pub generalized_sylvester: f64,
    pub sylvester: f64,
    pub block_inverse: f64,
    pub block_determinant: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

pub const IDENTITY_TOL: f64 = 1e-10;

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / a.norm().max(f64::MIN_POSITIVE)
}

fn rel_scalar(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * (rng.random::<f64>() * 2.0 - 1.0))
}

/// Strictly diagonally dominant, hence well conditioned.
fn dominant_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    random_matrix(rng, n, n, 1.0) + DMatrix::identity(n, n) * (n as f64 + 1.0)
}

/// Residuals of the Woodbury inverse and the generalized Sylvester
/// determinant for `Z + U W V` (`Z` n×n, `W` k×k).
pub fn woodbury_residuals(z: &DMatrix<f64>, u: &DMatrix<f64>, w: &DMatrix<f64>, v: &DMatrix<f64>) -> Option<(f64, f64)> {
    let full = z + u * w * v;
    let direct = full.clone().try_inverse()?;
    let z_inv = z.clone().try_inverse()?;
    let w_inv = w.clone().try_inverse()?;
    let inner = (&w_inv + v * &z_inv * u).try_inverse()?;
    let woodbury = &z_inv - &z_inv * u * inner * v * &z_inv;
    let det_lhs = full.determinant();
    let det_rhs = z.determinant() * w.determinant() * (&w_inv + v * &z_inv * u).determinant();
    Some((rel(&direct, &woodbury), rel_scalar(det_lhs, det_rhs)))
}

/// `det(I_N − K L)` against `det(I_M − L K)`.
pub fn sylvester_residual(k: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
    let (n, m) = (k.nrows(), k.ncols());
    let lhs = (DMatrix::identity(n, n) - k * l).determinant();
    let rhs = (DMatrix::identity(m, m) - l * k).determinant();
    rel_scalar(lhs, rhs)
}

/// Block inverse via the Schur complement of the upper-left `m × m` block,
/// and the block determinant `det(S) det(A22)`, against direct evaluation.
pub fn block_residuals(a: &DMatrix<f64>, m: usize) -> Option<(f64, f64)> {
    let n = a.nrows();
    let a11 = a.view((0, 0), (m, m)).into_owned();
    let a12 = a.view((0, m), (m, n - m)).into_owned();
    let a21 = a.view((m, 0), (n - m, m)).into_owned();
    let a22 = a.view((m, m), (n - m, n - m)).into_owned();
    let a22_inv = a22.clone().try_inverse()?;
    let s = &a11 - &a12 * &a22_inv * &a21;
    let s_inv = s.clone().try_inverse()?;
    let mut blocks = DMatrix::zeros(n, n);
    blocks.view_mut((0, 0), (m, m)).copy_from(&s_inv);
    blocks.view_mut((0, m), (m, n - m)).copy_from(&(-&s_inv * &a12 * &a22_inv));
    blocks.view_mut((m, 0), (n - m, m)).copy_from(&(-&a22_inv * &a21 * &s_inv));
    blocks
        .view_mut((m, m), (n - m, n - m))
        .copy_from(&(&a22_inv + &a22_inv * &a21 * &s_inv * &a12 * &a22_inv));
    let direct = a.clone().try_inverse()?;
    Some((rel(&direct, &blocks), rel_scalar(a.determinant(), s.determinant() * a22.determinant())))
}

/// Runs the matrix identities on `instances` random well-conditioned
/// problems with dimensions up to `max_dim` (at most 8).
pub fn matrix_identity_suite(instances: u64, max_dim: usize, seed: u64) -> IdentityDiagnostics {
    let max_dim = max_dim.clamp(2, 8);
    let mut rng = chunk_rng(seed, 0);
    let mut d = IdentityDiagnostics {
        instances,
        max_dim,
        woodbury: 0.0,
        generalized_sylvester: 0.0,
        sylvester: 0.0,
        block_inverse: 0.0,
        block_determinant: 0.0,
        tolerance: IDENTITY_TOL,
        pass: true,
        seed,
    };
    for _ in 0..instances {
        let n = rng.random_range(1..=max_dim);
        let k = rng.random_range(1..=max_dim);
        let z = dominant_matrix(&mut rng, n);
        let w = dominant_matrix(&mut rng, k);
        let coupling_scale = 0.5 / (n.max(k) as f64).sqrt();
        let u = random_matrix(&mut rng, n, k, coupling_scale);
        let v = random_matrix(&mut rng, k, n, coupling_scale);
        match woodbury_residuals(&z, &u, &w, &v) {
            Some((inv, det)) => {
                d.woodbury = d.woodbury.max(inv);
                d.generalized_sylvester = d.generalized_sylvester.max(det);
            }
            None => d.pass = false,
        }

        let big_n = rng.random_range(1..=max_dim);
        let big_m = rng.random_range(1..=max_dim);
        let scale = 0.3 / (big_n.max(big_m) as f64).sqrt();
        let kk = random_matrix(&mut rng, big_n, big_m, scale);
        let ll = random_matrix(&mut rng, big_m, big_n, scale);
        d.sylvester = d.sylvester.max(sylvester_residual(&kk, &ll));

        let nb = rng.random_range(2..=max_dim);
        let mb = rng.random_range(1..nb);
        let a = dominant_matrix(&mut rng, nb);
        match block_residuals(&a, mb) {
            Some((inv, det)) => {
                d.block_inverse = d.block_inverse.max(inv);
                d.block_determinant = d.block_determinant.max(det);
            }
            None => d.pass = false,
        }
    }
    d.pass &= [d.woodbury, d.generalized_sylvester, d.sylvester, d.block_inverse, d.block_determinant]
        .iter()
        .all(|&r| r < IDENTITY_TOL);
    d
}
