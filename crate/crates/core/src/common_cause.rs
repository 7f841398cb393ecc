//! Binary and ternary common causes behind a binary joint table.
//!
//! A common cause `C` factorises the table as
//! `p(A1, A2, B) = Σ_c p(A1, A2, c) p(B | c)`. For binary `C` the kernel
//! `p(B | C)` is a 2×2 column-stochastic matrix fixed by the two numbers
//! `β = p(b|c)` and `γ = p(b̄|c̄)`; given the kernel the factorisation can be
//! inverted, conditional on each value of `A2`, to recover `p(A1, C | A2)`.
//! Only kernels for which that inverse is a probability table are causes of
//! the given data.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contingency::{detect_simpson, JointTable, ParadoxStatus};
use crate::parallel::{chunk_rng, map_chunks};
use crate::{sign_with_tol, Error, Result, PROB_TOL};

/// Kernels with `|D|` at or below this are rejected as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

/// A valid cause whose smallest `p(A1, C | A2)` entry is below this lies on
/// the boundary of the realizable region.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// The conditional family `p(B | C)` for binary `B` and `C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BKernel {
    pub p_b_given_c: f64,
    pub p_notb_given_notc: f64,
}

impl BKernel {
    pub fn new(p_b_given_c: f64, p_notb_given_notc: f64) -> Result<Self> {
        for v in [p_b_given_c, p_notb_given_notc] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidCause(format!("kernel entry {v} is not a probability")));
            }
        }
        Ok(Self { p_b_given_c, p_notb_given_notc })
    }

    /// `C ≡ B`.
    pub fn identity() -> Self {
        Self { p_b_given_c: 1.0, p_notb_given_notc: 1.0 }
    }

    /// `D = p(b|c) + p(b̄|c̄) − 1`, the determinant of the kernel matrix.
    pub fn det(&self) -> f64 {
        self.p_b_given_c + self.p_notb_given_notc - 1.0
    }

    /// The same kernel after relabelling `b ↔ b̄`.
    pub fn swap_b(&self) -> Self {
        Self { p_b_given_c: 1.0 - self.p_b_given_c, p_notb_given_notc: 1.0 - self.p_notb_given_notc }
    }
}

/// Conditionals of a binary cause: `p(A1 | A2, C)` and `p(C | A2)`.
///
/// Arrays are indexed by `A2` (0 = `a2`, 1 = `ā2`) and then by `C`
/// (0 = `c`, 1 = `c̄`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauseView {
    /// `a1_given[k][c] = p(a1 | A2 = k, C = c)`.
    pub a1_given: [[f64; 2]; 2],
    /// `c_given[k] = p(c | A2 = k)`.
    pub c_given: [f64; 2],
    /// Smallest entry of `p(A1, C | A2)` before clamping.
    pub min_joint_entry: f64,
}

impl CauseView {
    pub fn p_a1_given_a2c(&self) -> f64 {
        self.a1_given[0][0]
    }
    pub fn p_a1_given_a2cbar(&self) -> f64 {
        self.a1_given[0][1]
    }
    pub fn p_a1_given_abar2c(&self) -> f64 {
        self.a1_given[1][0]
    }
    pub fn p_a1_given_abar2cbar(&self) -> f64 {
        self.a1_given[1][1]
    }
    pub fn p_c_given_a2(&self) -> f64 {
        self.c_given[0]
    }
    pub fn p_c_given_abar2(&self) -> f64 {
        self.c_given[1]
    }

    /// True when some `p(A1, C | A2)` entry is (numerically) zero, i.e. some
    /// field of the view sits at 0 or 1.
    pub fn on_boundary(&self) -> bool {
        self.min_joint_entry < BOUNDARY_TOL
    }

    /// `p(a1 | A2 = k, B = m)` reconstructed through the kernel.
    pub fn reconstruct_fine(&self, kernel: &BKernel) -> [[f64; 2]; 2] {
        let p_b_given = [kernel.p_b_given_c, 1.0 - kernel.p_notb_given_notc];
        let mut out = [[0.0; 2]; 2];
        for k in 0..2 {
            let pc = [self.c_given[k], 1.0 - self.c_given[k]];
            for (m, slot) in out[k].iter_mut().enumerate() {
                let mut num = 0.0;
                let mut den = 0.0;
                for c in 0..2 {
                    let pb = if m == 0 { p_b_given[c] } else { 1.0 - p_b_given[c] };
                    num += self.a1_given[k][c] * pc[c] * pb;
                    den += pc[c] * pb;
                }
                *slot = num / den;
            }
        }
        out
    }
}

/// Inverts the common-cause equation for one kernel.
///
/// Only `p(A1, B | A2)` enters, so `p(A2)` plays no role. Fails with
/// [`Error::SingularKernel`] when `|D| ≤ 1e-10` and with
/// [`Error::InvalidCause`] when the kernel cannot have produced the table.
pub fn invert(table: &JointTable, kernel: &BKernel) -> Result<CauseView> {
    let det = kernel.det();
    if det.abs() <= SINGULAR_TOL {
        return Err(Error::SingularKernel { det });
    }
    let fine = table.fine_conditionals()?;
    let b_given = table.b_given_a2()?;
    let beta = kernel.p_b_given_c;
    let gamma = kernel.p_notb_given_notc;

    let mut a1_given = [[0.0; 2]; 2];
    let mut c_given = [0.0; 2];
    let mut min_entry = f64::INFINITY;
    for k in 0..2 {
        // p(A1, B | a_k) columns mapped through the inverse kernel matrix
        // (1/D) [[γ, −(1−γ)], [−(1−β), β]].
        let joint_b = [fine[k][0] * b_given[k], (1.0 - fine[k][0]) * b_given[k]];
        let joint_notb = [fine[k][1] * (1.0 - b_given[k]), (1.0 - fine[k][1]) * (1.0 - b_given[k])];
        let mut joint_c = [[0.0; 2]; 2]; // [A1][C]
        for i in 0..2 {
            joint_c[i][0] = (gamma * joint_b[i] - (1.0 - gamma) * joint_notb[i]) / det;
            joint_c[i][1] = (beta * joint_notb[i] - (1.0 - beta) * joint_b[i]) / det;
        }
        for row in &joint_c {
            for &v in row {
                min_entry = min_entry.min(v);
            }
        }
        if joint_c.iter().flatten().any(|&v| v < -PROB_TOL) {
            return Err(Error::InvalidCause(format!(
                "p(A1, C | A2={}) has a negative entry",
                if k == 0 { "a2" } else { "!a2" }
            )));
        }
        let clamped = joint_c.map(|row| row.map(|v| v.max(0.0)));
        let pc = clamped[0][0] + clamped[1][0];
        let pnc = clamped[0][1] + clamped[1][1];
        if pc <= PROB_TOL || pnc <= PROB_TOL {
            return Err(Error::InvalidCause("a cause level has zero probability given A2".into()));
        }
        c_given[k] = pc / (pc + pnc);
        a1_given[k] = [clamped[0][0] / pc, clamped[0][1] / pnc];
    }
    Ok(CauseView { a1_given, c_given, min_joint_entry: min_entry })
}

/// Signs of `p(a1|a2,c) − p(a1|ā2,c)` and the same for `c̄`.
pub fn association_sign(view: &CauseView) -> [i8; 2] {
    [0, 1].map(|c| sign_with_tol(view.a1_given[0][c] - view.a1_given[1][c], PROB_TOL))
}

/// A common-cause model with `L ≥ 2` cause levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauseModel {
    /// `joint[c][i][k] = p(A1 = i, A2 = k, C = c)`.
    joint: Vec<[[f64; 2]; 2]>,
    /// `kernel[c] = p(b | c)`.
    kernel: Vec<f64>,
}

impl CauseModel {
    pub fn new(joint: Vec<[[f64; 2]; 2]>, kernel: Vec<f64>) -> Result<Self> {
        if joint.len() < 2 || joint.len() != kernel.len() {
            return Err(Error::InvalidModel(format!(
                "need matching cause arities >= 2, got joint {} and kernel {}",
                joint.len(),
                kernel.len()
            )));
        }
        if joint.iter().flatten().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidModel("negative or non-finite joint entry".into()));
        }
        let total: f64 = joint.iter().flatten().flatten().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!("joint sums to {total}")));
        }
        if kernel.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidModel("kernel entry outside [0, 1]".into()));
        }
        Ok(Self { joint, kernel })
    }

    /// Binary model from a view, its kernel and `p(a2)`.
    pub fn from_view(view: &CauseView, kernel: &BKernel, p_a2: f64) -> Result<Self> {
        let p_k = [p_a2, 1.0 - p_a2];
        let mut joint = vec![[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            let pc = [view.c_given[k], 1.0 - view.c_given[k]];
            for c in 0..2 {
                let p_kc = p_k[k] * pc[c];
                joint[c][0][k] = p_kc * view.a1_given[k][c];
                joint[c][1][k] = p_kc * (1.0 - view.a1_given[k][c]);
            }
        }
        Self::new(joint, vec![kernel.p_b_given_c, 1.0 - kernel.p_notb_given_notc])
    }

    pub fn levels(&self) -> usize {
        self.kernel.len()
    }

    pub fn joint(&self) -> &[[[f64; 2]; 2]] {
        &self.joint
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// Binary kernel, if `L = 2`.
    pub fn binary_kernel(&self) -> Option<BKernel> {
        (self.levels() == 2).then(|| BKernel {
            p_b_given_c: self.kernel[0],
            p_notb_given_notc: 1.0 - self.kernel[1],
        })
    }

    /// `p(a1 | A2 = k, C = c)` per level, `None` where `p(A2 = k, c) = 0`.
    pub fn a1_given(&self) -> Vec<[Option<f64>; 2]> {
        self.joint
            .iter()
            .map(|cell| {
                [0, 1].map(|k| {
                    let den = cell[0][k] + cell[1][k];
                    (den > 0.0).then(|| cell[0][k] / den)
                })
            })
            .collect()
    }

    /// `p(C = c | A2 = k)` as `[level][k]`.
    pub fn c_given_a2(&self) -> Vec<[f64; 2]> {
        let p_k = [0, 1].map(|k| self.joint.iter().map(|cell| cell[0][k] + cell[1][k]).sum::<f64>());
        self.joint
            .iter()
            .map(|cell| [0, 1].map(|k| (cell[0][k] + cell[1][k]) / p_k[k]))
            .collect()
    }

    /// `p(a1|a2,c) − p(a1|ā2,c)` per level.
    pub fn association_gaps(&self) -> Vec<Option<f64>> {
        self.a1_given().into_iter().map(|[x, y]| Some(x? - y?)).collect()
    }

    /// Per-level association signs; 0 where the gap is undefined.
    pub fn association_signs(&self) -> Vec<i8> {
        self.association_gaps()
            .into_iter()
            .map(|g| g.map_or(0, |g| sign_with_tol(g, PROB_TOL)))
            .collect()
    }
}

/// `p(A1, A2, B) = Σ_c p(A1, A2, c) p(B | c)`.
pub fn compose(model: &CauseModel) -> Result<JointTable> {
    let mut cells = [0.0; 8];
    for (cell, &pb) in model.joint.iter().zip(&model.kernel) {
        for i in 0..2 {
            for k in 0..2 {
                cells[i * 4 + k * 2] += cell[i][k] * pb;
                cells[i * 4 + k * 2 + 1] += cell[i][k] * (1.0 - pb);
            }
        }
    }
    JointTable::from_weights(cells)
}

/// Relabelling that brings a paradox table to the orientation
/// `p(a1|a2) < p(a1|ā2)`, both strata favouring `a2`, and
/// `p(a1|a2,b̄) > p(a1|a2,b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    pub swapped_a2: bool,
    pub swapped_b: bool,
}

impl Orientation {
    /// Factor converting association signs in the canonical frame back to the
    /// caller's labels.
    pub fn sign_factor(&self) -> i8 {
        if self.swapped_a2 {
            -1
        } else {
            1
        }
    }

    pub fn apply(&self, table: &JointTable) -> JointTable {
        let t = if self.swapped_a2 { table.swap_a2() } else { *table };
        if self.swapped_b {
            t.swap_b()
        } else {
            t
        }
    }

    pub fn map_kernel(&self, kernel: &BKernel) -> BKernel {
        if self.swapped_b {
            kernel.swap_b()
        } else {
            *kernel
        }
    }
}

/// Canonical orientation of a paradox table.
pub fn canonical_orientation(table: &JointTable) -> Result<Orientation> {
    let report = detect_simpson(table)?;
    let swapped_a2 = match report.status {
        ParadoxStatus::NoParadox => return Err(Error::NotAParadox),
        ParadoxStatus::ParadoxAggregateLess => false,
        ParadoxStatus::ParadoxAggregateGreater => true,
    };
    let t = if swapped_a2 { table.swap_a2() } else { *table };
    let fine = t.fine_conditionals()?;
    Ok(Orientation { swapped_a2, swapped_b: fine[0][1] <= fine[0][0] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOutcome {
    pub kernel: BKernel,
    /// Association signs for `c` and `c̄` in the caller's labels.
    pub signs: [i8; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Scan {
    pub n_kernels: u64,
    pub n_singular: u64,
    /// Realizable kernels strictly inside the valid region.
    pub n_valid: u64,
    pub n_sign_agree: u64,
    /// Realizable kernels on the boundary of the valid region.
    pub n_boundary: u64,
    pub n_boundary_agree: u64,
    /// Sign of both fine-grained gaps in the caller's labels.
    pub fine_sign: i8,
    pub orientation: Orientation,
    pub counterexamples: Vec<KernelOutcome>,
    pub boundary_counterexamples: Vec<KernelOutcome>,
}

impl Theorem1Scan {
    /// No valid kernel disagrees with the fine-grained sign.
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }

    fn empty(fine_sign: i8, orientation: Orientation) -> Self {
        Self {
            n_kernels: 0,
            n_singular: 0,
            n_valid: 0,
            n_sign_agree: 0,
            n_boundary: 0,
            n_boundary_agree: 0,
            fine_sign,
            orientation,
            counterexamples: Vec::new(),
            boundary_counterexamples: Vec::new(),
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.n_kernels += other.n_kernels;
        self.n_singular += other.n_singular;
        self.n_valid += other.n_valid;
        self.n_sign_agree += other.n_sign_agree;
        self.n_boundary += other.n_boundary;
        self.n_boundary_agree += other.n_boundary_agree;
        self.counterexamples.extend(other.counterexamples);
        self.boundary_counterexamples.extend(other.boundary_counterexamples);
        self
    }
}

/// Counterexample lists are capped so a broken scan cannot exhaust memory.
const MAX_RECORDED: usize = 1000;

struct ScanContext {
    canonical: JointTable,
    orientation: Orientation,
    fine_sign: i8,
}

impl ScanContext {
    fn new(table: &JointTable) -> Result<Self> {
        let orientation = canonical_orientation(table)?;
        Ok(Self {
            canonical: orientation.apply(table),
            orientation,
            fine_sign: orientation.sign_factor(),
        })
    }

    fn visit(&self, acc: &mut Theorem1Scan, kernel: BKernel) {
        acc.n_kernels += 1;
        let view = match invert(&self.canonical, &self.orientation.map_kernel(&kernel)) {
            Ok(v) => v,
            Err(Error::SingularKernel { .. }) => {
                acc.n_singular += 1;
                return;
            }
            Err(_) => return,
        };
        // canonical frame: the fine-grained sign is +1
        let canonical_signs = association_sign(&view);
        let agree = canonical_signs == [1, 1];
        let outcome = || KernelOutcome { kernel, signs: canonical_signs.map(|s| s * self.fine_sign) };
        if view.on_boundary() {
            acc.n_boundary += 1;
            if agree {
                acc.n_boundary_agree += 1;
            } else if acc.boundary_counterexamples.len() < MAX_RECORDED {
                acc.boundary_counterexamples.push(outcome());
            }
        } else {
            acc.n_valid += 1;
            if agree {
                acc.n_sign_agree += 1;
            } else if acc.counterexamples.len() < MAX_RECORDED {
                acc.counterexamples.push(outcome());
            }
        }
    }
}

const SCAN_CHUNK: u64 = 4096;

/// Samples `n_kernels` kernels uniformly from `[0,1]²`, inverts the table
/// for each and checks that every realizable binary cause reproduces the
/// fine-grained association sign.
pub fn theorem1_scan(table: &JointTable, n_kernels: u64, seed: u64, threads: Option<usize>) -> Result<Theorem1Scan> {
    let ctx = ScanContext::new(table)?;
    let parts = map_chunks(n_kernels, SCAN_CHUNK, seed, threads, |rng, _, len| {
        let mut acc = Theorem1Scan::empty(ctx.fine_sign, ctx.orientation);
        for _ in 0..len {
            let kernel = BKernel { p_b_given_c: rng.random(), p_notb_given_notc: rng.random() };
            ctx.visit(&mut acc, kernel);
        }
        acc
    });
    Ok(parts.into_iter().fold(Theorem1Scan::empty(ctx.fine_sign, ctx.orientation), Theorem1Scan::merge))
}

/// Same check over the regular grid `{0, h, 2h, …, 1}²`.
pub fn theorem1_grid(table: &JointTable, steps: u32) -> Result<Theorem1Scan> {
    let ctx = ScanContext::new(table)?;
    let mut acc = Theorem1Scan::empty(ctx.fine_sign, ctx.orientation);
    let h = 1.0 / steps as f64;
    for i in 0..=steps {
        for j in 0..=steps {
            ctx.visit(&mut acc, BKernel { p_b_given_c: i as f64 * h, p_notb_given_notc: j as f64 * h });
        }
    }
    Ok(acc)
}

/// Sign pattern a ternary cause should realise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchTarget {
    /// Every level agrees with the aggregate inequality.
    AggregateOption,
    /// Every level agrees with the fine-grained inequalities.
    FineOption,
    /// At least two levels disagree.
    MixedSigns,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SearchOutcome {
    Found {
        model: CauseModel,
        /// Per-level association gaps.
        gaps: Vec<f64>,
        evaluations: u64,
    },
    /// Budget exhausted; this does not prove that no such cause exists.
    NotFound { evaluations: u64 },
}

/// Smallest absolute association gap a search result must show.
pub const SEARCH_MARGIN: f64 = 1e-9;

const TERNARY: usize = 3;
const LOCAL_STEPS: u64 = 200;

/// Ternary-cause parameterisation with exact composition.
///
/// For a kernel `k = p(b | c)` and each of the four `A` states `a`, the row
/// `p(c | a)` must lie in the simplex and satisfy `Σ_c p(c|a) k_c = p(b|a)`;
/// this is a segment, and `lambda[a] ∈ [0, 1]` picks a point on it.
#[derive(Clone, Copy, Debug)]
struct TernaryParams {
    kernel: [f64; TERNARY],
    lambda: [f64; 4],
}

struct TernaryProblem {
    /// `p(a)` for `a = (i, k)` in order `a1a2, a1ā2, ā1a2, ā1ā2`.
    p_a: [f64; 4],
    /// `p(b | a)`.
    t: [f64; 4],
    agg_sign: i8,
    fine_sign: i8,
    target: SearchTarget,
}

fn segment_endpoints(kernel: &[f64; TERNARY], t: f64) -> Option<([f64; TERNARY], [f64; TERNARY])> {
    let mut points: Vec<[f64; TERNARY]> = Vec::with_capacity(3);
    for i in 0..TERNARY {
        for j in (i + 1)..TERNARY {
            let (ki, kj) = (kernel[i], kernel[j]);
            if (ki - t) * (kj - t) > 0.0 {
                continue;
            }
            let mut w = [0.0; TERNARY];
            if (kj - ki).abs() < 1e-15 {
                w[i] = 1.0;
            } else {
                w[i] = ((kj - t) / (kj - ki)).clamp(0.0, 1.0);
                w[j] = 1.0 - w[i];
            }
            points.push(w);
        }
    }
    let first = *points.first()?;
    let far = points
        .iter()
        .copied()
        .max_by(|a, b| dist2(a, &first).total_cmp(&dist2(b, &first)))
        .unwrap_or(first);
    Some((first, far))
}

fn dist2(a: &[f64; TERNARY], b: &[f64; TERNARY]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

impl TernaryProblem {
    fn new(table: &JointTable, target: SearchTarget) -> Result<Self> {
        let report = detect_simpson(table)?;
        if !report.status.is_paradox() {
            return Err(Error::NotAParadox);
        }
        let mut p_a = [0.0; 4];
        let mut t = [0.0; 4];
        for i in 0..2 {
            for k in 0..2 {
                let a = i * 2 + k;
                let pb = table.cell(i, k, 0);
                p_a[a] = pb + table.cell(i, k, 1);
                t[a] = if p_a[a] > 0.0 { pb / p_a[a] } else { 0.5 };
            }
        }
        Ok(Self {
            p_a,
            t,
            agg_sign: sign_with_tol(report.aggregate_gap, PROB_TOL),
            fine_sign: report.fine_sign(),
            target,
        })
    }

    fn feasible(&self, kernel: &[f64; TERNARY]) -> bool {
        let lo = kernel.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = kernel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.t.iter().all(|&t| lo <= t && t <= hi)
    }

    /// `joint[c][i][k]`, or `None` if the kernel cannot reproduce `p(b|a)`.
    fn joint(&self, params: &TernaryParams) -> Option<Vec<[[f64; 2]; 2]>> {
        if !self.feasible(&params.kernel) {
            return None;
        }
        let mut joint = vec![[[0.0; 2]; 2]; TERNARY];
        for i in 0..2 {
            for k in 0..2 {
                let a = i * 2 + k;
                let (w0, w1) = segment_endpoints(&params.kernel, self.t[a])?;
                let l = params.lambda[a];
                for c in 0..TERNARY {
                    joint[c][i][k] = self.p_a[a] * ((1.0 - l) * w0[c] + l * w1[c]);
                }
            }
        }
        Some(joint)
    }

    fn gaps(joint: &[[[f64; 2]; 2]]) -> Option<Vec<f64>> {
        joint
            .iter()
            .map(|cell| {
                let d0 = cell[0][0] + cell[1][0];
                let d1 = cell[0][1] + cell[1][1];
                (d0 > PROB_TOL && d1 > PROB_TOL).then(|| cell[0][0] / d0 - cell[0][1] / d1)
            })
            .collect()
    }

    fn score_gaps(&self, gaps: &[f64]) -> f64 {
        let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let max = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match self.target {
            SearchTarget::AggregateOption => gaps.iter().map(|g| g * self.agg_sign as f64).fold(f64::INFINITY, f64::min),
            SearchTarget::FineOption => gaps.iter().map(|g| g * self.fine_sign as f64).fold(f64::INFINITY, f64::min),
            SearchTarget::MixedSigns => max.min(-min),
        }
    }

    fn score(&self, params: &TernaryParams) -> f64 {
        self.joint(params)
            .and_then(|j| Self::gaps(&j))
            .map_or(f64::NEG_INFINITY, |g| self.score_gaps(&g))
    }

    fn random_params(&self, rng: &mut ChaCha8Rng) -> TernaryParams {
        let lo_t = self.t.iter().copied().fold(f64::INFINITY, f64::min);
        let hi_t = self.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut kernel = [
            rng.random::<f64>() * lo_t,
            hi_t + rng.random::<f64>() * (1.0 - hi_t),
            rng.random::<f64>(),
        ];
        // random placement of the low/high levels
        let swap = rng.random_range(0..TERNARY);
        kernel.swap(2, swap);
        TernaryParams { kernel, lambda: std::array::from_fn(|_| rng.random()) }
    }

    fn perturb(&self, p: &TernaryParams, scale: f64, rng: &mut ChaCha8Rng) -> TernaryParams {
        let mut q = *p;
        for v in q.kernel.iter_mut().chain(q.lambda.iter_mut()) {
            *v = (*v + scale * (rng.random::<f64>() * 2.0 - 1.0)).clamp(0.0, 1.0);
        }
        q
    }

    /// The binary cause `C ≡ B` with the `b̄` level split in two.
    fn embedded_identity(&self) -> Vec<[[f64; 2]; 2]> {
        let mut joint = vec![[[0.0; 2]; 2]; TERNARY];
        for i in 0..2 {
            for k in 0..2 {
                let a = i * 2 + k;
                joint[0][i][k] = self.p_a[a] * self.t[a];
                joint[1][i][k] = self.p_a[a] * (1.0 - self.t[a]) / 2.0;
                joint[2][i][k] = self.p_a[a] * (1.0 - self.t[a]) / 2.0;
            }
        }
        joint
    }
}

/// Random-restart local search for a ternary cause of `table` whose per-level
/// association signs follow `target`.
///
/// Every candidate reproduces the table exactly by construction; the search
/// only moves the kernel and the position on each feasible segment. `budget`
/// caps the number of candidate evaluations.
pub fn search_ternary(table: &JointTable, target: SearchTarget, budget: u64, seed: u64) -> Result<SearchOutcome> {
    let problem = TernaryProblem::new(table, target)?;
    let kernel = vec![1.0, 0.0, 0.0];
    let mut evaluations = 0u64;

    let found = |joint: Vec<[[f64; 2]; 2]>, kernel: Vec<f64>, evaluations: u64| -> Result<SearchOutcome> {
        let model = CauseModel::new(joint, kernel)?;
        let gaps = model.association_gaps().into_iter().map(|g| g.unwrap_or(0.0)).collect();
        Ok(SearchOutcome::Found { model, gaps, evaluations })
    };

    if budget > 0 {
        evaluations += 1;
        let joint = problem.embedded_identity();
        if let Some(g) = TernaryProblem::gaps(&joint) {
            if problem.score_gaps(&g) > SEARCH_MARGIN {
                return found(joint, kernel, evaluations);
            }
        }
    }

    let mut restart = 0u64;
    while evaluations < budget {
        let mut rng = chunk_rng(seed, restart);
        restart += 1;
        let mut best = problem.random_params(&mut rng);
        let mut best_score = problem.score(&best);
        evaluations += 1;
        let mut scale = 0.2;
        for _ in 0..LOCAL_STEPS {
            if best_score > SEARCH_MARGIN || evaluations >= budget {
                break;
            }
            let cand = problem.perturb(&best, scale, &mut rng);
            let s = problem.score(&cand);
            evaluations += 1;
            if s > best_score {
                best = cand;
                best_score = s;
            } else {
                scale = (scale * 0.97).max(1e-4);
            }
        }
        if best_score > SEARCH_MARGIN {
            let joint = problem.joint(&best).expect("scored candidate is feasible");
            return found(joint, best.kernel.to_vec(), evaluations);
        }
    }
    Ok(SearchOutcome::NotFound { evaluations })
}

/// Whether per-level gaps realise `target` for a table with the given
/// aggregate and fine-grained signs.
pub fn matches_target(gaps: &[f64], target: SearchTarget, agg_sign: i8, fine_sign: i8) -> bool {
    let signs: Vec<i8> = gaps.iter().map(|&g| sign_with_tol(g, PROB_TOL)).collect();
    match target {
        SearchTarget::AggregateOption => signs.iter().all(|&s| s == agg_sign),
        SearchTarget::FineOption => signs.iter().all(|&s| s == fine_sign),
        SearchTarget::MixedSigns => signs.contains(&1) && signs.contains(&-1),
    }
}
