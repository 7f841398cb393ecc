#![allow(dead_code)]

use simpson_core::contingency::JointTable;
use simpson_core::datasets;

pub fn covid() -> JointTable {
    datasets::bundled("covid").unwrap().to_joint().unwrap()
}

pub fn smoking_coarse() -> JointTable {
    datasets::bundled("smoking_coarse").unwrap().to_joint().unwrap()
}

/// Inversion by solving the forward equations directly.
///
/// For each `a_k` and `a1` state `i` the unknowns `u = p(i,c|a_k)`,
/// `v = p(i,c̄|a_k)` satisfy
/// `p(i,b|a_k) = beta u + (1 − gamma) v` and `p(i,b̄|a_k) = (1 − beta) u + gamma v`.
pub struct OracleView {
    /// `p(a1 | a_k, c)` at `[k][c]`.
    pub a1_given: [[f64; 2]; 2],
    /// `p(c | a_k)`.
    pub c_given: [f64; 2],
    /// Smallest `p(i, c | a_k)` entry.
    pub min_entry: f64,
}

pub fn oracle_invert(cells: &[f64; 8], beta: f64, gamma: f64) -> Option<OracleView> {
    let (m11, m12, m21, m22) = (beta, 1.0 - gamma, 1.0 - beta, gamma);
    let det = m11 * m22 - m12 * m21;
    if det.abs() < 1e-10 {
        return None;
    }
    let mut a1_given = [[0.0; 2]; 2];
    let mut c_given = [0.0; 2];
    let mut min_entry = f64::INFINITY;
    for k in 0..2 {
        let pk: f64 = (0..2).flat_map(|i| (0..2).map(move |m| (i, m))).map(|(i, m)| cells[i * 4 + k * 2 + m]).sum();
        let mut uc = [0.0; 2];
        let mut ucbar = [0.0; 2];
        for i in 0..2 {
            let rb = cells[i * 4 + k * 2] / pk;
            let rbbar = cells[i * 4 + k * 2 + 1] / pk;
            // Cramer's rule
            uc[i] = (rb * m22 - m12 * rbbar) / det;
            ucbar[i] = (m11 * rbbar - rb * m21) / det;
            min_entry = min_entry.min(uc[i]).min(ucbar[i]);
        }
        let pc = uc[0] + uc[1];
        let pcbar = ucbar[0] + ucbar[1];
        c_given[k] = pc;
        a1_given[k] = [uc[0] / pc, ucbar[0] / pcbar];
    }
    Some(OracleView { a1_given, c_given, min_entry })
}

/// `p(i,k,m) = Σ_c p(i,k,c) p(m|c)` for `joint[c][i][k]` and `kernel[c] = p(b|c)`.
pub fn oracle_compose(joint: &[[[f64; 2]; 2]], kernel: &[f64]) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (c, block) in joint.iter().enumerate() {
        for i in 0..2 {
            for k in 0..2 {
                out[i * 4 + k * 2] += block[i][k] * kernel[c];
                out[i * 4 + k * 2 + 1] += block[i][k] * (1.0 - kernel[c]);
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
