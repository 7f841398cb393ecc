//! Joint distributions over three binary variables and Simpson's paradox.
//!
//! `A1` is the target (`a1` / `ā1`), `A2` the control (`a2` / `ā2`) and `B`
//! the lurking variable (`b` / `b̄`). Cells are stored as `p[i][k][m]` with
//! index 0 for the event and 1 for its complement.

use serde::{Deserialize, Serialize};

use crate::{sign_with_tol, Error, Result, PROB_TOL};

/// One literal of a conjunction over `A1, A2, B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    A1,
    NotA1,
    A2,
    NotA2,
    B,
    NotB,
}

impl Event {
    fn axis_and_index(self) -> (usize, usize) {
        match self {
            Event::A1 => (0, 0),
            Event::NotA1 => (0, 1),
            Event::A2 => (1, 0),
            Event::NotA2 => (1, 1),
            Event::B => (2, 0),
            Event::NotB => (2, 1),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Event::A1 => "a1",
            Event::NotA1 => "!a1",
            Event::A2 => "a2",
            Event::NotA2 => "!a2",
            Event::B => "b",
            Event::NotB => "!b",
        }
    }
}

fn describe(events: &[Event]) -> String {
    if events.is_empty() {
        return "(empty)".to_string();
    }
    events.iter().map(|e| e.label()).collect::<Vec<_>>().join(",")
}

/// Exact joint probability table `p(A1, A2, B)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    p: [[[f64; 2]; 2]; 2],
}

impl JointTable {
    /// Builds a table from eight counts in `(a1, a2, b)` lexicographic order,
    /// event before complement: `[a1 a2 b, a1 a2 b̄, a1 ā2 b, ..., ā1 ā2 b̄]`.
    pub fn from_counts(counts: [u64; 8]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::AllZeroCounts);
        }
        let total = total as f64;
        Ok(Self::from_flat_unchecked(counts.map(|c| c as f64 / total)))
    }

    /// Builds a table from eight probabilities in the same order as
    /// [`JointTable::from_counts`]. Cells must be nonnegative and sum to one.
    pub fn from_probabilities(cells: [f64; 8]) -> Result<Self> {
        if let Some(bad) = cells.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidTable(format!("cell value {bad} is not a probability")));
        }
        let sum: f64 = cells.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidTable(format!("cells sum to {sum}")));
        }
        Ok(Self::from_flat_unchecked(cells))
    }

    /// Rescales nonnegative weights to a probability table.
    pub fn from_weights(weights: [f64; 8]) -> Result<Self> {
        if let Some(bad) = weights.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidTable(format!("weight {bad} is negative or not finite")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::AllZeroCounts);
        }
        Ok(Self::from_flat_unchecked(weights.map(|w| w / sum)))
    }

    fn from_flat_unchecked(cells: [f64; 8]) -> Self {
        let mut p = [[[0.0; 2]; 2]; 2];
        for (idx, v) in cells.into_iter().enumerate() {
            p[idx >> 2][(idx >> 1) & 1][idx & 1] = v;
        }
        Self { p }
    }

    /// Uniform table, every cell 1/8.
    pub fn uniform() -> Self {
        Self::from_flat_unchecked([0.125; 8])
    }

    /// Cells in `(a1, a2, b)` lexicographic order.
    pub fn to_flat(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (idx, v) in out.iter_mut().enumerate() {
            *v = self.p[idx >> 2][(idx >> 1) & 1][idx & 1];
        }
        out
    }

    /// `p(A1 = i, A2 = k, B = m)` with 0 for the event, 1 for the complement.
    pub fn cell(&self, i: usize, k: usize, m: usize) -> f64 {
        self.p[i][k][m]
    }

    /// Probability of a conjunction of events. Contradictory conjunctions
    /// (e.g. `a2` and `ā2`) have probability zero.
    pub fn prob(&self, events: &[Event]) -> f64 {
        let mut allowed = [[true; 2]; 3];
        for e in events {
            let (axis, idx) = e.axis_and_index();
            allowed[axis][1 - idx] = false;
        }
        let mut total = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                for m in 0..2 {
                    if allowed[0][i] && allowed[1][k] && allowed[2][m] {
                        total += self.p[i][k][m];
                    }
                }
            }
        }
        total
    }

    /// `p(target | givens)`.
    pub fn conditional(&self, target: &[Event], givens: &[Event]) -> Result<f64> {
        let denom = self.prob(givens);
        if denom <= 0.0 {
            return Err(Error::ZeroConditioningMargin(describe(givens)));
        }
        let joint: Vec<Event> = target.iter().chain(givens).copied().collect();
        Ok(self.prob(&joint) / denom)
    }

    /// `[p(a1|a2), p(a1|ā2)]`.
    pub fn aggregate_conditionals(&self) -> Result<[f64; 2]> {
        Ok([
            self.conditional(&[Event::A1], &[Event::A2])?,
            self.conditional(&[Event::A1], &[Event::NotA2])?,
        ])
    }

    /// `fine[k][m] = p(a1 | A2 = k, B = m)`.
    pub fn fine_conditionals(&self) -> Result<[[f64; 2]; 2]> {
        let mut out = [[0.0; 2]; 2];
        for (k, a2) in [Event::A2, Event::NotA2].into_iter().enumerate() {
            for (m, b) in [Event::B, Event::NotB].into_iter().enumerate() {
                out[k][m] = self.conditional(&[Event::A1], &[a2, b])?;
            }
        }
        Ok(out)
    }

    /// `[p(b|a2), p(b|ā2)]`.
    pub fn b_given_a2(&self) -> Result<[f64; 2]> {
        Ok([
            self.conditional(&[Event::B], &[Event::A2])?,
            self.conditional(&[Event::B], &[Event::NotA2])?,
        ])
    }

    /// Relabels `a1 ↔ ā1`.
    pub fn swap_a1(&self) -> Self {
        let mut p = self.p;
        p.swap(0, 1);
        Self { p }
    }

    /// Relabels `a2 ↔ ā2`.
    pub fn swap_a2(&self) -> Self {
        let mut p = self.p;
        for plane in p.iter_mut() {
            plane.swap(0, 1);
        }
        Self { p }
    }

    /// Relabels `b ↔ b̄`.
    pub fn swap_b(&self) -> Self {
        let mut p = self.p;
        for plane in p.iter_mut() {
            for row in plane.iter_mut() {
                row.swap(0, 1);
            }
        }
        Self { p }
    }

    /// Fine-grained conditionals if all four `(A2, B)` margins are positive.
    fn positive_fine(&self) -> Option<[[f64; 2]; 2]> {
        let mut out = [[0.0; 2]; 2];
        for k in 0..2 {
            for m in 0..2 {
                let denom = self.p[0][k][m] + self.p[1][k][m];
                if denom <= 0.0 {
                    return None;
                }
                out[k][m] = self.p[0][k][m] / denom;
            }
        }
        Some(out)
    }
}

/// Classification of a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParadoxStatus {
    NoParadox,
    /// `p(a1|a2) < p(a1|ā2)` while both `B`-strata favour `a2`.
    ParadoxAggregateLess,
    /// All inequalities inverted.
    ParadoxAggregateGreater,
}

impl ParadoxStatus {
    pub fn is_paradox(self) -> bool {
        self != ParadoxStatus::NoParadox
    }

    pub fn flipped(self) -> Self {
        match self {
            ParadoxStatus::NoParadox => ParadoxStatus::NoParadox,
            ParadoxStatus::ParadoxAggregateLess => ParadoxStatus::ParadoxAggregateGreater,
            ParadoxStatus::ParadoxAggregateGreater => ParadoxStatus::ParadoxAggregateLess,
        }
    }
}

/// Total orderings of the four fine-grained conditionals that are necessary
/// for the paradox.
///
/// `SD1`: `p(a1|ā2,b) < p(a1|a2,b) < p(a1|ā2,b̄) < p(a1|a2,b̄)`;
/// `SD2`: the same with `b` and `b̄` exchanged. Each pattern also matches its
/// fully inverted chain, which is the necessary ordering for the inverted
/// paradox.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderingPattern {
    SD1,
    SD2,
    None,
}

fn strictly_monotone(chain: [f64; 4]) -> bool {
    let up = chain.windows(2).all(|w| w[1] - w[0] > PROB_TOL);
    let down = chain.windows(2).all(|w| w[0] - w[1] > PROB_TOL);
    up || down
}

/// Classifies `fine[k][m] = p(a1 | A2 = k, B = m)`.
pub fn ordering_pattern(fine: &[[f64; 2]; 2]) -> OrderingPattern {
    if strictly_monotone([fine[1][0], fine[0][0], fine[1][1], fine[0][1]]) {
        OrderingPattern::SD1
    } else if strictly_monotone([fine[1][1], fine[0][1], fine[1][0], fine[0][0]]) {
        OrderingPattern::SD2
    } else {
        OrderingPattern::None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParadoxReport {
    pub status: ParadoxStatus,
    /// `p(a1|a2) − p(a1|ā2)`.
    pub aggregate_gap: f64,
    /// Gaps within `b` and within `b̄`.
    pub fine_gaps: [f64; 2],
    pub ordering_pattern: OrderingPattern,
    /// `(p(b|a2) − ½)(p(b|ā2) − ½)`.
    pub b_dependence_sign: f64,
    /// `[p(a1|a2), p(a1|ā2)]`.
    pub aggregate: [f64; 2],
    /// `[p(a1|a2,b), p(a1|ā2,b)]`.
    pub fine_b: [f64; 2],
    /// `[p(a1|a2,b̄), p(a1|ā2,b̄)]`.
    pub fine_not_b: [f64; 2],
    /// `[p(b|a2), p(b|ā2)]`.
    pub b_given_a2: [f64; 2],
}

impl ParadoxReport {
    /// Sign shared by both fine-grained gaps, or 0 without a paradox.
    pub fn fine_sign(&self) -> i8 {
        match self.status {
            ParadoxStatus::NoParadox => 0,
            ParadoxStatus::ParadoxAggregateLess => 1,
            ParadoxStatus::ParadoxAggregateGreater => -1,
        }
    }
}

/// Classifies a table. All inequalities are strict: any gap within
/// [`PROB_TOL`] of zero means no paradox.
pub fn detect_simpson(table: &JointTable) -> Result<ParadoxReport> {
    let fine = table.fine_conditionals()?;
    let aggregate = table.aggregate_conditionals()?;
    let b_given_a2 = table.b_given_a2()?;

    let aggregate_gap = aggregate[0] - aggregate[1];
    let fine_gaps = [fine[0][0] - fine[1][0], fine[0][1] - fine[1][1]];
    let agg_sign = sign_with_tol(aggregate_gap, PROB_TOL);
    let fine_signs = fine_gaps.map(|g| sign_with_tol(g, PROB_TOL));

    let status = match (agg_sign, fine_signs) {
        (-1, [1, 1]) => ParadoxStatus::ParadoxAggregateLess,
        (1, [-1, -1]) => ParadoxStatus::ParadoxAggregateGreater,
        _ => ParadoxStatus::NoParadox,
    };

    Ok(ParadoxReport {
        status,
        aggregate_gap,
        fine_gaps,
        ordering_pattern: ordering_pattern(&fine),
        b_dependence_sign: (b_given_a2[0] - 0.5) * (b_given_a2[1] - 0.5),
        aggregate,
        fine_b: [fine[0][0], fine[1][0]],
        fine_not_b: [fine[0][1], fine[1][1]],
        b_given_a2,
    })
}

/// The two-inequality criterion used for frequency estimates:
/// `[Δ][Δ_b] < 0` and `[Δ_b][Δ_b̄] > 0`, counting both orientations.
/// Returns `None` when a conditioning margin is zero.
pub fn paradox_by_sign_products(table: &JointTable) -> Option<bool> {
    let fine = table.positive_fine()?;
    let p = &table.p;
    let a2 = p[0][0][0] + p[0][0][1] + p[1][0][0] + p[1][0][1];
    let not_a2 = p[0][1][0] + p[0][1][1] + p[1][1][0] + p[1][1][1];
    let agg = (p[0][0][0] + p[0][0][1]) / a2 - (p[0][1][0] + p[0][1][1]) / not_a2;
    let gap_b = fine[0][0] - fine[1][0];
    let gap_not_b = fine[0][1] - fine[1][1];
    Some(agg * gap_b < 0.0 && gap_b * gap_not_b > 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessaryConditions {
    pub ordering: OrderingPattern,
    /// Whether `p(b|a2) ≠ p(b|ā2)`.
    pub b_dependent: bool,
    /// Sign of `p(b|a2) − p(b|ā2)`.
    pub b_direction: i8,
}

pub fn necessary_conditions(table: &JointTable) -> Result<NecessaryConditions> {
    let fine = table.fine_conditionals()?;
    let b = table.b_given_a2()?;
    let b_direction = sign_with_tol(b[0] - b[1], PROB_TOL);
    Ok(NecessaryConditions {
        ordering: ordering_pattern(&fine),
        b_dependent: b_direction != 0,
        b_direction,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternativeCriteria {
    /// `p(a2)p(a1|a2) − p(ā2)p(a1|ā2)`.
    pub barigelli_value: f64,
    pub barigelli_sign: i8,
    /// `p(a2)[p(a1|a2) − p(ā1|a2)] − p(ā2)[p(a1|ā2) − p(ā1|ā2)]`.
    pub rudas_value: f64,
    pub rudas_sign: i8,
}

/// Retrodiction (Barigelli–Scozzafava) and Rudas criteria. Both weight the
/// conditionals by `p(A2)`, so neither can be reversed by conditioning on `B`.
pub fn alternative_criteria(table: &JointTable) -> Result<AlternativeCriteria> {
    let p_a2 = table.prob(&[Event::A2]);
    let p_not_a2 = table.prob(&[Event::NotA2]);
    let [given_a2, given_not_a2] = table.aggregate_conditionals()?;
    let barigelli_value = p_a2 * given_a2 - p_not_a2 * given_not_a2;
    let rudas_value = p_a2 * (given_a2 - (1.0 - given_a2))
        - p_not_a2 * (given_not_a2 - (1.0 - given_not_a2));
    Ok(AlternativeCriteria {
        barigelli_value,
        barigelli_sign: sign_with_tol(barigelli_value, PROB_TOL),
        rudas_value,
        rudas_sign: sign_with_tol(rudas_value, PROB_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_counts() {
        let t = JointTable::from_counts([1; 8]).unwrap();
        assert!(t.to_flat().iter().all(|&c| c == 0.125));
        assert_eq!(t, JointTable::uniform());
    }

    #[test]
    fn degenerate_counts() {
        let t = JointTable::from_counts([1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(t.cell(0, 0, 0), 1.0);
        assert_eq!(t.prob(&[]), 1.0);
    }

    #[test]
    fn all_zero_counts_rejected() {
        assert!(matches!(JointTable::from_counts([0; 8]), Err(Error::AllZeroCounts)));
    }

    #[test]
    fn probabilities_validated() {
        assert!(JointTable::from_probabilities([0.2; 8]).is_err());
        let mut cells = [0.125; 8];
        cells[0] = -0.125;
        cells[1] = 0.375;
        assert!(JointTable::from_probabilities(cells).is_err());
    }

    #[test]
    fn uniform_conditionals_are_half() {
        let t = JointTable::uniform();
        assert_eq!(t.conditional(&[Event::A1], &[Event::A2]).unwrap(), 0.5);
        assert_eq!(t.conditional(&[Event::A1], &[Event::NotA2, Event::B]).unwrap(), 0.5);
        assert_eq!(t.conditional(&[Event::B], &[]).unwrap(), 0.5);
    }

    #[test]
    fn contradictory_givens_fail() {
        let t = JointTable::uniform();
        let err = t.conditional(&[Event::A1], &[Event::A2, Event::NotA2]).unwrap_err();
        assert!(matches!(err, Error::ZeroConditioningMargin(_)));
    }

    #[test]
    fn zero_margin_fails_loudly() {
        // nothing in (ā2, b̄)
        let t = JointTable::from_counts([1, 1, 1, 0, 1, 1, 1, 0]).unwrap();
        assert!(matches!(detect_simpson(&t), Err(Error::ZeroConditioningMargin(_))));
        assert!(matches!(necessary_conditions(&t), Err(Error::ZeroConditioningMargin(_))));
        assert_eq!(paradox_by_sign_products(&t), None);
    }

    #[test]
    fn independent_a1_is_not_a_paradox() {
        // p(A1) ⟂ (A2, B)
        let a2b = [0.1, 0.2, 0.3, 0.4];
        let pa1 = 0.3;
        let mut cells = [0.0; 8];
        for (j, w) in a2b.iter().enumerate() {
            cells[j] = pa1 * w;
            cells[4 + j] = (1.0 - pa1) * w;
        }
        let t = JointTable::from_weights(cells).unwrap();
        let r = detect_simpson(&t).unwrap();
        assert_eq!(r.status, ParadoxStatus::NoParadox);
        assert!(r.aggregate_gap.abs() < 1e-15);
        assert!(r.fine_gaps.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn uniform_has_no_ordering_or_dependence() {
        let n = necessary_conditions(&JointTable::uniform()).unwrap();
        assert_eq!(n.ordering, OrderingPattern::None);
        assert!(!n.b_dependent);
        assert_eq!(n.b_direction, 0);
        let alt = alternative_criteria(&JointTable::uniform()).unwrap();
        assert_eq!((alt.barigelli_sign, alt.rudas_sign), (0, 0));
    }

    /// Builds a table from `p(a2)`, `p(b|A2)` and `p(a1|A2,B)`.
    fn table_from_parts(p_a2: f64, b_given: [f64; 2], fine: [[f64; 2]; 2]) -> JointTable {
        let mut cells = [0.0; 8];
        for k in 0..2 {
            let pk = if k == 0 { p_a2 } else { 1.0 - p_a2 };
            for m in 0..2 {
                let pm = if m == 0 { b_given[k] } else { 1.0 - b_given[k] };
                let joint = pk * pm;
                cells[k * 2 + m] = joint * fine[k][m];
                cells[4 + k * 2 + m] = joint * (1.0 - fine[k][m]);
            }
        }
        JointTable::from_weights(cells).unwrap()
    }

    fn covid_like() -> JointTable {
        table_from_parts(0.5, [0.8983, 0.6859], [[0.0507, 0.150], [0.0490, 0.135]])
    }

    #[test]
    fn total_probability_holds() {
        let t = covid_like();
        let fine = t.fine_conditionals().unwrap();
        let b = t.b_given_a2().unwrap();
        let agg = t.aggregate_conditionals().unwrap();
        for k in 0..2 {
            let mixed = fine[k][0] * b[k] + fine[k][1] * (1.0 - b[k]);
            assert!(close(mixed, agg[k], 1e-12));
        }
    }

    #[test]
    fn covid_like_is_sd1_paradox() {
        let t = covid_like();
        let r = detect_simpson(&t).unwrap();
        assert_eq!(r.status, ParadoxStatus::ParadoxAggregateLess);
        assert_eq!(r.ordering_pattern, OrderingPattern::SD1);
        // both p(b|·) above one half: the product form is positive even though
        // B and A2 are dependent
        assert!(r.b_dependence_sign > 0.0);
        let n = necessary_conditions(&t).unwrap();
        assert!(n.b_dependent);
        assert_eq!(n.b_direction, 1);
    }

    #[test]
    fn relabelings() {
        let t = covid_like();
        let base = detect_simpson(&t).unwrap();
        let sb = detect_simpson(&t.swap_b()).unwrap();
        assert_eq!(sb.status, base.status);
        assert_eq!(sb.ordering_pattern, OrderingPattern::SD2);
        let sa1 = detect_simpson(&t.swap_a1()).unwrap();
        assert_eq!(sa1.status, base.status.flipped());
        assert_eq!(sa1.ordering_pattern, OrderingPattern::SD1);
        let sa2 = detect_simpson(&t.swap_a2()).unwrap();
        assert_eq!(sa2.status, base.status.flipped());
        assert_eq!(t.swap_a2().swap_a2(), t);
    }

    #[test]
    fn sign_product_criterion_matches_detection_off_ties() {
        let t = covid_like();
        assert_eq!(paradox_by_sign_products(&t), Some(true));
        assert_eq!(paradox_by_sign_products(&t.swap_a2()), Some(true));
        assert_eq!(paradox_by_sign_products(&JointTable::uniform()), Some(false));
    }

    #[test]
    fn ties_are_not_a_paradox() {
        // fine gap within b is exactly zero
        let t = table_from_parts(0.5, [0.9, 0.6], [[0.05, 0.15], [0.05, 0.135]]);
        assert_eq!(detect_simpson(&t).unwrap().status, ParadoxStatus::NoParadox);
    }

    #[test]
    fn alternative_criteria_arithmetic() {
        let t = covid_like();
        let alt = alternative_criteria(&t).unwrap();
        let agg = t.aggregate_conditionals().unwrap();
        let expected = 0.5 * agg[0] - 0.5 * agg[1];
        assert!(close(alt.barigelli_value, expected, 1e-15));
        assert_eq!(alt.barigelli_sign, -1);
        let rudas = 0.5 * (2.0 * agg[0] - 1.0) - 0.5 * (2.0 * agg[1] - 1.0);
        assert!(close(alt.rudas_value, rudas, 1e-15));
        assert_eq!(alt.rudas_sign, -1);
    }

    #[test]
    fn barigelli_is_stable_under_stratification() {
        let t = covid_like();
        let alt = alternative_criteria(&t).unwrap();
        let mut stratified = 0.0;
        for b in [Event::B, Event::NotB] {
            let with = t.prob(&[Event::A2, b]) * t.conditional(&[Event::A1], &[Event::A2, b]).unwrap();
            let without =
                t.prob(&[Event::NotA2, b]) * t.conditional(&[Event::A1], &[Event::NotA2, b]).unwrap();
            stratified += with - without;
        }
        assert_eq!(sign_with_tol(stratified, PROB_TOL), alt.barigelli_sign);
        assert!(close(stratified, alt.barigelli_value, 1e-15));
    }
}
