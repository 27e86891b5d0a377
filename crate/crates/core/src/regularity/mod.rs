//! Certification and construction of (ε,d)-regular and super-regular structure.
//!
//! Pair checks come in two strategies. The exhaustive check enumerates every
//! qualifying subset of the smaller side; for a fixed subset `U′` and size `t`,
//! the extreme values of `e(U′,W′)` over `|W′| = t` are attained by the `t`
//! vertices of `W` with the most (fewest) neighbours in `U′`, so the larger
//! side never needs enumerating and the verdict is exact. The sampled check
//! first probes neighbourhood-shaped subsets (the shape planted irregularity
//! takes) and then draws uniformly random subset pairs; a regular verdict under
//! sampling is relative to the recorded sample count.

mod check;
mod partition;

pub(crate) use check::degree_threshold;
pub use check::{
    check_regular_pair, check_super_regular_pair, typical_vertices, CheckConfig, LowDegree,
    PairCertificate, Strategy, TypicalReport, Verdict, Witness,
};
pub use partition::{
    build_regular_partition, maximal_reduced_graph, super_regularize, BuildReport,
    ClusterPartition, LabelledCertificate, PartitionBuildFailure, RStarCertificate, ReducedGraph,
    RoundLog, SuperRegularizeReport,
};

use serde::Serialize;

use crate::exact::{Rational, Surd};
use crate::graph::{GraphError, Side};

#[derive(Debug, thiserror::Error)]
pub enum RegularityError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid regularity parameters: {0}")]
    InvalidParams(String),
    #[error("pair sides must be opposite and both sets nonempty")]
    BadPair,
    #[error("exhaustive check would enumerate {subsets} subsets, above the cap {cap}; use the sampled strategy")]
    EnumerationCapExceeded { subsets: u128, cap: u64 },
    #[error("graph must be balanced with n ≥ kmax (n = {n}, kmax = {kmax})")]
    GraphTooSmall { n: usize, kmax: usize },
    #[error("k0 = {k0} must satisfy 1 ≤ k0 ≤ kmax = {kmax}")]
    BadClusterRange { k0: usize, kmax: usize },
    #[error("cluster count would exceed kmax = {kmax} before {regular_fraction:.3} of pairs certified (need {needed:.3})")]
    KmaxExceeded {
        kmax: usize,
        regular_fraction: f64,
        needed: f64,
        best: Box<PartitionBuildFailure>,
    },
    #[error("R* edge ({0}, {1}) is not an edge of R")]
    RStarNotInR(usize, usize),
    #[error("R* has maximum degree {found} > Δ = {allowed}")]
    RStarDegree { found: usize, allowed: usize },
    #[error("exceptional set on side {side:?} reached {size} > bound {bound} while cleaning pair (A{}, B{})", pair.0, pair.1)]
    ExceptionalOverflow {
        side: Side,
        size: usize,
        bound: usize,
        pair: (usize, usize),
    },
    #[error("partition is invalid: {0}")]
    InvalidPartition(String),
    #[error("re-bounded parameter needs more than two distinct square roots")]
    TooManyRadicands,
}

/// `(ε, d)` with `0 < ε ≤ 1` and `0 ≤ d ≤ 1`, both exact reals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegularityParams {
    pub epsilon: Surd,
    pub d: Surd,
}

impl RegularityParams {
    pub fn new(epsilon: Rational, d: Rational) -> Result<Self, RegularityError> {
        RegularityParams::from_surds(Surd::from(epsilon), Surd::from(d))
    }

    pub fn from_surds(epsilon: Surd, d: Surd) -> Result<Self, RegularityError> {
        let zero = Rational::from_integer(0.into());
        let one = Rational::from_integer(1.into());
        if epsilon.cmp_rational(&zero).is_le() || epsilon.cmp_rational(&one).is_gt() {
            return Err(RegularityError::InvalidParams(format!(
                "epsilon = {epsilon} not in (0,1]"
            )));
        }
        if d.cmp_rational(&zero).is_lt() || d.cmp_rational(&one).is_gt() {
            return Err(RegularityError::InvalidParams(format!(
                "d = {d} not in [0,1]"
            )));
        }
        Ok(RegularityParams { epsilon, d })
    }
}

/// Re-bounds `(ε, d)` after moving an `α`- and `β`-fraction of vertices:
/// `(min(ε + 3(√α + √β), 1), max(d − 2(α + β), 0))`.
pub fn rebound_after_perturbation(
    params: &RegularityParams,
    alpha: &Rational,
    beta: &Rational,
) -> Result<RegularityParams, RegularityError> {
    let zero = Rational::from_integer(0.into());
    let one = Rational::from_integer(1.into());
    if alpha < &zero || beta < &zero {
        return Err(RegularityError::InvalidParams(
            "alpha and beta must be non-negative".into(),
        ));
    }
    let three = Rational::from_integer(3.into());
    let two = Rational::from_integer(2.into());
    let eps = params
        .epsilon
        .checked_add(&Surd::term(three.clone(), alpha.clone()))
        .and_then(|s| s.checked_add(&Surd::term(three, beta.clone())))
        .ok_or(RegularityError::TooManyRadicands)?
        .min_rational(&one);
    let d = params
        .d
        .add_rational(&-(two * (alpha + beta)))
        .max_rational(&zero);
    Ok(RegularityParams { epsilon: eps, d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn rebound_identity_and_paper_value() {
        let p = RegularityParams::new(rat(1, 10), rat(1, 2)).unwrap();
        assert_eq!(
            rebound_after_perturbation(&p, &rat(0, 1), &rat(0, 1)).unwrap(),
            p
        );
        let q = rebound_after_perturbation(&p, &rat(1, 100), &rat(0, 1)).unwrap();
        assert_eq!(q.epsilon.as_rational(), Some(&rat(2, 5)));
        assert_eq!(q.d.as_rational(), Some(&rat(12, 25)));
    }

    #[test]
    fn rebound_clamps() {
        let p = RegularityParams::new(rat(1, 10), rat(1, 2)).unwrap();
        let q = rebound_after_perturbation(&p, &rat(1, 25), &rat(1, 25)).unwrap();
        assert_eq!(q.epsilon.as_rational(), Some(&rat(1, 1)));
        assert_eq!(q.d.as_rational(), Some(&rat(34, 100)));
    }

    #[test]
    fn params_validated() {
        assert!(RegularityParams::new(rat(0, 1), rat(1, 2)).is_err());
        assert!(RegularityParams::new(rat(1, 2), rat(3, 2)).is_err());
        assert!(RegularityParams::new(rat(1, 1), rat(0, 1)).is_ok());
    }
}
