//! Condition-number scoring of complete pairs and best/worst selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{condition_number, eigenpairs, ComplexMatrix};
use crate::pencil::{QuadraticPencil, Structure};
use crate::solvent::{make_pair, SolventOptions, SolventPair};
use crate::splitting::{
    eigen_pairs, EigenPair, Splitting, SplittingPlan, DEFAULT_CLUSTER_TOL, DEFAULT_CONJ_TOL,
};

/// Condition numbers of one complete pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub kappa_x1: f64,
    pub kappa_z1: f64,
    pub kappa_x: f64,
    pub kappa_z: f64,
    pub kappa_diff: f64,
    pub kappa_max: f64,
    pub norm_x: f64,
    pub norm_z: f64,
    pub splitting_index: usize,
}

impl PairScore {
    pub fn kappas(&self) -> [f64; 5] {
        [
            self.kappa_x1,
            self.kappa_z1,
            self.kappa_x,
            self.kappa_z,
            self.kappa_diff,
        ]
    }
}

pub fn score_pair(pair: &SolventPair, splitting_index: usize) -> Result<PairScore> {
    let named = [
        ("X1", pair.x.kappa_x1),
        ("Z1", pair.z.kappa_x1),
        ("X", condition_number(&pair.x.x)?),
        ("Z", condition_number(&pair.z.x)?),
        ("X - Z", pair.kappa_diff),
    ];
    if let Some((name, _)) = named.iter().find(|(_, k)| !k.is_finite()) {
        return Err(Error::UnscorablePair(name));
    }
    let kappa_max = named.iter().map(|(_, k)| *k).fold(0.0, f64::max);
    Ok(PairScore {
        kappa_x1: named[0].1,
        kappa_z1: named[1].1,
        kappa_x: named[2].1,
        kappa_z: named[3].1,
        kappa_diff: named[4].1,
        kappa_max,
        norm_x: pair.x.x.spectral_norm(),
        norm_z: pair.z.x.spectral_norm(),
        splitting_index,
    })
}

/// `(argmin, argmax)` of `kappa_max`; ties go to the smaller splitting index.
pub fn select_best_worst(scores: &[PairScore]) -> Result<(PairScore, PairScore)> {
    let first = *scores
        .first()
        .ok_or_else(|| Error::NoPairs("no scores to select from".into()))?;
    let mut best = first;
    let mut worst = first;
    for s in &scores[1..] {
        let earlier = |a: &PairScore, b: &PairScore| a.splitting_index < b.splitting_index;
        if s.kappa_max < best.kappa_max || (s.kappa_max == best.kappa_max && earlier(s, &best)) {
            best = *s;
        }
        if s.kappa_max > worst.kappa_max || (s.kappa_max == worst.kappa_max && earlier(s, &worst)) {
            worst = *s;
        }
    }
    Ok((best, worst))
}

/// Lower bound `t ||X||` for the condition number of `X -> e^{Xt}`.
pub fn exp_conditioning_lower_bound(x: &ComplexMatrix, t: f64) -> f64 {
    t * x.spectral_norm()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub mode: Structure,
    pub cluster_tol: f64,
    pub conj_tol: f64,
    pub solvent: SolventOptions,
    /// Refuse to enumerate more splittings than this.
    pub budget: Option<u128>,
}

/// Default enumeration budget.
pub const DEFAULT_BUDGET: u128 = 3_000_000;

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            mode: Structure::General,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            conj_tol: DEFAULT_CONJ_TOL,
            solvent: SolventOptions::default(),
            budget: Some(DEFAULT_BUDGET),
        }
    }
}

impl SearchOptions {
    pub fn for_pencil(pencil: &QuadraticPencil) -> Self {
        Self {
            mode: pencil.structure(),
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub degenerate_part: u64,
    pub residual: u64,
    pub incomplete_pair: u64,
    pub unscorable: u64,
}

impl RejectionCounts {
    pub fn total(&self) -> u64 {
        self.degenerate_part + self.residual + self.incomplete_pair + self.unscorable
    }
}

#[derive(Clone, Debug)]
pub struct ScoredSplitting {
    pub splitting: Splitting,
    pub score: PairScore,
}

/// Every admissible complete pair of a pencil, scored.
#[derive(Clone, Debug)]
pub struct PairCatalog {
    pub eigenpairs: Vec<EigenPair>,
    /// Number of splittings enumerated.
    pub attempted: u128,
    /// Accepted pairs in enumeration order.
    pub scored: Vec<ScoredSplitting>,
    pub rejected: RejectionCounts,
}

const BATCH: usize = 4096;

fn evaluate(
    pencil: &QuadraticPencil,
    pairs: &[EigenPair],
    index: usize,
    splitting: Splitting,
    opts: &SolventOptions,
) -> Result<ScoredSplitting> {
    let pair = make_pair(pencil, pairs, &splitting, opts)?;
    let score = score_pair(&pair, index)?;
    Ok(ScoredSplitting { splitting, score })
}

/// Enumerates the admissible splittings, builds and scores each pair.
/// Pairs are evaluated in parallel batches; results keep stream order.
pub fn catalog_pairs(pencil: &QuadraticPencil, opts: &SearchOptions) -> Result<PairCatalog> {
    let decomp = eigenpairs(&pencil.companion_matrix())?;
    let pairs = eigen_pairs(&decomp, opts.cluster_tol);
    let plan = SplittingPlan::new(&pairs, opts.mode, opts.conj_tol)?;
    let count = plan.count();
    if let Some(budget) = opts.budget {
        if count > budget {
            return Err(Error::Budget { count, budget });
        }
    }
    if count == 0 {
        let sizes: Vec<usize> = plan.units().iter().map(Vec::len).collect();
        return Err(Error::InfeasibleSplitting {
            n: plan.n(),
            reason: format!(
                "atomic unit sizes {sizes:?} admit no part of size {}",
                plan.n()
            ),
        });
    }

    let mut scored = Vec::new();
    let mut rejected = RejectionCounts::default();
    let mut stream = plan.iter().enumerate().peekable();
    while stream.peek().is_some() {
        let batch: Vec<(usize, Splitting)> = stream.by_ref().take(BATCH).collect();
        let results: Vec<Result<ScoredSplitting>> = batch
            .into_par_iter()
            .map(|(i, s)| evaluate(pencil, &pairs, i, s, &opts.solvent))
            .collect();
        for r in results {
            match r {
                Ok(s) => scored.push(s),
                Err(Error::DegeneratePart { .. }) => rejected.degenerate_part += 1,
                Err(Error::ResidualTooLarge { .. }) => rejected.residual += 1,
                Err(Error::IncompletePair { .. }) => rejected.incomplete_pair += 1,
                Err(Error::UnscorablePair(_)) => rejected.unscorable += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(PairCatalog {
        eigenpairs: pairs,
        attempted: count,
        scored,
        rejected,
    })
}

impl PairCatalog {
    pub fn scores(&self) -> Vec<PairScore> {
        self.scored.iter().map(|s| s.score).collect()
    }

    /// Best and worst accepted splittings; `NoPairs` when none survived.
    pub fn best_worst(&self) -> Result<(&ScoredSplitting, &ScoredSplitting)> {
        let (best, worst) = select_best_worst(&self.scores()).map_err(|_| {
            Error::NoPairs(format!(
                "all {} splittings rejected ({} degenerate parts, {} residual failures, {} incomplete, {} unscorable)",
                self.attempted,
                self.rejected.degenerate_part,
                self.rejected.residual,
                self.rejected.incomplete_pair,
                self.rejected.unscorable
            ))
        })?;
        let find = |idx: usize| {
            self.scored
                .iter()
                .find(|s| s.score.splitting_index == idx)
                .expect("selected index comes from the catalog")
        };
        Ok((find(best.splitting_index), find(worst.splitting_index)))
    }

    /// Recomputes the solvent pair for an accepted splitting.
    pub fn pair(
        &self,
        pencil: &QuadraticPencil,
        entry: &ScoredSplitting,
        opts: &SolventOptions,
    ) -> Result<SolventPair> {
        make_pair(pencil, &self.eigenpairs, &entry.splitting, opts)
    }
}
