//! Clustering of companion eigenvalues and lazy enumeration of the ways to
//! split the `2n` eigenpairs into two `n`-sets.
//!
//! Eigenpairs are first grouped into atomic *units*: clusters of nearly equal
//! eigenvalues, merged with their symmetry orbits (conjugates for Hermitian
//! pencils, `{lambda, -lambda, conj(lambda), -conj(lambda)}` for gyroscopic
//! ones). A splitting then chooses a set of units for the `X` part whose
//! sizes sum to `n`. Only canonical splittings (index 0 in the `X` part) are
//! produced, since `(X, Z)` and `(Z, X)` describe the same complete pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{EigenDecomposition, C64};
use crate::pencil::Structure;

/// Default eigenvalue clustering radius.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Default tolerance for matching symmetry partners (relative to `max(1, |lambda|)`).
pub const DEFAULT_CONJ_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub index: usize,
    pub value: C64,
    /// Unit-norm eigenvector of the companion matrix.
    pub vector: Vec<C64>,
    pub cluster_id: usize,
}

/// Wraps a sorted eigendecomposition into labelled eigenpairs.
pub fn eigen_pairs(decomp: &EigenDecomposition, cluster_tol: f64) -> Vec<EigenPair> {
    let ids = cluster_eigenvalues(&decomp.values, cluster_tol);
    decomp
        .values
        .iter()
        .zip(ids)
        .enumerate()
        .map(|(index, (&value, cluster_id))| EigenPair {
            index,
            value,
            vector: decomp.vector(index),
            cluster_id,
        })
        .collect()
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Keep the smaller index as root so components are labelled by their minimum.
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }

    /// Dense labels ordered by smallest member.
    fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let r = self.find(i);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            out.push(label[r]);
        }
        out
    }
}

/// Transitive closure of `|lambda_i - lambda_j| <= tol`; ids are dense from 0
/// and ordered by smallest member index.
pub fn cluster_eigenvalues(values: &[C64], tol: f64) -> Vec<usize> {
    assert!(tol > 0.0, "cluster tolerance must be positive");
    let mut sets = DisjointSets::new(values.len());
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            if (values[i] - values[j]).norm() <= tol {
                sets.union(i, j);
            }
        }
    }
    sets.labels()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Splitting {
    pub part_x: Vec<usize>,
    pub part_z: Vec<usize>,
    /// True iff index 0 belongs to `part_x`.
    pub canonical: bool,
}

impl Splitting {
    /// Builds a splitting from the `X` part; `part_z` is the complement in `0..2n`.
    pub fn from_part_x(mut part_x: Vec<usize>, total: usize) -> Result<Self> {
        part_x.sort_unstable();
        part_x.dedup();
        if !total.is_multiple_of(2)
            || part_x.len() * 2 != total
            || part_x.iter().any(|&i| i >= total)
        {
            return Err(Error::InvalidInput(format!(
                "part {part_x:?} is not an n-subset of 0..{total}"
            )));
        }
        let part_z: Vec<usize> = (0..total)
            .filter(|i| part_x.binary_search(i).is_err())
            .collect();
        let canonical = part_x.first() == Some(&0);
        Ok(Self {
            part_x,
            part_z,
            canonical,
        })
    }

    /// The same pair with roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            part_x: self.part_z.clone(),
            part_z: self.part_x.clone(),
            canonical: !self.canonical,
        }
    }
}

fn symmetry_maps(mode: Structure) -> &'static [fn(C64) -> C64] {
    match mode {
        Structure::General => &[],
        Structure::Hermitian => &[|z| z.conj()],
        Structure::Gyroscopic => &[|z| -z, |z| z.conj(), |z| -z.conj()],
    }
}

/// Atomic units of enumeration together with a reachability table used to
/// prune infeasible branches.
#[derive(Clone, Debug)]
pub struct SplittingPlan {
    n: usize,
    units: Vec<Vec<usize>>,
    sizes: Vec<usize>,
    /// `reach[k][w]`: weight `w` is attainable by units `0..k` with unit 0 taken.
    reach: Vec<Vec<bool>>,
}

impl SplittingPlan {
    pub fn new(pairs: &[EigenPair], mode: Structure, conj_tol: f64) -> Result<Self> {
        let total = pairs.len();
        if total == 0 || !total.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "need an even, positive number of eigenpairs, got {total}"
            )));
        }
        let mut sets = DisjointSets::new(total);
        let mut first_of_cluster: Vec<Option<usize>> = vec![None; total];
        for p in pairs {
            match first_of_cluster.get(p.cluster_id).copied().flatten() {
                Some(first) => sets.union(first, p.index),
                None => {
                    if p.cluster_id >= first_of_cluster.len() {
                        first_of_cluster.resize(p.cluster_id + 1, None);
                    }
                    first_of_cluster[p.cluster_id] = Some(p.index);
                }
            }
        }
        for map in symmetry_maps(mode) {
            for p in pairs {
                let target = map(p.value);
                let (j, dist) = pairs
                    .iter()
                    .map(|q| (q.index, (q.value - target).norm()))
                    .fold(
                        (usize::MAX, f64::INFINITY),
                        |b, c| if c.1 < b.1 { c } else { b },
                    );
                if dist > conj_tol * p.value.norm().max(1.0) {
                    return Err(Error::SymmetryViolation { value: p.value });
                }
                sets.union(p.index, j);
            }
        }
        let labels = sets.labels();
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut units = vec![Vec::new(); count];
        for (i, &l) in labels.iter().enumerate() {
            units[l].push(i);
        }
        Ok(Self::from_units(total / 2, units))
    }

    fn from_units(n: usize, units: Vec<Vec<usize>>) -> Self {
        let sizes: Vec<usize> = units.iter().map(Vec::len).collect();
        let mut reach = Vec::with_capacity(units.len() + 1);
        reach.push(vec![false; n + 1]); // unused: unit 0 is always taken
        let mut first = vec![false; n + 1];
        if sizes[0] <= n {
            first[sizes[0]] = true;
        }
        reach.push(first);
        for k in 1..units.len() {
            let prev = &reach[k];
            let next: Vec<bool> = (0..=n)
                .map(|w| prev[w] || (w >= sizes[k] && prev[w - sizes[k]]))
                .collect();
            reach.push(next);
        }
        Self {
            n,
            units,
            sizes,
            reach,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn units(&self) -> &[Vec<usize>] {
        &self.units
    }

    /// Number of canonical splittings, without enumerating them.
    pub fn count(&self) -> u128 {
        let n = self.n;
        let mut ways = vec![0u128; n + 1];
        if self.sizes[0] > n {
            return 0;
        }
        ways[self.sizes[0]] = 1;
        for &s in &self.sizes[1..] {
            for w in (s..=n).rev() {
                ways[w] += ways[w - s];
            }
        }
        ways[n]
    }

    pub fn is_feasible(&self) -> bool {
        self.reach[self.units.len()][self.n]
    }

    pub fn iter(&self) -> Splittings<'_> {
        Splittings {
            plan: self,
            cursor: Cursor::default(),
        }
    }

    pub fn into_stream(self) -> SplittingStream {
        SplittingStream {
            plan: self,
            cursor: Cursor::default(),
        }
    }

    fn splitting_for(&self, take: &[bool]) -> Splitting {
        let mut part_x: Vec<usize> = take
            .iter()
            .zip(&self.units)
            .filter(|(t, _)| **t)
            .flat_map(|(_, u)| u.iter().copied())
            .collect();
        part_x.sort_unstable();
        Splitting::from_part_x(part_x, 2 * self.n).expect("plan yields n-subsets")
    }

    /// Fills units `1..=top` (inclusive) with the numerically smallest
    /// completion reaching `remaining`.
    fn fill_min(&self, take: &mut [bool], top: usize, mut remaining: usize) {
        for j in (1..=top).rev() {
            if self.reach[j][remaining] {
                take[j] = false;
            } else {
                take[j] = true;
                remaining -= self.sizes[j];
            }
        }
        debug_assert_eq!(remaining, self.sizes[0]);
        take[0] = true;
    }
}

/// Enumeration state: the current inclusion mask over units.
#[derive(Clone, Debug, Default)]
struct Cursor {
    take: Vec<bool>,
    started: bool,
    done: bool,
}

impl Cursor {
    /// Masks are produced in increasing numeric order (bit `k` = unit `k`).
    fn advance(&mut self, plan: &SplittingPlan) -> Option<Splitting> {
        if self.done {
            return None;
        }
        let u = plan.units.len();
        if !self.started {
            self.started = true;
            if !plan.is_feasible() {
                self.done = true;
                return None;
            }
            self.take = vec![false; u];
            if u > 1 {
                plan.fill_min(&mut self.take, u - 1, plan.n);
            } else {
                self.take[0] = true;
            }
            return Some(plan.splitting_for(&self.take));
        }
        // Weight of units strictly above k, scanned from the top down.
        let mut above = vec![0usize; u + 1];
        for k in (0..u).rev() {
            above[k] = above[k + 1] + if self.take[k] { plan.sizes[k] } else { 0 };
        }
        for k in 1..u {
            if self.take[k] {
                continue;
            }
            let high = above[k + 1];
            if high + plan.sizes[k] > plan.n {
                continue;
            }
            let remaining = plan.n - high - plan.sizes[k];
            if plan.reach[k][remaining] {
                self.take[k] = true;
                if k > 1 {
                    plan.fill_min(&mut self.take, k - 1, remaining);
                } else {
                    self.take[0] = true;
                }
                return Some(plan.splitting_for(&self.take));
            }
        }
        self.done = true;
        None
    }
}

/// Borrowing iterator over a plan's canonical splittings.
pub struct Splittings<'a> {
    plan: &'a SplittingPlan,
    cursor: Cursor,
}

impl Iterator for Splittings<'_> {
    type Item = Splitting;

    fn next(&mut self) -> Option<Splitting> {
        self.cursor.advance(self.plan)
    }
}

/// Owning stream of canonical splittings.
pub struct SplittingStream {
    plan: SplittingPlan,
    cursor: Cursor,
}

impl SplittingStream {
    pub fn plan(&self) -> &SplittingPlan {
        &self.plan
    }
}

impl Iterator for SplittingStream {
    type Item = Splitting;

    fn next(&mut self) -> Option<Splitting> {
        self.cursor.advance(&self.plan)
    }
}

/// Lazily enumerates every admissible canonical splitting. Errors when the
/// symmetry partners cannot be matched or when no splitting exists.
pub fn enumerate_splittings(
    pairs: &[EigenPair],
    mode: Structure,
    conj_tol: f64,
) -> Result<SplittingStream> {
    let plan = SplittingPlan::new(pairs, mode, conj_tol)?;
    if !plan.is_feasible() {
        let sizes: Vec<usize> = plan.units.iter().map(Vec::len).collect();
        return Err(Error::InfeasibleSplitting {
            n: plan.n,
            reason: format!(
                "atomic unit sizes {sizes:?} admit no part of size {}",
                plan.n
            ),
        });
    }
    Ok(plan.into_stream())
}

/// Splitting count without materialising the stream; 0 when infeasible.
pub fn count_splittings(pairs: &[EigenPair], mode: Structure, conj_tol: f64) -> Result<u128> {
    Ok(SplittingPlan::new(pairs, mode, conj_tol)?.count())
}
