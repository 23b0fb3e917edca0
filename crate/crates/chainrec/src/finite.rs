//! Exact dynamics on finite metric spaces.
//!
//! On a finite space, "for every eps" collapses to one eps below the minimal
//! nonzero distance (chain steps then force exact equality) and "for every g"
//! ranges over the full transformation-monoid closure of the generator
//! tables. Every notion the grid engine approximates is therefore decidable
//! here exactly, which makes this module the ground truth for the property
//! sweeps.
//!
//! States are `0..n` with `n <= 8`, so subsets are `u32` bitmasks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_STATES: usize = 8;
pub const MAX_CLOSURE: usize = 1_000_000;
const DUALITY_WORK_CAP: u128 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum FiniteError {
    #[error("state count {0} out of range 1..={MAX_STATES}")]
    BadStateCount(usize),
    #[error("distance matrix is not a metric: {0}")]
    BadMetric(String),
    #[error("generator table {0} is not a total map on the states")]
    BadTable(usize),
    #[error("no generators")]
    NoGenerators,
    #[error("monoid closure exceeds {MAX_CLOSURE} elements")]
    ClosureTooLarge,
    #[error("rho is not a bijection on the states")]
    BadPermutation,
    #[error("duality enumeration budget exceeded")]
    DualityBudget,
}

/// A set of states as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StateSet(pub u32);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    pub fn full(n: usize) -> StateSet {
        StateSet(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(s: usize) -> StateSet {
        StateSet(1 << s)
    }

    pub fn contains(self, s: usize) -> bool {
        self.0 >> s & 1 == 1
    }

    pub fn insert(&mut self, s: usize) {
        self.0 |= 1 << s;
    }

    pub fn union(self, o: StateSet) -> StateSet {
        StateSet(self.0 | o.0)
    }

    pub fn intersect(self, o: StateSet) -> StateSet {
        StateSet(self.0 & o.0)
    }

    pub fn minus(self, o: StateSet) -> StateSet {
        StateSet(self.0 & !o.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, o: StateSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&s| self.contains(s))
    }

    pub fn states(self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// A finite metric space with generator maps as lookup tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSystem {
    pub n: usize,
    pub dist: Vec<Vec<f64>>,
    pub generators: Vec<Vec<usize>>,
}

impl FiniteSystem {
    pub fn new(
        n: usize,
        dist: Vec<Vec<f64>>,
        generators: Vec<Vec<usize>>,
    ) -> Result<FiniteSystem, FiniteError> {
        let sys = FiniteSystem { n, dist, generators };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<(), FiniteError> {
        let n = self.n;
        if n == 0 || n > MAX_STATES {
            return Err(FiniteError::BadStateCount(n));
        }
        if self.dist.len() != n || self.dist.iter().any(|row| row.len() != n) {
            return Err(FiniteError::BadMetric("matrix is not n x n".into()));
        }
        for i in 0..n {
            if self.dist[i][i] != 0.0 {
                return Err(FiniteError::BadMetric(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = self.dist[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(FiniteError::BadMetric(format!("bad entry at ({i},{j})")));
                }
                if i != j && d == 0.0 {
                    return Err(FiniteError::BadMetric(format!(
                        "distinct states {i},{j} at distance 0"
                    )));
                }
                if (self.dist[i][j] - self.dist[j][i]).abs() > 0.0 {
                    return Err(FiniteError::BadMetric(format!("asymmetry at ({i},{j})")));
                }
                for k in 0..n {
                    if self.dist[i][j] > self.dist[i][k] + self.dist[k][j] + 1e-12 {
                        return Err(FiniteError::BadMetric(format!(
                            "triangle inequality fails at ({i},{k},{j})"
                        )));
                    }
                }
            }
        }
        if self.generators.is_empty() {
            return Err(FiniteError::NoGenerators);
        }
        for (gi, table) in self.generators.iter().enumerate() {
            if table.len() != n || table.iter().any(|&s| s >= n) {
                return Err(FiniteError::BadTable(gi));
            }
        }
        Ok(())
    }

    /// Exact commutation of all generator pairs on all states.
    pub fn is_abelian(&self) -> bool {
        for a in &self.generators {
            for b in &self.generators {
                for x in 0..self.n {
                    if a[b[x]] != b[a[x]] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn compose(f: &[usize], g: &[usize]) -> Vec<usize> {
    // (f ∘ g)(x) = f(g(x))
    g.iter().map(|&x| f[x]).collect()
}

fn is_identity(t: &[usize]) -> bool {
    t.iter().enumerate().all(|(i, &v)| i == v)
}

/// All distinct composite maps generated by the generator tables, in a
/// deterministic breadth-first order. The identity appears only when the
/// generators produce it.
#[derive(Clone, Debug, PartialEq)]
pub struct MonoidClosure {
    maps: Vec<Vec<usize>>,
    identity_index: Option<usize>,
}

impl MonoidClosure {
    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn contains_identity(&self) -> bool {
        self.identity_index.is_some()
    }
}

/// Fixed-point closure of the generator tables under composition.
pub fn monoid_closure(sys: &FiniteSystem) -> Result<MonoidClosure, FiniteError> {
    sys.validate()?;
    let mut maps: Vec<Vec<usize>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut queue = std::collections::VecDeque::new();
    for g in &sys.generators {
        if seen.insert(g.clone()) {
            maps.push(g.clone());
            queue.push_back(g.clone());
        }
    }
    while let Some(m) = queue.pop_front() {
        for g in &sys.generators {
            let next = compose(g, &m);
            if seen.insert(next.clone()) {
                if maps.len() >= MAX_CLOSURE {
                    return Err(FiniteError::ClosureTooLarge);
                }
                maps.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    let identity_index = maps.iter().position(|t| is_identity(t));
    Ok(MonoidClosure { maps, identity_index })
}

/// Per-state reach under `Ĝ = closure ∪ {identity}`: `reach[s] = {h(s)} ∪ {s}`.
fn ghat_reach(sys: &FiniteSystem, cl: &MonoidClosure) -> Vec<StateSet> {
    let mut reach = vec![StateSet::EMPTY; sys.n];
    for (s, r) in reach.iter_mut().enumerate() {
        r.insert(s);
    }
    for m in cl.maps() {
        for s in 0..sys.n {
            reach[s].insert(m[s]);
        }
    }
    reach
}

/// Transitive closure (paths of length >= 1) of masked adjacency rows.
fn reach_closure(n: usize, adj: &[StateSet]) -> Vec<StateSet> {
    let mut reach = adj.to_vec();
    for k in 0..n {
        for y in 0..n {
            if reach[y].contains(k) {
                reach[y] = reach[y].union(reach[k]);
            }
        }
    }
    reach
}

/// For each closure element `m`, the reachability rows of the chain-step
/// graph with edges `y -> h(m(y))`, `h ∈ Ĝ`.
fn step_reaches(sys: &FiniteSystem, cl: &MonoidClosure) -> Vec<Vec<StateSet>> {
    let ghat = ghat_reach(sys, cl);
    cl.maps()
        .iter()
        .map(|m| {
            let adj: Vec<StateSet> = (0..sys.n).map(|y| ghat[m[y]]).collect();
            reach_closure(sys.n, &adj)
        })
        .collect()
}

/// Exact chain recurrent set: states with a chain back to themselves for
/// every closure element.
pub fn exact_cr(sys: &FiniteSystem, cl: &MonoidClosure) -> StateSet {
    let mut cr = StateSet::full(sys.n);
    for reach in step_reaches(sys, cl) {
        let mut rec = StateSet::EMPTY;
        for y in 0..sys.n {
            if reach[y].contains(y) {
                rec.insert(y);
            }
        }
        cr = cr.intersect(rec);
    }
    cr
}

/// Chain equivalence rows: `rows[a]` contains `b` iff chains join `a` to `b`
/// and `b` to `a` for every closure element.
pub fn exact_chain_equivalence(sys: &FiniteSystem, cl: &MonoidClosure) -> Vec<StateSet> {
    let mut rows = vec![StateSet::full(sys.n); sys.n];
    for reach in step_reaches(sys, cl) {
        for a in 0..sys.n {
            let mut keep = StateSet::EMPTY;
            for b in 0..sys.n {
                if reach[a].contains(b) && reach[b].contains(a) {
                    keep.insert(b);
                }
            }
            rows[a] = rows[a].intersect(keep);
        }
    }
    rows
}

/// Chain components: equivalence classes of mutual chain equivalence inside
/// the exact chain recurrent set, ordered by least state.
pub fn exact_chain_components(sys: &FiniteSystem, cl: &MonoidClosure) -> Vec<StateSet> {
    let cr = exact_cr(sys, cl);
    let ce = exact_chain_equivalence(sys, cl);
    let mut assigned = StateSet::EMPTY;
    let mut classes = Vec::new();
    for a in cr.iter() {
        if assigned.contains(a) {
            continue;
        }
        let class = ce[a].intersect(cr);
        assigned = assigned.union(class);
        classes.push(class);
    }
    classes
}

/// Whether a nonempty state subset is chain transitive: every ordered pair
/// (including a state with itself) is joined by a chain for every closure
/// element. Chains may pass through arbitrary states.
pub fn is_chain_transitive_subset(sys: &FiniteSystem, cl: &MonoidClosure, set: StateSet) -> bool {
    if set.is_empty() {
        return false;
    }
    for reach in step_reaches(sys, cl) {
        for a in set.iter() {
            for b in set.iter() {
                if !reach[a].contains(b) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitivityOutcome {
    pub topological: bool,
    pub chain: bool,
    pub dense_orbit: Option<usize>,
}

/// Exact transitivity: singletons are open, so topological transitivity means
/// every state reaches every state under `Ĝ`, a dense orbit is an orbit equal
/// to the whole space, and chain transitivity is chain transitivity of the
/// full state set.
pub fn exact_transitivity(sys: &FiniteSystem, cl: &MonoidClosure) -> TransitivityOutcome {
    let ghat = ghat_reach(sys, cl);
    let full = StateSet::full(sys.n);
    let topological = ghat.iter().all(|&r| r == full);
    let dense_orbit = (0..sys.n).find(|&s| ghat[s] == full);
    let chain = is_chain_transitive_subset(sys, cl, full);
    TransitivityOutcome {
        topological,
        chain,
        dense_orbit,
    }
}

/// Conjugate the system by a state permutation: `g̃ = rho ∘ g ∘ rho⁻¹`, with
/// the metric pushed forward.
pub fn conjugate_system(sys: &FiniteSystem, rho: &[usize]) -> Result<FiniteSystem, FiniteError> {
    let n = sys.n;
    if rho.len() != n {
        return Err(FiniteError::BadPermutation);
    }
    let mut seen = vec![false; n];
    for &v in rho {
        if v >= n || seen[v] {
            return Err(FiniteError::BadPermutation);
        }
        seen[v] = true;
    }
    let mut inv = vec![0usize; n];
    for (x, &v) in rho.iter().enumerate() {
        inv[v] = x;
    }
    let generators = sys
        .generators
        .iter()
        .map(|g| (0..n).map(|y| rho[g[inv[y]]]).collect())
        .collect();
    let mut dist = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in 0..n {
            dist[rho[x]][rho[y]] = sys.dist[x][y];
        }
    }
    FiniteSystem::new(n, dist, generators)
}

// --- attractors and duality ---------------------------------------------

/// Reach table through words avoiding one generator (`{u(s)} ∪ {s}` for
/// u in the sub-semigroup generated by the remaining generators).
fn avoiding_reach(sys: &FiniteSystem, skip: usize) -> Result<Vec<StateSet>, FiniteError> {
    let others: Vec<Vec<usize>> = sys
        .generators
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(_, t)| t.clone())
        .collect();
    let mut reach = vec![StateSet::EMPTY; sys.n];
    for (s, r) in reach.iter_mut().enumerate() {
        r.insert(s);
    }
    if others.is_empty() {
        return Ok(reach);
    }
    let sub = monoid_closure(&FiniteSystem {
        n: sys.n,
        dist: sys.dist.clone(),
        generators: others,
    })?;
    for m in sub.maps() {
        for s in 0..sys.n {
            reach[s].insert(m[s]);
        }
    }
    Ok(reach)
}

fn apply_table(t: &[usize], s: StateSet) -> StateSet {
    let mut out = StateSet::EMPTY;
    for x in s.iter() {
        out.insert(t[x]);
    }
    out
}

fn reach_set(reach: &[StateSet], s: StateSet) -> StateSet {
    let mut out = StateSet::EMPTY;
    for x in s.iter() {
        out = out.union(reach[x]);
    }
    out
}

/// Shared tables for the designated-generator image iteration.
struct OccurrenceOperator<'a> {
    alpha_table: &'a [usize],
    avoid_reach: Vec<StateSet>,
}

impl<'a> OccurrenceOperator<'a> {
    fn new(sys: &'a FiniteSystem, alpha0: usize) -> Result<Self, FiniteError> {
        Ok(OccurrenceOperator {
            alpha_table: &sys.generators[alpha0],
            avoid_reach: avoiding_reach(sys, alpha0)?,
        })
    }

    /// One more guaranteed occurrence: `S -> {u(g_a0(S))}` with `u` ranging
    /// over designated-generator-free words (identity included).
    fn step(&self, s: StateSet) -> StateSet {
        reach_set(&self.avoid_reach, apply_table(self.alpha_table, s))
    }

    /// Decreasing fixpoint of `step` from `start`.
    fn limit(&self, start: StateSet) -> StateSet {
        let mut cur = self.step(start);
        loop {
            let next = self.step(cur);
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }
}

/// Exact omega-limit set of a state for the designated generator: states
/// reachable with arbitrarily many designated occurrences.
pub fn exact_omega(
    sys: &FiniteSystem,
    cl: &MonoidClosure,
    x: usize,
    alpha0: usize,
) -> Result<StateSet, FiniteError> {
    let op = OccurrenceOperator::new(sys, alpha0)?;
    let ghat = ghat_reach(sys, cl);
    Ok(op.limit(ghat[x]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaDuality {
    pub alpha0: usize,
    pub attractor_count: usize,
    pub union_basin_minus_attractor: StateSetRepr,
    pub equal: bool,
}

/// Serializable image of a state set, as a sorted state list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateSetRepr(pub Vec<usize>);

impl From<StateSet> for StateSetRepr {
    fn from(s: StateSet) -> Self {
        StateSetRepr(s.states())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactDuality {
    pub cr: StateSetRepr,
    pub union_basin_minus_attractor: StateSetRepr,
    /// Whether `X \ CR` equals the union for every designated generator.
    pub sides_equal: bool,
    /// Exact commutation of the generator tables; the equality is asserted
    /// only when this holds.
    pub abelian: bool,
    pub per_alpha: Vec<AlphaDuality>,
}

/// Enumerate all trapping regions, build the attractors and basins they
/// determine (per designated generator), and compare `X \ CR` with the union
/// of `B(A) \ A`.
pub fn exact_duality(sys: &FiniteSystem, cl: &MonoidClosure) -> Result<ExactDuality, FiniteError> {
    let n = sys.n;
    let work = ((1u128 << n) - 1) * cl.len() as u128;
    if work > DUALITY_WORK_CAP {
        return Err(FiniteError::DualityBudget);
    }
    let ghat = ghat_reach(sys, cl);
    let cr = exact_cr(sys, cl);
    let full = StateSet::full(n);
    let complement = full.minus(cr);

    // trapping regions: nonempty U with some h in the closure such that
    // Ĝ(h(U)) ⊆ U
    let mut trapping: Vec<(StateSet, Vec<usize>)> = Vec::new(); // (U, valid h indices)
    for bits in 1..(1u32 << n) {
        let u = StateSet(bits);
        let mut hs = Vec::new();
        for (hi, h) in cl.maps().iter().enumerate() {
            let image = reach_set(&ghat, apply_table(h, u));
            if image.is_subset(u) {
                hs.push(hi);
            }
        }
        if !hs.is_empty() {
            trapping.push((u, hs));
        }
    }

    let mut per_alpha = Vec::new();
    let mut union_all = StateSet::EMPTY;
    let mut sides_equal = true;
    for alpha0 in 0..sys.generators.len() {
        let op = OccurrenceOperator::new(sys, alpha0)?;
        let mut attractors = std::collections::BTreeSet::new();
        for (u, hs) in &trapping {
            for &hi in hs {
                let e0 = reach_set(&ghat, apply_table(&cl.maps()[hi], *u));
                attractors.insert(op.limit(e0));
            }
        }
        // omega per state, then basins
        let omegas: Vec<StateSet> = (0..n).map(|x| op.limit(ghat[x])).collect();
        let mut union_bma = StateSet::EMPTY;
        for &a in &attractors {
            let mut basin = StateSet::EMPTY;
            for x in 0..n {
                if !omegas[x].intersect(a).is_empty() {
                    basin.insert(x);
                }
            }
            union_bma = union_bma.union(basin.minus(a));
        }
        let equal = union_bma == complement;
        sides_equal &= equal;
        union_all = union_all.union(union_bma);
        per_alpha.push(AlphaDuality {
            alpha0,
            attractor_count: attractors.len(),
            union_basin_minus_attractor: union_bma.into(),
            equal,
        });
    }

    Ok(ExactDuality {
        cr: cr.into(),
        union_basin_minus_attractor: union_all.into(),
        sides_equal,
        abelian: sys.is_abelian(),
        per_alpha,
    })
}

// --- random systems ------------------------------------------------------

fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    // metric from random points on a line: distances inherit the triangle
    // inequality exactly
    let mut points: Vec<f64> = Vec::new();
    while points.len() < n {
        let p: f64 = rng.random_range(0.0..100.0);
        if points.iter().all(|&q| (p - q).abs() > 1e-3) {
            points.push(p);
        }
    }
    (0..n)
        .map(|i| (0..n).map(|j| (points[i] - points[j]).abs()).collect())
        .collect()
}

fn table_power(t: &[usize], k: usize) -> Vec<usize> {
    let mut acc: Vec<usize> = (0..t.len()).collect();
    for _ in 0..k {
        acc = compose(t, &acc);
    }
    acc
}

/// A seeded random system. Abelian families are abelian by construction:
/// powers of one base map, translations, multiplications modulo n, or
/// constant-threshold min/max maps.
pub fn random_system(seed: u64, n_max: usize, abelian_only: bool) -> FiniteSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=n_max.min(MAX_STATES));
    let gen_count = rng.random_range(1..=3usize);
    let dist = random_metric(&mut rng, n);
    let generators: Vec<Vec<usize>> = if abelian_only {
        match rng.random_range(0..4u32) {
            0 => {
                // powers of a single random base map
                let base: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                (0..gen_count)
                    .map(|_| table_power(&base, rng.random_range(1..=4usize)))
                    .collect()
            }
            1 => (0..gen_count)
                .map(|_| {
                    let c = rng.random_range(1..n.max(2));
                    (0..n).map(|x| (x + c) % n).collect()
                })
                .collect(),
            2 => (0..gen_count)
                .map(|_| {
                    let c = rng.random_range(0..n);
                    (0..n).map(|x| (x * c) % n).collect()
                })
                .collect(),
            _ => {
                // min with constants, or max with constants; each family
                // commutes within itself
                let use_min = rng.random_bool(0.5);
                (0..gen_count)
                    .map(|_| {
                        let c = rng.random_range(0..n);
                        (0..n)
                            .map(|x| if use_min { x.min(c) } else { x.max(c) })
                            .collect()
                    })
                    .collect()
            }
        }
    } else {
        (0..gen_count)
            .map(|_| (0..n).map(|_| rng.random_range(0..n)).collect())
            .collect()
    };
    FiniteSystem {
        n,
        dist,
        generators,
    }
}

/// A seeded random permutation of `0..n`.
pub fn random_permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trivial_metric(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect()
    }

    fn system(n: usize, gens: Vec<Vec<usize>>) -> FiniteSystem {
        FiniteSystem::new(n, trivial_metric(n), gens).unwrap()
    }

    #[test]
    fn closure_of_three_cycle_contains_identity() {
        let sys = system(3, vec![vec![1, 2, 0]]);
        let cl = monoid_closure(&sys).unwrap();
        assert_eq!(cl.len(), 3);
        assert!(cl.contains_identity());
    }

    #[test]
    fn closure_of_constant_map_is_singleton() {
        let sys = system(3, vec![vec![0, 0, 0]]);
        let cl = monoid_closure(&sys).unwrap();
        assert_eq!(cl.len(), 1);
        assert!(!cl.contains_identity());
    }

    #[test]
    fn closure_of_two_rotations_mod_four() {
        let sys = system(4, vec![vec![1, 2, 3, 0], vec![2, 3, 0, 1]]);
        let cl = monoid_closure(&sys).unwrap();
        // brute force: all distinct compositions are the four rotations
        assert_eq!(cl.len(), 4);
        assert!(cl.contains_identity());
    }

    #[test]
    fn cr_of_permutation_is_everything() {
        let sys = system(5, vec![vec![1, 0, 3, 4, 2]]);
        let cl = monoid_closure(&sys).unwrap();
        assert_eq!(exact_cr(&sys, &cl), StateSet::full(5));
    }

    #[test]
    fn cr_of_constant_map_is_its_value() {
        let sys = system(3, vec![vec![0, 0, 0]]);
        let cl = monoid_closure(&sys).unwrap();
        assert_eq!(exact_cr(&sys, &cl), StateSet::singleton(0));
    }

    // Independent definition-chasing checker: boolean matrix powers of the
    // per-element step graphs, chains of length 1..=n.
    fn brute_force_cr(sys: &FiniteSystem, cl: &MonoidClosure) -> StateSet {
        let n = sys.n;
        let mut cr = StateSet::full(n);
        for m in cl.maps() {
            let mut adj = vec![vec![false; n]; n];
            for y in 0..n {
                adj[y][m[y]] = true; // h = identity
                for h in cl.maps() {
                    adj[y][h[m[y]]] = true;
                }
            }
            let mut power = adj.clone();
            let mut on_cycle = StateSet::EMPTY;
            for _len in 1..=n {
                for y in 0..n {
                    if power[y][y] {
                        on_cycle.insert(y);
                    }
                }
                // power = power * adj
                let mut next = vec![vec![false; n]; n];
                for i in 0..n {
                    for k in 0..n {
                        if power[i][k] {
                            for j in 0..n {
                                if adj[k][j] {
                                    next[i][j] = true;
                                }
                            }
                        }
                    }
                }
                power = next;
            }
            cr = cr.intersect(on_cycle);
        }
        cr
    }

    #[test]
    fn cr_matches_brute_force_on_random_systems() {
        for seed in 0..60u64 {
            let sys = random_system(seed, 6, seed % 2 == 0);
            let cl = monoid_closure(&sys).unwrap();
            assert_eq!(
                exact_cr(&sys, &cl),
                brute_force_cr(&sys, &cl),
                "seed {seed}: {:?}",
                sys.generators
            );
        }
    }

    #[test]
    fn components_of_two_disjoint_cycles() {
        // permutation with cycles (0 1) and (2 3)
        let sys = system(4, vec![vec![1, 0, 3, 2]]);
        let cl = monoid_closure(&sys).unwrap();
        let comps = exact_chain_components(&sys, &cl);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0], StateSet(0b0011));
        assert_eq!(comps[1], StateSet(0b1100));
    }

    #[test]
    fn full_cycle_is_one_component_and_transitive() {
        let sys = system(4, vec![vec![1, 2, 3, 0]]);
        let cl = monoid_closure(&sys).unwrap();
        let comps = exact_chain_components(&sys, &cl);
        assert_eq!(comps, vec![StateSet::full(4)]);
        let t = exact_transitivity(&sys, &cl);
        assert!(t.topological);
        assert!(t.chain);
        assert_eq!(t.dense_orbit, Some(0));
    }

    #[test]
    fn two_fixed_points_are_not_transitive() {
        let sys = system(2, vec![vec![0, 1]]);
        let cl = monoid_closure(&sys).unwrap();
        let t = exact_transitivity(&sys, &cl);
        assert!(!t.topological);
        assert!(!t.chain);
        assert_eq!(t.dense_orbit, None);
    }

    #[test]
    fn conjugation_by_identity_and_relabeling() {
        let sys = system(3, vec![vec![1, 0, 2]]);
        let id: Vec<usize> = (0..3).collect();
        assert_eq!(conjugate_system(&sys, &id).unwrap(), sys);

        let rho = vec![2, 0, 1];
        let conj = conjugate_system(&sys, &rho).unwrap();
        // (0 1) cycle relabeled to (rho(0) rho(1)) = (2 0)
        assert_eq!(conj.generators[0], vec![2, 1, 0]);
        assert!(conjugate_system(&sys, &[0, 0, 1]).is_err());
    }

    #[test]
    fn cr_transports_under_conjugacy() {
        for seed in 100..140u64 {
            let sys = random_system(seed, 6, false);
            let cl = monoid_closure(&sys).unwrap();
            let rho = random_permutation(seed.wrapping_mul(7919), sys.n);
            let conj = conjugate_system(&sys, &rho).unwrap();
            let ccl = monoid_closure(&conj).unwrap();
            let cr = exact_cr(&sys, &cl);
            let ccr = exact_cr(&conj, &ccl);
            let mut mapped = StateSet::EMPTY;
            for s in cr.iter() {
                mapped.insert(rho[s]);
            }
            assert_eq!(ccr, mapped, "seed {seed}");
        }
    }

    #[test]
    fn duality_constant_map() {
        let sys = system(3, vec![vec![0, 0, 0]]);
        let cl = monoid_closure(&sys).unwrap();
        let d = exact_duality(&sys, &cl).unwrap();
        assert_eq!(d.cr.0, vec![0]);
        assert_eq!(d.union_basin_minus_attractor.0, vec![1, 2]);
        assert!(d.sides_equal);
        assert!(d.abelian);
    }

    #[test]
    fn duality_full_cycle_permutation() {
        let sys = system(4, vec![vec![1, 2, 3, 0]]);
        let cl = monoid_closure(&sys).unwrap();
        let d = exact_duality(&sys, &cl).unwrap();
        assert_eq!(d.cr.0, vec![0, 1, 2, 3]);
        assert!(d.union_basin_minus_attractor.0.is_empty());
        assert!(d.sides_equal);
    }

    #[test]
    fn random_abelian_systems_are_abelian() {
        for seed in 0..50u64 {
            let sys = random_system(seed, 6, true);
            assert!(sys.validate().is_ok(), "seed {seed}");
            assert!(sys.is_abelian(), "seed {seed}: {:?}", sys.generators);
        }
    }

    #[test]
    fn omega_of_constant_map_is_the_fixed_state() {
        let sys = system(3, vec![vec![0, 0, 0]]);
        let cl = monoid_closure(&sys).unwrap();
        for x in 0..3 {
            assert_eq!(exact_omega(&sys, &cl, x, 0).unwrap(), StateSet::singleton(0));
        }
    }
}
