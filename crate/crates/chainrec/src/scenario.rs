//! Scenario files, artifact persistence, and the pipelines behind the CLI.
//!
//! A scenario is a single JSON file describing the phase space, the
//! generators, the grid depth, the chain schedules, and the trapping-region
//! candidates. Its canonical serialization (sorted keys, no whitespace)
//! is hashed into the report, and identical scenarios produce byte-identical
//! CSV/JSON artifacts; wall-clock timings go to a separate text file.

use crate::attractor::{
    basin, certify_trapping, compute_attractor, duality_report, AttractorError, AttractorRecord,
    CertifyOutcome, DualitySummary,
};
use crate::chain::{
    build_step_graph, components_of_recurrence, cr_of_recurrence, schedule_recurrence, ChainError,
};
use crate::expr::parse_map_expr;
use crate::finite::{
    conjugate_system, exact_chain_components, exact_chain_equivalence, exact_cr, exact_duality,
    exact_transitivity, is_chain_transitive_subset, monoid_closure, random_permutation,
    random_system, StateSet,
};
use crate::grid::{cover_ball, BoxSet, Grid, GridError, Membership};
use crate::interval::IntervalBox2;
use crate::words::{check_abelian_sampled, enumerate_words, GeneratorSystem, Word, WordsError};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("budget error: {0}")]
    Budget(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Budget(_) => 3,
            RunError::Internal(_) => 4,
        }
    }
}

impl From<GridError> for RunError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::DepthTooLarge(_) => RunError::Config(e.to_string()),
            GridError::Io(_) => RunError::Internal(e.to_string()),
            other => RunError::Internal(other.to_string()),
        }
    }
}

impl From<ChainError> for RunError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::Budget(m) => RunError::Budget(m),
            ChainError::Words(w @ WordsError::BudgetExceeded { .. }) => {
                RunError::Budget(w.to_string())
            }
            other => RunError::Internal(other.to_string()),
        }
    }
}

impl From<AttractorError> for RunError {
    fn from(e: AttractorError) -> Self {
        match e {
            AttractorError::Budget(m) => RunError::Budget(m),
            AttractorError::Words(w @ WordsError::BudgetExceeded { .. }) => {
                RunError::Budget(w.to_string())
            }
            other => RunError::Internal(other.to_string()),
        }
    }
}

impl From<WordsError> for RunError {
    fn from(e: WordsError) -> Self {
        match e {
            WordsError::BudgetExceeded { .. } => RunError::Budget(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Internal(format!("io: {e}"))
    }
}

// --- scenario -------------------------------------------------------------

/// A trapping-region candidate in a scenario file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Candidate {
    /// "ball" (open ball around the origin, needs `radius`) or "full"
    /// (the whole retained grid).
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Test word for the trapping condition; when absent, words up to
    /// length 2 are searched for the first that certifies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub bounds: IntervalBox2,
    /// "rect" keeps the whole rectangle; "disc" trims to the closed unit disc
    /// centered at the origin.
    pub membership: String,
    pub generators: Vec<String>,
    pub depth: u32,
    pub eps_schedule: Vec<f64>,
    pub g_schedule: Vec<Vec<usize>>,
    /// Word-length budget L for chain-step maps.
    pub step_budget: usize,
    /// Designated generator index for omega-limit bookkeeping.
    pub alpha0: usize,
    /// Iteration cap for attractor stabilization.
    pub m_max: usize,
    /// Iteration depth for omega-limit and basin computations.
    pub omega_depth: usize,
    #[serde(default)]
    pub trapping_candidates: Vec<Candidate>,
    /// Also harvest candidates from attracting components of the first
    /// schedule pair's step graph.
    #[serde(default)]
    pub discover_candidates: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Scenario, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read scenario {path:?}: {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| RunError::Config(format!("scenario parse error: {e}")))
    }

    /// SHA-256 of the canonical serialization (sorted keys, no whitespace).
    pub fn config_hash(&self) -> String {
        let value = serde_json::to_value(self).expect("scenario serializes");
        let canonical = value.to_string(); // object keys are sorted
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A validated scenario, ready to run.
pub struct Prepared {
    pub scenario: Scenario,
    pub grid: Grid,
    pub sys: GeneratorSystem,
    pub g_words: Vec<Word>,
}

pub fn prepare(scenario: Scenario) -> Result<Prepared, RunError> {
    if scenario.generators.is_empty() {
        return Err(RunError::Config("generators: list is empty".into()));
    }
    let mut gens = Vec::new();
    for (i, src) in scenario.generators.iter().enumerate() {
        let e = parse_map_expr(src)
            .map_err(|err| RunError::Config(format!("generators[{i}] `{src}`: {err}")))?;
        gens.push(e);
    }
    let sys = GeneratorSystem::new(gens).map_err(|e| RunError::Config(e.to_string()))?;

    let membership = match scenario.membership.as_str() {
        "rect" => Membership::All,
        "disc" => Membership::Disc {
            center_re: 0.0,
            center_im: 0.0,
            radius: 1.0,
        },
        other => {
            return Err(RunError::Config(format!(
                "membership: unknown predicate `{other}` (expected \"rect\" or \"disc\")"
            )))
        }
    };
    let bounds = IntervalBox2::new(
        scenario.bounds.re_lo,
        scenario.bounds.re_hi,
        scenario.bounds.im_lo,
        scenario.bounds.im_hi,
    )
    .map_err(|e| RunError::Config(format!("bounds: {e}")))?;
    let grid =
        Grid::new(bounds, scenario.depth, membership).map_err(|e| RunError::Config(format!("depth: {e}")))?;

    if scenario.eps_schedule.is_empty() {
        return Err(RunError::Config("eps_schedule: must be nonempty".into()));
    }
    if scenario.g_schedule.is_empty() {
        return Err(RunError::Config("g_schedule: must be nonempty".into()));
    }
    let mut g_words = Vec::new();
    for (i, idxs) in scenario.g_schedule.iter().enumerate() {
        let w = Word::new(idxs.clone(), sys.len())
            .map_err(|e| RunError::Config(format!("g_schedule[{i}]: {e}")))?;
        if w.is_identity() {
            return Err(RunError::Config(format!(
                "g_schedule[{i}]: words must be nonempty"
            )));
        }
        g_words.push(w);
    }
    if scenario.alpha0 >= sys.len() {
        return Err(RunError::Config(format!(
            "alpha0: index {} out of range for {} generators",
            scenario.alpha0,
            sys.len()
        )));
    }
    if scenario.m_max < 1 {
        return Err(RunError::Config("m_max: must be at least 1".into()));
    }
    if scenario.omega_depth < 1 {
        return Err(RunError::Config("omega_depth: must be at least 1".into()));
    }
    for (i, c) in scenario.trapping_candidates.iter().enumerate() {
        match c.kind.as_str() {
            "ball" => {
                let r = c.radius.ok_or_else(|| {
                    RunError::Config(format!("trapping_candidates[{i}]: ball needs a radius"))
                })?;
                if !(r > 0.0) {
                    return Err(RunError::Config(format!(
                        "trapping_candidates[{i}]: radius must be positive"
                    )));
                }
            }
            "full" => {}
            other => {
                return Err(RunError::Config(format!(
                    "trapping_candidates[{i}]: unknown kind `{other}`"
                )))
            }
        }
        if let Some(h) = &c.h {
            let w = Word::new(h.clone(), sys.len())
                .map_err(|e| RunError::Config(format!("trapping_candidates[{i}].h: {e}")))?;
            if w.is_identity() {
                return Err(RunError::Config(format!(
                    "trapping_candidates[{i}].h: must be nonempty"
                )));
            }
        }
    }
    Ok(Prepared {
        scenario,
        grid,
        sys,
        g_words,
    })
}

// --- reports ---------------------------------------------------------------

#[derive(Default)]
pub struct Timings(pub Vec<(String, f64)>);

impl Timings {
    pub fn push(&mut self, stage: &str, secs: f64) {
        self.0.push((stage.to_string(), secs));
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::fs::File::create(path)?;
        for (stage, secs) in &self.0 {
            writeln!(out, "{stage} {secs:.3}s")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CrFragment {
    pub cells: usize,
    pub components: usize,
    pub csv: String,
    pub grid_sidecar: String,
    pub pgm: String,
    pub components_csv: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateRef {
    #[serde(rename = "U")]
    pub u_csv: String,
    pub h: Vec<usize>,
    #[serde(rename = "L")]
    pub step_budget: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttractorOutcome {
    pub candidate: Candidate,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violating_cell: Option<[u32; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateRef>,
    pub alpha0: usize,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub attractor_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basin_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilized: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attractor_cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basin_cells: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub tool_version: String,
    pub config_hash: String,
    pub abelian_sampled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cr: Option<CrFragment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attractors: Option<Vec<AttractorOutcome>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality: Option<DualitySummary>,
    pub scenario: Scenario,
}

pub fn write_report(report: &AnalysisReport, out_dir: &Path) -> Result<(), RunError> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| RunError::Internal(format!("report serialization: {e}")))?;
    std::fs::write(out_dir.join("report.json"), json + "\n")?;
    Ok(())
}

// --- pipelines --------------------------------------------------------------

pub struct CrOutputs {
    pub fragment: CrFragment,
    pub cr: BoxSet,
}

/// Compute the chain recurrent approximation and its components, and persist
/// the cell CSV, grid sidecar, PGM raster, and component CSV.
pub fn run_cr(prep: &Prepared, out_dir: &Path, timings: &mut Timings) -> Result<CrOutputs, RunError> {
    std::fs::create_dir_all(out_dir)?;
    let t0 = Instant::now();
    let analysis = schedule_recurrence(
        &prep.grid,
        &prep.sys,
        &prep.g_words,
        &prep.scenario.eps_schedule,
        prep.scenario.step_budget,
    )?;
    let cr = cr_of_recurrence(&analysis);
    timings.push("cr", t0.elapsed().as_secs_f64());

    let t1 = Instant::now();
    let comps = components_of_recurrence(&prep.grid, &cr, &analysis)?;
    timings.push("components", t1.elapsed().as_secs_f64());

    cr.write_csv(&out_dir.join("cr.csv"))?;
    cr.write_grid_sidecar(&out_dir.join("cr.grid.json"))?;
    cr.write_pgm(&out_dir.join("cr.pgm"))?;
    comps.write_csv(&out_dir.join("components.csv"))?;

    Ok(CrOutputs {
        fragment: CrFragment {
            cells: cr.len(),
            components: comps.len(),
            csv: "cr.csv".into(),
            grid_sidecar: "cr.grid.json".into(),
            pgm: "cr.pgm".into(),
            components_csv: "components.csv".into(),
        },
        cr,
    })
}

fn candidate_region(prep: &Prepared, c: &Candidate) -> BoxSet {
    match c.kind.as_str() {
        "ball" => cover_ball(
            &prep.grid,
            Complex64::new(0.0, 0.0),
            c.radius.expect("validated"),
        ),
        "full" => prep.grid.all_cells(),
        _ => unreachable!("validated"),
    }
}

/// Words searched for the trapping existential when a candidate does not pin
/// its own `h`: all nonempty words up to length 2.
fn default_h_words(sys: &GeneratorSystem) -> Result<Vec<Word>, RunError> {
    Ok(enumerate_words(sys, 2)?
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect())
}

pub struct AttractorOutputs {
    pub outcomes: Vec<AttractorOutcome>,
    pub records: Vec<AttractorRecord>,
}

/// Certify every candidate, compute attractors and basins for the certified
/// ones, and persist the per-candidate artifacts.
pub fn run_attractors(
    prep: &Prepared,
    out_dir: &Path,
    timings: &mut Timings,
) -> Result<AttractorOutputs, RunError> {
    std::fs::create_dir_all(out_dir)?;
    let s = &prep.scenario;
    let mut candidates = s.trapping_candidates.clone();
    let mut regions: Vec<BoxSet> = candidates
        .iter()
        .map(|c| candidate_region(prep, c))
        .collect();

    if s.discover_candidates {
        let t = Instant::now();
        let gr = build_step_graph(
            &prep.grid,
            &prep.sys,
            &prep.g_words[0],
            s.eps_schedule[0],
            s.step_budget,
        )?;
        for scc in gr.attracting_scc_cells() {
            let region = scc.fatten(0.0);
            if regions.iter().any(|r| *r == region) {
                continue;
            }
            candidates.push(Candidate {
                kind: "discovered".into(),
                radius: None,
                h: None,
            });
            regions.push(region);
        }
        timings.push("discover", t.elapsed().as_secs_f64());
    }

    let h_fallback = default_h_words(&prep.sys)?;
    let mut outcomes = Vec::new();
    let mut records = Vec::new();
    let t0 = Instant::now();
    for (i, (cand, region)) in candidates.iter().zip(&regions).enumerate() {
        if region.is_empty() {
            return Err(RunError::Config(format!(
                "trapping_candidates[{i}]: candidate region is empty on this grid"
            )));
        }
        let h_words: Vec<Word> = match &cand.h {
            Some(h) => vec![Word::new(h.clone(), prep.sys.len()).expect("validated")],
            None => h_fallback.clone(),
        };
        let mut cert = None;
        let mut rejection: Option<(crate::grid::Cell, Word)> = None;
        for h in &h_words {
            match certify_trapping(&prep.grid, &prep.sys, region, h, s.step_budget)? {
                CertifyOutcome::Certified(c) => {
                    cert = Some(c);
                    break;
                }
                CertifyOutcome::Rejected { violating_cell, .. } => {
                    if rejection.is_none() {
                        rejection = Some((violating_cell, h.clone()));
                    }
                }
            }
        }
        match cert {
            None => {
                let (cell, _) = rejection.expect("at least one h was tried");
                outcomes.push(AttractorOutcome {
                    candidate: cand.clone(),
                    certified: false,
                    violating_cell: Some([cell.ix, cell.iy]),
                    certificate: None,
                    alpha0: s.alpha0,
                    attractor_csv: None,
                    basin_csv: None,
                    stabilized: None,
                    m_used: None,
                    attractor_cells: None,
                    basin_cells: None,
                });
            }
            Some(cert) => {
                let mut rec =
                    compute_attractor(&prep.grid, &prep.sys, cert, s.alpha0, s.m_max)?;
                let b = basin(&prep.grid, &prep.sys, &rec, s.alpha0, s.omega_depth, s.step_budget)?;
                rec.basin = Some(b);

                let u_csv = format!("attractor_{i}_region.csv");
                let a_csv = format!("attractor_{i}_set.csv");
                let b_csv = format!("attractor_{i}_basin.csv");
                rec.cert.region().write_csv(&out_dir.join(&u_csv))?;
                rec.attractor.write_csv(&out_dir.join(&a_csv))?;
                rec.basin.as_ref().unwrap().write_csv(&out_dir.join(&b_csv))?;

                outcomes.push(AttractorOutcome {
                    candidate: cand.clone(),
                    certified: true,
                    violating_cell: None,
                    certificate: Some(CertificateRef {
                        u_csv,
                        h: rec.cert.h().indices().to_vec(),
                        step_budget: rec.cert.step_len(),
                    }),
                    alpha0: s.alpha0,
                    attractor_csv: Some(a_csv),
                    basin_csv: Some(b_csv),
                    stabilized: Some(rec.stabilized),
                    m_used: Some(rec.m_used),
                    attractor_cells: Some(rec.attractor.len()),
                    basin_cells: Some(rec.basin.as_ref().unwrap().len()),
                });
                records.push(rec);
            }
        }
    }
    timings.push("attractors", t0.elapsed().as_secs_f64());

    let json = serde_json::to_string_pretty(&outcomes)
        .map_err(|e| RunError::Internal(format!("attractor serialization: {e}")))?;
    std::fs::write(out_dir.join("attractors.json"), json + "\n")?;

    Ok(AttractorOutputs { outcomes, records })
}

/// Full pipeline: chain recurrence, attractors, and the duality comparison.
pub fn run_duality(
    prep: &Prepared,
    out_dir: &Path,
    timings: &mut Timings,
) -> Result<AnalysisReport, RunError> {
    let cr_out = run_cr(prep, out_dir, timings)?;
    let at_out = run_attractors(prep, out_dir, timings)?;
    let t0 = Instant::now();
    let report = duality_report(&prep.grid, &prep.sys, &cr_out.cr, &at_out.records);
    timings.push("duality", t0.elapsed().as_secs_f64());
    report
        .basin_minus_attractor
        .write_csv(&out_dir.join("duality_basins_minus_attractors.csv"))?;
    report
        .sym_diff
        .write_csv(&out_dir.join("duality_symdiff.csv"))?;

    let abelian = check_abelian_sampled(&prep.sys, &prep.grid.bounds(), 1000);
    Ok(AnalysisReport {
        tool_version: TOOL_VERSION.into(),
        config_hash: prep.scenario.config_hash(),
        abelian_sampled: abelian,
        cr: Some(cr_out.fragment),
        attractors: Some(at_out.outcomes),
        duality: Some(report.summary()),
        scenario: prep.scenario.clone(),
    })
}

// --- oracle sweep ------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub n: usize,
    pub generator_count: usize,
    pub closure_size: usize,
    pub abelian: bool,
    pub equivalence_relation: bool,
    pub partition: bool,
    pub maximal_transitive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance: Option<bool>,
    pub topological: bool,
    pub chain: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_implies_chain: Option<bool>,
    pub duality_sides_equal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality_equal: Option<bool>,
    pub conjugacy_transport: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl SeedRecord {
    pub fn all_pass(&self) -> bool {
        self.skipped.is_none()
            && self.equivalence_relation
            && self.partition
            && self.maximal_transitive
            && self.invariance.unwrap_or(true)
            && self.top_implies_chain.unwrap_or(true)
            && self.duality_equal.unwrap_or(true)
            && self.conjugacy_transport
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub seeds: usize,
    pub skipped: usize,
    pub equivalence_relation_pass: usize,
    pub partition_pass: usize,
    pub maximal_transitive_pass: usize,
    pub invariance_pass: usize,
    pub invariance_checked: usize,
    pub transitive_instances: usize,
    pub top_implies_chain_pass: usize,
    pub duality_checked: usize,
    pub duality_pass: usize,
    pub conjugacy_pass: usize,
    pub all_pass: usize,
}

pub struct SweepReport {
    pub records: Vec<SeedRecord>,
    pub summary: SweepSummary,
}

fn check_seed(seed: u64, n_max: usize, abelian_only: bool) -> SeedRecord {
    let sys = random_system(seed, n_max, abelian_only);
    let mut record = SeedRecord {
        seed,
        n: sys.n,
        generator_count: sys.generators.len(),
        closure_size: 0,
        abelian: sys.is_abelian(),
        equivalence_relation: false,
        partition: false,
        maximal_transitive: false,
        invariance: None,
        topological: false,
        chain: false,
        top_implies_chain: None,
        duality_sides_equal: false,
        duality_equal: None,
        conjugacy_transport: false,
        skipped: None,
    };
    let cl = match monoid_closure(&sys) {
        Ok(cl) => cl,
        Err(e) => {
            record.skipped = Some(e.to_string());
            return record;
        }
    };
    record.closure_size = cl.len();

    let cr = exact_cr(&sys, &cl);
    let ce = exact_chain_equivalence(&sys, &cl);

    // (a) chain equivalence is an equivalence relation on CR
    let mut eq = true;
    for a in cr.iter() {
        eq &= ce[a].contains(a);
        for b in cr.iter() {
            eq &= ce[a].contains(b) == ce[b].contains(a);
            if ce[a].contains(b) {
                for c in cr.iter() {
                    if ce[b].contains(c) {
                        eq &= ce[a].contains(c);
                    }
                }
            }
        }
    }
    record.equivalence_relation = eq;

    // (b) components partition CR, and each is maximal chain transitive
    let comps = exact_chain_components(&sys, &cl);
    let mut union = StateSet::EMPTY;
    let mut partition = true;
    for (i, &a) in comps.iter().enumerate() {
        partition &= !a.is_empty();
        partition &= union.intersect(a).is_empty();
        union = union.union(a);
        for &b in comps.iter().skip(i + 1) {
            partition &= a.intersect(b).is_empty();
        }
    }
    partition &= union == cr;
    record.partition = partition;

    let mut maximal = true;
    for &class in &comps {
        maximal &= is_chain_transitive_subset(&sys, &cl, class);
        for s in 0..sys.n {
            if !class.contains(s) {
                let mut bigger = class;
                bigger.insert(s);
                maximal &= !is_chain_transitive_subset(&sys, &cl, bigger);
            }
        }
    }
    record.maximal_transitive = maximal;

    // (c) invariance of CR and of each component under every generator
    // (abelian hypothesis)
    if record.abelian {
        let mut inv = true;
        for g in &sys.generators {
            for s in cr.iter() {
                inv &= cr.contains(g[s]);
            }
            for &class in &comps {
                for s in class.iter() {
                    inv &= class.contains(g[s]);
                }
            }
        }
        record.invariance = Some(inv);
    }

    // (d) topological transitivity implies chain transitivity (abelian)
    let t = exact_transitivity(&sys, &cl);
    record.topological = t.topological;
    record.chain = t.chain;
    if record.abelian {
        record.top_implies_chain = Some(!t.topological || t.chain);
    }

    // (e) duality
    match exact_duality(&sys, &cl) {
        Ok(d) => {
            record.duality_sides_equal = d.sides_equal;
            if record.abelian {
                record.duality_equal = Some(d.sides_equal);
            }
        }
        Err(e) => {
            record.skipped = Some(e.to_string());
            return record;
        }
    }

    // (f) conjugacy transport under 5 random permutations
    let mut transport = true;
    for k in 0..5u64 {
        let rho = random_permutation(seed.wrapping_mul(31).wrapping_add(k), sys.n);
        let conj = match conjugate_system(&sys, &rho) {
            Ok(c) => c,
            Err(_) => {
                transport = false;
                break;
            }
        };
        let ccl = match monoid_closure(&conj) {
            Ok(c) => c,
            Err(e) => {
                record.skipped = Some(e.to_string());
                return record;
            }
        };
        let mut mapped_cr = StateSet::EMPTY;
        for s in cr.iter() {
            mapped_cr.insert(rho[s]);
        }
        transport &= exact_cr(&conj, &ccl) == mapped_cr;

        let cconf = exact_chain_components(&conj, &ccl);
        let mut mapped: Vec<StateSet> = comps
            .iter()
            .map(|&class| {
                let mut m = StateSet::EMPTY;
                for s in class.iter() {
                    m.insert(rho[s]);
                }
                m
            })
            .collect();
        mapped.sort();
        let mut got = cconf.clone();
        got.sort();
        transport &= got == mapped;

        let ct = exact_transitivity(&conj, &ccl);
        transport &= ct.topological == t.topological && ct.chain == t.chain;
    }
    record.conjugacy_transport = transport;

    record
}

/// Run the seeded finite-oracle property sweep. Deterministic for a fixed
/// `base_seed`: seed `k` of the sweep is `base_seed + k`.
pub fn run_oracle_sweep(
    seed_count: usize,
    n_max: usize,
    abelian_only: bool,
    base_seed: u64,
) -> Result<SweepReport, RunError> {
    if seed_count < 1 {
        return Err(RunError::Config("seeds: must be at least 1".into()));
    }
    if n_max < 2 || n_max > crate::finite::MAX_STATES {
        return Err(RunError::Config(format!(
            "n_max: must be in 2..={}",
            crate::finite::MAX_STATES
        )));
    }
    let records: Vec<SeedRecord> = (0..seed_count as u64)
        .into_par_iter()
        .map(|k| check_seed(base_seed.wrapping_add(k), n_max, abelian_only))
        .collect();

    let mut summary = SweepSummary {
        seeds: records.len(),
        skipped: 0,
        equivalence_relation_pass: 0,
        partition_pass: 0,
        maximal_transitive_pass: 0,
        invariance_pass: 0,
        invariance_checked: 0,
        transitive_instances: 0,
        top_implies_chain_pass: 0,
        duality_checked: 0,
        duality_pass: 0,
        conjugacy_pass: 0,
        all_pass: 0,
    };
    for r in &records {
        if r.skipped.is_some() {
            summary.skipped += 1;
            continue;
        }
        summary.equivalence_relation_pass += r.equivalence_relation as usize;
        summary.partition_pass += r.partition as usize;
        summary.maximal_transitive_pass += r.maximal_transitive as usize;
        if let Some(inv) = r.invariance {
            summary.invariance_checked += 1;
            summary.invariance_pass += inv as usize;
        }
        if r.topological {
            summary.transitive_instances += 1;
        }
        if let Some(tic) = r.top_implies_chain {
            summary.top_implies_chain_pass += tic as usize;
        }
        if let Some(d) = r.duality_equal {
            summary.duality_checked += 1;
            summary.duality_pass += d as usize;
        }
        summary.conjugacy_pass += r.conjugacy_transport as usize;
        summary.all_pass += r.all_pass() as usize;
    }
    Ok(SweepReport { records, summary })
}

pub fn write_sweep(report: &SweepReport, out_dir: &Path) -> Result<PathBuf, RunError> {
    std::fs::create_dir_all(out_dir)?;
    let jsonl_path = out_dir.join("sweep.jsonl");
    let mut out = std::fs::File::create(&jsonl_path)?;
    for r in &report.records {
        let line = serde_json::to_string(r)
            .map_err(|e| RunError::Internal(format!("sweep serialization: {e}")))?;
        writeln!(out, "{line}")?;
    }
    let summary = serde_json::to_string_pretty(&report.summary)
        .map_err(|e| RunError::Internal(format!("summary serialization: {e}")))?;
    std::fs::write(out_dir.join("sweep_summary.json"), summary + "\n")?;
    Ok(jsonl_path)
}
