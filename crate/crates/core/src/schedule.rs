//! Nonnegative block durations for `M t = T h_p / h_s`, sparsification,
//! pruning and the emitted schedule.

pub mod lp;
pub mod nnls;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{DaqcError, Result};
use crate::hamiltonian::{check_compatibility, QuditHamiltonian};
use crate::linalg;
use crate::phase_matrix::{enumerate_words, GateWord, PhaseMatrix, RowKey, WordSet};
use crate::weyl::{Operator, WeylLabel};

/// Right-hand side `r_q = T (h_p)_q / (h_s)_q` over the union of problem and source rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetRatio {
    pub rows: Vec<RowKey>,
    pub values: Vec<C64>,
}

impl TargetRatio {
    /// Problem two-body rows plus every source row; source-only rows get target 0.
    ///
    /// Problem one-body terms are left to the final local layer.
    pub fn new(source: &QuditHamiltonian, problem: &QuditHamiltonian, total_time: f64) -> Result<Self> {
        if source.d() != problem.d() || source.n() != problem.n() {
            return Err(DaqcError::DimensionMismatch(format!(
                "source is (d={}, n={}), problem is (d={}, n={})",
                source.d(),
                source.n(),
                problem.d(),
                problem.n()
            )));
        }
        let mut table: BTreeMap<RowKey, (C64, C64)> = BTreeMap::new();
        for t in source.two_body() {
            table.entry(RowKey::Coupling(t.key)).or_default().0 = t.coefficient;
        }
        for t in source.one_body() {
            table.entry(RowKey::Local { site: t.site, label: t.label }).or_default().0 = t.coefficient;
        }
        for t in problem.two_body() {
            let entry = table.entry(RowKey::Coupling(t.key)).or_default();
            if entry.0.norm() == 0.0 {
                return Err(DaqcError::MissingSourceTerm(format!("{}", t.key)));
            }
            entry.1 = t.coefficient;
        }
        let (rows, values) = table.into_iter().map(|(k, (hs, hp))| (k, hp / hs * total_time)).unzip();
        Ok(TargetRatio { rows, values })
    }

    /// `[Re r; Im r]`.
    pub fn stacked(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).chain(self.values.iter().map(|z| z.im)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Acceptance threshold for `‖M t − r‖∞` on the stacked system.
    pub fn tolerance(&self) -> f64 {
        1e-8 * self.max_abs().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Minimum total time by simplex; returns a vertex.
    #[default]
    Simplex,
    Nnls,
}

impl std::str::FromStr for SolveMethod {
    type Err = DaqcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplex" | "lp" => Ok(SolveMethod::Simplex),
            "nnls" => Ok(SolveMethod::Nnls),
            other => Err(DaqcError::InvalidInput(format!("unknown solve method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Feasible { t: Vec<f64>, residual: f64 },
    Infeasible { residual: f64 },
}

/// `‖M t − r‖∞` over real and imaginary parts.
pub fn stacked_residual(m: &PhaseMatrix, t: &[f64], target: &TargetRatio) -> f64 {
    m.apply(t)
        .iter()
        .zip(&target.values)
        .map(|(a, b)| (a.re - b.re).abs().max((a.im - b.im).abs()))
        .fold(0.0, f64::max)
}

fn support(t: &[f64]) -> Vec<usize> {
    (0..t.len()).filter(|&j| t[j] > 0.0).collect()
}

/// Least-squares refit on the current support, kept only if it stays nonnegative and helps.
fn polish(a: &DMatrix<f64>, b: &DVector<f64>, t: &mut [f64]) {
    let cols = support(t);
    if cols.is_empty() {
        return;
    }
    let refit = nnls::restricted_lstsq(a, b, &cols);
    if refit.iter().any(|&v| v < 0.0) {
        return;
    }
    let res = |x: &[f64]| (a * DVector::from_column_slice(x) - b).amax();
    let mut candidate = t.to_vec();
    for (k, &c) in cols.iter().enumerate() {
        candidate[c] = refit[k];
    }
    if res(&candidate) <= res(t) {
        t.copy_from_slice(&candidate);
    }
}

/// Lexicographic minimisation: total time, then gate-weighted time
/// `Σ weight(word)·t`, then time in words that are not period-2 along the
/// register, then column index. Each stage fixes the previous optimum as an
/// equality row.
fn lexicographic_minimum(a: &DMatrix<f64>, b: &[f64], words: &[&GateWord]) -> Option<Vec<f64>> {
    let cols = a.ncols();
    let weight = words.iter().map(|w| w.weight() as f64).collect();
    let irregular = words
        .iter()
        .map(|w| {
            let l = w.labels();
            (2..l.len()).filter(|&i| l[i] != l[i - 2]).count() as f64
        })
        .collect();
    let index_cost = (0..cols).map(|j| (j + 1) as f64 / cols as f64).collect();
    let stages = [vec![1.0; cols], weight, irregular, index_cost];
    let mut a_stage = a.clone();
    let mut b_stage = b.to_vec();
    let mut x = None;
    for (k, cost) in stages.iter().enumerate() {
        if k > 0 {
            let r = a_stage.nrows();
            a_stage = a_stage.insert_row(r, 0.0);
            for (j, &v) in stages[k - 1].iter().enumerate() {
                a_stage[(r, j)] = v;
            }
            let prev: &Vec<f64> = x.as_ref()?;
            b_stage.push(prev.iter().zip(&stages[k - 1]).map(|(t, c)| t * c).sum());
        }
        match lp::minimize(&a_stage, &b_stage, cost, 1e-11) {
            lp::LpOutcome::Optimal { x: sol, .. } => x = Some(sol),
            _ if k == 0 => return None,
            _ => break,
        }
    }
    x
}

/// First column carrying the label-negated phase pattern of every column, if
/// the set is closed under negation. Its phases are the complex conjugates.
fn conjugate_partners(m: &PhaseMatrix) -> Option<Vec<usize>> {
    let d = m.d() as u8;
    let mut index: HashMap<&[u8], usize> = HashMap::new();
    for j in 0..m.ncols() {
        index.entry(m.column_exponents(j)).or_insert(j);
    }
    (0..m.ncols())
        .map(|j| {
            let neg: Vec<u8> = m.column_exponents(j).iter().map(|&e| (d - e) % d).collect();
            index.get(neg.as_slice()).copied()
        })
        .collect()
}

/// Minimum-time vertex with deterministic tie-breaks.
///
/// For a real target the problem is invariant under conjugation, so the
/// search runs over pairs `{w, −w}` with equal durations. The real part of
/// `M_w` is the pair's column and the imaginary rows vanish identically.
fn minimum_time(m: &PhaseMatrix, target: &TargetRatio) -> Option<Vec<f64>> {
    let a = m.stacked_real();
    let b = target.stacked();
    let words: Vec<&GateWord> = m.words().iter().collect();
    let real_target = target.values.iter().all(|z| z.im.abs() <= 1e-14 * z.norm().max(1.0));
    let partners = if real_target { conjugate_partners(m) } else { None };
    let Some(partners) = partners else {
        return lexicographic_minimum(&a, &b, &words);
    };
    // one representative per pattern pair; duplicate patterns stay at zero
    let reps: Vec<usize> =
        (0..m.ncols()).filter(|&j| partners[partners[j]] == j && partners[j] >= j).collect();
    let r = m.nrows();
    let reduced = DMatrix::from_fn(r, reps.len(), |i, k| a[(i, reps[k])]);
    let reduced_words: Vec<&GateWord> = reps.iter().map(|&j| words[j]).collect();
    let tau = lexicographic_minimum(&reduced, &b[..r], &reduced_words)?;
    let mut t = vec![0.0; m.ncols()];
    for (k, &j) in reps.iter().enumerate() {
        let p = partners[j];
        if p == j {
            t[j] = tau[k];
        } else {
            t[j] = tau[k] / 2.0;
            t[p] = tau[k] / 2.0;
        }
    }
    Some(t)
}

/// Nonnegative durations with `M t = r`, or an infeasibility verdict.
pub fn solve_times(m: &PhaseMatrix, target: &TargetRatio, method: SolveMethod) -> Result<SolveOutcome> {
    if m.rows() != target.rows.as_slice() {
        return Err(DaqcError::DimensionMismatch("phase-matrix rows differ from target rows".into()));
    }
    if m.ncols() == 0 {
        return Ok(SolveOutcome::Infeasible { residual: target.max_abs() });
    }
    let a = m.stacked_real();
    let b = DVector::from_vec(target.stacked());
    let mut t: Vec<f64> = match method {
        SolveMethod::Simplex => {
            minimum_time(m, target).unwrap_or_else(|| nnls::nnls(&a, &b, 1e-13).iter().copied().collect())
        }
        SolveMethod::Nnls => nnls::nnls(&a, &b, 1e-13).iter().copied().collect(),
    };
    for v in t.iter_mut() {
        if *v < 1e-14 {
            *v = 0.0;
        }
    }
    polish(&a, &b, &mut t);
    let residual = stacked_residual(m, &t, target);
    if residual < target.tolerance() {
        Ok(SolveOutcome::Feasible { t, residual })
    } else {
        Ok(SolveOutcome::Infeasible { residual })
    }
}

/// Carathéodory reduction: removes null-space directions from the support until
/// its columns are linearly independent. Never grows the support.
pub fn sparsify(m: &PhaseMatrix, t: &[f64], target: &TargetRatio) -> Vec<f64> {
    let a = m.stacked_real();
    let b = DVector::from_vec(target.stacked());
    let mut t = t.to_vec();
    for _ in 0..t.len() {
        let cols = support(&t);
        if cols.len() <= 1 {
            break;
        }
        let sub = DMatrix::from_fn(a.nrows(), cols.len(), |i, k| a[(i, cols[k])]);
        let gram = sub.tr_mul(&sub);
        let eig = gram.symmetric_eigen();
        let top = eig.eigenvalues.amax().max(1e-300);
        let Some(k_null) = (0..cols.len()).filter(|&k| eig.eigenvalues[k] < 1e-12 * top).min_by(|&x, &y| {
            eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y])
        }) else {
            break;
        };
        let mut z: Vec<f64> = eig.eigenvectors.column(k_null).iter().copied().collect();
        if !z.iter().any(|&v| v > 1e-12) {
            z.iter_mut().for_each(|v| *v = -*v);
        }
        let mut alpha = f64::INFINITY;
        let mut hit = 0;
        for (k, &c) in cols.iter().enumerate() {
            if z[k] > 1e-12 {
                let r = t[c] / z[k];
                if r < alpha {
                    alpha = r;
                    hit = k;
                }
            }
        }
        if !alpha.is_finite() {
            break;
        }
        for (k, &c) in cols.iter().enumerate() {
            t[c] -= alpha * z[k];
            if t[c] < 1e-14 {
                t[c] = 0.0;
            }
        }
        t[cols[hit]] = 0.0;
    }
    polish(&a, &b, &mut t);
    t
}

/// Zeroes entries with `0 < t_i < factor·delta_t`; returns the removed total.
pub fn prune_short_blocks(t: &[f64], delta_t: f64, factor: f64) -> (Vec<f64>, f64) {
    let threshold = factor * delta_t;
    let mut discarded = 0.0;
    let pruned = t
        .iter()
        .map(|&v| {
            if v > 0.0 && v < threshold {
                discarded += v;
                0.0
            } else {
                v
            }
        })
        .collect();
    (pruned, discarded)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pruning {
    pub delta_t: f64,
    pub factor: f64,
}

impl Pruning {
    pub fn threshold(&self) -> f64 {
        self.delta_t * self.factor
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    pub word_set: WordSet,
    pub max_weight: Option<usize>,
    pub method: SolveMethod,
    pub sparsify: bool,
    pub pruning: Option<Pruning>,
    pub trotter_steps: usize,
    /// Recorded in the metadata only.
    pub theta: Option<f64>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            word_set: WordSet::Auto,
            max_weight: None,
            method: SolveMethod::Simplex,
            sparsify: true,
            pruning: None,
            trotter_steps: 1,
            theta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleBlock {
    pub word: GateWord,
    pub duration: f64,
}

/// Single-qudit unitary applied after the analog blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGate {
    pub site: usize,
    pub unitary: Operator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScheduleMetadata {
    pub theta: Option<f64>,
    pub pruning_threshold: f64,
    pub total_analog_time: f64,
    #[serde(default)]
    pub ideal_analog_time: f64,
    pub discarded_time: f64,
    pub residual: f64,
    #[serde(default)]
    pub pruned_residual: f64,
    #[serde(default = "one")]
    pub trotter_steps: usize,
    #[serde(default)]
    pub word_set: String,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub d: usize,
    pub n: usize,
    pub total_time: f64,
    pub blocks: Vec<ScheduleBlock>,
    pub final_local_layer: Vec<LocalGate>,
    pub metadata: ScheduleMetadata,
}

impl Schedule {
    pub fn block_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.duration > 0.0).count()
    }

    pub fn total_analog_time(&self) -> f64 {
        self.blocks.iter().map(|b| b.duration).sum()
    }

    /// Physical single-qudit gates with adjacent conjugations merged.
    ///
    /// Between consecutive blocks the gate `G_{q+1} G_q†` is applied, so a site
    /// needs a gate exactly where its label changes along `I, G_1, …, G_Q, I`.
    pub fn gate_count(&self) -> usize {
        let mut prev = GateWord::identity(self.n);
        let mut count = 0;
        for b in self.blocks.iter().filter(|b| b.duration > 0.0) {
            count += label_changes(&prev, &b.word);
            prev = b.word.clone();
        }
        count + label_changes(&prev, &GateWord::identity(self.n))
    }

    /// Gates counted as `2·weight` per block, without merging.
    pub fn unmerged_gate_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.duration > 0.0).map(|b| 2 * b.word.weight()).sum()
    }

    /// Largest deviation of `Σ_q t_q h_s phase_q` from `T h_p`, relative to the target scale.
    pub fn certificate_residual(&self, source: &QuditHamiltonian, problem: &QuditHamiltonian) -> Result<f64> {
        let target = TargetRatio::new(source, problem, self.total_time)?;
        let words: Vec<GateWord> = self.blocks.iter().map(|b| b.word.clone()).collect();
        let t: Vec<f64> = self.blocks.iter().map(|b| b.duration).collect();
        let m = PhaseMatrix::build(self.d, target.rows.clone(), words)?;
        Ok(stacked_residual(&m, &t, &target))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn label_changes(a: &GateWord, b: &GateWord) -> usize {
    a.labels().iter().zip(b.labels()).filter(|(x, y)| x != y).count()
}

/// Compiles `exp(−i T H_problem)` into analog blocks of `H_source` conjugated by gate-words.
pub fn compile(
    source: &QuditHamiltonian,
    problem: &QuditHamiltonian,
    total_time: f64,
    options: &CompileOptions,
) -> Result<Schedule> {
    if !(total_time.is_finite() && total_time >= 0.0) {
        return Err(DaqcError::InvalidInput(format!("total time must be finite and nonnegative, got {total_time}")));
    }
    if options.trotter_steps == 0 {
        return Err(DaqcError::InvalidInput("trotter_steps must be at least 1".into()));
    }
    let report = check_compatibility(source, problem)?;
    if !report.is_compatible() {
        return Err(DaqcError::Incompatible(report.violating_pairs));
    }
    let (d, n) = (source.d(), source.n());
    let target = TargetRatio::new(source, problem, total_time)?;

    let mut attempts: Vec<(String, Option<Vec<WeylLabel>>)> = Vec::new();
    let alphabet = options.word_set.alphabet(d, source.is_diagonal());
    attempts.push((options.word_set.to_string(), alphabet.clone()));
    if options.word_set == WordSet::Auto && alphabet.is_some() {
        attempts.push(("full".into(), None));
    }

    let mut solved = None;
    let mut last_residual = f64::NAN;
    let mut tried = Vec::new();
    for (name, alphabet) in &attempts {
        tried.push(name.clone());
        let words = enumerate_words(d, n, options.max_weight, alphabet.as_deref())?;
        let (m, _) = PhaseMatrix::build(d, target.rows.clone(), words)?.dedup_columns();
        match solve_times(&m, &target, options.method)? {
            SolveOutcome::Feasible { t, residual } => {
                solved = Some((m, t, residual, name.clone()));
                break;
            }
            SolveOutcome::Infeasible { residual } => last_residual = residual,
        }
    }
    let Some((m, mut t, mut residual, used)) = solved else {
        return Err(DaqcError::Infeasible {
            policy: format!("{} (tried {}; residual {last_residual:.3e})", options.word_set, tried.join(", ")),
        });
    };
    if options.sparsify {
        let sparse = sparsify(&m, &t, &target);
        let r = stacked_residual(&m, &sparse, &target);
        if r < target.tolerance() {
            t = sparse;
            residual = r;
        }
    }
    let ideal_analog_time: f64 = t.iter().sum();
    let (t_final, discarded, threshold) = match options.pruning {
        Some(p) => {
            let (pt, disc) = prune_short_blocks(&t, p.delta_t, p.factor);
            (pt, disc, p.threshold())
        }
        None => (t.clone(), 0.0, 0.0),
    };
    let pruned_residual = stacked_residual(&m, &t_final, &target);

    let mut order: Vec<usize> = support(&t_final);
    // descending duration, ties by column index
    order.sort_by(|&x, &y| t_final[y].total_cmp(&t_final[x]).then(x.cmp(&y)));
    let steps = options.trotter_steps;
    let mut blocks = Vec::with_capacity(order.len() * steps);
    for _ in 0..steps {
        for &c in &order {
            blocks.push(ScheduleBlock { word: m.words()[c].clone(), duration: t_final[c] / steps as f64 });
        }
    }

    let mut final_local_layer = Vec::new();
    for site in 0..n {
        if problem.one_body().any(|l| l.site == site) {
            let h = problem.local_operator(site)?;
            final_local_layer.push(LocalGate { site, unitary: linalg::expm_hermitian(&h, total_time) });
        }
    }

    let total_analog_time = t_final.iter().sum();
    Ok(Schedule {
        d,
        n,
        total_time,
        blocks,
        final_local_layer,
        metadata: ScheduleMetadata {
            theta: options.theta,
            pruning_threshold: threshold,
            total_analog_time,
            ideal_analog_time,
            discarded_time: discarded,
            residual,
            pruned_residual,
            trotter_steps: steps,
            word_set: used,
        },
    })
}

// ---- file format -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct BlockEntry {
    gates: BTreeMap<usize, [usize; 2]>,
    duration: f64,
}

#[derive(Serialize, Deserialize)]
struct LocalGateEntry {
    site: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    d: usize,
    n: usize,
    #[serde(rename = "T")]
    total_time: f64,
    blocks: Vec<BlockEntry>,
    #[serde(default)]
    final_local_layer: Vec<LocalGateEntry>,
    metadata: ScheduleMetadata,
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let file = ScheduleFile {
            d: self.d,
            n: self.n,
            total_time: self.total_time,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockEntry {
                    gates: b.word.entries().map(|(s, l)| (s, [l.a(), l.b()])).collect(),
                    duration: b.duration,
                })
                .collect(),
            final_local_layer: self
                .final_local_layer
                .iter()
                .map(|g| LocalGateEntry {
                    site: g.site,
                    re: g.unitary.row_iter().map(|r| r.iter().map(|z| z.re).collect()).collect(),
                    im: g.unitary.row_iter().map(|r| r.iter().map(|z| z.im).collect()).collect(),
                })
                .collect(),
            metadata: self.metadata.clone(),
        };
        file.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let file = ScheduleFile::deserialize(deserializer)?;
        crate::weyl::check_dimension(file.d).map_err(D::Error::custom)?;
        let mut blocks = Vec::with_capacity(file.blocks.len());
        for b in file.blocks {
            if !(b.duration >= 0.0) {
                return Err(D::Error::custom(format!("negative block duration {}", b.duration)));
            }
            let mut pairs = Vec::new();
            for (site, [a, bb]) in b.gates {
                if a >= file.d || bb >= file.d {
                    return Err(D::Error::custom(format!("label ({a}, {bb}) out of range")));
                }
                pairs.push((site, WeylLabel::new(file.d, a as i64, bb as i64)));
            }
            let word = GateWord::from_pairs(file.n, &pairs).map_err(D::Error::custom)?;
            blocks.push(ScheduleBlock { word, duration: b.duration });
        }
        let mut final_local_layer = Vec::new();
        for g in file.final_local_layer {
            let d = file.d;
            if g.re.len() != d || g.im.len() != d || g.re.iter().chain(&g.im).any(|r| r.len() != d) {
                return Err(D::Error::custom("local gate has wrong shape"));
            }
            if g.site >= file.n {
                return Err(D::Error::custom(format!("local gate site {} out of range", g.site)));
            }
            let unitary = Operator::from_fn(d, d, |r, c| C64::new(g.re[r][c], g.im[r][c]));
            final_local_layer.push(LocalGate { site: g.site, unitary });
        }
        Ok(Schedule { d: file.d, n: file.n, total_time: file.total_time, blocks, final_local_layer, metadata: file.metadata })
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "schedule d={} n={} T={}", self.d, self.n, self.total_time)?;
        for (q, b) in self.blocks.iter().enumerate() {
            writeln!(f, "  block {q:>3}: t = {:.6}  {}", b.duration, b.word)?;
        }
        write!(
            f,
            "  blocks={} gates={} analog={:.6} discarded={:.6} residual={:.2e}",
            self.block_count(),
            self.gate_count(),
            self.total_analog_time(),
            self.metadata.discarded_time,
            self.metadata.residual
        )
    }
}
