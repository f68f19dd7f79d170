//! Two-body qudit Hamiltonians in the Weyl–Heisenberg basis.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{DaqcError, Result};
use crate::linalg;
use crate::weyl::{self, check_dimension, root_of_unity, Axis, Operator, WeylLabel};

/// Coefficients below this magnitude are dropped after merging.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Largest Hilbert-space dimension [`QuditHamiltonian::materialize`] builds by default.
pub const MATERIALIZE_CAP: usize = 1 << 12;

/// Sites and Weyl labels of a two-body term `W_left^(i) ⊗ W_right^(j)`, with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CouplingKey {
    pub i: usize,
    pub j: usize,
    pub left: WeylLabel,
    pub right: WeylLabel,
}

impl CouplingKey {
    /// Orders the sites; labels follow their site.
    pub fn new(i: usize, j: usize, left: WeylLabel, right: WeylLabel) -> Self {
        if i <= j {
            CouplingKey { i, j, left, right }
        } else {
            CouplingKey { i: j, j: i, left: right, right: left }
        }
    }

    /// `[l1, l2, l3, l4]`.
    pub fn quartet(&self) -> [usize; 4] {
        [self.left.a(), self.left.b(), self.right.a(), self.right.b()]
    }
}

impl fmt::Display for CouplingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}){}({})", self.left, self.i, self.right, self.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingTerm {
    pub key: CouplingKey,
    pub coefficient: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTerm {
    pub site: usize,
    pub label: WeylLabel,
    pub coefficient: C64,
}

/// `H = Σ h W⊗W + Σ h W + offset·I` on `n` qudits of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditHamiltonian {
    d: usize,
    n: usize,
    two_body: BTreeMap<CouplingKey, C64>,
    one_body: BTreeMap<(usize, WeylLabel), C64>,
    identity_offset: f64,
}

impl QuditHamiltonian {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(QuditHamiltonian {
            d,
            n,
            two_body: BTreeMap::new(),
            one_body: BTreeMap::new(),
            identity_offset: 0.0,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn identity_offset(&self) -> f64 {
        self.identity_offset
    }

    pub fn two_body(&self) -> impl Iterator<Item = CouplingTerm> + '_ {
        self.two_body.iter().map(|(k, c)| CouplingTerm { key: *k, coefficient: *c })
    }

    pub fn one_body(&self) -> impl Iterator<Item = LocalTerm> + '_ {
        self.one_body.iter().map(|((site, label), c)| LocalTerm {
            site: *site,
            label: *label,
            coefficient: *c,
        })
    }

    pub fn num_two_body(&self) -> usize {
        self.two_body.len()
    }

    pub fn num_one_body(&self) -> usize {
        self.one_body.len()
    }

    pub fn coupling(&self, key: &CouplingKey) -> C64 {
        self.two_body.get(key).copied().unwrap_or_default()
    }

    pub fn local(&self, site: usize, label: WeylLabel) -> C64 {
        self.one_body.get(&(site, label)).copied().unwrap_or_default()
    }

    /// Adds `c · W_left^(i) ⊗ W_right^(j)`, merging with an existing term.
    pub fn add_coupling(&mut self, i: usize, j: usize, left: WeylLabel, right: WeylLabel, c: C64) -> Result<()> {
        if i == j {
            return Err(DaqcError::InvalidInput(format!("two-body term on a single site {i}")));
        }
        if i >= self.n || j >= self.n {
            return Err(DaqcError::InvalidInput(format!("site pair ({i}, {j}) outside 0..{}", self.n)));
        }
        left.check(self.d)?;
        right.check(self.d)?;
        if left.is_identity() || right.is_identity() {
            return Err(DaqcError::InvalidInput(
                "identity factor inside a two-body term; use a local term".into(),
            ));
        }
        let key = CouplingKey::new(i, j, left, right);
        let entry = self.two_body.entry(key).or_default();
        *entry += c;
        if entry.norm() < DROP_TOLERANCE {
            self.two_body.remove(&key);
        }
        Ok(())
    }

    pub fn add_local(&mut self, site: usize, label: WeylLabel, c: C64) -> Result<()> {
        if site >= self.n {
            return Err(DaqcError::InvalidInput(format!("site {site} outside 0..{}", self.n)));
        }
        label.check(self.d)?;
        if label.is_identity() {
            self.identity_offset += c.re;
            return Ok(());
        }
        let entry = self.one_body.entry((site, label)).or_default();
        *entry += c;
        if entry.norm() < DROP_TOLERANCE {
            self.one_body.remove(&(site, label));
        }
        Ok(())
    }

    pub fn add_identity(&mut self, offset: f64) {
        self.identity_offset += offset;
    }

    /// Site pairs carrying at least one nonzero two-body term.
    pub fn coupled_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.two_body.keys().map(|k| (k.i, k.j)).collect()
    }

    /// True when every term is a power of `Z` (the Hamiltonian is diagonal).
    pub fn is_diagonal(&self) -> bool {
        self.two_body.keys().all(|k| k.left.b() == 0 && k.right.b() == 0)
            && self.one_body.keys().all(|(_, l)| l.b() == 0)
    }

    /// Diagonal of a diagonal Hamiltonian, `None` otherwise. Index order puts site 0 most significant.
    pub fn diagonal_energies(&self) -> Option<Vec<f64>> {
        if !self.is_diagonal() {
            return None;
        }
        let dim = self.dim();
        let mut energies = vec![self.identity_offset; dim];
        let digits = Digits::new(self.d, self.n);
        for (idx, e) in energies.iter_mut().enumerate() {
            let mut acc = C64::default();
            for (k, c) in &self.two_body {
                let ph = k.left.a() * digits.digit(idx, k.i) + k.right.a() * digits.digit(idx, k.j);
                acc += c * root_of_unity(self.d, ph);
            }
            for ((site, label), c) in &self.one_body {
                acc += c * root_of_unity(self.d, label.a() * digits.digit(idx, *site));
            }
            *e += acc.re;
        }
        Some(energies)
    }

    pub fn materialize(&self) -> Result<Operator> {
        self.materialize_with_cap(MATERIALIZE_CAP)
    }

    /// Dense `d^n × d^n` matrix. Every Weyl string is monomial, so each term costs O(d^n).
    pub fn materialize_with_cap(&self, cap: usize) -> Result<Operator> {
        let dim = checked_dim(self.d, self.n, cap, "materialize")?;
        let digits = Digits::new(self.d, self.n);
        let mut out = Operator::zeros(dim, dim);
        let mut add_string = |labels: &[(usize, WeylLabel)], c: C64| {
            for row in 0..dim {
                let mut col = row;
                let mut phase = 0usize;
                for &(site, label) in labels {
                    let k = digits.digit(row, site);
                    phase += k * label.a();
                    let shifted = (k + label.b()) % self.d;
                    col = digits.with_digit(col, site, shifted);
                }
                out[(row, col)] += c * root_of_unity(self.d, phase);
            }
        };
        for (k, c) in &self.two_body {
            add_string(&[(k.i, k.left), (k.j, k.right)], *c);
        }
        for ((site, label), c) in &self.one_body {
            add_string(&[(*site, *label)], *c);
        }
        for idx in 0..dim {
            out[(idx, idx)] += C64::new(self.identity_offset, 0.0);
        }
        Ok(out)
    }

    /// Per-site operator `Σ_label h W_label` of the one-body part.
    pub fn local_operator(&self, site: usize) -> Result<Operator> {
        let mut op = Operator::zeros(self.d, self.d);
        for ((s, label), c) in &self.one_body {
            if *s == site {
                op += weyl::weyl_operator(self.d, *label)? * *c;
            }
        }
        Ok(op)
    }
}

/// Mixed-radix helper for basis indices, site 0 most significant.
#[derive(Debug, Clone)]
pub struct Digits {
    d: usize,
    strides: Vec<usize>,
}

impl Digits {
    pub fn new(d: usize, n: usize) -> Self {
        let strides = (0..n).map(|s| d.pow((n - 1 - s) as u32)).collect();
        Digits { d, strides }
    }

    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    pub fn digit(&self, idx: usize, site: usize) -> usize {
        (idx / self.strides[site]) % self.d
    }

    pub fn with_digit(&self, idx: usize, site: usize, value: usize) -> usize {
        let old = self.digit(idx, site);
        idx - old * self.strides[site] + value * self.strides[site]
    }
}

pub(crate) fn checked_dim(d: usize, n: usize, cap: usize, what: &'static str) -> Result<usize> {
    let dim = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > cap as u128 {
        return Err(DaqcError::SizeCap {
            what,
            size: dim.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    Ok(dim as usize)
}

/// One product term `coefficient · op_i ⊗ op_j` of a spin-basis description.
#[derive(Debug, Clone)]
pub struct SpinProductTerm {
    pub i: usize,
    pub j: usize,
    pub op_i: Operator,
    pub op_j: Operator,
    pub coefficient: f64,
}

/// Converts products of Hermitian single-site operators into Weyl-basis terms.
///
/// Identity⊗identity parts go to the offset and identity⊗W parts become local terms.
pub fn from_spin_terms(d: usize, n: usize, terms: &[SpinProductTerm]) -> Result<QuditHamiltonian> {
    let mut h = QuditHamiltonian::new(d, n)?;
    for t in terms {
        for op in [&t.op_i, &t.op_j] {
            if op.nrows() != d || op.ncols() != d {
                return Err(DaqcError::DimensionMismatch(format!(
                    "site operator is {}x{}, expected {d}x{d}",
                    op.nrows(),
                    op.ncols()
                )));
            }
            let dev = linalg::hermitian_deviation(op);
            if dev > 1e-10 {
                return Err(DaqcError::NotHermitian(dev));
            }
        }
        if t.i == t.j || t.i >= n || t.j >= n {
            return Err(DaqcError::InvalidInput(format!("bad site pair ({}, {})", t.i, t.j)));
        }
        let left = weyl::decompose(&t.op_i, d)?;
        let right = weyl::decompose(&t.op_j, d)?;
        for (la, ca) in left.support(DROP_TOLERANCE) {
            for (lb, cb) in right.support(DROP_TOLERANCE) {
                let c = ca * cb * t.coefficient;
                match (la.is_identity(), lb.is_identity()) {
                    (true, true) => h.add_identity(c.re),
                    (true, false) => h.add_local(t.j, lb, c)?,
                    (false, true) => h.add_local(t.i, la, c)?,
                    (false, false) => h.add_coupling(t.i, t.j, la, lb, c)?,
                }
            }
        }
    }
    Ok(h)
}

fn spin_z_pair(d: usize) -> Result<(Operator, Operator)> {
    let sz = weyl::spin_operator(d, Axis::Z)?;
    let sz2 = &sz * &sz;
    let trace = sz2.trace() / d as f64;
    let shifted = sz2 - Operator::identity(d, d) * trace;
    Ok((sz, shifted))
}

/// `S_z² − (2/3)·I` for spin 1, the traceless quadrupolar operator.
pub fn shifted_sz_squared(d: usize) -> Result<Operator> {
    Ok(spin_z_pair(d)?.1)
}

/// Edge terms `cos θ · S_z⊗S_z + sin θ · S_z'²⊗S_z'²` for a qutrit pair.
pub fn blbq_edge_terms(i: usize, j: usize, theta: f64) -> Result<Vec<SpinProductTerm>> {
    let (sz, sz2p) = spin_z_pair(3)?;
    Ok(vec![
        SpinProductTerm { i, j, op_i: sz.clone(), op_j: sz, coefficient: theta.cos() },
        SpinProductTerm { i, j, op_i: sz2p.clone(), op_j: sz2p, coefficient: theta.sin() },
    ])
}

/// Dense 9×9 edge operator of the BLBQ chain.
pub fn blbq_edge_operator(theta: f64) -> Result<Operator> {
    let (sz, sz2p) = spin_z_pair(3)?;
    Ok(sz.kronecker(&sz).scale(theta.cos()) + sz2p.kronecker(&sz2p).scale(theta.sin()))
}

/// Spin-1 bilinear–biquadratic Ising-like chain on `n` qutrits.
///
/// The biquadratic part uses `S_z'² = S_z² − (2/3)I`, so the result holds only
/// two-body terms: the one-body remainder of `(S_z S_z)²` is not simulated.
pub fn blbq_problem(n: usize, theta: f64) -> Result<QuditHamiltonian> {
    if n < 2 {
        return Err(DaqcError::InvalidInput(format!("BLBQ chain needs n >= 2, got {n}")));
    }
    let mut terms = Vec::with_capacity(2 * (n - 1));
    for i in 0..n - 1 {
        terms.extend(blbq_edge_terms(i, i + 1, theta)?);
    }
    from_spin_terms(3, n, &terms)
}

/// `H_S = Σ_i S_z^(i) S_z^(i+1)` on an open chain.
pub fn zz_source(n: usize, d: usize) -> Result<QuditHamiltonian> {
    if n < 2 {
        return Err(DaqcError::InvalidInput(format!("chain needs n >= 2, got {n}")));
    }
    let sz = weyl::spin_operator(d, Axis::Z)?;
    let terms: Vec<_> = (0..n - 1)
        .map(|i| SpinProductTerm { i, j: i + 1, op_i: sz.clone(), op_j: sz.clone(), coefficient: 1.0 })
        .collect();
    from_spin_terms(d, n, &terms)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompatibilityReport {
    /// Problem-coupled site pairs with no source coupling.
    pub violating_pairs: Vec<(usize, usize)>,
}

impl CompatibilityReport {
    pub fn is_compatible(&self) -> bool {
        self.violating_pairs.is_empty()
    }
}

/// Every problem-coupled pair must also be coupled by the source.
pub fn check_compatibility(source: &QuditHamiltonian, problem: &QuditHamiltonian) -> Result<CompatibilityReport> {
    if source.d != problem.d || source.n != problem.n {
        return Err(DaqcError::DimensionMismatch(format!(
            "source is (d={}, n={}), problem is (d={}, n={})",
            source.d, source.n, problem.d, problem.n
        )));
    }
    let covered = source.coupled_pairs();
    let violating_pairs = problem
        .coupled_pairs()
        .into_iter()
        .filter(|p| !covered.contains(p))
        .collect();
    Ok(CompatibilityReport { violating_pairs })
}

// ---- file format -------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TwoBodyEntry {
    i: usize,
    j: usize,
    l: [usize; 4],
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OneBodyEntry {
    i: usize,
    l: [usize; 2],
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HamiltonianFile {
    d: usize,
    n: usize,
    two_body: Vec<TwoBodyEntry>,
    #[serde(default)]
    one_body: Vec<OneBodyEntry>,
    #[serde(default)]
    identity_offset: f64,
}

impl Serialize for QuditHamiltonian {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let file = HamiltonianFile {
            d: self.d,
            n: self.n,
            two_body: self
                .two_body
                .iter()
                .map(|(k, c)| TwoBodyEntry { i: k.i, j: k.j, l: k.quartet(), re: c.re, im: c.im })
                .collect(),
            one_body: self
                .one_body
                .iter()
                .map(|((site, label), c)| OneBodyEntry {
                    i: *site,
                    l: [label.a(), label.b()],
                    re: c.re,
                    im: c.im,
                })
                .collect(),
            identity_offset: self.identity_offset,
        };
        file.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuditHamiltonian {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = HamiltonianFile::deserialize(deserializer)?;
        let build = || -> Result<QuditHamiltonian> {
            let mut h = QuditHamiltonian::new(file.d, file.n)?;
            let label = |a: usize, b: usize| -> Result<WeylLabel> {
                let l = WeylLabel::new(file.d, a as i64, b as i64);
                if a >= file.d || b >= file.d {
                    return Err(DaqcError::InvalidInput(format!("label ({a}, {b}) out of range")));
                }
                Ok(l)
            };
            for t in &file.two_body {
                h.add_coupling(t.i, t.j, label(t.l[0], t.l[1])?, label(t.l[2], t.l[3])?, C64::new(t.re, t.im))?;
            }
            for t in &file.one_body {
                h.add_local(t.i, label(t.l[0], t.l[1])?, C64::new(t.re, t.im))?;
            }
            h.add_identity(file.identity_offset);
            Ok(h)
        };
        build().map_err(serde::de::Error::custom)
    }
}

impl QuditHamiltonian {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Dense single-site operator embedded at `site` of an `n`-qudit register.
pub fn embed(op: &Operator, d: usize, n: usize, site: usize) -> Operator {
    let mut out = Operator::identity(1, 1);
    for s in 0..n {
        out = if s == site { out.kronecker(op) } else { out.kronecker(&Operator::identity(d, d)) };
    }
    out
}

/// Diagonal matrix from real energies.
pub fn diagonal_operator(energies: &[f64]) -> Operator {
    Operator::from_diagonal(&DVector::from_iterator(energies.len(), energies.iter().map(|&e| C64::new(e, 0.0))))
}
