//! Weyl–Heisenberg (clock and shift) operators and spin matrices.
//!
//! `W_ab = Z^a X^b = Σ_k w^{k a} |k⟩⟨k + b mod d|` with `w = exp(2πi/d)`.
//! Phases between labels are tracked as integer exponents of `w` modulo `d`
//! and only turned into complex numbers when a matrix is materialised.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{DaqcError, Result};
use crate::linalg;

/// Dense complex matrix, row `i` / column `j` addressed as `m[(i, j)]`.
pub type Operator = DMatrix<C64>;

/// Canonical label `(a, b)` of `W_ab = Z^a X^b`, both reduced modulo `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeylLabel {
    a: usize,
    b: usize,
}

impl WeylLabel {
    pub const IDENTITY: WeylLabel = WeylLabel { a: 0, b: 0 };

    /// Builds a label for dimension `d`, reducing negative or large powers mod `d`.
    pub fn new(d: usize, a: i64, b: i64) -> Self {
        let m = d as i64;
        WeylLabel {
            a: a.rem_euclid(m) as usize,
            b: b.rem_euclid(m) as usize,
        }
    }

    /// Phase operator `Z^a`.
    pub fn z_power(d: usize, a: i64) -> Self {
        Self::new(d, a, 0)
    }

    /// Shift operator `X^b`.
    pub fn x_power(d: usize, b: i64) -> Self {
        Self::new(d, 0, b)
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn is_identity(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// Label of the inverse operator, `(-a, -b) mod d`.
    pub fn inverse(&self, d: usize) -> Self {
        Self::new(d, -(self.a as i64), -(self.b as i64))
    }

    /// Index `a·d + b`, the enumeration order used for gate-words.
    pub fn index(&self, d: usize) -> usize {
        self.a * d + self.b
    }

    pub fn from_index(d: usize, idx: usize) -> Self {
        WeylLabel { a: idx / d, b: idx % d }
    }

    pub fn check(&self, d: usize) -> Result<()> {
        check_dimension(d)?;
        if self.a >= d || self.b >= d {
            return Err(DaqcError::InvalidInput(format!(
                "label ({}, {}) out of range for d = {d}",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

impl fmt::Display for WeylLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (0, 0) => write!(f, "I"),
            (a, 0) => write!(f, "Z^{a}"),
            (0, b) => write!(f, "X^{b}"),
            (a, b) => write!(f, "Z^{a}X^{b}"),
        }
    }
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        Err(DaqcError::InvalidDimension(d))
    } else {
        Ok(())
    }
}

/// `w^k` with `w = exp(2πi/d)`.
pub fn root_of_unity(d: usize, k: usize) -> C64 {
    let k = k % d;
    C64::from_polar(1.0, TAU * k as f64 / d as f64)
}

/// Dense `d × d` matrix of `W_label`.
pub fn weyl_operator(d: usize, label: WeylLabel) -> Result<Operator> {
    label.check(d)?;
    let mut m = Operator::zeros(d, d);
    for k in 0..d {
        m[(k, (k + label.b) % d)] = root_of_unity(d, k * label.a);
    }
    Ok(m)
}

/// Exponent `e` such that `W_k† W_l W_k = w^e W_l`, i.e. `l₂k₁ − l₁k₂ mod d`.
pub fn conjugation_exponent(d: usize, target: WeylLabel, conjugator: WeylLabel) -> usize {
    let m = d as i64;
    let e = target.b as i64 * conjugator.a as i64 - target.a as i64 * conjugator.b as i64;
    e.rem_euclid(m) as usize
}

/// Scalar picked up by `W_target` under conjugation by `W_conjugator`.
pub fn conjugation_phase(d: usize, target: WeylLabel, conjugator: WeylLabel) -> Result<C64> {
    target.check(d)?;
    conjugator.check(d)?;
    Ok(root_of_unity(d, conjugation_exponent(d, target, conjugator)))
}

/// `W_left W_right = w^e W_(left + right)`; returns `(e, left + right)`.
pub fn weyl_product(d: usize, left: WeylLabel, right: WeylLabel) -> (usize, WeylLabel) {
    let e = (right.a * left.b) % d;
    let label = WeylLabel {
        a: (left.a + right.a) % d,
        b: (left.b + right.b) % d,
    };
    (e, label)
}

/// Same as [`weyl_product`] with the phase materialised.
pub fn weyl_product_phase(d: usize, left: WeylLabel, right: WeylLabel) -> Result<(C64, WeylLabel)> {
    left.check(d)?;
    right.check(d)?;
    let (e, label) = weyl_product(d, left, right);
    Ok((root_of_unity(d, e), label))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Levi-Civita symbol ε_{self, nu, eta}.
    pub fn levi_civita(self, nu: Axis, eta: Axis) -> f64 {
        let idx = |a: Axis| match a {
            Axis::X => 0i32,
            Axis::Y => 1,
            Axis::Z => 2,
        };
        let (i, j, k) = (idx(self), idx(nu), idx(eta));
        if i == j || j == k || i == k {
            0.0
        } else if (j - i).rem_euclid(3) == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// The axis completing `{self, other}` when they differ.
    pub fn third(self, other: Axis) -> Option<Axis> {
        Axis::ALL.into_iter().find(|&a| a != self && a != other).filter(|_| self != other)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Spin-s matrices with `s = (d-1)/2`, basis ordered `m = s, s-1, …, -s` (ħ = 1).
pub fn spin_operator(d: usize, axis: Axis) -> Result<Operator> {
    check_dimension(d)?;
    let s = (d as f64 - 1.0) / 2.0;
    let m_of = |k: usize| s - k as f64;
    // S+ |m⟩ = sqrt(s(s+1) - m(m+1)) |m+1⟩; |m+1⟩ sits at index k-1.
    let mut raise = Operator::zeros(d, d);
    for k in 1..d {
        let m = m_of(k);
        raise[(k - 1, k)] = C64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    Ok(match axis {
        Axis::Z => Operator::from_diagonal(&nalgebra::DVector::from_fn(d, |k, _| C64::new(m_of(k), 0.0))),
        Axis::X => (&raise + &lower).scale(0.5),
        Axis::Y => (&raise - &lower) * C64::new(0.0, -0.5),
    })
}

/// `e^{iθS_ν} S_μ e^{-iθS_ν}`.
pub fn spin_conjugate(d: usize, mu: Axis, nu: Axis, theta: f64) -> Result<Operator> {
    let s_mu = spin_operator(d, mu)?;
    let s_nu = spin_operator(d, nu)?;
    let u = linalg::expm_hermitian(&s_nu, theta);
    Ok(u.adjoint() * s_mu * u)
}

/// Coefficients `c_ab` with `op = Σ c_ab W_ab`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylDecomposition {
    pub d: usize,
    pub coefficients: BTreeMap<WeylLabel, C64>,
}

impl WeylDecomposition {
    pub fn coefficient(&self, label: WeylLabel) -> C64 {
        self.coefficients.get(&label).copied().unwrap_or_default()
    }

    /// Labels whose coefficient magnitude exceeds `tol`.
    pub fn support(&self, tol: f64) -> impl Iterator<Item = (WeylLabel, C64)> + '_ {
        self.coefficients
            .iter()
            .filter(move |(_, c)| c.norm() > tol)
            .map(|(l, c)| (*l, *c))
    }

    pub fn reconstruct(&self) -> Operator {
        let mut out = Operator::zeros(self.d, self.d);
        for (label, c) in &self.coefficients {
            // labels were validated when the decomposition was built
            out += weyl_operator(self.d, *label).expect("valid label") * *c;
        }
        out
    }
}

/// Decomposes a `d × d` operator via `c_ab = Tr(W_ab† op) / d`.
pub fn decompose(op: &Operator, d: usize) -> Result<WeylDecomposition> {
    check_dimension(d)?;
    if op.nrows() != d || op.ncols() != d {
        return Err(DaqcError::DimensionMismatch(format!(
            "expected a {d}x{d} operator, got {}x{}",
            op.nrows(),
            op.ncols()
        )));
    }
    let mut coefficients = BTreeMap::new();
    for a in 0..d {
        for b in 0..d {
            // Tr(W† op) = Σ_k conj(w^{k a}) op[k, (k + b) mod d]
            let mut acc = C64::default();
            for k in 0..d {
                acc += root_of_unity(d, k * a).conj() * op[(k, (k + b) % d)];
            }
            coefficients.insert(WeylLabel { a, b }, acc / d as f64);
        }
    }
    Ok(WeylDecomposition { d, coefficients })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn w(d: usize) -> C64 {
        root_of_unity(d, 1)
    }

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    #[test]
    fn pauli_z_for_qubits() {
        let z = weyl_operator(2, WeylLabel::z_power(2, 1)).unwrap();
        assert!((z[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((z[(1, 1)] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(z[(0, 1)], C64::default());
    }

    #[test]
    fn qutrit_clock_matches_diag_1_w_w2() {
        let z = weyl_operator(3, WeylLabel::z_power(3, 1)).unwrap();
        let expected = Operator::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            w(3),
            w(3).powu(2),
        ]));
        assert!(close(&z, &expected, 1e-14));
        // w² = w⁻¹ for d = 3
        assert!((w(3).powu(2) - w(3).inv()).norm() < 1e-15);
        let id = weyl_operator(3, WeylLabel::IDENTITY).unwrap();
        assert!(close(&id, &Operator::identity(3, 3), 1e-15));
    }

    #[test]
    fn invalid_dimension_rejected() {
        assert!(matches!(
            weyl_operator(1, WeylLabel::IDENTITY),
            Err(DaqcError::InvalidDimension(1))
        ));
        assert!(weyl_operator(2, WeylLabel::new(5, 3, 0)).is_err());
    }

    #[test]
    fn labels_reduce_negative_powers() {
        assert_eq!(WeylLabel::new(3, -1, -4), WeylLabel::new(3, 2, 2));
        assert_eq!(WeylLabel::new(4, 1, 3).inverse(4), WeylLabel::new(4, 3, 1));
    }

    #[test]
    fn conjugation_phase_examples() {
        let z = WeylLabel::z_power(2, 1);
        let x = WeylLabel::x_power(2, 1);
        assert!((conjugation_phase(2, z, x).unwrap() - C64::new(-1.0, 0.0)).norm() < 1e-15);

        // brute force W_X† Z W_X for d = 3 and read the ratio off a nonzero entry
        let d = 3;
        let zl = WeylLabel::z_power(d, 1);
        let xl = WeylLabel::x_power(d, 1);
        let zm = weyl_operator(d, zl).unwrap();
        let xm = weyl_operator(d, xl).unwrap();
        let conj = xm.adjoint() * &zm * &xm;
        let ratio = conj[(0, 0)] / zm[(0, 0)];
        let expected = C64::from_polar(1.0, -TAU / 3.0);
        assert!((ratio - expected).norm() < 1e-14);
        assert!((conjugation_phase(d, zl, xl).unwrap() - expected).norm() < 1e-14);

        for d in 2..6 {
            for idx in 0..d * d {
                let l = WeylLabel::from_index(d, idx);
                assert_eq!(conjugation_exponent(d, l, WeylLabel::IDENTITY), 0);
            }
        }
    }

    #[test]
    fn conjugation_phase_matches_dense_for_all_labels() {
        for d in 2..=5 {
            for li in 0..d * d {
                let l = WeylLabel::from_index(d, li);
                let wl = weyl_operator(d, l).unwrap();
                for ki in 0..d * d {
                    let k = WeylLabel::from_index(d, ki);
                    let wk = weyl_operator(d, k).unwrap();
                    let lhs = wk.adjoint() * &wl * &wk;
                    let rhs = &wl * conjugation_phase(d, l, k).unwrap();
                    assert!(close(&lhs, &rhs, 1e-12), "d={d} l={l} k={k}");
                }
            }
        }
    }

    #[test]
    fn product_phase_matches_dense() {
        for d in 2..=5 {
            for li in 0..d * d {
                for ri in 0..d * d {
                    let l = WeylLabel::from_index(d, li);
                    let r = WeylLabel::from_index(d, ri);
                    let dense = weyl_operator(d, l).unwrap() * weyl_operator(d, r).unwrap();
                    let (phase, label) = weyl_product_phase(d, l, r).unwrap();
                    let ours = weyl_operator(d, label).unwrap() * phase;
                    assert!(close(&dense, &ours, 1e-12), "d={d} {l}·{r}");
                }
            }
        }
        // Z·Z = Z² and Z·X = W_11 with unit phase
        let (p, l) = weyl_product_phase(3, WeylLabel::z_power(3, 1), WeylLabel::z_power(3, 1)).unwrap();
        assert!((p - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(l, WeylLabel::z_power(3, 2));
        let (p, l) = weyl_product_phase(3, WeylLabel::z_power(3, 1), WeylLabel::x_power(3, 1)).unwrap();
        assert!((p - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(l, WeylLabel::new(3, 1, 1));
    }

    #[test]
    fn dagger_relation() {
        for d in 2..=5 {
            for idx in 0..d * d {
                let l = WeylLabel::from_index(d, idx);
                let lhs = weyl_operator(d, l).unwrap().adjoint();
                let rhs = weyl_operator(d, l.inverse(d)).unwrap() * root_of_unity(d, l.a() * l.b());
                assert!(close(&lhs, &rhs, 1e-12));
            }
        }
    }

    #[test]
    fn spin_matrices() {
        let sz = spin_operator(2, Axis::Z).unwrap();
        assert!((sz[(0, 0)].re - 0.5).abs() < 1e-15 && (sz[(1, 1)].re + 0.5).abs() < 1e-15);
        let sz3 = spin_operator(3, Axis::Z).unwrap();
        for (k, v) in [1.0, 0.0, -1.0].into_iter().enumerate() {
            assert!((sz3[(k, k)].re - v).abs() < 1e-15);
        }
        for d in 2..=6 {
            let sx = spin_operator(d, Axis::X).unwrap();
            let sy = spin_operator(d, Axis::Y).unwrap();
            let sz = spin_operator(d, Axis::Z).unwrap();
            let comm = &sx * &sy - &sy * &sx;
            assert!(close(&comm, &(sz * C64::i()), 1e-12), "d={d}");
            assert!(close(&sx, &sx.adjoint(), 1e-15));
            assert!(close(&sy, &sy.adjoint(), 1e-15));
        }
    }

    #[test]
    fn levi_civita_signs() {
        assert_eq!(Axis::X.levi_civita(Axis::Y, Axis::Z), 1.0);
        assert_eq!(Axis::Z.levi_civita(Axis::Y, Axis::X), -1.0);
        assert_eq!(Axis::Y.levi_civita(Axis::Y, Axis::X), 0.0);
        assert_eq!(Axis::X.third(Axis::Z), Some(Axis::Y));
        assert_eq!(Axis::X.third(Axis::X), None);
    }

    #[test]
    fn spin_conjugation_closed_form() {
        for d in 2..=5 {
            for mu in Axis::ALL {
                for nu in Axis::ALL {
                    for theta in [0.0, PI / 4.0, PI / 2.0, PI] {
                        let got = spin_conjugate(d, mu, nu, theta).unwrap();
                        let s_mu = spin_operator(d, mu).unwrap();
                        let expected = match mu.third(nu) {
                            None => s_mu,
                            Some(eta) => {
                                s_mu.scale(theta.cos())
                                    + spin_operator(d, eta).unwrap().scale(mu.levi_civita(nu, eta) * theta.sin())
                            }
                        };
                        assert!(close(&got, &expected, 1e-10), "d={d} mu={mu} nu={nu} θ={theta}");
                    }
                }
            }
        }
    }

    #[test]
    fn spin_conjugation_against_matrix_exponential() {
        // independent route: Padé exponential from nalgebra instead of eigen-decomposition
        let d = 4;
        let sy = spin_operator(d, Axis::Y).unwrap();
        let u = (sy * C64::new(0.0, -PI / 2.0)).exp();
        let got = u.adjoint() * spin_operator(d, Axis::Z).unwrap() * &u;
        let minus_sx = -spin_operator(d, Axis::X).unwrap();
        assert!(close(&got, &minus_sx, 1e-10));
        assert!(close(&spin_conjugate(d, Axis::Z, Axis::Y, PI / 2.0).unwrap(), &minus_sx, 1e-10));
        let flipped = spin_conjugate(3, Axis::Z, Axis::Y, PI).unwrap();
        assert!(close(&flipped, &-spin_operator(3, Axis::Z).unwrap(), 1e-10));
    }

    #[test]
    fn decompose_spin_one() {
        let d = 3;
        let w = w(d);
        let one = C64::new(1.0, 0.0);
        let sz = spin_operator(d, Axis::Z).unwrap();
        let dec = decompose(&sz, d).unwrap();
        // Z and Z² carry (1 - w⁻²)/3 and (1 - w⁻¹)/3 for S_z = diag(1, 0, -1)
        assert!((dec.coefficient(WeylLabel::z_power(d, 1)) - (one - w.powi(-2)) / 3.0).norm() < 1e-14);
        assert!((dec.coefficient(WeylLabel::z_power(d, 2)) - (one - w.powi(-1)) / 3.0).norm() < 1e-14);
        assert_eq!(dec.support(1e-14).count(), 2);

        let sz2 = &sz * &sz;
        let dec2 = decompose(&sz2, d).unwrap();
        assert!((dec2.coefficient(WeylLabel::IDENTITY) - C64::new(2.0 / 3.0, 0.0)).norm() < 1e-14);
        assert!((dec2.coefficient(WeylLabel::z_power(d, 1)) - (one + w.powi(-2)) / 3.0).norm() < 1e-14);
        assert!((dec2.coefficient(WeylLabel::z_power(d, 2)) - (one + w.powi(-1)) / 3.0).norm() < 1e-14);
        assert_eq!(dec2.support(1e-14).count(), 3);

        let id = decompose(&Operator::identity(d, d), d).unwrap();
        assert!((id.coefficient(WeylLabel::IDENTITY) - one).norm() < 1e-15);
        assert_eq!(id.support(1e-14).count(), 1);
    }

    #[test]
    fn decompose_rejects_wrong_shape() {
        assert!(matches!(
            decompose(&Operator::identity(2, 2), 3),
            Err(DaqcError::DimensionMismatch(_))
        ));
    }
}
