use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::{apply_one_site_raw, transfer_left, Mps};
use crate::error::{bail, Result};
use crate::linalg::{C64, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Matrix2<C64> {
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => Matrix2::new(ONE, ZERO, ZERO, ONE),
            Pauli::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
            Pauli::Y => Matrix2::new(ZERO, -i, i, ZERO),
            Pauli::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Index in `ALL`, used for base-4 string enumeration.
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Sparse Pauli operator with a +-1 prefactor. Identity sites are omitted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    ops: BTreeMap<usize, Pauli>,
    sign: i8,
}

impl PauliString {
    pub fn identity() -> PauliString {
        PauliString { ops: BTreeMap::new(), sign: 1 }
    }

    /// Builds a string from `(site, op)` pairs; identity entries are dropped
    /// and repeated sites are rejected.
    pub fn new<I: IntoIterator<Item = (usize, Pauli)>>(ops: I) -> Result<PauliString> {
        let mut map = BTreeMap::new();
        for (site, p) in ops {
            if map.contains_key(&site) {
                bail!(InvalidArgument, "site {} appears twice in a Pauli string", site);
            }
            if p != Pauli::I {
                map.insert(site, p);
            }
        }
        Ok(PauliString { ops: map, sign: 1 })
    }

    /// Dense string `ops[k]` on site `start + k`.
    pub fn from_dense(start: usize, ops: &[Pauli]) -> PauliString {
        let ops = ops
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(k, p)| (start + k, *p))
            .collect();
        PauliString { ops, sign: 1 }
    }

    /// `Z` on every site of `start..start + len`.
    pub fn z_string(start: usize, len: usize) -> PauliString {
        PauliString { ops: (start..start + len).map(|s| (s, Pauli::Z)).collect(), sign: 1 }
    }

    pub fn with_sign(mut self, sign: i8) -> PauliString {
        self.sign = if sign < 0 { -1 } else { 1 };
        self
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn ops(&self) -> &BTreeMap<usize, Pauli> {
        &self.ops
    }

    pub fn get(&self, site: usize) -> Pauli {
        self.ops.get(&site).copied().unwrap_or(Pauli::I)
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.ops.len()
    }

    pub fn support(&self) -> Option<(usize, usize)> {
        Some((*self.ops.keys().next()?, *self.ops.keys().next_back()?))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign < 0 {
            write!(f, "-")?;
        }
        if self.ops.is_empty() {
            return write!(f, "I");
        }
        for (i, (s, p)) in self.ops.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", p.label(), s)?;
        }
        Ok(())
    }
}

impl Mps {
    /// `sign * <psi|P|psi>` including any imaginary residue. The state is
    /// assumed normalized when it carries an orthogonality center; otherwise
    /// the result is divided by `<psi|psi>`.
    pub fn expect_pauli_complex(&self, p: &PauliString) -> Result<C64> {
        let n = self.n_sites();
        if let Some((_, hi)) = p.support() {
            if hi >= n {
                bail!(OutOfRange, "Pauli string touches site {} on a chain of {} sites", hi, n);
            }
        }
        let sign = C64::new(p.sign() as f64, 0.0);
        let (lo, hi, norm) = match (self.ortho_center, p.support()) {
            (Some(c), Some((a, b))) => (a.min(c), b.max(c), None),
            (Some(_), None) => return Ok(sign),
            (None, _) => (0, n - 1, Some(self.norm_sqr())),
        };
        let d = self.tensors[lo].shape()[0];
        let mut env = vec![ZERO; d * d];
        for i in 0..d {
            env[i * d + i] = ONE;
        }
        for site in lo..=hi {
            let a = &self.tensors[site];
            match p.get(site) {
                Pauli::I => env = transfer_left(&env, a, a),
                op => {
                    let mut b = a.clone();
                    apply_one_site_raw(&mut b, &op.matrix());
                    env = transfer_left(&env, a, &b);
                }
            }
        }
        let r = self.tensors[hi].shape()[2];
        let tr: C64 = (0..r).map(|i| env[i * r + i]).sum();
        Ok(match norm {
            Some(nn) => sign * tr / nn,
            None => sign * tr,
        })
    }

    /// Real part of [`Mps::expect_pauli_complex`]; a large imaginary residue
    /// is logged.
    pub fn expect_pauli(&self, p: &PauliString) -> Result<f64> {
        let v = self.expect_pauli_complex(p)?;
        if v.im.abs() > 1e-9 {
            log::debug!("Pauli expectation {} has imaginary residue {:.3e}", p, v.im);
        }
        Ok(v.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TruncationPolicy;

    #[test]
    fn zero_state_z() {
        let psi = Mps::zero_state(4).unwrap();
        let z = PauliString::new([(0, Pauli::Z)]).unwrap();
        assert_eq!(psi.expect_pauli(&z).unwrap(), 1.0);
        assert_eq!(psi.expect_pauli(&z.clone().with_sign(-1)).unwrap(), -1.0);
    }

    #[test]
    fn singlet_zz() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO];
        let psi = Mps::from_statevector(&v, &TruncationPolicy::unlimited()).unwrap();
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let pp = PauliString::new([(0, p), (1, p)]).unwrap();
            assert!((psi.expect_pauli(&pp).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range() {
        let psi = Mps::zero_state(3).unwrap();
        let z = PauliString::new([(3, Pauli::Z)]).unwrap();
        assert!(psi.expect_pauli(&z).is_err());
    }

    #[test]
    fn duplicate_site_rejected() {
        assert!(PauliString::new([(1, Pauli::X), (1, Pauli::Z)]).is_err());
    }

    #[test]
    fn display() {
        let p = PauliString::from_dense(2, &[Pauli::X, Pauli::I, Pauli::Z]).with_sign(-1);
        assert_eq!(p.to_string(), "-X2 Z4");
    }
}
