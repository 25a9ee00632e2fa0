//! Internal fast integer polynomials for the fraction-free elimination hot
//! path: exponent vectors packed into a `u128` (8 bits per symbol), sorted
//! coefficient vectors, merge/hash arithmetic. The public [`RatePoly`] stays
//! the API currency; this representation only lives inside the kernel
//! solver.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, Zero};

use crate::poly::{Monomial, RatePoly};
use crate::{Int, Rat};

pub(crate) const BITS: u32 = 8;
pub(crate) const MAX_SYMS: usize = (128 / BITS) as usize;
const MASK: u128 = (1 << BITS) - 1;

/// Pack an exponent vector; exponents must stay below 2^BITS across every
/// intermediate product, which the caller guarantees by degree bounds.
pub(crate) fn pack(exps: &[u16]) -> u128 {
    debug_assert!(exps.len() <= MAX_SYMS);
    let mut key = 0u128;
    for &e in exps {
        debug_assert!((e as u128) <= MASK);
        key = (key << BITS) | e as u128;
    }
    key
}

pub(crate) fn unpack(key: u128, nsyms: usize) -> Vec<u16> {
    let mut exps = vec![0u16; nsyms];
    let mut k = key;
    for i in (0..nsyms).rev() {
        exps[i] = (k & MASK) as u16;
        k >>= BITS;
    }
    exps
}

/// Divisibility of packed monomials: every 8-bit lane must not underflow.
fn divides(d: u128, m: u128) -> bool {
    let mut dd = d;
    let mut mm = m;
    while dd != 0 || mm != 0 {
        if (dd & MASK) > (mm & MASK) {
            return false;
        }
        dd >>= BITS;
        mm >>= BITS;
    }
    true
}

/// Sparse integer polynomial, terms sorted by packed key ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct ZPoly {
    pub terms: Vec<(u128, Int)>,
}

impl ZPoly {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self { terms: vec![(0, Int::from(1))] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn from_rate_poly(p: &RatePoly) -> Self {
        let mut terms: Vec<(u128, Int)> = p
            .terms()
            .map(|(m, c)| {
                debug_assert!(num_traits::One::is_one(c.denom()), "integer coefficients only");
                (pack(m.exps()), c.numer().clone())
            })
            .collect();
        terms.sort_unstable_by_key(|(k, _)| *k);
        Self { terms }
    }

    pub fn to_rate_poly(&self, nsyms: usize) -> RatePoly {
        let mut out = RatePoly::zero(nsyms);
        for (k, c) in &self.terms {
            out.add_term(
                Monomial::from_exps(unpack(*k, nsyms)),
                Rat::from_integer(c.clone()),
            );
        }
        out
    }

    pub fn mul(&self, other: &ZPoly) -> ZPoly {
        if self.is_zero() || other.is_zero() {
            return ZPoly::zero();
        }
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut acc: HashMap<u128, Int> = HashMap::with_capacity(small.terms.len() * large.terms.len() / 2 + 4);
        for (ka, ca) in &small.terms {
            for (kb, cb) in &large.terms {
                let key = ka + kb;
                let prod = ca * cb;
                match acc.entry(key) {
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(prod);
                    }
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += prod;
                    }
                }
            }
        }
        collect(acc)
    }

    /// `self * a - other * b`, fused through one accumulator.
    pub fn cross_sub(&self, a: &ZPoly, other: &ZPoly, b: &ZPoly) -> ZPoly {
        let mut acc: HashMap<u128, Int> = HashMap::new();
        accumulate(&mut acc, self, a, false);
        accumulate(&mut acc, other, b, true);
        collect(acc)
    }

    /// Exact division; `None` when a remainder is left.
    pub fn div_exact(&self, d: &ZPoly) -> Option<ZPoly> {
        assert!(!d.is_zero(), "division by zero polynomial");
        if self.is_zero() {
            return Some(ZPoly::zero());
        }
        let (dk, dc) = d.terms.last().expect("nonzero divisor");
        let mut rem: BTreeMap<u128, Int> = self.terms.iter().cloned().collect();
        let mut quot: Vec<(u128, Int)> = Vec::new();
        while let Some((&rk, rc)) = rem.iter().next_back() {
            if !divides(*dk, rk) {
                return None;
            }
            let (qc, r) = num_integer::Integer::div_rem(rc, dc);
            if !r.is_zero() {
                return None;
            }
            let qk = rk - dk;
            rem.remove(&rk);
            for (tk, tc) in &d.terms[..d.terms.len() - 1] {
                let key = qk + tk;
                let sub = &qc * tc;
                match rem.entry(key) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(-sub);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() -= sub;
                        if e.get().is_zero() {
                            e.remove();
                        }
                    }
                }
            }
            quot.push((qk, qc));
        }
        quot.reverse();
        Some(ZPoly { terms: quot })
    }
}

fn accumulate(acc: &mut HashMap<u128, Int>, p: &ZPoly, q: &ZPoly, negate: bool) {
    for (ka, ca) in &p.terms {
        for (kb, cb) in &q.terms {
            let key = ka + kb;
            let mut prod = ca * cb;
            if negate {
                prod = -prod;
            }
            match acc.entry(key) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(prod);
                }
                std::collections::hash_map::Entry::Occupied(mut e) => {
                    *e.get_mut() += prod;
                }
            }
        }
    }
}

fn collect(acc: HashMap<u128, Int>) -> ZPoly {
    let mut terms: Vec<(u128, Int)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    terms.sort_unstable_by_key(|(k, _)| *k);
    ZPoly { terms }
}

/// Signs of the coefficients: (any positive, any negative).
pub(crate) fn sign_scan(p: &ZPoly) -> (bool, bool) {
    let mut pos = false;
    let mut neg = false;
    for (_, c) in &p.terms {
        if c.is_positive() {
            pos = true;
        } else {
            neg = true;
        }
    }
    (pos, neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::SymbolTable;

    fn rp(terms: &[(i64, &[u16])]) -> RatePoly {
        let mut out = RatePoly::zero(3);
        for (c, e) in terms {
            out.add_term(
                Monomial::from_exps(e.to_vec()),
                Rat::from_integer(Int::from(*c)),
            );
        }
        out
    }

    #[test]
    fn round_trip_and_mul() {
        let a = rp(&[(3, &[1, 0, 0]), (2, &[0, 1, 0])]);
        let b = rp(&[(1, &[1, 0, 0]), (-1, &[0, 0, 2])]);
        let za = ZPoly::from_rate_poly(&a);
        let zb = ZPoly::from_rate_poly(&b);
        assert_eq!(za.to_rate_poly(3), a);
        assert_eq!(za.mul(&zb).to_rate_poly(3), a.mul(&b));
        let _ = SymbolTable::new();
    }

    #[test]
    fn cross_sub_matches_definition() {
        let p = rp(&[(2, &[1, 0, 0])]);
        let a = rp(&[(1, &[0, 1, 0]), (1, &[0, 0, 1])]);
        let q = rp(&[(3, &[0, 1, 0])]);
        let b = rp(&[(1, &[1, 0, 0])]);
        let got = ZPoly::from_rate_poly(&p)
            .cross_sub(
                &ZPoly::from_rate_poly(&a),
                &ZPoly::from_rate_poly(&q),
                &ZPoly::from_rate_poly(&b),
            )
            .to_rate_poly(3);
        assert_eq!(got, p.mul(&a).sub(&q.mul(&b)));
    }

    #[test]
    fn exact_division() {
        let a = rp(&[(1, &[2, 0, 0]), (-1, &[0, 2, 0])]);
        let d = rp(&[(1, &[1, 0, 0]), (1, &[0, 1, 0])]);
        let za = ZPoly::from_rate_poly(&a);
        let zd = ZPoly::from_rate_poly(&d);
        let q = za.div_exact(&zd).unwrap();
        assert_eq!(q.mul(&zd), za);
        let bad = rp(&[(1, &[1, 0, 0]), (2, &[0, 1, 0])]);
        assert!(za.div_exact(&ZPoly::from_rate_poly(&bad)).is_none());
    }
}
