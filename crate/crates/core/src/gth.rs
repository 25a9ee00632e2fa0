//! State-elimination computation of the symbolic stationary vector over
//! rational functions with factored denominators.
//!
//! Fraction-free minor arithmetic grows intermediate entries far beyond the
//! final kernel (the cofactor vector carries a huge common factor), so for
//! larger components the kernel is computed GTH-style instead: eliminate one
//! state at a time, folding its throughput into the remaining edge weights,
//! then lift the stationary values back in reverse. No subtraction ever
//! occurs, and every denominator is kept as a multiset of previously seen
//! polynomial factors, so cancellation is a cheap exact-division trial
//! rather than a multivariate GCD.

use std::collections::BTreeMap;

use num_traits::One;

use crate::poly::{unit_normalize, RatePoly};
use crate::Rat;

/// Multiset of unit-normalised non-constant polynomial factors.
#[derive(Clone, Debug, Default)]
pub(crate) struct Den {
    factors: BTreeMap<RatePoly, u32>,
}

impl Den {
    pub(crate) fn one() -> Self {
        Self::default()
    }

    pub(crate) fn push(&mut self, f: RatePoly, times: u32) {
        if times > 0 {
            *self.factors.entry(f).or_insert(0) += times;
        }
    }

    /// Factor-wise maximum.
    pub(crate) fn lcm(&self, other: &Den) -> Den {
        let mut out = self.clone();
        for (f, &m) in &other.factors {
            let e = out.factors.entry(f.clone()).or_insert(0);
            *e = (*e).max(m);
        }
        out
    }

    /// Product of `self`'s factors beyond `smaller`'s multiplicities.
    pub(crate) fn complement(&self, smaller: &Den, nsyms: usize) -> RatePoly {
        let mut out = RatePoly::one(nsyms);
        for (f, &m) in &self.factors {
            let base = smaller.factors.get(f).copied().unwrap_or(0);
            for _ in base..m {
                out = out.mul(f);
            }
        }
        out
    }

    pub(crate) fn expand(&self, nsyms: usize) -> RatePoly {
        self.complement(&Den::one(), nsyms)
    }

    pub(crate) fn factors(&self) -> impl Iterator<Item = (&RatePoly, &u32)> {
        self.factors.iter()
    }
}

/// Positive rational function `num / prod(den)`; the numerator carries the
/// rational scale, the denominator factors are unit-normalised.
#[derive(Clone, Debug)]
pub(crate) struct Frac {
    pub(crate) num: RatePoly,
    pub(crate) den: Den,
}

impl Frac {
    pub(crate) fn zero(nsyms: usize) -> Self {
        Frac { num: RatePoly::zero(nsyms), den: Den::one() }
    }

    pub(crate) fn from_poly(p: RatePoly) -> Self {
        Frac { num: p, den: Den::one() }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Cancel denominator factors that divide the numerator exactly.
    pub(crate) fn cancel(&mut self) {
        if self.num.is_zero() {
            self.den = Den::one();
            return;
        }
        let mut kept = BTreeMap::new();
        for (f, &mult) in &self.den.factors {
            let mut remaining = mult;
            while remaining > 0 {
                match self.num.div_exact(f) {
                    Some(q) => {
                        self.num = q;
                        remaining -= 1;
                    }
                    None => break,
                }
            }
            if remaining > 0 {
                kept.insert(f.clone(), remaining);
            }
        }
        self.den.factors = kept;
    }

    pub(crate) fn mul(&self, other: &Frac) -> Frac {
        if self.is_zero() || other.is_zero() {
            return Frac::zero(self.num.nsyms());
        }
        let mut out = Frac {
            num: self.num.mul(&other.num),
            den: {
                let mut d = self.den.clone();
                for (f, &m) in &other.den.factors {
                    d.push(f.clone(), m);
                }
                d
            },
        };
        out.cancel();
        out
    }

    pub(crate) fn div(&self, other: &Frac) -> Frac {
        assert!(!other.is_zero(), "division by zero rational function");
        if self.is_zero() {
            return Frac::zero(self.num.nsyms());
        }
        // Reciprocal: the divisor's numerator becomes a denominator factor,
        // its rational content folds into the scale.
        let unit = unit_normalize(&other.num);
        let scale = {
            let lead = other.num.leading_term().map(|(_, c)| c.clone()).unwrap();
            let unit_lead = unit.leading_term().map(|(_, c)| c.clone()).unwrap();
            unit_lead / lead
        };
        let mut num = self.num.mul(&other.den.expand(self.num.nsyms()));
        num = num.scale(&scale);
        let mut den = self.den.clone();
        if !unit.is_one() {
            den.push(unit, 1);
        }
        let mut out = Frac { num, den };
        out.cancel();
        out
    }

    pub(crate) fn add(&self, other: &Frac) -> Frac {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let nsyms = self.num.nsyms();
        let union = self.den.lcm(&other.den);
        let a = self.num.mul(&union.complement(&self.den, nsyms));
        let b = other.num.mul(&union.complement(&other.den, nsyms));
        let mut out = Frac { num: a.add(&b), den: union };
        out.cancel();
        out
    }
}

/// Unnormalised symbolic stationary vector on a state set whose unique
/// closed class is `class` (state indices), computed by state elimination
/// on the class and exact zeros elsewhere. The caller normalises.
pub(crate) fn stationary_by_elimination(
    nsyms: usize,
    nstates: usize,
    edges: &[(usize, usize, RatePoly)],
    class: &[usize],
) -> Vec<RatePoly> {
    let zero = RatePoly::zero(nsyms);
    if class.len() == 1 {
        let mut out = vec![zero; nstates];
        out[class[0]] = RatePoly::one(nsyms);
        return out;
    }
    // Dense index inside the class.
    let mut inside = vec![usize::MAX; nstates];
    for (i, &s) in class.iter().enumerate() {
        inside[s] = i;
    }
    let m = class.len();
    // Sparse weights w[i][j], both endpoints inside the class.
    let mut out_edges: Vec<BTreeMap<usize, Frac>> = vec![BTreeMap::new(); m];
    for (from, to, w) in edges {
        let (fi, ti) = (inside[*from], inside[*to]);
        if fi == usize::MAX || ti == usize::MAX {
            continue;
        }
        let entry = out_edges[fi]
            .entry(ti)
            .or_insert_with(|| Frac::zero(nsyms));
        *entry = entry.add(&Frac::from_poly(w.clone()));
    }
    let mut in_edges: Vec<BTreeMap<usize, ()>> = vec![BTreeMap::new(); m];
    for (i, edges) in out_edges.iter().enumerate() {
        for (&j, _) in edges {
            in_edges[j].insert(i, ());
        }
    }

    // Eliminate all states but one, smallest fill first.
    let mut alive: Vec<bool> = vec![true; m];
    let mut order: Vec<usize> = Vec::with_capacity(m - 1);
    let mut saved: Vec<(Vec<(usize, Frac)>, Frac)> = Vec::with_capacity(m - 1);
    for _ in 0..m - 1 {
        let s = (0..m)
            .filter(|&i| alive[i])
            .min_by_key(|&i| {
                let din = in_edges[i].keys().filter(|&&j| alive[j] && j != i).count();
                let dout = out_edges[i].keys().filter(|&&j| alive[j] && j != i).count();
                (din * dout, i)
            })
            .expect("states remain");
        // Total outflow of s to live states.
        let mut total = Frac::zero(nsyms);
        let outs: Vec<(usize, Frac)> = out_edges[s]
            .iter()
            .filter(|(&j, _)| alive[j] && j != s)
            .map(|(&j, w)| (j, w.clone()))
            .collect();
        for (_, w) in &outs {
            total = total.add(w);
        }
        assert!(!total.is_zero(), "closed class state has outgoing flow");
        let ins: Vec<(usize, Frac)> = in_edges[s]
            .keys()
            .filter(|&&i| alive[i] && i != s)
            .map(|&i| (i, out_edges[i].get(&s).cloned().expect("edge recorded")))
            .collect();
        if std::env::var("PRODFORM_TRACE").is_ok() {
            eprintln!(
                "eliminating state {s}: total num {} terms / {} den factors, {} ins x {} outs",
                total.num.num_terms(),
                total.den.factors.len(),
                ins.len(),
                outs.len()
            );
        }
        // Fold s's throughput into the surviving edges.
        for (i, wi) in &ins {
            let through = wi.div(&total);
            for (j, wj) in &outs {
                if i == j {
                    continue; // re-entrant flow drops out of the balance
                }
                let add = through.mul(wj);
                let entry = out_edges[*i]
                    .entry(*j)
                    .or_insert_with(|| Frac::zero(nsyms));
                *entry = entry.add(&add);
                in_edges[*j].insert(*i, ());
            }
        }
        alive[s] = false;
        order.push(s);
        saved.push((ins, total));
        if std::env::var("PRODFORM_TRACE").is_ok() {
            let biggest = out_edges
                .iter()
                .enumerate()
                .filter(|(i, _)| alive[*i])
                .flat_map(|(_, es)| es.values())
                .map(|f| (f.num.num_terms(), f.den.factors.len()))
                .max()
                .unwrap_or((0, 0));
            eprintln!(
                "eliminated {} of {m}: biggest live edge num {} terms, {} den factors",
                order.len(),
                biggest.0,
                biggest.1
            );
        }
    }

    // Lift: the surviving state anchors the vector at one; eliminated states
    // come back in reverse order.
    let anchor = (0..m).find(|&i| alive[i]).expect("one state survives");
    let mut pi: Vec<Option<Frac>> = vec![None; m];
    pi[anchor] = Some(Frac::from_poly(RatePoly::one(nsyms)));
    for (&s, (ins, total)) in order.iter().zip(&saved).rev() {
        let mut acc = Frac::zero(nsyms);
        for (i, w) in ins {
            let contrib = pi[*i]
                .as_ref()
                .expect("lift order restores dependencies first")
                .mul(w);
            acc = acc.add(&contrib);
        }
        pi[s] = Some(acc.div(total));
    }

    // Clear denominators by the factor-wise least common multiple.
    let mut lcm = Den::one();
    for p in pi.iter().flatten() {
        lcm = lcm.lcm(&p.den);
    }
    let mut out = vec![RatePoly::zero(nsyms); nstates];
    for (i, &s) in class.iter().enumerate() {
        let p = pi[i].as_ref().unwrap();
        out[s] = p.num.mul(&lcm.complement(&p.den, nsyms));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_network, NetworkSource};
    use crate::state::analyze_level;
    use num_traits::Zero;

    #[test]
    fn elimination_matches_bareiss_on_the_worked_example() {
        let net = parse_network(&NetworkSource::inline(
            "S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]",
        ))
        .unwrap();
        for level in 2..=4 {
            let a = analyze_level(&net, level).unwrap();
            let class: Vec<usize> = (0..a.states.len())
                .filter(|i| !a.transient.contains(i))
                .collect();
            let m0 = crate::kernel::master_matrix_on(&net, Some(level), &a.states, &a.transitions);
            let mut edges = Vec::new();
            for (r, row) in m0.entries.iter().enumerate() {
                for (c, e) in row.iter().enumerate() {
                    if r != c && !e.is_zero() {
                        edges.push((c, r, e.clone()));
                    }
                }
            }
            let raw =
                stationary_by_elimination(net.symbols.len(), a.states.len(), &edges, &class);
            // The lifted vector is in the kernel of the master matrix.
            let image = m0.apply(&raw);
            assert!(image.iter().all(|p| p.is_zero()), "level {level}");
            assert!(!raw.iter().all(|p| p.is_zero()));
        }
    }

    #[test]
    fn frac_algebra_basics() {
        let x = RatePoly::var(2, 0);
        let y = RatePoly::var(2, 1);
        let sum = x.add(&y);
        // x/(x+y) + y/(x+y) = 1
        let a = Frac::from_poly(x.clone()).div(&Frac::from_poly(sum.clone()));
        let b = Frac::from_poly(y.clone()).div(&Frac::from_poly(sum.clone()));
        let one = a.add(&b);
        assert_eq!(one.num, RatePoly::one(2));
        assert!(one.den.factors.is_empty());
        // (x^2 - y^2)/(x+y) cancels to x - y.
        let num = x.mul(&x).sub(&y.mul(&y));
        let mut f = Frac { num, den: Den::one() };
        f.den.push(unit_normalize(&sum), 1);
        f.cancel();
        assert_eq!(f.num, x.sub(&y));
        assert!(f.den.factors.is_empty());
        assert!(Frac::zero(2).num.is_zero());
    }
}
