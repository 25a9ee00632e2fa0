//! Symbolic master-equation matrix on a component and its one-dimensional
//! polynomial kernel, the unnormalised stationary distribution as a function
//! of the rate symbols.
//!
//! Columns are indexed by source states: column j holds the intensities of
//! the jumps out of state j at the target rows, with the negated total
//! outflow on the diagonal, so every column sums to the zero polynomial.
//! The kernel is computed by fraction-free (Bareiss) elimination on the
//! column-augmented identity, then normalised to a primitive integer vector
//! with a positive sign. The normalisation absorbs pivot choices, so output
//! is bit-identical across elimination orders.



use num_traits::One;

use crate::network::ReactionNetwork;
use crate::poly::{
    poly_gcd_many, Homogeneity, Monomial, RateAssignment, RatePoly, SignSummary,
};
use crate::state::{IrreducibleComponent, State, TransitionEvent};
use crate::Rat;

/// The symbolic matrix of the master equation on an ordered state set.
#[derive(Clone, Debug)]
pub struct MasterMatrix {
    pub level: Option<u32>,
    pub states: Vec<State>,
    /// Row-major `m x m` polynomial entries.
    pub entries: Vec<Vec<RatePoly>>,
    nsyms: usize,
}

impl MasterMatrix {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn nsyms(&self) -> usize {
        self.nsyms
    }

    /// Exact matrix-vector product.
    pub fn apply(&self, v: &[RatePoly]) -> Vec<RatePoly> {
        self.entries
            .iter()
            .map(|row| {
                let mut acc = RatePoly::zero(self.nsyms);
                for (a, x) in row.iter().zip(v) {
                    if !a.is_zero() && !x.is_zero() {
                        acc = acc.add(&a.mul(x));
                    }
                }
                acc
            })
            .collect()
    }

    /// Column sums, identically zero for a well-formed master matrix.
    pub fn column_sums(&self) -> Vec<RatePoly> {
        let m = self.dim();
        let mut sums = vec![RatePoly::zero(self.nsyms); m];
        for row in &self.entries {
            for (s, e) in sums.iter_mut().zip(row) {
                *s = s.add(e);
            }
        }
        sums
    }
}

/// Build the master matrix from an ordered state list and its transitions.
pub fn master_matrix_on(
    net: &ReactionNetwork,
    level: Option<u32>,
    states: &[State],
    transitions: &[TransitionEvent],
) -> MasterMatrix {
    let m = states.len();
    let nsyms = net.symbols.len();
    let mut entries = vec![vec![RatePoly::zero(nsyms); m]; m];
    for e in transitions {
        let intensity = RatePoly::monomial(
            nsyms,
            Monomial::var(nsyms, net.reactions[e.reaction].rate),
            Rat::from_integer(e.coeff.into()),
        );
        entries[e.to][e.from] = entries[e.to][e.from].add(&intensity);
        entries[e.from][e.from] = entries[e.from][e.from].sub(&intensity);
    }
    MasterMatrix {
        level,
        states: states.to_vec(),
        entries,
        nsyms,
    }
}

/// Master matrix of a verified irreducible component.
pub fn master_matrix(net: &ReactionNetwork, comp: &IrreducibleComponent) -> MasterMatrix {
    master_matrix_on(net, comp.level, &comp.states, &comp.transitions)
}

/// The normalised polynomial kernel of a master matrix.
#[derive(Clone, Debug)]
pub struct KernelVector {
    pub level: Option<u32>,
    pub states: Vec<State>,
    pub entries: Vec<RatePoly>,
    /// Common homogeneous degree of the nonzero entries.
    pub degree: u32,
    /// Every entry is a nonzero all-positive polynomial; true exactly on
    /// verified irreducible components.
    pub strictly_positive: bool,
}

impl KernelVector {
    pub fn entry_for(&self, s: &State) -> Option<&RatePoly> {
        self.states.iter().position(|x| x == s).map(|i| &self.entries[i])
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum KernelError {
    #[error("master matrix has corank {corank}, expected 1: not an irreducible component")]
    RankDeficient { corank: usize },
    #[error("kernel entry has mixed coefficient signs after normalisation; construction bug")]
    MixedSigns,
    #[error("kernel entries are not homogeneous of one degree; construction bug")]
    Inhomogeneous,
    #[error("kernel has a zero entry but the component was verified irreducible")]
    ZeroEntryOnComponent,
    #[error("kernel does not annihilate the master matrix; construction bug")]
    NotInKernel,
}

/// Compute the kernel vector of a corank-one master matrix.
///
/// `require_strictly_positive` must be set when the matrix comes from a
/// verified irreducible component; the all-positive form then exists and any
/// zero entry is a hard error. Level simplices below the component range can
/// carry kernels supported on a boundary class; those pass with
/// `require_strictly_positive = false` and keep zero entries.
pub fn kernel_vector(
    m: &MasterMatrix,
    require_strictly_positive: bool,
) -> Result<KernelVector, KernelError> {
    kernel_vector_with_hint(m, require_strictly_positive, None)
}

/// [`kernel_vector`] with an optional candidate vector. A hint that passes
/// the exact annihilation check short-circuits the elimination; anything
/// else is discarded.
pub fn kernel_vector_with_hint(
    m: &MasterMatrix,
    require_strictly_positive: bool,
    hint: Option<Vec<RatePoly>>,
) -> Result<KernelVector, KernelError> {
    let dim = m.dim();
    let nsyms = m.nsyms;
    let trace = std::env::var("PRODFORM_TRACE").is_ok();
    if trace {
        eprintln!("kernel_vector: dim={dim} nsyms={nsyms}");
    }
    let hinted = hint.filter(|h| {
        h.len() == dim
            && h.iter().any(|p| !p.is_zero())
            && m.apply(h).iter().all(|p| p.is_zero())
    });
    // Small matrices go through fraction-free minor elimination; larger ones
    // through state elimination over reduced rational functions, whose
    // intermediates track the final kernel size instead of the minors.
    let raw = match hinted {
        Some(h) => h,
        None if dim > 10 => eliminate_states(m)?,
        None if nsyms <= crate::zpoly::MAX_SYMS && 2 * dim < 255 => eliminate_packed(m)?,
        None => eliminate_generic(m)?,
    };

    // Joint content out, then a global sign so all coefficients are positive.
    let refs: Vec<&RatePoly> = raw.iter().filter(|p| !p.is_zero()).collect();
    if refs.is_empty() {
        return Err(KernelError::RankDeficient { corank: 0 });
    }
    if std::env::var("PRODFORM_TRACE").is_ok() {
        eprintln!("raw entries: {:?}", raw.iter().map(|p| p.num_terms()).collect::<Vec<_>>());
    }
    let t_gcd = std::time::Instant::now();
    let g = poly_gcd_many(&refs);
    if std::env::var("PRODFORM_TRACE").is_ok() {
        eprintln!(
            "gcd of {} entries (terms {:?}) took {:?}",
            refs.len(),
            refs.iter().map(|p| p.num_terms()).collect::<Vec<_>>(),
            t_gcd.elapsed()
        );
    }
    let mut entries: Vec<RatePoly> = raw
        .iter()
        .map(|p| {
            if p.is_zero() {
                p.clone()
            } else {
                p.div_exact(&g).unwrap_or_else(|| {
                    eprintln!("GCD BUG: g = {g}");
                    eprintln!("entry = {p}");
                    panic!("joint gcd divides every entry");
                })
            }
        })
        .collect();
    // Joint rational content across the whole vector, so the final form is
    // an integer vector with coefficient gcd one.
    let joint = vector_content(&entries);
    if !joint.is_one() {
        let inv = joint.recip();
        entries = entries.iter().map(|e| e.scale(&inv)).collect();
    }
    let mut saw_positive = false;
    let mut saw_negative = false;
    for e in &entries {
        match e.sign_summary() {
            SignSummary::AllPositive => saw_positive = true,
            SignSummary::AllNegative => saw_negative = true,
            SignSummary::Zero => {}
            SignSummary::Mixed => return Err(KernelError::MixedSigns),
        }
    }
    if saw_positive && saw_negative {
        return Err(KernelError::MixedSigns);
    }
    if saw_negative {
        entries = entries.iter().map(|e| e.neg()).collect();
    }

    // Equal homogeneous degree across nonzero entries.
    let mut degree: Option<u32> = None;
    for e in &entries {
        match e.homogeneity() {
            Homogeneity::ZeroAny => {}
            Homogeneity::Degree(d) => match degree {
                None => degree = Some(d),
                Some(prev) if prev == d => {}
                Some(_) => return Err(KernelError::Inhomogeneous),
            },
            Homogeneity::Inhomogeneous => return Err(KernelError::Inhomogeneous),
        }
    }

    let strictly_positive = entries.iter().all(|e| !e.is_zero());
    if require_strictly_positive && !strictly_positive {
        return Err(KernelError::ZeroEntryOnComponent);
    }

    // The strongest cheap tripwire in the pipeline: A . h = 0, exactly.
    if m.apply(&entries).iter().any(|p| !p.is_zero()) {
        return Err(KernelError::NotInKernel);
    }

    Ok(KernelVector {
        level: m.level,
        states: m.states.clone(),
        entries,
        degree: degree.unwrap_or(0),
        strictly_positive,
    })
}

/// Candidate kernel for level `l` assembled from the two kernels below it.
///
/// When the stationary family is of product form, the value at a non-corner
/// state `y` with `1 <= y_k <= l-1` is proportional, with one constant for
/// the whole level, to
/// `h_{l-1}(y - e_k) * h_{l-1}(v + e_k) / h_{l-2}(v)` for any `v` in the
/// level `l-2` simplex with `v_k = y_k - 1`. Corner values are then pinned
/// by their own balance row. The result is only a candidate: the caller
/// certifies it with the exact `A h = 0` check and falls back to direct
/// elimination when it fails, so a wrong guess costs time, never
/// correctness.
pub fn product_form_hint(
    m: &MasterMatrix,
    below: &KernelVector,
    below2: &KernelVector,
) -> Option<Vec<RatePoly>> {
    use crate::gth::{Den, Frac};
    let nsyms = m.nsyms;
    let n = m.states.first()?.dim();
    let level = m.level?;
    if below.level != Some(level - 1)
        || below2.level != Some(level - 2)
        || !below.strictly_positive
        || !below2.strictly_positive
    {
        return None;
    }
    // Precompute the cross-level ratios h_{l-1}(v + e_k) / h_{l-2}(v) in
    // lowest terms, one per (species, count) pair; under product form they
    // collapse to small rational functions shared across the level.
    let mut ratios: Vec<Vec<Option<Frac>>> = vec![vec![None; level as usize]; n];
    for (k, row) in ratios.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate().take((level - 1) as usize) {
            let b = (0..n).find(|&i| i != k).expect("two species at least");
            let mut v = vec![0u32; n];
            v[k] = c as u32;
            v[b] += level - 2 - c as u32;
            let mut v_up = v.clone();
            v_up[k] += 1;
            let h_vup = below.entry_for(&State(v_up))?;
            let h_v = below2.entry_for(&State(v))?;
            let t0 = std::time::Instant::now();
            let g = crate::poly::poly_gcd(h_vup, h_v);
            if std::env::var("PRODFORM_TRACE").is_ok() {
                eprintln!(
                    "hint ratio k={k} c={c}: gcd({}, {}) -> {} terms in {:?}",
                    h_vup.num_terms(),
                    h_v.num_terms(),
                    g.num_terms(),
                    t0.elapsed()
                );
            }
            let num = h_vup.div_exact(&g).expect("gcd divides");
            let den = h_v.div_exact(&g).expect("gcd divides");
            let mut frac = Frac::from_poly(num);
            frac = frac.div(&Frac::from_poly(den));
            *slot = Some(frac);
        }
    }
    let mut values: Vec<Option<Frac>> = vec![None; m.dim()];
    let mut corners: Vec<usize> = Vec::new();
    for (idx, y) in m.states.iter().enumerate() {
        // Last coordinate with 1 <= y_k <= level-1.
        let Some(k) = (0..n)
            .rev()
            .find(|&k| y.0[k] >= 1 && y.0[k] <= level - 1)
        else {
            corners.push(idx);
            continue;
        };
        let mut x = y.0.clone();
        x[k] -= 1;
        let c = (y.0[k] - 1) as usize;
        let h_x = below.entry_for(&State(x))?;
        let ratio = ratios[k][c].as_ref()?;
        values[idx] = Some(ratio.mul(&Frac::from_poly(h_x.clone())));
    }
    let trace = std::env::var("PRODFORM_TRACE").is_ok();
    if trace {
        eprintln!("hint: non-corner values assembled");
    }
    // Corner balance: outflow * h(corner) = sum of inflows.
    for &c in &corners {
        let mut acc = Frac::zero(nsyms);
        for j in 0..m.dim() {
            if j == c || m.entries[c][j].is_zero() {
                continue;
            }
            let neighbor = values[j].as_ref()?.clone();
            acc = acc.add(&neighbor.mul(&Frac::from_poly(m.entries[c][j].clone())));
        }
        let outflow = m.entries[c][c].neg();
        if outflow.is_zero() {
            return None;
        }
        values[c] = Some(acc.div(&Frac::from_poly(outflow)));
    }
    if trace {
        eprintln!("hint: corners assembled");
    }
    // Clear denominators with the factored least common multiple, then strip
    // factors common to the whole vector. Bulk products and divisions run on
    // packed integer polynomials.
    let values: Vec<Frac> = values.into_iter().collect::<Option<Vec<_>>>()?;
    let mut lcm = Den::one();
    for f in &values {
        lcm = lcm.lcm(&f.den);
    }
    if nsyms > crate::zpoly::MAX_SYMS {
        return None;
    }
    use crate::zpoly::ZPoly;
    // Uniform integer scale so every numerator has integer coefficients.
    let mut denom_lcm = crate::Int::from(1u32);
    for f in &values {
        for (_, c) in f.num.terms() {
            denom_lcm = num_integer::Integer::lcm(&denom_lcm, c.denom());
        }
    }
    let scale = Rat::from_integer(denom_lcm);
    let lcm_exp = ZPoly::from_rate_poly(&lcm.expand(nsyms));
    let mut cleared: Vec<ZPoly> = Vec::with_capacity(values.len());
    for f in &values {
        let den_exp = ZPoly::from_rate_poly(&f.den.expand(nsyms));
        let comp = lcm_exp.div_exact(&den_exp).expect("denominator divides the lcm");
        let num = ZPoly::from_rate_poly(&f.num.scale(&scale));
        cleared.push(num.mul(&comp));
    }
    if trace {
        eprintln!(
            "hint: cleared, entry terms {:?}",
            cleared.iter().map(|e| e.num_terms()).max()
        );
    }
    for (factor, _) in lcm.factors() {
        let zf = ZPoly::from_rate_poly(factor);
        loop {
            let divided: Option<Vec<ZPoly>> = cleared.iter().map(|e| e.div_exact(&zf)).collect();
            match divided {
                Some(d) => cleared = d,
                None => break,
            }
        }
    }
    if trace {
        eprintln!(
            "hint: stripped, entry terms {:?}",
            cleared.iter().map(|e| e.num_terms()).max()
        );
    }
    Some(cleared.iter().map(|z| z.to_rate_poly(nsyms)).collect())
}

/// Kernel through state elimination on the transition digraph read off the
/// matrix: off-diagonal entry `(r, c)` is the total intensity of the jump
/// `c -> r`. The unique closed class carries the stationary vector; states
/// outside it get exact zeros. More than one closed class is a rank error.
fn eliminate_states(m: &MasterMatrix) -> Result<Vec<RatePoly>, KernelError> {
    let dim = m.dim();
    let mut edges: Vec<(usize, usize, RatePoly)> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for (r, row) in m.entries.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            if r != c && !e.is_zero() {
                edges.push((c, r, e.clone()));
                adj[c].push(r);
            }
        }
    }
    let sccs = crate::structure::tarjan_sccs(&adj);
    let mut scc_of = vec![usize::MAX; dim];
    for (k, scc) in sccs.iter().enumerate() {
        for &v in scc {
            scc_of[v] = k;
        }
    }
    let closed: Vec<&Vec<usize>> = sccs
        .iter()
        .filter(|scc| {
            !scc.iter()
                .any(|&v| adj[v].iter().any(|&w| scc_of[w] != scc_of[v]))
        })
        .collect();
    if closed.len() != 1 {
        return Err(KernelError::RankDeficient { corank: closed.len() });
    }
    Ok(crate::gth::stationary_by_elimination(
        m.nsyms,
        dim,
        &edges,
        closed[0],
    ))
}

/// Column echelon on `[A over I]` with packed integer polynomials; returns
/// the surviving column's identity part.
fn eliminate_packed(m: &MasterMatrix) -> Result<Vec<RatePoly>, KernelError> {
    use crate::zpoly::ZPoly;
    let dim = m.dim();
    let nsyms = m.nsyms;
    let mut cols: Vec<Vec<ZPoly>> = (0..dim)
        .map(|c| {
            let mut col: Vec<ZPoly> = (0..dim)
                .map(|r| ZPoly::from_rate_poly(&m.entries[r][c]))
                .collect();
            col.extend((0..dim).map(|r| if r == c { ZPoly::one() } else { ZPoly::zero() }));
            col
        })
        .collect();
    let mut active: Vec<usize> = (0..dim).collect();
    let mut prev_pivot = ZPoly::one();
    let first = ZPoly::one();

    for row in 0..dim {
        let pivot_pos = active
            .iter()
            .enumerate()
            .filter(|(_, &c)| !cols[c][row].is_zero())
            .min_by_key(|(_, &c)| (cols[c][row].num_terms(), c))
            .map(|(pos, _)| pos);
        let Some(pos) = pivot_pos else {
            continue;
        };
        let pivot_col = active.remove(pos);
        let pivot_val = cols[pivot_col][row].clone();
        let skip_div = prev_pivot == first;
        for &c in &active {
            let factor = cols[c][row].clone();
            for i in 0..2 * dim {
                let a = &cols[c][i];
                let b = &cols[pivot_col][i];
                if a.is_zero() && (factor.is_zero() || b.is_zero()) {
                    continue;
                }
                // Bareiss one-step: (pivot*a - factor*b) / previous pivot,
                // applied to untouched columns too so divisions stay exact.
                let combined = if factor.is_zero() || b.is_zero() {
                    a.mul(&pivot_val)
                } else {
                    a.cross_sub(&pivot_val, b, &factor)
                };
                cols[c][i] = if skip_div || combined.is_zero() {
                    combined
                } else {
                    combined
                        .div_exact(&prev_pivot)
                        .expect("Bareiss division is exact")
                };
            }
        }
        prev_pivot = pivot_val;
    }

    if active.len() != 1 {
        return Err(KernelError::RankDeficient { corank: active.len() });
    }
    let kernel_col = active[0];
    Ok(cols[kernel_col][dim..]
        .iter()
        .map(|z| z.to_rate_poly(nsyms))
        .collect())
}

/// Generic-representation fallback of [`eliminate_packed`] for symbol counts
/// beyond the packing width.
fn eliminate_generic(m: &MasterMatrix) -> Result<Vec<RatePoly>, KernelError> {
    let dim = m.dim();
    let nsyms = m.nsyms;
    let mut cols: Vec<Vec<RatePoly>> = (0..dim)
        .map(|c| {
            let mut col: Vec<RatePoly> = (0..dim).map(|r| m.entries[r][c].clone()).collect();
            col.extend((0..dim).map(|r| {
                if r == c {
                    RatePoly::one(nsyms)
                } else {
                    RatePoly::zero(nsyms)
                }
            }));
            col
        })
        .collect();
    let mut active: Vec<usize> = (0..dim).collect();
    let mut prev_pivot = RatePoly::one(nsyms);

    for row in 0..dim {
        let pivot_pos = active
            .iter()
            .enumerate()
            .filter(|(_, &c)| !cols[c][row].is_zero())
            .min_by_key(|(_, &c)| (cols[c][row].num_terms(), c))
            .map(|(pos, _)| pos);
        let Some(pos) = pivot_pos else {
            continue;
        };
        let pivot_col = active.remove(pos);
        let pivot_val = cols[pivot_col][row].clone();
        for &c in &active {
            let factor = cols[c][row].clone();
            for i in 0..2 * dim {
                let a = &cols[c][i];
                let b = &cols[pivot_col][i];
                if a.is_zero() && (factor.is_zero() || b.is_zero()) {
                    continue;
                }
                let combined = if factor.is_zero() || b.is_zero() {
                    a.mul(&pivot_val)
                } else {
                    a.mul(&pivot_val).sub(&b.mul(&factor))
                };
                cols[c][i] = if combined.is_zero() {
                    combined
                } else {
                    combined
                        .div_exact(&prev_pivot)
                        .expect("Bareiss division is exact")
                };
            }
        }
        prev_pivot = pivot_val;
    }

    if active.len() != 1 {
        return Err(KernelError::RankDeficient { corank: active.len() });
    }
    let kernel_col = active[0];
    Ok(cols[kernel_col][dim..].to_vec())
}

/// Positive rational `c` with all coefficients of `entries / c` integer and
/// jointly coprime.
fn vector_content(entries: &[RatePoly]) -> Rat {
    use num_integer::Integer;
    use num_traits::{One, Signed, Zero};
    let mut num_gcd = crate::Int::zero();
    let mut den_lcm = crate::Int::from(1);
    for e in entries {
        for (_, c) in e.terms() {
            num_gcd = num_gcd.gcd(&c.numer().abs());
            den_lcm = den_lcm.lcm(c.denom());
        }
    }
    if num_gcd.is_zero() {
        Rat::one()
    } else {
        Rat::new(num_gcd, den_lcm)
    }
}

/// Evaluate a kernel at positive rates and normalise to a probability
/// vector of exact rationals.
pub fn stationary_eval(k: &KernelVector, a: &RateAssignment) -> Vec<Rat> {
    let values: Vec<Rat> = k.entries.iter().map(|e| e.evaluate(a.values())).collect();
    let total: Rat = values.iter().cloned().sum();
    assert!(
        !num_traits::Zero::is_zero(&total),
        "kernel evaluation cannot vanish at positive rates"
    );
    let inv = total.recip();
    values.into_iter().map(|v| v * &inv).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_network, NetworkSource};
    use crate::state::{analyze_level, enumerate_component};
    use crate::{Int, Rat};

    fn nw1() -> ReactionNetwork {
        parse_network(&NetworkSource::inline(
            "S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]",
        ))
        .unwrap()
    }

    /// Polynomial from (coefficient, beta-exponent, alpha-exponent) triples
    /// in the declaration order of `nw1` (beta first).
    fn p(terms: &[(i64, u16, u16)]) -> RatePoly {
        let mut out = RatePoly::zero(2);
        for &(c, eb, ea) in terms {
            out.add_term(
                Monomial::from_exps(vec![eb, ea]),
                Rat::from_integer(Int::from(c)),
            );
        }
        out
    }

    fn level_matrix(net: &ReactionNetwork, level: u32) -> MasterMatrix {
        let a = analyze_level(net, level).unwrap();
        master_matrix_on(net, Some(level), &a.states, &a.transitions)
    }

    #[test]
    fn master_matrix_level_two_matches_worked_example() {
        let net = nw1();
        let m = level_matrix(&net, 2);
        // [[-2b, 0, 2a], [2b, -b, 0], [0, b, -2a]] in state order (2,0),(1,1),(0,2).
        let expect = [
            [p(&[(-2, 1, 0)]), p(&[]), p(&[(2, 0, 1)])],
            [p(&[(2, 1, 0)]), p(&[(-1, 1, 0)]), p(&[])],
            [p(&[]), p(&[(1, 1, 0)]), p(&[(-2, 0, 1)])],
        ];
        for (r, row) in expect.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                assert_eq!(&m.entries[r][c], e, "entry ({r},{c})");
            }
        }
        assert!(m.column_sums().iter().all(|s| s.is_zero()));
    }

    #[test]
    fn master_matrix_level_three_matches_worked_example() {
        let net = nw1();
        let m = level_matrix(&net, 3);
        let expect = [
            [p(&[(-3, 1, 0)]), p(&[]), p(&[(2, 0, 1)]), p(&[])],
            [p(&[(3, 1, 0)]), p(&[(-2, 1, 0)]), p(&[]), p(&[(6, 0, 1)])],
            [p(&[]), p(&[(2, 1, 0)]), p(&[(-1, 1, 0), (-2, 0, 1)]), p(&[])],
            [p(&[]), p(&[]), p(&[(1, 1, 0)]), p(&[(-6, 0, 1)])],
        ];
        for (r, row) in expect.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                assert_eq!(&m.entries[r][c], e, "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn master_matrix_level_four_has_corrected_corner() {
        let net = nw1();
        let m = level_matrix(&net, 4);
        // Mass action at (0,4) gives outflow 12*alpha, not 12*beta as
        // misprinted in the source example; the published kernel only solves
        // the corrected matrix.
        assert_eq!(m.entries[4][4], p(&[(-12, 0, 1)]));
        assert_eq!(m.entries[2][4], p(&[(12, 0, 1)]));
        assert!(m.column_sums().iter().all(|s| s.is_zero()));
    }

    fn level_kernel(net: &ReactionNetwork, level: u32) -> KernelVector {
        let comp = analyze_level(net, level)
            .unwrap()
            .as_component(net)
            .expect("level is one component");
        kernel_vector(&master_matrix(net, &comp), true).unwrap()
    }

    #[test]
    fn kernels_match_worked_examples() {
        let net = nw1();
        let k2 = level_kernel(&net, 2);
        assert_eq!(
            k2.entries,
            vec![p(&[(1, 0, 1)]), p(&[(2, 0, 1)]), p(&[(1, 1, 0)])]
        );
        assert_eq!(k2.degree, 1);

        let k3 = level_kernel(&net, 3);
        assert_eq!(
            k3.entries,
            vec![
                p(&[(4, 0, 2)]),
                p(&[(6, 0, 2), (3, 1, 1)]),
                p(&[(6, 1, 1)]),
                p(&[(1, 2, 0)]),
            ]
        );

        let k4 = level_kernel(&net, 4);
        assert_eq!(
            k4.entries,
            vec![
                p(&[(18, 0, 3), (3, 1, 2)]),
                p(&[(24, 0, 3), (28, 1, 2)]),
                p(&[(36, 1, 2), (6, 2, 1)]),
                p(&[(12, 2, 1)]),
                p(&[(1, 3, 0)]),
            ]
        );
        assert_eq!(k4.degree, 3);
    }

    #[test]
    fn stationary_eval_examples() {
        let net = nw1();
        let k2 = level_kernel(&net, 2);
        // beta=2, alpha=1 in declaration order (beta, alpha).
        let a = RateAssignment::new(vec![
            Rat::from_integer(Int::from(2)),
            Rat::from_integer(Int::from(1)),
        ])
        .unwrap();
        let pi = stationary_eval(&k2, &a);
        let fifth = Rat::new(Int::from(1), Int::from(5));
        assert_eq!(
            pi,
            vec![fifth.clone(), &fifth * Rat::from_integer(Int::from(2)), &fifth * Rat::from_integer(Int::from(2))]
        );

        let k3 = level_kernel(&net, 3);
        let ones = RateAssignment::ones(2);
        let pi = stationary_eval(&k3, &ones);
        let expect: Vec<Rat> = [(4, 20), (9, 20), (6, 20), (1, 20)]
            .iter()
            .map(|&(n, d)| Rat::new(Int::from(n), Int::from(d)))
            .collect();
        assert_eq!(pi, expect);

        // Scaling all rates leaves the distribution unchanged (homogeneity).
        let scaled = RateAssignment::new(vec![
            Rat::from_integer(Int::from(3)),
            Rat::from_integer(Int::from(3)),
        ])
        .unwrap();
        assert_eq!(stationary_eval(&k3, &scaled), stationary_eval(&k3, &ones));
    }

    #[test]
    fn single_state_component_has_unit_kernel() {
        let net = nw1();
        let comp = enumerate_component(&net, &State(vec![0, 1]))
            .unwrap()
            .unwrap();
        let m = master_matrix(&net, &comp);
        assert_eq!(m.dim(), 1);
        assert!(m.entries[0][0].is_zero());
        let k = kernel_vector(&m, true).unwrap();
        assert_eq!(k.entries, vec![RatePoly::one(2)]);
    }

    #[test]
    fn boundary_supported_kernel_below_component_range() {
        // Level 1 of the autocatalytic example: (1,0) is transient, so the
        // kernel is (0, 1) and only passes without the positivity demand.
        let net = nw1();
        let m = level_matrix(&net, 1);
        assert!(matches!(
            kernel_vector(&m, true),
            Err(KernelError::ZeroEntryOnComponent)
        ));
        let k = kernel_vector(&m, false).unwrap();
        assert!(k.entries[0].is_zero());
        assert_eq!(k.entries[1], RatePoly::one(2));
        assert!(!k.strictly_positive);
    }

    #[test]
    fn rank_deficient_matrix_is_rejected() {
        // Level 1 of a purely bimolecular network: no reactions fire, two
        // absorbing singletons, corank 2.
        let net = parse_network(&NetworkSource::inline(
            "2 S1 -> S1 + S2 [l3]; 2 S1 <-> 2 S2 [l1, l2]",
        ))
        .unwrap();
        let a = analyze_level(&net, 1).unwrap();
        let m = master_matrix_on(&net, Some(1), &a.states, &a.transitions);
        assert!(matches!(
            kernel_vector(&m, false),
            Err(KernelError::RankDeficient { corank: 2 })
        ));
    }
}
