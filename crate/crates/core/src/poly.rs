//! Exact multivariate polynomial arithmetic in the rate symbols.
//!
//! Coefficients are arbitrary-precision rationals; monomials are ordered
//! graded-lexicographically in rate-symbol declaration order. Everything in
//! the symbolic pipeline (master matrices, kernels, ideal generators) is a
//! [`RatePoly`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::{Int, Rat};

/// Interned rate-symbol names; the index of a name is its coordinate in
/// every [`Monomial`] exponent vector. Declaration order fixes the term
/// order, so two runs over the same network produce identical output.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self { names: Vec::new() }
    }

    /// Intern a name, returning its index. Re-interning is an error upstream
    /// (each reaction must carry a fresh symbol), so this always appends.
    pub fn intern(&mut self, name: &str) -> usize {
        self.names.push(name.to_string());
        self.names.len() - 1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Exponent vector over the full symbol table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<u16>,
}

impl Monomial {
    pub fn one(nsyms: usize) -> Self {
        Self {
            exps: vec![0; nsyms],
        }
    }

    pub fn var(nsyms: usize, id: usize) -> Self {
        let mut exps = vec![0; nsyms];
        exps[id] = 1;
        Self { exps }
    }

    pub fn from_exps(exps: Vec<u16>) -> Self {
        Self { exps }
    }

    pub fn exps(&self) -> &[u16] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| e as u32).sum()
    }

    pub fn degree_in(&self, var: usize) -> u16 {
        self.exps[var]
    }

    pub fn is_one(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }

    /// `other / self`; caller guarantees divisibility.
    pub fn div_into(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: other
                .exps
                .iter()
                .zip(&self.exps)
                .map(|(b, a)| b - a)
                .collect(),
        }
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| *a.min(b))
                .collect(),
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: total degree first, ties broken lexicographically
    /// with earlier-declared symbols weighing more.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.exps.cmp(&other.exps))
    }
}

/// Homogeneity verdict for a polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Homogeneity {
    /// The zero polynomial is homogeneous of every degree.
    ZeroAny,
    Degree(u32),
    Inhomogeneous,
}

/// Coefficient sign classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSummary {
    Zero,
    AllPositive,
    AllNegative,
    Mixed,
}

/// Multivariate polynomial over the rationals in the rate symbols.
///
/// No zero coefficients are stored and the term map is ordered, so structural
/// equality is polynomial equality and the derived order is a deterministic
/// (if arbitrary) total order, used for canonical deduplication.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RatePoly {
    nsyms: usize,
    terms: BTreeMap<Monomial, Rat>,
}

impl RatePoly {
    pub fn zero(nsyms: usize) -> Self {
        Self {
            nsyms,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nsyms: usize, c: Rat) -> Self {
        let mut p = Self::zero(nsyms);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(nsyms), c);
        }
        p
    }

    pub fn one(nsyms: usize) -> Self {
        Self::constant(nsyms, Rat::one())
    }

    /// The symbol `id` as a polynomial.
    pub fn var(nsyms: usize, id: usize) -> Self {
        Self::monomial(nsyms, Monomial::var(nsyms, id), Rat::one())
    }

    pub fn monomial(nsyms: usize, m: Monomial, c: Rat) -> Self {
        let mut p = Self::zero(nsyms);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn nsyms(&self) -> usize {
        self.nsyms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .leading_term()
                .map(|(m, c)| m.is_one() && c.is_one())
                .unwrap_or(false)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    /// Leading (largest) term under the graded-lex order.
    pub fn leading_term(&self) -> Option<(&Monomial, &Rat)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &RatePoly) -> RatePoly {
        debug_assert_eq!(self.nsyms, other.nsyms);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &RatePoly) -> RatePoly {
        debug_assert_eq!(self.nsyms, other.nsyms);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> RatePoly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn mul(&self, other: &RatePoly) -> RatePoly {
        debug_assert_eq!(self.nsyms, other.nsyms);
        let mut out = RatePoly::zero(self.nsyms);
        // Iterate the smaller operand on the outside.
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (ma, ca) in &small.terms {
            for (mb, cb) in &large.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> RatePoly {
        if c.is_zero() {
            return RatePoly::zero(self.nsyms);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = &*v * c;
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial) -> RatePoly {
        let mut out = RatePoly::zero(self.nsyms);
        for (mm, c) in &self.terms {
            out.terms.insert(mm.mul(m), c.clone());
        }
        out
    }

    /// Exact value at a full positive assignment of the symbols.
    pub fn evaluate(&self, values: &[Rat]) -> Rat {
        assert_eq!(values.len(), self.nsyms, "assignment covers all symbols");
        let mut total = Rat::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (id, &e) in m.exps().iter().enumerate() {
                for _ in 0..e {
                    term *= &values[id];
                }
            }
            total += term;
        }
        total
    }

    pub fn homogeneity(&self) -> Homogeneity {
        let mut degs = self.terms.keys().map(|m| m.degree());
        match degs.next() {
            None => Homogeneity::ZeroAny,
            Some(d) => {
                if degs.all(|e| e == d) {
                    Homogeneity::Degree(d)
                } else {
                    Homogeneity::Inhomogeneous
                }
            }
        }
    }

    pub fn sign_summary(&self) -> SignSummary {
        let mut pos = false;
        let mut neg = false;
        for c in self.terms.values() {
            if c.is_positive() {
                pos = true;
            } else {
                neg = true;
            }
        }
        match (pos, neg) {
            (false, false) => SignSummary::Zero,
            (true, false) => SignSummary::AllPositive,
            (false, true) => SignSummary::AllNegative,
            (true, true) => SignSummary::Mixed,
        }
    }

    /// Componentwise-min exponent vector over all terms (the monomial content).
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let mut m = match it.next() {
            Some(first) => first.clone(),
            None => return Monomial::one(self.nsyms),
        };
        for k in it {
            m = m.gcd(k);
        }
        m
    }

    /// Positive rational c with `self / c` integer-coefficient of content 1.
    pub fn rational_content(&self) -> Rat {
        let mut num_gcd = Int::zero();
        let mut den_lcm = Int::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(&c.numer().abs());
            den_lcm = den_lcm.lcm(c.denom());
        }
        if num_gcd.is_zero() {
            Rat::one()
        } else {
            Rat::new(num_gcd, den_lcm)
        }
    }

    /// Quotient of an exact division, or `None` when the division leaves a
    /// remainder. Single-divisor multivariate division in graded-lex order,
    /// with the remainder updated in place.
    pub fn div_exact(&self, divisor: &RatePoly) -> Option<RatePoly> {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let mut rem: BTreeMap<Monomial, Rat> = self.terms.clone();
        let mut quot = RatePoly::zero(self.nsyms);
        let (dm, dc) = {
            let (m, c) = divisor.leading_term().unwrap();
            (m.clone(), c.clone())
        };
        let tail: Vec<(&Monomial, &Rat)> = divisor
            .terms
            .iter()
            .take(divisor.terms.len() - 1)
            .collect();
        while let Some((rm, rc)) = rem.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) {
            if !dm.divides(&rm) {
                return None;
            }
            let qm = dm.div_into(&rm);
            let qc = &rc / &dc;
            rem.remove(&rm);
            for (tm, tc) in &tail {
                let key = qm.mul(tm);
                let sub = &qc * *tc;
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
            quot.terms.insert(qm, qc);
        }
        Some(quot)
    }

    /// Viewed as univariate in `var`: map from `var`-degree to the coefficient
    /// polynomial (with `var` zeroed out of its monomials).
    pub fn coeffs_in(&self, var: usize) -> BTreeMap<u16, RatePoly> {
        let mut out: BTreeMap<u16, RatePoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let d = m.degree_in(var);
            let mut exps = m.exps().to_vec();
            exps[var] = 0;
            out.entry(d)
                .or_insert_with(|| RatePoly::zero(self.nsyms))
                .add_term(Monomial::from_exps(exps), c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    pub fn degree_in(&self, var: usize) -> u16 {
        self.terms
            .keys()
            .map(|m| m.degree_in(var))
            .max()
            .unwrap_or(0)
    }

    /// Substitute 1 for `var` (dehomogenisation).
    pub fn substitute_one(&self, var: usize) -> RatePoly {
        let mut out = RatePoly::zero(self.nsyms);
        for (m, c) in &self.terms {
            let mut exps = m.exps().to_vec();
            exps[var] = 0;
            out.add_term(Monomial::from_exps(exps), c.clone());
        }
        out
    }

    /// Canonical text form: terms in descending graded-lex order, rationals
    /// as `p/q`, e.g. `6*a^2 + 3*a*b`.
    pub fn to_text(&self, symbols: &SymbolTable) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else if neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let mono = monomial_text(m, symbols);
            if mono.is_empty() {
                out.push_str(&crate::rat_to_string(&abs));
            } else if abs.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&crate::rat_to_string(&abs));
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }
}

fn monomial_text(m: &Monomial, symbols: &SymbolTable) -> String {
    let mut parts = Vec::new();
    for (id, &e) in m.exps().iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(symbols.name(id).to_string()),
            _ => parts.push(format!("{}^{}", symbols.name(id), e)),
        }
    }
    parts.join("*")
}

impl fmt::Display for RatePoly {
    /// Debug-ish rendering with positional symbol names `x0, x1, ...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut table = SymbolTable::new();
        for i in 0..self.nsyms {
            table.intern(&format!("x{i}"));
        }
        write!(f, "{}", self.to_text(&table))
    }
}

/// Outcome of [`primitive_part`]: `poly = sign * content * monomial * primitive`
/// with `content` a positive rational, `primitive` integer-coefficient with
/// coefficient GCD 1, no common monomial factor, and positive leading
/// coefficient. `flipped` records the sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimitivePart {
    pub content: Rat,
    pub monomial: Monomial,
    pub primitive: RatePoly,
    pub flipped: bool,
}

impl PrimitivePart {
    /// Reassemble the original polynomial.
    pub fn reconstruct(&self) -> RatePoly {
        let sign = if self.flipped {
            -self.content.clone()
        } else {
            self.content.clone()
        };
        self.primitive.mul_monomial(&self.monomial).scale(&sign)
    }
}

/// Split a nonzero polynomial into content (rational x monomial) and signed
/// primitive part.
pub fn primitive_part(p: &RatePoly) -> Result<PrimitivePart, PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let monomial = p.monomial_content();
    let content = p.rational_content();
    let inv = content.recip();
    let mut primitive = RatePoly::zero(p.nsyms());
    for (m, c) in p.terms() {
        primitive
            .terms
            .insert(monomial.div_into(m), c * &inv);
    }
    let flipped = primitive
        .leading_term()
        .map(|(_, c)| c.is_negative())
        .unwrap_or(false);
    if flipped {
        primitive = primitive.neg();
    }
    Ok(PrimitivePart {
        content,
        monomial,
        primitive,
        flipped,
    })
}

/// Unit-normalise: strip rational content and fix a positive leading
/// coefficient, keeping any monomial factor.
pub fn unit_normalize(p: &RatePoly) -> RatePoly {
    if p.is_zero() {
        return p.clone();
    }
    let mut q = p.scale(&p.rational_content().recip());
    if q.leading_term().map(|(_, c)| c.is_negative()).unwrap_or(false) {
        q = q.neg();
    }
    q
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
}

/// GCD of two polynomials, unit-normalised (integer-primitive, positive
/// leading coefficient). `gcd(p, 0)` is the unit-normalisation of `p`.
pub fn poly_gcd(p: &RatePoly, q: &RatePoly) -> RatePoly {
    if p.is_zero() {
        return unit_normalize(q);
    }
    if q.is_zero() {
        return unit_normalize(p);
    }
    // Divisibility fast paths catch most structured calls.
    if p.num_terms() <= q.num_terms() && q.div_exact(p).is_some() {
        return unit_normalize(p);
    }
    if q.num_terms() <= p.num_terms() && p.div_exact(q).is_some() {
        return unit_normalize(q);
    }
    let pp = primitive_part(p).unwrap();
    let pq = primitive_part(q).unwrap();
    let mono = pp.monomial.gcd(&pq.monomial);
    let core = gcd_primitive(&pp.primitive, &pq.primitive);
    if std::env::var("PRODFORM_GCD_TRACE").is_ok() {
        eprintln!(
            "poly_gcd: core {} terms; core|prim_p {} core|prim_q {}",
            core.num_terms(),
            pp.primitive.div_exact(&core).is_some(),
            pq.primitive.div_exact(&core).is_some()
        );
    }
    unit_normalize(&core.mul_monomial(&mono))
}

/// GCD of a nonempty list, unit-normalised; early-exits once the running
/// GCD collapses to a constant.
pub fn poly_gcd_many(polys: &[&RatePoly]) -> RatePoly {
    let nsyms = polys.first().map(|p| p.nsyms()).unwrap_or(0);
    let mut g = RatePoly::zero(nsyms);
    // Seed with the smallest polynomial; GCDs only shrink from there.
    let mut order: Vec<&&RatePoly> = polys.iter().filter(|p| !p.is_zero()).collect();
    order.sort_by_key(|p| p.num_terms());
    for p in order {
        let prev = g.clone();
        g = poly_gcd(&g, p);
        if std::env::var("PRODFORM_GCD_CHECK").is_ok() {
            let d1 = prev.is_zero() || prev.div_exact(&g).is_some();
            let d2 = p.div_exact(&g).is_some();
            if !d1 || !d2 {
                eprintln!("GCD FOLD BUG: divides prev={d1} divides next={d2}");
                let dump = |p: &RatePoly| {
                    p.terms()
                        .map(|(m, c)| {
                            format!(
                                "{}:{}/{}",
                                m.exps()
                                    .iter()
                                    .map(|e| e.to_string())
                                    .collect::<Vec<_>>()
                                    .join(","),
                                c.numer(),
                                c.denom()
                            )
                        })
                        .collect::<Vec<_>>()
                        .join(";")
                };
                std::fs::write("/tmp/gcd_prev.txt", dump(&prev)).ok();
                std::fs::write("/tmp/gcd_next.txt", dump(p)).ok();
                std::fs::write("/tmp/gcd_g.txt", dump(&g)).ok();
                panic!("gcd fold produced a non-divisor");
            }
        }
        if g.num_terms() == 1 && g.leading_term().map(|(m, _)| m.is_one()).unwrap_or(false) {
            break;
        }
    }
    if g.is_zero() {
        g
    } else {
        unit_normalize(&g)
    }
}

/// GCD of content-free (monomial-free, integer-primitive) polynomials.
///
/// The evaluation-lift heuristic peels verified common divisors quickly but
/// can stop short of the full GCD, so the remainder sequence always runs on
/// the cofactors for the final word. Every peeled factor is division-checked,
/// so the result is a certified maximal common divisor either way.
fn gcd_primitive(p: &RatePoly, q: &RatePoly) -> RatePoly {
    let nsyms = p.nsyms();
    let mut acc = RatePoly::one(nsyms);
    let mut a = p.clone();
    let mut b = q.clone();
    loop {
        match gcd_heuristic(&a, &b, 0) {
            Some(g) if !g.leading_term().map(|(m, _)| m.is_one()).unwrap_or(true) => {
                a = a.div_exact(&g).expect("verified divisor");
                b = b.div_exact(&g).expect("verified divisor");
                acc = acc.mul(&g);
            }
            _ => {
                let g = gcd_prs(&a, &b);
                if g.leading_term().map(|(m, _)| m.is_one()).unwrap_or(true) {
                    return unit_normalize(&acc);
                }
                a = a.div_exact(&g).expect("gcd divides");
                b = b.div_exact(&g).expect("gcd divides");
                acc = acc.mul(&g);
            }
        }
    }
}

/// Evaluation point large enough to separate coefficient digits.
fn heuristic_xi(p: &RatePoly, q: &RatePoly) -> Int {
    let mut max = Int::one();
    for poly in [p, q] {
        for (_, c) in poly.terms() {
            let a = c.numer().abs();
            if a > max {
                max = a;
            }
        }
    }
    max * Int::from(2) + Int::from(29)
}

/// Substitute `var = xi`, collapsing onto the remaining symbols.
fn eval_var(p: &RatePoly, var: usize, xi: &Int) -> RatePoly {
    let mut out = RatePoly::zero(p.nsyms());
    for (m, c) in p.terms() {
        let d = m.degree_in(var);
        let mut scale = Int::one();
        for _ in 0..d {
            scale *= xi;
        }
        let mut exps = m.exps().to_vec();
        exps[var] = 0;
        out.add_term(Monomial::from_exps(exps), c * Rat::from_integer(scale));
    }
    out
}

/// Balanced base-`xi` digit: residue in `(-xi/2, xi/2]`.
fn symmetric_mod(c: &Int, xi: &Int) -> Int {
    let mut r = num_integer::Integer::mod_floor(c, xi);
    let half = xi / Int::from(2);
    if r > half {
        r -= xi;
    }
    r
}

/// GCDHEU, one variable at a time: evaluate, recurse, lift the digits back,
/// verify by exact division. `None` when the lift fails repeatedly.
fn gcd_heuristic(p: &RatePoly, q: &RatePoly, depth: usize) -> Option<RatePoly> {
    let nsyms = p.nsyms();
    let var = match highest_var(p).max(highest_var(q)) {
        Some(v) => v,
        None => {
            // Integer gcd of two constants.
            let a = p.leading_term().map(|(_, c)| c.numer().abs()).unwrap_or_else(Int::zero);
            let b = q.leading_term().map(|(_, c)| c.numer().abs()).unwrap_or_else(Int::zero);
            return Some(RatePoly::constant(nsyms, Rat::from_integer(a.gcd(&b))));
        }
    };
    if depth > 16 {
        return None;
    }
    let mut xi = heuristic_xi(p, q);
    // The lift multiplies coefficient sizes by the degree at every variable;
    // bail out to the remainder-sequence path before integers get out of
    // hand.
    let deg = p.degree_in(var).max(q.degree_in(var)) as u64;
    if xi.bits() > 4096 || xi.bits().saturating_mul(deg + 1) > 100_000 {
        return None;
    }
    for _ in 0..6 {
        let pe = eval_var(p, var, &xi);
        let qe = eval_var(q, var, &xi);
        if pe.is_zero() || qe.is_zero() {
            xi = &xi * Int::from(3) + Int::from(7);
            continue;
        }
        {
            // A child bailing on size will bail again for any larger point;
            // retries only make sense after a failed lift.
            let Some(ge) = gcd_heuristic(&pe, &qe, depth + 1) else {
                return None;
            };
            // Lift: peel balanced base-xi digits into powers of `var`.
            let mut g = RatePoly::zero(nsyms);
            let mut rest = ge;
            let mut power: u16 = 0;
            while !rest.is_zero() {
                if power as usize > 255 {
                    break;
                }
                let mut digit = RatePoly::zero(nsyms);
                let mut next = RatePoly::zero(nsyms);
                for (m, c) in rest.terms() {
                    let d = symmetric_mod(c.numer(), &xi);
                    if !d.is_zero() {
                        let mut exps = m.exps().to_vec();
                        exps[var] = power;
                        digit.add_term(Monomial::from_exps(exps), Rat::from_integer(d.clone()));
                    }
                    let carried = (c.numer() - d) / &xi;
                    if !carried.is_zero() {
                        next.add_term(m.clone(), Rat::from_integer(carried));
                    }
                }
                g = g.add(&digit);
                rest = next;
                power += 1;
            }
            if !rest.is_zero() || g.is_zero() {
                xi = &xi * Int::from(3) + Int::from(7);
                continue;
            }
            let g = unit_normalize(&primitive_part(&g).expect("nonzero").primitive.clone());
            if p.div_exact(&g).is_some() && q.div_exact(&g).is_some() {
                if std::env::var("PRODFORM_GCD_TRACE").is_ok() {
                    eprintln!(
                        "heuristic return depth={depth} var={var} g_terms={} p_terms={} q_terms={}",
                        g.num_terms(),
                        p.num_terms(),
                        q.num_terms()
                    );
                }
                return Some(g);
            }
        }
        xi = &xi * Int::from(3) + Int::from(7);
    }
    None
}

/// primitive polynomial remainder sequence, recursing on the highest symbol
/// present.
fn gcd_prs(p: &RatePoly, q: &RatePoly) -> RatePoly {
    debug_assert!(!p.is_zero() && !q.is_zero());
    let nsyms = p.nsyms();
    let var = match highest_var(p).max(highest_var(q)) {
        Some(v) => v,
        None => return RatePoly::one(nsyms), // both constants
    };
    let (dp, dq) = (p.degree_in(var), q.degree_in(var));
    if dp == 0 || dq == 0 {
        // One operand is free of the main variable: the GCD divides the
        // other's coefficient content in that variable.
        let (free, bound) = if dp == 0 { (p, q) } else { (q, p) };
        let cont = content_in(bound, var);
        return gcd_primitive_pair(free, &cont);
    }
    let cp = content_in(p, var);
    let cq = content_in(q, var);
    let c = gcd_primitive_pair(&cp, &cq);
    let mut a = p.div_exact(&cp).expect("content divides");
    let mut b = q.div_exact(&cq).expect("content divides");
    if a.degree_in(var) < b.degree_in(var) {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        let r = pseudo_rem(&a, &b, var);
        if r.is_zero() {
            break;
        }
        let rc = content_in(&r, var);
        a = b;
        b = r.div_exact(&rc).expect("content divides");
    }
    let g = unit_normalize(&b);
    unit_normalize(&c.mul(&g))
}

fn gcd_primitive_pair(p: &RatePoly, q: &RatePoly) -> RatePoly {
    if p.is_zero() {
        return unit_normalize(q);
    }
    if q.is_zero() {
        return unit_normalize(p);
    }
    let pp = primitive_part(p).unwrap();
    let pq = primitive_part(q).unwrap();
    let mono = pp.monomial.gcd(&pq.monomial);
    gcd_primitive(&pp.primitive, &pq.primitive).mul_monomial(&mono)
}

fn highest_var(p: &RatePoly) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (m, _) in p.terms() {
        for (id, &e) in m.exps().iter().enumerate() {
            if e > 0 && best.map(|b| id > b).unwrap_or(true) {
                best = Some(id);
            }
        }
    }
    best
}

/// Content of `p` as a univariate polynomial in `var`: the GCD of its
/// coefficient polynomials.
fn content_in(p: &RatePoly, var: usize) -> RatePoly {
    let coeffs = p.coeffs_in(var);
    let refs: Vec<&RatePoly> = coeffs.values().collect();
    poly_gcd_many(&refs)
}

/// Pseudo-remainder of `a` by `b` in `var`, by repeated cross-multiplication.
fn pseudo_rem(a: &RatePoly, b: &RatePoly, var: usize) -> RatePoly {
    let db = b.degree_in(var);
    let lb = leading_coeff_in(b, var);
    let mut r = a.clone();
    while !r.is_zero() {
        let dr = r.degree_in(var);
        if dr < db {
            break;
        }
        let lr = leading_coeff_in(&r, var);
        let shift = Monomial::var(a.nsyms(), var);
        let mut shifted = lr;
        for _ in 0..(dr - db) {
            shifted = shifted.mul_monomial(&shift);
        }
        r = r.mul(&lb).sub(&shifted.mul(b));
    }
    r
}

fn leading_coeff_in(p: &RatePoly, var: usize) -> RatePoly {
    let d = p.degree_in(var);
    let mut out = RatePoly::zero(p.nsyms());
    for (m, c) in p.terms() {
        if m.degree_in(var) == d {
            let mut exps = m.exps().to_vec();
            exps[var] = 0;
            out.add_term(Monomial::from_exps(exps), c.clone());
        }
    }
    out
}

/// Positive rates for every symbol, indexed like the symbol table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateAssignment {
    values: Vec<Rat>,
}

impl RateAssignment {
    /// All values must be strictly positive and cover the whole table.
    pub fn new(values: Vec<Rat>) -> Result<Self, RateAssignmentError> {
        if let Some(i) = values.iter().position(|v| !v.is_positive()) {
            return Err(RateAssignmentError::NonPositive(i));
        }
        Ok(Self { values })
    }

    pub fn ones(nsyms: usize) -> Self {
        Self {
            values: vec![Rat::one(); nsyms],
        }
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: usize) -> &Rat {
        &self.values[id]
    }

    /// Parse `name=value` pairs against a symbol table; every symbol must be
    /// assigned exactly once.
    pub fn parse(spec: &str, symbols: &SymbolTable) -> Result<Self, RateAssignmentError> {
        let mut values: Vec<Option<Rat>> = vec![None; symbols.len()];
        for pair in spec.split(',') {
            let pair = pair.trim();
            if pair.is_empty() {
                continue;
            }
            let (name, val) = pair
                .split_once('=')
                .ok_or_else(|| RateAssignmentError::Syntax(pair.to_string()))?;
            let id = symbols
                .index_of(name.trim())
                .ok_or_else(|| RateAssignmentError::UnknownSymbol(name.trim().to_string()))?;
            let r = crate::parse_rat(val)
                .ok_or_else(|| RateAssignmentError::Syntax(pair.to_string()))?;
            if values[id].is_some() {
                return Err(RateAssignmentError::Duplicate(name.trim().to_string()));
            }
            values[id] = Some(r);
        }
        let mut out = Vec::with_capacity(symbols.len());
        for (id, v) in values.into_iter().enumerate() {
            match v {
                Some(r) => out.push(r),
                None => {
                    return Err(RateAssignmentError::Missing(symbols.name(id).to_string()))
                }
            }
        }
        Self::new(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RateAssignmentError {
    #[error("rate value at index {0} is not strictly positive")]
    NonPositive(usize),
    #[error("bad rate syntax: `{0}` (expected name=p/q)")]
    Syntax(String),
    #[error("unknown rate symbol `{0}`")]
    UnknownSymbol(String),
    #[error("rate symbol `{0}` assigned twice")]
    Duplicate(String),
    #[error("no value for rate symbol `{0}`")]
    Missing(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms(names: &[&str]) -> SymbolTable {
        let mut t = SymbolTable::new();
        for n in names {
            t.intern(n);
        }
        t
    }

    fn p(table: &SymbolTable, terms: &[(i64, &[u16])]) -> RatePoly {
        let mut out = RatePoly::zero(table.len());
        for (c, exps) in terms {
            out.add_term(
                Monomial::from_exps(exps.to_vec()),
                Rat::from_integer(Int::from(*c)),
            );
        }
        out
    }

    #[test]
    fn add_identity_and_cancellation() {
        let t = syms(&["a", "b"]);
        let x = p(&t, &[(3, &[1, 0]), (2, &[0, 1])]);
        let zero = RatePoly::zero(2);
        assert_eq!(x.add(&zero), x);
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn mul_expansion_matches_kernel_entry() {
        // 3a * (2a + b) = 6a^2 + 3ab
        let t = syms(&["a", "b"]);
        let lhs = p(&t, &[(3, &[1, 0])]).mul(&p(&t, &[(2, &[1, 0]), (1, &[0, 1])]));
        let expect = p(&t, &[(6, &[2, 0]), (3, &[1, 1])]);
        assert_eq!(lhs, expect);
        assert_eq!(lhs.to_text(&t), "6*a^2 + 3*a*b");
    }

    #[test]
    fn primitive_part_monomial() {
        let t = syms(&["a", "b"]);
        // 6ab^2: content 6 * ab^2, primitive 1
        let x = p(&t, &[(6, &[1, 2])]);
        let pp = primitive_part(&x).unwrap();
        assert_eq!(pp.content, Rat::from_integer(Int::from(6)));
        assert_eq!(pp.monomial, Monomial::from_exps(vec![1, 2]));
        assert_eq!(pp.primitive, RatePoly::one(2));
        assert!(!pp.flipped);
        assert_eq!(pp.reconstruct(), x);
    }

    #[test]
    fn primitive_part_rational_content() {
        // (4/3)a^2 - (2/3)ab -> content (2/3)*a, primitive 2a - b
        let t = syms(&["a", "b"]);
        let mut x = RatePoly::zero(2);
        x.add_term(
            Monomial::from_exps(vec![2, 0]),
            Rat::new(Int::from(4), Int::from(3)),
        );
        x.add_term(
            Monomial::from_exps(vec![1, 1]),
            Rat::new(Int::from(-2), Int::from(3)),
        );
        let pp = primitive_part(&x).unwrap();
        assert_eq!(pp.content, Rat::new(Int::from(2), Int::from(3)));
        assert_eq!(pp.monomial, Monomial::from_exps(vec![1, 0]));
        assert_eq!(pp.primitive, p(&t, &[(2, &[1, 0]), (-1, &[0, 1])]));
        assert!(!pp.flipped);
        assert_eq!(pp.reconstruct(), x);
    }

    #[test]
    fn primitive_part_sign_flip() {
        // -2a - 2b -> content 2, primitive a + b, flipped
        let t = syms(&["a", "b"]);
        let x = p(&t, &[(-2, &[1, 0]), (-2, &[0, 1])]);
        let pp = primitive_part(&x).unwrap();
        assert_eq!(pp.content, Rat::from_integer(Int::from(2)));
        assert!(pp.monomial.is_one());
        assert_eq!(pp.primitive, p(&t, &[(1, &[1, 0]), (1, &[0, 1])]));
        assert!(pp.flipped);
        assert_eq!(pp.reconstruct(), x);
    }

    #[test]
    fn gcd_monomials() {
        let t = syms(&["a", "b"]);
        let g = poly_gcd(&p(&t, &[(6, &[1, 1])]), &p(&t, &[(4, &[2, 0])]));
        assert_eq!(g, p(&t, &[(1, &[1, 0])]));
    }

    #[test]
    fn gcd_difference_of_squares() {
        let t = syms(&["a", "b"]);
        let a2b2 = p(&t, &[(1, &[2, 0]), (-1, &[0, 2])]);
        let ab = p(&t, &[(1, &[1, 0]), (1, &[0, 1])]);
        assert_eq!(poly_gcd(&a2b2, &ab), ab);
    }

    #[test]
    fn gcd_of_kernel_entries_is_one() {
        // (4a^2, 6a^2+3ab, 6ab, b^2) has no non-constant common divisor.
        let t = syms(&["a", "b"]);
        let entries = [
            p(&t, &[(4, &[2, 0])]),
            p(&t, &[(6, &[2, 0]), (3, &[1, 1])]),
            p(&t, &[(6, &[1, 1])]),
            p(&t, &[(1, &[0, 2])]),
        ];
        let refs: Vec<&RatePoly> = entries.iter().collect();
        assert_eq!(poly_gcd_many(&refs), RatePoly::one(2));
    }

    #[test]
    fn gcd_with_zero() {
        let t = syms(&["a", "b"]);
        let x = p(&t, &[(6, &[1, 2])]);
        let g = poly_gcd(&x, &RatePoly::zero(2));
        assert_eq!(g, p(&t, &[(1, &[1, 2])]));
    }

    #[test]
    fn evaluate_basics() {
        let t = syms(&["a", "b"]);
        let b2 = p(&t, &[(1, &[0, 2])]);
        let v = vec![Rat::one(), Rat::from_integer(Int::from(2))];
        assert_eq!(b2.evaluate(&v), Rat::from_integer(Int::from(4)));
        assert!(RatePoly::zero(2).evaluate(&v).is_zero());
    }

    #[test]
    fn homogeneity_cases() {
        let t = syms(&["a", "b"]);
        assert_eq!(
            p(&t, &[(1, &[1, 0]), (1, &[0, 2])]).homogeneity(),
            Homogeneity::Inhomogeneous
        );
        assert_eq!(
            p(&t, &[(5, &[0, 0])]).homogeneity(),
            Homogeneity::Degree(0)
        );
        assert_eq!(RatePoly::zero(2).homogeneity(), Homogeneity::ZeroAny);
        assert_eq!(
            p(&t, &[(18, &[3, 0]), (3, &[2, 1])]).homogeneity(),
            Homogeneity::Degree(3)
        );
    }

    #[test]
    fn sign_summaries() {
        let t = syms(&["a", "b"]);
        assert_eq!(RatePoly::zero(2).sign_summary(), SignSummary::Zero);
        assert_eq!(
            p(&t, &[(1, &[2, 0]), (1, &[1, 1])]).sign_summary(),
            SignSummary::AllPositive
        );
        assert_eq!(
            p(&t, &[(1, &[2, 0]), (-1, &[0, 2])]).sign_summary(),
            SignSummary::Mixed
        );
        assert_eq!(
            p(&t, &[(-1, &[2, 0]), (-1, &[0, 2])]).sign_summary(),
            SignSummary::AllNegative
        );
    }

    #[test]
    fn division_detects_non_divisor() {
        let t = syms(&["a", "b"]);
        let num = p(&t, &[(1, &[2, 0]), (-1, &[0, 2])]);
        let d1 = p(&t, &[(1, &[1, 0]), (1, &[0, 1])]);
        let d2 = p(&t, &[(1, &[1, 0]), (2, &[0, 1])]);
        let q = num.div_exact(&d1).unwrap();
        assert_eq!(q.mul(&d1), num);
        assert!(num.div_exact(&d2).is_none());
    }

    #[test]
    fn rate_assignment_parsing() {
        let t = syms(&["alpha", "beta"]);
        let a = RateAssignment::parse("alpha=1, beta=3/2", &t).unwrap();
        assert_eq!(a.get(1), &Rat::new(Int::from(3), Int::from(2)));
        assert!(RateAssignment::parse("alpha=1", &t).is_err());
        assert!(RateAssignment::parse("alpha=0, beta=1", &t).is_err());
        assert!(RateAssignment::parse("alpha=1, alpha=2, beta=1", &t).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_poly() -> impl Strategy<Value = RatePoly> {
            proptest::collection::vec(
                ((0u16..3, 0u16..3, 0u16..3), -6i64..7),
                0..6,
            )
            .prop_map(|terms| {
                let mut p = RatePoly::zero(3);
                for ((e0, e1, e2), c) in terms {
                    p.add_term(
                        Monomial::from_exps(vec![e0, e1, e2]),
                        Rat::from_integer(Int::from(c)),
                    );
                }
                p
            })
        }

        proptest! {
            #[test]
            fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
                prop_assert_eq!(a.add(&b), b.add(&a));
                prop_assert_eq!(a.mul(&b), b.mul(&a));
                prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
                prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
                prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            }

            #[test]
            fn primitive_reconstructs(a in arb_poly()) {
                if !a.is_zero() {
                    let pp = primitive_part(&a).unwrap();
                    prop_assert_eq!(pp.reconstruct(), a);
                    prop_assert!(pp.content.is_positive());
                }
            }

            #[test]
            fn gcd_divides_both(a in arb_poly(), b in arb_poly()) {
                if !a.is_zero() || !b.is_zero() {
                    let g = poly_gcd(&a, &b);
                    prop_assert!(a.div_exact(&g).is_some());
                    prop_assert!(b.div_exact(&g).is_some());
                }
            }

            #[test]
            fn evaluate_is_ring_hom(a in arb_poly(), b in arb_poly()) {
                let at = vec![
                    Rat::new(Int::from(2), Int::from(3)),
                    Rat::from_integer(Int::from(2)),
                    Rat::new(Int::from(5), Int::from(7)),
                ];
                prop_assert_eq!(a.mul(&b).evaluate(&at), a.evaluate(&at) * b.evaluate(&at));
                prop_assert_eq!(a.add(&b).evaluate(&at), a.evaluate(&at) + b.evaluate(&at));
            }
        }
    }
}
