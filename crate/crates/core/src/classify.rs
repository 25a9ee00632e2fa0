//! The all/none/some verdict: structural shortcuts, positivity
//! certificates, the exact complex-balance test, witness searches, and the
//! final report with re-verifiable certificates.
//!
//! Soundness ground rules:
//! - A sign-definite generator certifies "no rates" outright: it cannot
//!   vanish on the positive orthant.
//! - Eliminating a symbol between a linear and a second generator certifies
//!   the same when the result is sign-definite and the linear coefficient is.
//! - A complex-balance point certifies product form at that point for every
//!   level at once; a consistent witness point outside weak reversibility is
//!   only evidence through the computed levels.
//! - "All relations vanish" is always a bounded claim: the ideal chain may
//!   keep growing past the computed levels, and without ideal-membership
//!   machinery stabilisation cannot be detected.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::ideal::{ideal_level, Generator, IdealError, LevelKernels, RelationInstance};
use crate::linalg;
use crate::network::ReactionNetwork;
use crate::oracle::{relation_residuals, OracleError, StationarySolver};
use crate::poly::{primitive_part, RateAssignment, RatePoly, SignSummary};
use crate::rng::Rng;
use crate::state::{index_profile, StateSpaceError};
use crate::structure::{self, Reversibility};
use crate::{Int, Rat};

/// Product-form trichotomy verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Product form at every positive rate.
    I,
    /// Product form at no positive rate.
    N,
    /// Product form at some rates, not at others.
    E,
    Inconclusive,
}

/// How far a verdict is backed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certainty {
    Certified,
    /// Supported by exhaustive computation through the given level only.
    Bounded(u32),
}

/// A re-verifiable piece of evidence.
#[derive(Clone, Debug)]
pub enum Certificate {
    /// Deficiency zero and weakly reversible: complex balanced, hence
    /// Poisson product form, at every rate.
    DeficiencyZeroWeaklyReversible,
    /// A generator with all coefficients of one sign: no positive root.
    NoPositiveRoot {
        generator: RatePoly,
        sign: SignSummary,
        level: u32,
        /// All contributing relation levels sit in the verified component
        /// range.
        sound: bool,
    },
    /// Positivity of the symbol elimination between a generator linear in
    /// one symbol and a second generator.
    CompositeNoPositiveRoot {
        linear: RatePoly,
        other: RatePoly,
        symbol: usize,
        eliminated: RatePoly,
        level: u32,
        sound: bool,
    },
    /// Exact complex-balance point: a rate vector at which the tree-constant
    /// lattice conditions verify, plus the balancing concentration when it
    /// is rational.
    ComplexBalanceWitness {
        rates: Vec<Rat>,
        point_c: Option<Vec<Rat>>,
    },
    /// A rate point with a nonzero exact relation residual, re-verified by
    /// an independent stationary solve.
    RelationViolationWitness {
        rates: Vec<Rat>,
        instance: RelationInstance,
        residual: Rat,
    },
    /// A rate point whose residuals all vanish through the computed levels.
    BoundedProductFormEvidence {
        rates: Vec<Rat>,
        through_level: u32,
    },
    /// Every relation through the computed levels vanished identically.
    AllRelationsVanish { through_level: u32 },
}

/// Final classification with provenance.
#[derive(Clone, Debug)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub certainty: Certainty,
    pub certificates: Vec<Certificate>,
    pub caveats: Vec<String>,
    pub levels_computed: u32,
    /// Start of the verified component range, when defined.
    pub q: Option<u32>,
    pub deficiency: usize,
    pub reversibility: Reversibility,
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("network is not conservative; classification requires finite components")]
    NotConservative,
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Outcome of the exact complex-balance test at one rate point.
#[derive(Clone, Debug)]
pub struct ComplexBalanceResult {
    pub balanced: bool,
    /// A rational balancing concentration, when one could be extracted; the
    /// test itself only certifies existence.
    pub point_c: Option<Vec<Rat>>,
    /// Per-complex tree constants (spanning-arborescence weight sums), the
    /// kernel of each linkage-class Laplacian; meaningful for weakly
    /// reversible networks.
    pub tree_constants: Vec<Rat>,
    pub caveats: Vec<String>,
}

/// Exact complex-balance test. Per linkage class the positive kernel of the
/// rate-weighted complex Laplacian (the tree constants) spans the candidate
/// monomial values; balance holds iff every integer relation among the
/// complex vectors (with one free scalar per class) annihilates the tree
/// constants multiplicatively. Everything is an exact rational check.
pub fn complex_balance(net: &ReactionNetwork, a: &RateAssignment) -> ComplexBalanceResult {
    let nc = net.num_complexes();
    if !structure::reversibility_class(net).is_weakly_reversible() {
        return ComplexBalanceResult {
            balanced: false,
            point_c: None,
            tree_constants: Vec::new(),
            caveats: vec!["network is not weakly reversible; complex balance is impossible".into()],
        };
    }
    let classes = structure::linkage_classes(net);
    let mut tree_constants = vec![Rat::zero(); nc];
    for class in &classes {
        let pos: std::collections::BTreeMap<usize, usize> =
            class.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let m = class.len();
        let mut lap = vec![vec![Rat::zero(); m]; m];
        for r in &net.reactions {
            let from = net.complex_index(&r.reactant).unwrap();
            if !pos.contains_key(&from) {
                continue;
            }
            let to = net.complex_index(&r.product).unwrap();
            let rate = a.get(r.rate).clone();
            lap[pos[&to]][pos[&from]] += &rate;
            lap[pos[&from]][pos[&from]] -= &rate;
        }
        let basis = linalg::nullspace(&lap);
        assert_eq!(basis.len(), 1, "strongly connected class has a corank-one Laplacian");
        let mut k = basis.into_iter().next().unwrap();
        if k.iter().any(|v| v.is_negative()) {
            for v in &mut k {
                *v = -v.clone();
            }
        }
        assert!(k.iter().all(|v| v.is_positive()), "tree constants are positive");
        let k = structure::scale_to_coprime_integers(&k);
        for (i, &c) in class.iter().enumerate() {
            tree_constants[c] = k[i].clone();
        }
    }

    // Solve, in log space over the tree constants treated as independent
    // symbols, the system  y_class(eta) + sum_i eta_i x_i = log K_eta.
    // Pivoting runs over exact rationals; the right-hand side carries formal
    // exponent vectors. Zero rows leave multiplicative conditions to check;
    // pivot rows express log c_i in the exponents. Class scalars come first
    // so they absorb the per-class normalisation.
    let n = net.num_species();
    let ncls = classes.len();
    let cols = ncls + n;
    let mut lhs: Vec<Vec<Rat>> = Vec::with_capacity(nc);
    let mut rhs: Vec<Vec<Rat>> = Vec::with_capacity(nc);
    for (ci, cx) in net.complexes.iter().enumerate() {
        let mut row = vec![Rat::zero(); cols];
        for (s, &coeff) in cx.0.iter().enumerate() {
            row[ncls + s] = Rat::from_integer(Int::from(coeff as i64));
        }
        let class_of = classes.iter().position(|cl| cl.contains(&ci)).unwrap();
        row[class_of] = Rat::one();
        lhs.push(row);
        let mut e = vec![Rat::zero(); nc];
        e[ci] = Rat::one();
        rhs.push(e);
    }
    // Fraction-free enough: plain rational Gauss-Jordan on the pair.
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut row_cursor = 0usize;
    for col in 0..cols {
        let Some(pr) = (row_cursor..nc).find(|&r| !lhs[r][col].is_zero()) else {
            continue;
        };
        lhs.swap(row_cursor, pr);
        rhs.swap(row_cursor, pr);
        let inv = lhs[row_cursor][col].clone().recip();
        for x in lhs[row_cursor].iter_mut() {
            *x = &*x * &inv;
        }
        for x in rhs[row_cursor].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..nc {
            if r != row_cursor && !lhs[r][col].is_zero() {
                let f = lhs[r][col].clone();
                for j in 0..cols {
                    let s = &lhs[row_cursor][j] * &f;
                    lhs[r][j] = &lhs[r][j] - &s;
                }
                for j in 0..nc {
                    let s = &rhs[row_cursor][j] * &f;
                    rhs[r][j] = &rhs[r][j] - &s;
                }
            }
        }
        pivots.push((row_cursor, col));
        row_cursor += 1;
        if row_cursor == nc {
            break;
        }
    }
    // Consistency: zero rows of the left side must annihilate the constants
    // multiplicatively. Rational exponents scale to integers first.
    let mut balanced = true;
    for r in row_cursor..nc {
        debug_assert!(lhs[r].iter().all(|x| x.is_zero()));
        if !power_product_is_one(&tree_constants, &rhs[r]) {
            balanced = false;
        }
    }
    let point_c = if balanced {
        extract_rational_point(&tree_constants, &pivots, &rhs, ncls, n)
    } else {
        None
    };
    ComplexBalanceResult { balanced, point_c, tree_constants, caveats: Vec::new() }
}

/// `prod_i base_i ^ exps_i == 1` with rational exponents, checked exactly by
/// clearing exponent denominators (all bases positive).
fn power_product_is_one(bases: &[Rat], exps: &[Rat]) -> bool {
    let mut lcm = Int::one();
    for e in exps {
        lcm = num_integer::Integer::lcm(&lcm, e.denom());
    }
    let mut num = Rat::one();
    let mut den = Rat::one();
    for (b, e) in bases.iter().zip(exps) {
        let k = e.numer() * &lcm / e.denom();
        let (mag, positive) = (k.magnitude().clone(), k >= Int::zero());
        let mut p = Rat::one();
        let mut count = Int::from(0u32);
        while count < Int::from_biguint(num_bigint::Sign::Plus, mag.clone()) {
            p *= b;
            count += 1;
        }
        if positive {
            num *= p;
        } else {
            den *= p;
        }
    }
    num == den
}

/// `base^exp` when the result is rational: integer exponents directly,
/// fractional ones through exact integer roots.
fn rational_power(base: &Rat, exp: &Rat) -> Option<Rat> {
    if exp.is_zero() || base.is_one() {
        return Some(Rat::one());
    }
    let q = exp.denom().to_u32_digits().1;
    let root = if exp.denom().is_one() {
        base.clone()
    } else {
        if q.len() != 1 {
            return None;
        }
        let deg = q[0];
        let rn = base.numer().nth_root(deg);
        let rd = base.denom().nth_root(deg);
        if num_traits::Pow::pow(rn.clone(), deg) != *base.numer()
            || num_traits::Pow::pow(rd.clone(), deg) != *base.denom()
        {
            return None; // not a perfect power
        }
        Rat::new(rn, rd)
    };
    let mut times = exp.numer().clone();
    let negative = times.is_negative();
    if negative {
        times = -times;
    }
    let mut p = Rat::one();
    while times > Int::zero() {
        p *= &root;
        times -= 1;
    }
    Some(if negative { p.recip() } else { p })
}

/// Rebuild a rational balancing concentration from the pivot rows when every
/// tree-constant power involved turns out rational. Unpivoted species are
/// free and default to one.
fn extract_rational_point(
    constants: &[Rat],
    pivots: &[(usize, usize)],
    rhs: &[Vec<Rat>],
    ncls: usize,
    n: usize,
) -> Option<Vec<Rat>> {
    let mut c = vec![Rat::one(); n];
    for &(row, col) in pivots {
        if col < ncls {
            continue; // class scalar, not a species
        }
        let mut value = Rat::one();
        for (k, e) in constants.iter().zip(&rhs[row]) {
            value *= rational_power(k, e)?;
        }
        c[col - ncls] = value;
    }
    Some(c)
}

/// A positive integer circulation on the reaction graph: every complex has
/// equal in- and out-flow. Exists exactly for weakly reversible networks,
/// and makes `(kappa, c = 1)` a complex-balance point.
pub fn circulation_rates(net: &ReactionNetwork) -> Option<RateAssignment> {
    if !structure::reversibility_class(net).is_weakly_reversible() {
        return None;
    }
    let nc = net.num_complexes();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nc]; // (target, reaction)
    for (ridx, r) in net.reactions.iter().enumerate() {
        let from = net.complex_index(&r.reactant).unwrap();
        let to = net.complex_index(&r.product).unwrap();
        adj[from].push((to, ridx));
    }
    let mut flow = vec![0u64; net.num_reactions()];
    for (ridx, r) in net.reactions.iter().enumerate() {
        // Close the edge into a cycle: shortest path product -> reactant.
        let start = net.complex_index(&r.product).unwrap();
        let goal = net.complex_index(&r.reactant).unwrap();
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; nc];
        let mut seen = vec![false; nc];
        let mut queue = std::collections::VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            if v == goal {
                break;
            }
            for &(w, e) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    prev[w] = Some((v, e));
                    queue.push_back(w);
                }
            }
        }
        if !seen[goal] {
            return None; // not weakly reversible after all
        }
        flow[ridx] += 1;
        let mut at = goal;
        while at != start {
            let (v, e) = prev[at].expect("path recorded");
            flow[e] += 1;
            at = v;
        }
    }
    let values: Vec<Rat> = flow
        .into_iter()
        .map(|f| Rat::from_integer(Int::from(f)))
        .collect();
    RateAssignment::new(values).ok()
}

/// Sign-definite polynomials have no zero in the open positive orthant.
pub fn no_positive_root_certificate(p: &RatePoly) -> Option<SignSummary> {
    match p.sign_summary() {
        s @ (SignSummary::AllPositive | SignSummary::AllNegative) => Some(s),
        _ => None,
    }
}

/// Result of eliminating one symbol between a linear generator and another.
#[derive(Clone, Debug)]
pub struct CompositeElimination {
    pub linear: RatePoly,
    pub other: RatePoly,
    pub symbol: usize,
    /// Primitive form of the eliminated polynomial.
    pub eliminated: RatePoly,
    pub sign: SignSummary,
}

/// Try every (linear-in-one-symbol, other) generator pair: substitute the
/// symbol out, clear denominators, and keep sign-definite outcomes. The
/// linear coefficient must itself be sign-definite so the substitution
/// covers the whole positive orthant.
pub fn composite_eliminations(generators: &[&RatePoly]) -> Vec<CompositeElimination> {
    let mut out = Vec::new();
    for (i, g) in generators.iter().enumerate() {
        let nsyms = g.nsyms();
        for s in 0..nsyms {
            if g.degree_in(s) != 1 {
                continue;
            }
            let coeffs = g.coeffs_in(s);
            let a = coeffs.get(&1).cloned().unwrap_or_else(|| RatePoly::zero(nsyms));
            let b = coeffs.get(&0).cloned().unwrap_or_else(|| RatePoly::zero(nsyms));
            if no_positive_root_certificate(&a).is_none() {
                continue;
            }
            for (j, h) in generators.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = h.degree_in(s);
                if d == 0 {
                    continue;
                }
                // h(s -> -b/a) * a^d, exactly.
                let hcoeffs = h.coeffs_in(s);
                let minus_b = b.neg();
                let mut result = RatePoly::zero(nsyms);
                for (deg, coeff) in &hcoeffs {
                    let mut term = coeff.clone();
                    for _ in 0..*deg {
                        term = term.mul(&minus_b);
                    }
                    for _ in 0..(d - *deg) {
                        term = term.mul(&a);
                    }
                    result = result.add(&term);
                }
                if result.is_zero() {
                    continue;
                }
                let prim = primitive_part(&result).expect("nonzero").primitive;
                if let Some(sign) = no_positive_root_certificate(&prim) {
                    out.push(CompositeElimination {
                        linear: (*g).clone(),
                        other: (*h).clone(),
                        symbol: s,
                        eliminated: prim,
                        sign,
                    });
                }
            }
        }
    }
    out
}

/// Exhaustive residual check at a single rate point through `l_max`.
#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub product_form_consistent: bool,
    pub violated_relation: Option<(RelationInstance, Rat)>,
    pub through_level: u32,
}

/// Evaluate all relation residuals exactly at `a`; consistent iff all
/// vanish. The relation floor is the mechanical kernel floor, matching the
/// symbolic generator sets.
pub fn witness_check(
    net: &ReactionNetwork,
    a: &RateAssignment,
    l_max: u32,
) -> Result<WitnessReport, ClassifyError> {
    if structure::conservation_vector(net).is_none() {
        return Err(ClassifyError::NotConservative);
    }
    let kernels = LevelKernels::compute(net, l_max)?;
    let floor = kernels.floor_for(l_max).unwrap_or(l_max);
    let rep = relation_residuals(net, a, l_max, floor)?;
    Ok(WitnessReport {
        product_form_consistent: rep.all_zero(),
        violated_relation: rep.violation().cloned(),
        through_level: l_max,
    })
}

/// Classification options; the seed fixes witness sampling, making reports
/// byte-identical across runs.
#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    pub levels: u32,
    pub seed: u64,
    pub witness_rates: Vec<RateAssignment>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { levels: 6, seed: 1, witness_rates: Vec::new() }
    }
}

struct GeneratorView<'a> {
    generator: &'a Generator,
    /// Lowest ideal level the generator appears at.
    level: u32,
    sound: bool,
}

/// Decide the trichotomy for a conservative network.
pub fn classify(
    net: &ReactionNetwork,
    options: &ClassifyOptions,
) -> Result<ClassificationReport, ClassifyError> {
    let levels = options.levels;
    let report = structure::structure_report(net);
    if report.conservation.is_none() {
        return Err(ClassifyError::NotConservative);
    }
    let mut caveats: Vec<String> = Vec::new();
    let mut certificates: Vec<Certificate> = Vec::new();

    // Structural shortcut: deficiency zero + weak reversibility is complex
    // balanced at every rate, hence Poisson product form at every rate.
    if report.deficiency == 0 && report.reversibility.is_weakly_reversible() {
        certificates.push(Certificate::DeficiencyZeroWeaklyReversible);
        return Ok(ClassificationReport {
            verdict: Verdict::I,
            certainty: Certainty::Certified,
            certificates,
            caveats,
            levels_computed: 0,
            q: None,
            deficiency: report.deficiency,
            reversibility: report.reversibility,
        });
    }

    if !report.unit_conservative {
        caveats.push(
            "total molecule count is not conserved: the level-simplex decomposition and its \
             compatibility relations are unavailable, so no certificate search can run"
                .into(),
        );
        return Ok(ClassificationReport {
            verdict: Verdict::Inconclusive,
            certainty: Certainty::Bounded(0),
            certificates,
            caveats,
            levels_computed: 0,
            q: None,
            deficiency: report.deficiency,
            reversibility: report.reversibility,
        });
    }

    let profile = index_profile(net, levels as usize)?;
    let q = profile.q;
    let kernels = LevelKernels::compute(net, levels)?;
    let Some(floor) = kernels.floor_for(levels) else {
        caveats.push("no contiguous kernel range below the level bound".into());
        return Ok(ClassificationReport {
            verdict: Verdict::Inconclusive,
            certainty: Certainty::Bounded(levels),
            certificates,
            caveats,
            levels_computed: levels,
            q,
            deficiency: report.deficiency,
            reversibility: report.reversibility,
        });
    };
    let gens = ideal_level(net, &kernels, levels, floor)?;

    let n_species = net.num_species();
    let sufficiency_available = match q {
        Some(1) => true,
        Some(2) if n_species == 2 => true, // two-species special case
        _ => false,
    };
    if !sufficiency_available {
        caveats.push(match q {
            Some(q) => format!(
                "index set Z_>={q}: the compatibility relations are necessary conditions only"
            ),
            None => "component range undetermined below the level bound; relations are \
                     necessary conditions only"
                .to_string(),
        });
    }

    // Annotate generators with their first level and soundness.
    let views: Vec<GeneratorView> = gens
        .generators
        .iter()
        .map(|g| {
            let level = g
                .provenance
                .iter()
                .map(|p| p.instance.max_level())
                .min()
                .unwrap_or(levels);
            let sound = match q {
                Some(q) => g.sound_from(q),
                None => false,
            };
            GeneratorView { generator: g, level, sound }
        })
        .collect();

    // N search: direct sign-definite generators first, then composite
    // eliminations; sound certificates preferred, then lowest level.
    let mut direct: Vec<&GeneratorView> = views
        .iter()
        .filter(|v| no_positive_root_certificate(&v.generator.primitive).is_some())
        .collect();
    direct.sort_by_key(|v| (!v.sound, v.level, v.generator.primitive.clone()));
    if let Some(v) = direct.first() {
        if !v.sound {
            caveats.push(format!(
                "the positivity certificate uses relation levels below the verified component \
                 range (paper convention: boundary-supported stationary vectors at levels < {})",
                q.map(|q| q.to_string()).unwrap_or_else(|| "?".into())
            ));
        }
        certificates.push(Certificate::NoPositiveRoot {
            generator: v.generator.primitive.clone(),
            sign: v.generator.sign,
            level: v.level,
            sound: v.sound,
        });
        return Ok(ClassificationReport {
            verdict: Verdict::N,
            certainty: Certainty::Certified,
            certificates,
            caveats,
            levels_computed: levels,
            q,
            deficiency: report.deficiency,
            reversibility: report.reversibility,
        });
    }
    // Composite search over sound generators first, then everything.
    for sound_only in [true, false] {
        let pool: Vec<&GeneratorView> = views
            .iter()
            .filter(|v| !sound_only || v.sound)
            .collect();
        let polys: Vec<&RatePoly> = pool.iter().map(|v| &v.generator.primitive).collect();
        let composites = composite_eliminations(&polys);
        if let Some(c) = composites.first() {
            let level = pool
                .iter()
                .filter(|v| v.generator.primitive == c.linear || v.generator.primitive == c.other)
                .map(|v| v.level)
                .max()
                .unwrap_or(levels);
            let sound = sound_only;
            if !sound {
                caveats.push(
                    "the composite certificate mixes relation levels below the verified \
                     component range"
                        .into(),
                );
            }
            certificates.push(Certificate::CompositeNoPositiveRoot {
                linear: c.linear.clone(),
                other: c.other.clone(),
                symbol: c.symbol,
                eliminated: c.eliminated.clone(),
                level,
                sound,
            });
            return Ok(ClassificationReport {
                verdict: Verdict::N,
                certainty: Certainty::Certified,
                certificates,
                caveats,
                levels_computed: levels,
                q,
                deficiency: report.deficiency,
                reversibility: report.reversibility,
            });
        }
        if !sound_only {
            break;
        }
    }

    // All relations identically zero: bounded "all rates" evidence, valid
    // only where the sufficiency theorem applies from level one.
    if gens.is_trivial() {
        if q == Some(1) {
            caveats.push(format!(
                "every compatibility relation vanishes identically through level {levels}; \
                 ideal-chain stabilisation beyond that is not verifiable without \
                 ideal-membership machinery"
            ));
            certificates.push(Certificate::AllRelationsVanish { through_level: levels });
            return Ok(ClassificationReport {
                verdict: Verdict::I,
                certainty: Certainty::Bounded(levels),
                certificates,
                caveats,
                levels_computed: levels,
                q,
                deficiency: report.deficiency,
                reversibility: report.reversibility,
            });
        }
        caveats.push(format!(
            "relations vanish through level {levels} but the component range starts above \
             level one, where the sufficiency direction is unavailable"
        ));
        return Ok(ClassificationReport {
            verdict: Verdict::Inconclusive,
            certainty: Certainty::Bounded(levels),
            certificates,
            caveats,
            levels_computed: levels,
            q,
            deficiency: report.deficiency,
            reversibility: report.reversibility,
        });
    }

    // Mixed-sign generators: the variety is a proper subset of rate space.
    // Hunt for one point on it (product form) and one off it (violation).
    let sound_mixed: Vec<&GeneratorView> = views.iter().filter(|v| v.sound).collect();
    let search_pool: &[&GeneratorView] = if sound_mixed.is_empty() {
        &views.iter().collect::<Vec<_>>()[..]
    } else {
        &sound_mixed[..]
    };

    // Off-variety point: sample until some generator evaluates nonzero, then
    // re-verify via an independent exact stationary solve of one of its
    // originating instances.
    let mut violation: Option<Certificate> = None;
    let mut rng = Rng::new(options.seed);
    'search: for _ in 0..200 {
        let a = match RateAssignment::new(rng.rationals(net.symbols.len(), 20)) {
            Ok(a) => a,
            Err(_) => continue,
        };
        for v in search_pool {
            if v.generator.primitive.evaluate(a.values()).is_zero() {
                continue;
            }
            let inst = v
                .generator
                .provenance
                .iter()
                .map(|p| &p.instance)
                .min_by_key(|i| i.max_level())
                .expect("generator has provenance");
            let mut solver = StationarySolver::new(net, &a);
            let residual = solver.residual(inst)?;
            if residual.is_zero() {
                continue; // normalisation cancelled it; keep hunting
            }
            violation = Some(Certificate::RelationViolationWitness {
                rates: a.values().to_vec(),
                instance: inst.clone(),
                residual,
            });
            break 'search;
        }
    }

    // On-variety point: a constructed complex-balance point for weakly
    // reversible networks (certified at all levels); otherwise user-supplied
    // witnesses and the all-ones point, checked exhaustively through the
    // computed levels (bounded evidence).
    let mut product_side: Option<(Certificate, bool)> = None;
    if report.reversibility.is_weakly_reversible() {
        if let Some(kappa) = circulation_rates(net) {
            let cb = complex_balance(net, &kappa);
            assert!(cb.balanced, "circulation rates are complex balanced by construction");
            product_side = Some((
                Certificate::ComplexBalanceWitness {
                    rates: kappa.values().to_vec(),
                    point_c: cb.point_c,
                },
                true,
            ));
        }
    }
    if product_side.is_none() {
        let mut candidates = options.witness_rates.clone();
        candidates.push(RateAssignment::ones(net.symbols.len()));
        for cand in candidates {
            if cand.len() != net.symbols.len() {
                continue;
            }
            let rep = relation_residuals(net, &cand, levels, floor)?;
            if rep.all_zero() {
                product_side = Some((
                    Certificate::BoundedProductFormEvidence {
                        rates: cand.values().to_vec(),
                        through_level: levels,
                    },
                    false,
                ));
                break;
            }
        }
    }

    match (product_side, violation) {
        (Some((pf_cert, certified)), Some(viol_cert)) => {
            let certainty = if certified && sufficiency_available {
                Certainty::Certified
            } else {
                if certified && !sufficiency_available {
                    caveats.push(
                        "complex balance certifies the product-form point; the violation \
                         point rests on necessity only"
                            .into(),
                    );
                } else {
                    caveats.push(format!(
                        "the product-form witness is verified through level {levels} only"
                    ));
                }
                Certainty::Bounded(levels)
            };
            certificates.push(pf_cert);
            certificates.push(viol_cert);
            Ok(ClassificationReport {
                verdict: Verdict::E,
                certainty,
                certificates,
                caveats,
                levels_computed: levels,
                q,
                deficiency: report.deficiency,
                reversibility: report.reversibility,
            })
        }
        (None, Some(viol_cert)) => {
            certificates.push(viol_cert);
            caveats.push(
                "found rates without product form but no product-form witness; supply one \
                 via the witness option to upgrade towards a some-rates verdict"
                    .into(),
            );
            Ok(ClassificationReport {
                verdict: Verdict::Inconclusive,
                certainty: Certainty::Bounded(levels),
                certificates,
                caveats,
                levels_computed: levels,
                q,
                deficiency: report.deficiency,
                reversibility: report.reversibility,
            })
        }
        (product_side, None) => {
            if let Some((pf_cert, _)) = product_side {
                certificates.push(pf_cert);
            }
            caveats.push(
                "nonzero relations exist but no violating rate point was found in the \
                 sample budget"
                    .into(),
            );
            Ok(ClassificationReport {
                verdict: Verdict::Inconclusive,
                certainty: Certainty::Bounded(levels),
                certificates,
                caveats,
                levels_computed: levels,
                q,
                deficiency: report.deficiency,
                reversibility: report.reversibility,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_network, NetworkSource};

    fn net(text: &str) -> ReactionNetwork {
        parse_network(&NetworkSource::inline(text)).unwrap()
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(Int::from(n), Int::from(d))
    }

    fn triangle() -> ReactionNetwork {
        net("2 S1 -> 2 S2 [alpha]; 2 S2 -> S1 + S2 [beta]; S1 + S2 -> 2 S1 [gamma]")
    }

    #[test]
    fn triangle_balance_is_gamma_squared_equals_alpha_beta() {
        let t = triangle();
        let ones = RateAssignment::ones(3);
        let res = complex_balance(&t, &ones);
        assert!(res.balanced);
        assert_eq!(res.point_c, Some(vec![Rat::one(), Rat::one()]));

        let off = RateAssignment::new(vec![rat(1, 1), rat(1, 1), rat(2, 1)]).unwrap();
        assert!(!complex_balance(&t, &off).balanced);

        // gamma^2 = alpha beta with alpha=4, beta=1, gamma=2.
        let on = RateAssignment::new(vec![rat(4, 1), rat(1, 1), rat(2, 1)]).unwrap();
        assert!(complex_balance(&t, &on).balanced);
    }

    #[test]
    fn deficiency_zero_network_is_balanced_everywhere() {
        let w1 = net("S1 <-> S2 [a, b]");
        let mut rng = Rng::new(5);
        for _ in 0..20 {
            let a = RateAssignment::new(rng.rationals(2, 20)).unwrap();
            let res = complex_balance(&w1, &a);
            assert!(res.balanced);
            // Poisson point proportional to (b, a).
            let c = res.point_c.unwrap();
            assert_eq!(&c[0] * a.get(0), &c[1] * a.get(1));
        }
    }

    #[test]
    fn non_weakly_reversible_is_never_balanced() {
        let nw1 = net("S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]");
        let res = complex_balance(&nw1, &RateAssignment::ones(2));
        assert!(!res.balanced);
        assert!(!res.caveats.is_empty());
    }

    #[test]
    fn circulation_balances_any_weakly_reversible_network() {
        for text in [
            "S1 <-> S2 [a, b]",
            "S1 <-> S2 [a, b]; 2 S1 <-> 2 S2 [c, d]",
            "2 S1 -> 2 S2 [alpha]; 2 S2 -> S1 + S2 [beta]; S1 + S2 -> 2 S1 [gamma]",
        ] {
            let n = net(text);
            let kappa = circulation_rates(&n).unwrap();
            assert!(complex_balance(&n, &kappa).balanced, "{text}");
        }
        assert!(circulation_rates(&net("S1 -> S2 [b]; 2 S2 -> 2 S1 [a]")).is_none());
    }

    #[test]
    fn composite_elimination_reproduces_the_resolvent() {
        // 6x - 6y + 7z and z^2 + (2x - 6y)z + x^2 - 5xy eliminate y into a
        // positive multiple of 24x^2 + 59xz + 36z^2.
        let mut table = crate::poly::SymbolTable::new();
        for s in ["x", "y", "z"] {
            table.intern(s);
        }
        let p = |terms: &[(i64, [u16; 3])]| {
            let mut out = RatePoly::zero(3);
            for (c, e) in terms {
                out.add_term(
                    crate::poly::Monomial::from_exps(e.to_vec()),
                    Rat::from_integer(Int::from(*c)),
                );
            }
            out
        };
        let linear = p(&[(6, [1, 0, 0]), (-6, [0, 1, 0]), (7, [0, 0, 1])]);
        let quad = p(&[
            (1, [0, 0, 2]),
            (2, [1, 0, 1]),
            (-6, [0, 1, 1]),
            (1, [2, 0, 0]),
            (-5, [1, 1, 0]),
        ]);
        let gens = [&linear, &quad];
        let found = composite_eliminations(&gens);
        let expect = p(&[(24, [2, 0, 0]), (59, [1, 0, 1]), (36, [0, 0, 2])]);
        assert!(found.iter().any(|c| c.eliminated == expect));
    }
}
