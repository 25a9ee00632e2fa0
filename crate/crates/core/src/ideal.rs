//! Compatibility relations for product form, pushed through the level
//! kernels into rate-space polynomials, and the per-level generator sets
//! they produce.
//!
//! A kind-(a) relation equates two ratios of stationary values across
//! adjacent levels; a kind-(b) relation equates two four-point products
//! across three consecutive levels. Substituting the polynomial kernel entry
//! for each stationary value turns a relation into a rate polynomial that
//! must vanish wherever the network has product form. Generators are stored
//! in primitive canonical form; provenance keeps the pre-normalisation
//! content so reported values are reproducible from the logs.

use std::collections::BTreeMap;

use crate::kernel::{kernel_vector_with_hint, master_matrix_on, product_form_hint, KernelVector};
use crate::network::ReactionNetwork;
use crate::poly::{primitive_part, Monomial, RatePoly, SignSummary};
use crate::state::{analyze_level, simplex_states, State, StateSpaceError};
use crate::Rat;

/// One instance of a compatibility relation, pinned to concrete states.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RelationInstance {
    /// `pi_i(x + e_j - e_k) pi_{i+1}(y) = pi_{i+1}(y + e_j - e_k) pi_i(x)`
    /// with `x_j = y_j` and `x_k = y_k`.
    A {
        base: u32,
        x: State,
        j: usize,
        k: usize,
        y: State,
    },
    /// `pi_{i+1}(x+e_j) pi_{i+1}(y) pi_{i+2}(w+e_k) pi_i(z)
    ///  = pi_{i+1}(z+e_k) pi_{i+1}(w) pi_{i+2}(y+e_j) pi_i(x)`
    /// with `x_j = y_j` and `z_k = w_k`.
    B {
        base: u32,
        x: State,
        j: usize,
        y: State,
        z: State,
        k: usize,
        w: State,
    },
}

impl RelationInstance {
    pub fn base(&self) -> u32 {
        match self {
            RelationInstance::A { base, .. } | RelationInstance::B { base, .. } => *base,
        }
    }

    /// Highest level the instance touches.
    pub fn max_level(&self) -> u32 {
        match self {
            RelationInstance::A { base, .. } => base + 1,
            RelationInstance::B { base, .. } => base + 2,
        }
    }

    /// The two formal products as `(level, state)` factor lists.
    pub fn products(&self) -> (Vec<(u32, State)>, Vec<(u32, State)>) {
        match self {
            RelationInstance::A { base, x, j, k, y } => {
                let i = *base;
                let xs = shift(x, *j, *k);
                let ys = shift(y, *j, *k);
                (
                    vec![(i, xs), (i + 1, y.clone())],
                    vec![(i + 1, ys), (i, x.clone())],
                )
            }
            RelationInstance::B { base, x, j, y, z, k, w } => {
                let i = *base;
                (
                    vec![
                        (i + 1, bump(x, *j)),
                        (i + 1, y.clone()),
                        (i + 2, bump(w, *k)),
                        (i, z.clone()),
                    ],
                    vec![
                        (i + 1, bump(z, *k)),
                        (i + 1, w.clone()),
                        (i + 2, bump(y, *j)),
                        (i, x.clone()),
                    ],
                )
            }
        }
    }

    /// Both formal products coincide, so the relation is identically zero
    /// before any substitution.
    pub fn is_degenerate(&self) -> bool {
        let (mut lhs, mut rhs) = self.products();
        lhs.sort();
        rhs.sort();
        lhs == rhs
    }

    pub fn describe(&self) -> String {
        let (lhs, rhs) = self.products();
        let side = |factors: &[(u32, State)]| {
            factors
                .iter()
                .map(|(l, s)| format!("pi_{l}{s}"))
                .collect::<Vec<_>>()
                .join("*")
        };
        format!("{} - {}", side(&lhs), side(&rhs))
    }
}

fn bump(s: &State, j: usize) -> State {
    let mut v = s.0.clone();
    v[j] += 1;
    State(v)
}

fn shift(s: &State, j: usize, k: usize) -> State {
    let mut v = s.0.clone();
    v[j] += 1;
    v[k] -= 1;
    State(v)
}

/// All kind-(a) instances at base level `i`, deduplicated under the
/// orientation swap. Empty for two species: the side conditions force equal
/// level sums there.
pub fn enumerate_relations_a(n: usize, i: u32) -> Vec<RelationInstance> {
    let mut out = Vec::new();
    let lower = simplex_states(n, i);
    let upper = simplex_states(n, i + 1);
    for x in &lower {
        for j in 0..n {
            for k in 0..n {
                if j == k || x.0[k] == 0 {
                    continue;
                }
                for y in &upper {
                    if y.0[j] != x.0[j] || y.0[k] != x.0[k] {
                        continue;
                    }
                    let inst = RelationInstance::A {
                        base: i,
                        x: x.clone(),
                        j,
                        k,
                        y: y.clone(),
                    };
                    // The swapped orientation negates the relation; keep one.
                    let swapped = RelationInstance::A {
                        base: i,
                        x: shift(x, j, k),
                        j: k,
                        k: j,
                        y: shift(y, j, k),
                    };
                    if inst <= swapped {
                        out.push(inst);
                    }
                }
            }
        }
    }
    out
}

/// All kind-(b) instances at base level `i`, deduplicated under the swap and
/// with degenerate instances dropped.
pub fn enumerate_relations_b(n: usize, i: u32) -> Vec<RelationInstance> {
    // A half-instance: x in the base simplex, a direction j, and y one level
    // up with y_j = x_j.
    let mut triples: Vec<(State, usize, State)> = Vec::new();
    let lower = simplex_states(n, i);
    let upper = simplex_states(n, i + 1);
    for x in &lower {
        for j in 0..n {
            for y in &upper {
                if y.0[j] == x.0[j] {
                    triples.push((x.clone(), j, y.clone()));
                }
            }
        }
    }
    let mut out = Vec::new();
    for (a, t1) in triples.iter().enumerate() {
        for t2 in triples.iter().skip(a + 1) {
            let inst = RelationInstance::B {
                base: i,
                x: t1.0.clone(),
                j: t1.1,
                y: t1.2.clone(),
                z: t2.0.clone(),
                k: t2.1,
                w: t2.2.clone(),
            };
            if !inst.is_degenerate() {
                out.push(inst);
            }
        }
    }
    out
}

/// Level kernels, computed mechanically on every level simplex whose master
/// matrix has corank one. Levels below the component range carry kernels
/// supported on their unique closed class; `genuine` marks the levels that
/// are verified single irreducible components.
#[derive(Clone, Debug)]
pub struct LevelKernels {
    kernels: BTreeMap<u32, KernelVector>,
    genuine: BTreeMap<u32, bool>,
    pub l_max: u32,
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum IdealError {
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error("kernel computation failed at level {level}: {source}")]
    Kernel {
        level: u32,
        source: crate::kernel::KernelError,
    },
    #[error("no kernel available at level {0}")]
    MissingLevel(u32),
    #[error("state {state} not present in the level-{level} kernel")]
    MissingState { level: u32, state: String },
}

impl LevelKernels {
    /// Compute kernels for levels `1..=l_max`.
    pub fn compute(net: &ReactionNetwork, l_max: u32) -> Result<Self, IdealError> {
        let mut kernels: BTreeMap<u32, KernelVector> = BTreeMap::new();
        let mut genuine = BTreeMap::new();
        for level in 1..=l_max {
            let a = analyze_level(net, level)?;
            if !a.corank_one {
                continue;
            }
            let m = master_matrix_on(net, Some(level), &a.states, &a.transitions);
            // Try assembling the level from the two below it before falling
            // back to elimination; the annihilation check certifies either way.
            let hint = if m.dim() > 10 && level >= 3 {
                match (kernels.get(&(level - 1)), kernels.get(&(level - 2))) {
                    (Some(k1), Some(k2)) => product_form_hint(&m, k1, k2),
                    _ => None,
                }
            } else {
                None
            };
            let k = kernel_vector_with_hint(&m, a.is_single_component, hint)
                .map_err(|source| IdealError::Kernel { level, source })?;
            kernels.insert(level, k);
            genuine.insert(level, a.is_single_component);
        }
        Ok(Self { kernels, genuine, l_max })
    }

    pub fn get(&self, level: u32) -> Option<&KernelVector> {
        self.kernels.get(&level)
    }

    pub fn is_genuine(&self, level: u32) -> bool {
        self.genuine.get(&level).copied().unwrap_or(false)
    }

    pub fn entry(&self, level: u32, state: &State) -> Result<&RatePoly, IdealError> {
        let k = self.kernels.get(&level).ok_or(IdealError::MissingLevel(level))?;
        k.entry_for(state).ok_or_else(|| IdealError::MissingState {
            level,
            state: state.to_string(),
        })
    }

    /// Least level `f` such that kernels exist for every level in `f..=j`.
    pub fn floor_for(&self, j: u32) -> Option<u32> {
        let mut floor = None;
        for level in 1..=j {
            if self.kernels.contains_key(&level) {
                if floor.is_none() {
                    floor = Some(level);
                }
            } else {
                floor = None;
            }
        }
        floor
    }

    fn nsyms(&self) -> usize {
        self.kernels
            .values()
            .next()
            .and_then(|k| k.entries.first().map(|e| e.nsyms()))
            .unwrap_or(0)
    }
}

/// Substitute kernel entries into a relation instance: the exact difference
/// of its two products.
pub fn relation_to_rate_poly(
    rel: &RelationInstance,
    kernels: &LevelKernels,
) -> Result<RatePoly, IdealError> {
    let (lhs, rhs) = rel.products();
    let nsyms = kernels.nsyms();
    let prod = |factors: &[(u32, State)]| -> Result<RatePoly, IdealError> {
        let mut acc = RatePoly::one(nsyms);
        for (level, state) in factors {
            let e = kernels.entry(*level, state)?;
            if e.is_zero() {
                return Ok(RatePoly::zero(nsyms));
            }
            acc = acc.mul(e);
        }
        Ok(acc)
    };
    Ok(prod(&lhs)?.sub(&prod(&rhs)?))
}

/// Where a generator came from: the instance plus the normalisation record,
/// so `sign * content * monomial * primitive` reconstructs the raw
/// substituted difference.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub instance: RelationInstance,
    pub content: Rat,
    pub content_monomial: Monomial,
    pub flipped: bool,
}

/// A deduplicated primitive generator with its originating instances.
#[derive(Clone, Debug)]
pub struct Generator {
    pub primitive: RatePoly,
    pub sign: SignSummary,
    pub provenance: Vec<Provenance>,
}

impl Generator {
    /// Whether some contributing instance stays within verified component
    /// levels (base at or above the component range start).
    pub fn sound_from(&self, q: u32) -> bool {
        self.provenance.iter().any(|p| p.instance.base() >= q)
    }
}

/// All generators with relation levels inside `floor..=level`.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub level: u32,
    pub generators: Vec<Generator>,
    /// Instances whose substituted difference vanished identically.
    pub zero_relation_count: usize,
}

impl GeneratorSet {
    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Enumerate every admissible instance with base in `floor..` and all levels
/// at most `j`.
pub fn instances_up_to(n: usize, floor: u32, j: u32) -> Vec<RelationInstance> {
    let mut out = Vec::new();
    for i in floor..=j {
        if i + 1 <= j {
            out.extend(enumerate_relations_a(n, i));
        }
        if i + 2 <= j {
            out.extend(enumerate_relations_b(n, i));
        }
    }
    out
}

/// Generator set at ideal level `j`: all relation instances whose levels fit
/// inside `floor..=j`, substituted through the kernels and deduplicated by
/// canonical primitive form.
pub fn ideal_level(
    net: &ReactionNetwork,
    kernels: &LevelKernels,
    j: u32,
    floor: u32,
) -> Result<GeneratorSet, IdealError> {
    let n = net.num_species();
    let mut zero_count = 0usize;
    let mut dedup: BTreeMap<RatePoly, Generator> = BTreeMap::new();
    for inst in instances_up_to(n, floor, j) {
        let poly = relation_to_rate_poly(&inst, kernels)?;
        if poly.is_zero() {
            zero_count += 1;
            continue;
        }
        let pp = primitive_part(&poly).expect("nonzero");
        let prov = Provenance {
            instance: inst,
            content: pp.content.clone(),
            content_monomial: pp.monomial.clone(),
            flipped: pp.flipped,
        };
        match dedup.entry(pp.primitive.clone()) {
            std::collections::btree_map::Entry::Vacant(e) => {
                let sign = pp.primitive.sign_summary();
                e.insert(Generator {
                    primitive: pp.primitive,
                    sign,
                    provenance: vec![prov],
                });
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                e.get_mut().provenance.push(prov);
            }
        }
    }
    Ok(GeneratorSet {
        level: j,
        generators: dedup.into_values().collect(),
        zero_relation_count: zero_count,
    })
}

/// Per-level growth of the canonical generator set. `floor` should be the
/// verified component range start: the scan reports the chain the
/// sufficiency theory actually speaks about, so canonical-form novelty is
/// counted over sound levels only.
#[derive(Clone, Debug)]
pub struct StabilizationScan {
    pub first_nonzero_level: Option<u32>,
    /// `(level, newly appearing canonical generators)`.
    pub new_generator_counts: Vec<(u32, usize)>,
    /// Trailing levels contributing nothing new. Canonical-form novelty is
    /// weaker than ideal-chain stabilisation; a stable suffix is evidence,
    /// not proof.
    pub stable_suffix_length: usize,
}

pub fn stabilization_scan(
    net: &ReactionNetwork,
    kernels: &LevelKernels,
    j_max: u32,
    floor: u32,
) -> Result<StabilizationScan, IdealError> {
    let mut seen: BTreeMap<RatePoly, ()> = BTreeMap::new();
    let mut first_nonzero = None;
    let mut counts = Vec::new();
    for j in floor..=j_max {
        let set = ideal_level(net, kernels, j, floor)?;
        let mut new_here = 0usize;
        for g in &set.generators {
            if seen.insert(g.primitive.clone(), ()).is_none() {
                new_here += 1;
            }
        }
        if new_here > 0 && first_nonzero.is_none() {
            first_nonzero = Some(j);
        }
        counts.push((j, new_here));
    }
    let stable_suffix_length = counts
        .iter()
        .rev()
        .take_while(|(_, c)| *c == 0)
        .count();
    Ok(StabilizationScan {
        first_nonzero_level: first_nonzero,
        new_generator_counts: counts,
        stable_suffix_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_network, NetworkSource};
    use crate::Int;

    fn net(text: &str) -> ReactionNetwork {
        parse_network(&NetworkSource::inline(text)).unwrap()
    }

    fn nw1() -> ReactionNetwork {
        net("S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]")
    }

    fn nw2() -> ReactionNetwork {
        net("S1 <-> S2 [alpha, beta]; 2 S1 -> 2 S2 [lambda1]")
    }

    fn nw3() -> ReactionNetwork {
        net("S1 -> S2 [alpha]; 2 S1 <-> 2 S2 [lambda1, lambda2]")
    }

    fn canonical(inst: &RelationInstance) -> (Vec<(u32, State)>, Vec<(u32, State)>) {
        let (mut l, mut r) = inst.products();
        l.sort();
        r.sort();
        if l <= r {
            (l, r)
        } else {
            (r, l)
        }
    }

    #[test]
    fn kind_a_is_empty_for_two_species() {
        for i in 1..=5 {
            assert!(enumerate_relations_a(2, i).is_empty());
        }
    }

    #[test]
    fn kind_a_exists_for_three_species() {
        let insts = enumerate_relations_a(3, 1);
        assert!(!insts.is_empty());
        // x=(1,0,0), move from species 1 into species 3, y=(1,1,0):
        // pi_1(0,0,1) pi_2(1,1,0) = pi_2(0,1,1) pi_1(1,0,0).
        let target = RelationInstance::A {
            base: 1,
            x: State(vec![1, 0, 0]),
            j: 2,
            k: 0,
            y: State(vec![1, 1, 0]),
        };
        assert!(insts.iter().any(|i| canonical(i) == canonical(&target)));
    }

    #[test]
    fn kind_b_contains_the_worked_level_four_element() {
        let insts = enumerate_relations_b(2, 2);
        let target = RelationInstance::B {
            base: 2,
            x: State(vec![0, 2]),
            j: 0,
            y: State(vec![0, 3]),
            z: State(vec![1, 1]),
            k: 0,
            w: State(vec![1, 2]),
        };
        assert!(insts.iter().any(|i| canonical(i) == canonical(&target)));
        assert!(insts.iter().all(|i| !i.is_degenerate()));
    }

    #[test]
    fn degenerate_instance_detection() {
        let inst = RelationInstance::B {
            base: 1,
            x: State(vec![1, 0]),
            j: 0,
            y: State(vec![1, 1]),
            z: State(vec![1, 0]),
            k: 0,
            w: State(vec![1, 1]),
        };
        assert!(inst.is_degenerate());
    }

    #[test]
    fn worked_level_four_element_substitutes_to_minus_144() {
        let n = nw1();
        let kernels = LevelKernels::compute(&n, 4).unwrap();
        let inst = RelationInstance::B {
            base: 2,
            x: State(vec![0, 2]),
            j: 0,
            y: State(vec![0, 3]),
            z: State(vec![1, 1]),
            k: 0,
            w: State(vec![1, 2]),
        };
        let poly = relation_to_rate_poly(&inst, &kernels).unwrap();
        // -144 * alpha^3 beta^5 in declaration order (beta, alpha).
        let mut expect = RatePoly::zero(2);
        expect.add_term(
            Monomial::from_exps(vec![5, 3]),
            Rat::from_integer(Int::from(-144)),
        );
        assert_eq!(poly, expect);
        let pp = primitive_part(&poly).unwrap();
        assert!(pp.flipped);
        assert_eq!(pp.content, Rat::from_integer(Int::from(144)));
        assert_eq!(pp.monomial, Monomial::from_exps(vec![5, 3]));
        assert_eq!(pp.primitive, RatePoly::one(2));
    }

    /// Some generator's `content * monomial * primitive` equals a positive
    /// rational multiple of `target`.
    fn contains_positive_multiple(set: &GeneratorSet, target: &RatePoly) -> bool {
        set.generators.iter().any(|g| {
            g.provenance.iter().any(|p| {
                let reassembled = g
                    .primitive
                    .mul_monomial(&p.content_monomial)
                    .scale(&p.content);
                match reassembled.div_exact(target) {
                    Some(q) if q.num_terms() == 1 => q
                        .leading_term()
                        .map(|(m, c)| m.is_one() && num_traits::Signed::is_positive(c))
                        .unwrap_or(false),
                    _ => false,
                }
            })
        })
    }

    #[test]
    fn nw2_level_three_ideal_contains_the_reported_polynomial() {
        let n = nw2();
        let kernels = LevelKernels::compute(&n, 3).unwrap();
        let floor = kernels.floor_for(3).unwrap();
        assert_eq!(floor, 1);
        assert!(kernels.is_genuine(1));
        let set = ideal_level(&n, &kernels, 3, floor).unwrap();
        // beta^5 lambda1^2 (alpha + lambda1), symbols (alpha, beta, lambda1).
        let mut target = RatePoly::zero(3);
        target.add_term(Monomial::from_exps(vec![1, 5, 2]), Rat::from_integer(Int::from(1)));
        target.add_term(Monomial::from_exps(vec![0, 5, 3]), Rat::from_integer(Int::from(1)));
        assert!(contains_positive_multiple(&set, &target));
    }

    #[test]
    fn nw3_level_three_ideal_contains_the_reported_polynomial() {
        let n = nw3();
        let kernels = LevelKernels::compute(&n, 3).unwrap();
        let floor = kernels.floor_for(3).unwrap();
        // Mechanical floor reaches level 1, whose kernel is supported on the
        // absorbing boundary state only.
        assert_eq!(floor, 1);
        assert!(!kernels.is_genuine(1));
        let set = ideal_level(&n, &kernels, 3, floor).unwrap();
        // lambda2^3 (alpha + 2 lambda1), symbols (alpha, lambda1, lambda2).
        let mut target = RatePoly::zero(3);
        target.add_term(Monomial::from_exps(vec![1, 0, 3]), Rat::from_integer(Int::from(1)));
        target.add_term(Monomial::from_exps(vec![0, 1, 3]), Rat::from_integer(Int::from(2)));
        assert!(contains_positive_multiple(&set, &target));
    }

    #[test]
    fn nw1_scan_over_component_levels_first_fires_at_four() {
        let n = nw1();
        let kernels = LevelKernels::compute(&n, 4).unwrap();
        // Component range starts at 2; kind-(b) at base 2 needs level 4.
        let scan = stabilization_scan(&n, &kernels, 4, 2).unwrap();
        assert_eq!(scan.first_nonzero_level, Some(4));
    }

    #[test]
    fn swap_orientations_agree_after_normalisation() {
        let n = nw1();
        let kernels = LevelKernels::compute(&n, 4).unwrap();
        let inst = RelationInstance::B {
            base: 2,
            x: State(vec![0, 2]),
            j: 0,
            y: State(vec![0, 3]),
            z: State(vec![1, 1]),
            k: 0,
            w: State(vec![1, 2]),
        };
        let swapped = RelationInstance::B {
            base: 2,
            x: State(vec![1, 1]),
            j: 0,
            y: State(vec![1, 2]),
            z: State(vec![0, 2]),
            k: 0,
            w: State(vec![0, 3]),
        };
        let p1 = relation_to_rate_poly(&inst, &kernels).unwrap();
        let p2 = relation_to_rate_poly(&swapped, &kernels).unwrap();
        assert_eq!(p1, p2.neg());
        let n1 = primitive_part(&p1).unwrap();
        let n2 = primitive_part(&p2).unwrap();
        assert_eq!(n1.primitive, n2.primitive);
        assert_ne!(n1.flipped, n2.flipped);
    }

    #[test]
    fn type_i_network_has_all_zero_relations() {
        // Reversible unary exchange: product form at every rate.
        let w1 = net("S1 <-> S2 [a, b]");
        let kernels = LevelKernels::compute(&w1, 6).unwrap();
        for j in 1..=6 {
            let set = ideal_level(&w1, &kernels, j, 1).unwrap();
            assert!(set.is_trivial(), "level {j}");
        }
        let scan = stabilization_scan(&w1, &kernels, 6, 1).unwrap();
        assert_eq!(scan.first_nonzero_level, None);
        assert_eq!(scan.stable_suffix_length, 6);
    }

    #[test]
    fn generator_sets_are_monotone() {
        let n = nw2();
        let kernels = LevelKernels::compute(&n, 5).unwrap();
        let mut prev: Vec<RatePoly> = Vec::new();
        for j in 1..=5 {
            let set = ideal_level(&n, &kernels, j, 1).unwrap();
            let current: Vec<RatePoly> =
                set.generators.iter().map(|g| g.primitive.clone()).collect();
            for p in &prev {
                assert!(current.contains(p), "level {j} lost a generator");
            }
            prev = current;
        }
    }

    #[test]
    fn nw2_has_an_all_positive_generator_at_level_three() {
        let n = nw2();
        let kernels = LevelKernels::compute(&n, 3).unwrap();
        let set = ideal_level(&n, &kernels, 3, 1).unwrap();
        assert!(set
            .generators
            .iter()
            .any(|g| g.sign == SignSummary::AllPositive));
    }
}
