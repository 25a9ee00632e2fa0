//! State space of the mass-action chain: propensities, finite irreducible
//! components, and the per-level simplex decomposition required by the
//! compatibility-relation machinery.
//!
//! Components are found by forward closure plus a strong-connectivity check;
//! the simplex shape is then verified rather than assumed, because the
//! sufficiency results are conditional on it and some networks only acquire
//! it above a threshold level.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::network::ReactionNetwork;
use crate::structure;

/// Species counts, indexed like the species table. The derived order is
/// plain lexicographic; in-level listings use [`state_cmp`] instead.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(pub Vec<u32>);

impl State {
    pub fn level(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Apply a reaction's net change; `None` if any coordinate would go
    /// negative.
    pub fn apply(&self, delta: &[i64]) -> Option<State> {
        let mut out = Vec::with_capacity(self.0.len());
        for (x, d) in self.0.iter().zip(delta) {
            let v = *x as i64 + d;
            if v < 0 {
                return None;
            }
            out.push(v as u32);
        }
        Some(State(out))
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({})",
            self.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        )
    }
}

/// Canonical in-level order: descending lexicographic, so `(2,0), (1,1),
/// (0,2)` for level 2 on two species. Matrix layouts downstream match the
/// worked examples entry for entry.
pub fn state_cmp(a: &State, b: &State) -> std::cmp::Ordering {
    a.level().cmp(&b.level()).then_with(|| b.0.cmp(&a.0))
}

/// All states with coordinate sum `level`, in canonical order.
pub fn simplex_states(n: usize, level: u32) -> Vec<State> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n);
    fill(n, level, &mut prefix, &mut out);
    fn fill(n: usize, rest: u32, prefix: &mut Vec<u32>, out: &mut Vec<State>) {
        if prefix.len() == n - 1 {
            prefix.push(rest);
            out.push(State(prefix.clone()));
            prefix.pop();
            return;
        }
        for v in (0..=rest).rev() {
            prefix.push(v);
            fill(n, rest - v, prefix, out);
            prefix.pop();
        }
    }
    out
}

/// Mass-action propensity of a reaction at a state: the exact falling
/// factorial `prod_i x_i (x_i - 1) ... (x_i - nu_i + 1)`, zero when the
/// reactant exceeds the state. The intensity is `coefficient * rate symbol`.
pub fn propensity(net: &ReactionNetwork, reaction: usize, x: &State) -> (u64, usize) {
    let r = &net.reactions[reaction];
    let mut coeff: u64 = 1;
    for (xi, &nu) in x.0.iter().zip(&r.reactant.0) {
        if *xi < nu {
            return (0, r.rate);
        }
        for k in 0..nu {
            coeff = coeff
                .checked_mul((*xi - k) as u64)
                .expect("propensity coefficient fits in u64");
        }
    }
    (coeff, r.rate)
}

/// One admissible jump between enumerated states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionEvent {
    /// Index of the source state in the owning state list.
    pub from: usize,
    /// Index of the target state.
    pub to: usize,
    /// Reaction index (also the rate symbol index).
    pub reaction: usize,
    /// Falling-factorial coefficient; strictly positive.
    pub coeff: u64,
}

/// Structural flags checked against the sufficiency hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ComponentStructureFlags {
    /// The component's states are exactly one full level simplex.
    pub is_full_simplex: bool,
    /// Every reaction is active somewhere on the component.
    pub is_positive: bool,
    /// Full simplex on a unit-conservative network: the shape the
    /// equivalence theorem is stated for.
    pub theorem_hypothesis_met: bool,
}

/// A verified finite irreducible component.
#[derive(Clone, Debug)]
pub struct IrreducibleComponent {
    /// Coordinate sum shared by all states under unit conservation.
    pub level: Option<u32>,
    /// States in canonical order.
    pub states: Vec<State>,
    pub transitions: Vec<TransitionEvent>,
    pub flags: ComponentStructureFlags,
}

impl IrreducibleComponent {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_index(&self, s: &State) -> Option<usize> {
        self.states.iter().position(|x| x == s)
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum StateSpaceError {
    #[error("network is not conservative; component exploration could diverge")]
    NonConservative,
    #[error("seed state dimension {found} does not match species count {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("network does not conserve total molecule count; the level-simplex decomposition is undefined")]
    NotUnitConservative,
    #[error("level bound must be at least 2, got {0}")]
    LevelBoundTooSmall(usize),
}

/// Outcome of seeding exploration at a transient state: the absorbing
/// components reachable from the seed.
#[derive(Clone, Debug)]
pub struct NotInComponent {
    pub seed: State,
    pub absorbing: Vec<IrreducibleComponent>,
}

/// All transitions among `states`; `None` for a jump that leaves the set.
fn transitions_within(
    net: &ReactionNetwork,
    states: &[State],
) -> (Vec<TransitionEvent>, bool) {
    let index: BTreeMap<&State, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut events = Vec::new();
    let mut closed = true;
    for (from, s) in states.iter().enumerate() {
        for ridx in 0..net.num_reactions() {
            let (coeff, _) = propensity(net, ridx, s);
            if coeff == 0 {
                continue;
            }
            let target = s
                .apply(&net.reactions[ridx].delta())
                .expect("active reaction cannot go negative");
            match index.get(&target) {
                Some(&to) => events.push(TransitionEvent { from, to, reaction: ridx, coeff }),
                None => closed = false,
            }
        }
    }
    (events, closed)
}

fn strongly_connected(nstates: usize, events: &[TransitionEvent]) -> bool {
    if nstates == 0 {
        return false;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nstates];
    for e in events {
        adj[e.from].push(e.to);
    }
    structure::tarjan_sccs(&adj).len() == 1
}

fn component_flags(
    net: &ReactionNetwork,
    events: &[TransitionEvent],
    is_full_simplex: bool,
) -> ComponentStructureFlags {
    let mut active = vec![false; net.num_reactions()];
    for e in events {
        active[e.reaction] = true;
    }
    // A reaction active on the component always jumps within it (components
    // are closed), so transition events witness positivity.
    let is_positive = active.iter().all(|&a| a);
    ComponentStructureFlags {
        is_full_simplex,
        is_positive,
        theorem_hypothesis_met: is_full_simplex && structure::unit_conservative(net),
    }
}

/// Forward-closure exploration from a seed. Returns the irreducible
/// component containing the seed, or the reachable absorbing components when
/// the seed is transient. The network must be conservative so the closure is
/// finite.
pub fn enumerate_component(
    net: &ReactionNetwork,
    seed: &State,
) -> Result<Result<IrreducibleComponent, NotInComponent>, StateSpaceError> {
    if seed.dim() != net.num_species() {
        return Err(StateSpaceError::DimensionMismatch {
            expected: net.num_species(),
            found: seed.dim(),
        });
    }
    if structure::conservation_vector(net).is_none() {
        return Err(StateSpaceError::NonConservative);
    }

    // BFS forward closure.
    let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(seed.0.clone());
    queue.push_back(seed.clone());
    while let Some(s) = queue.pop_front() {
        for ridx in 0..net.num_reactions() {
            let (coeff, _) = propensity(net, ridx, &s);
            if coeff == 0 {
                continue;
            }
            let t = s.apply(&net.reactions[ridx].delta()).unwrap();
            if seen.insert(t.0.clone()) {
                queue.push_back(t);
            }
        }
    }
    let mut closure: Vec<State> = seen.into_iter().map(State).collect();
    closure.sort_by(state_cmp);
    let (events, closed) = transitions_within(net, &closure);
    debug_assert!(closed, "forward closure is closed by construction");

    if strongly_connected(closure.len(), &events) {
        let level = unit_level(net, &closure);
        let is_full_simplex = match level {
            Some(l) => closure.len() == simplex_states(net.num_species(), l).len(),
            None => false,
        };
        let flags = component_flags(net, &events, is_full_simplex);
        return Ok(Ok(IrreducibleComponent { level, states: closure, transitions: events, flags }));
    }

    // Transient seed: report the bottom classes of the closure.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); closure.len()];
    for e in &events {
        adj[e.from].push(e.to);
    }
    let sccs = structure::tarjan_sccs(&adj);
    let mut scc_of = vec![usize::MAX; closure.len()];
    for (k, scc) in sccs.iter().enumerate() {
        for &v in scc {
            scc_of[v] = k;
        }
    }
    let mut absorbing = Vec::new();
    for scc in &sccs {
        let leaks = scc
            .iter()
            .any(|&v| adj[v].iter().any(|&w| scc_of[w] != scc_of[v]));
        if leaks {
            continue;
        }
        let states: Vec<State> = scc.iter().map(|&v| closure[v].clone()).collect();
        let (ev, _) = transitions_within(net, &states);
        let level = unit_level(net, &states);
        let is_full_simplex = match level {
            Some(l) => states.len() == simplex_states(net.num_species(), l).len(),
            None => false,
        };
        let flags = component_flags(net, &ev, is_full_simplex);
        absorbing.push(IrreducibleComponent { level, states, transitions: ev, flags });
    }
    Ok(Err(NotInComponent { seed: seed.clone(), absorbing }))
}

fn unit_level(net: &ReactionNetwork, states: &[State]) -> Option<u32> {
    if !structure::unit_conservative(net) {
        return None;
    }
    let levels: BTreeSet<u32> = states.iter().map(|s| s.level()).collect();
    if levels.len() == 1 {
        levels.into_iter().next()
    } else {
        None
    }
}

/// Decomposition of one level simplex of a unit-conservative network.
#[derive(Clone, Debug)]
pub struct LevelAnalysis {
    pub level: u32,
    /// The full simplex in canonical order.
    pub states: Vec<State>,
    pub transitions: Vec<TransitionEvent>,
    /// The simplex is exactly one irreducible component.
    pub is_single_component: bool,
    /// Exactly one closed class inside the simplex; the master matrix then
    /// has corank one and a (possibly boundary-supported) kernel.
    pub corank_one: bool,
    /// Indices of states not in any closed class of this level.
    pub transient: Vec<usize>,
    /// Every reaction fires somewhere on the simplex.
    pub is_positive: bool,
}

impl LevelAnalysis {
    /// View the analysed level as a component when it is one.
    pub fn as_component(&self, net: &ReactionNetwork) -> Option<IrreducibleComponent> {
        if !self.is_single_component {
            return None;
        }
        let flags = component_flags(net, &self.transitions, true);
        Some(IrreducibleComponent {
            level: Some(self.level),
            states: self.states.clone(),
            transitions: self.transitions.clone(),
            flags,
        })
    }
}

/// Analyse the level-`l` simplex of a unit-conservative network.
pub fn analyze_level(net: &ReactionNetwork, level: u32) -> Result<LevelAnalysis, StateSpaceError> {
    if !structure::unit_conservative(net) {
        return Err(StateSpaceError::NotUnitConservative);
    }
    let states = simplex_states(net.num_species(), level);
    let (transitions, closed) = transitions_within(net, &states);
    debug_assert!(closed, "unit conservation keeps jumps inside the level");
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for e in &transitions {
        adj[e.from].push(e.to);
    }
    let sccs = structure::tarjan_sccs(&adj);
    let mut scc_of = vec![usize::MAX; states.len()];
    for (k, scc) in sccs.iter().enumerate() {
        for &v in scc {
            scc_of[v] = k;
        }
    }
    let mut closed_classes = 0usize;
    let mut transient = Vec::new();
    for scc in &sccs {
        let leaks = scc
            .iter()
            .any(|&v| adj[v].iter().any(|&w| scc_of[w] != scc_of[v]));
        if leaks {
            transient.extend(scc.iter().copied());
        } else {
            closed_classes += 1;
        }
    }
    transient.sort_unstable();
    let mut active = vec![false; net.num_reactions()];
    for e in &transitions {
        active[e.reaction] = true;
    }
    Ok(LevelAnalysis {
        level,
        is_single_component: sccs.len() == 1,
        corank_one: closed_classes == 1,
        transient,
        is_positive: active.iter().all(|&a| a),
        states,
        transitions,
    })
}

/// Per-level hypothesis record inside an [`IndexProfile`].
#[derive(Clone, Debug)]
pub struct LevelFlags {
    pub level: u32,
    pub is_full_simplex_component: bool,
    pub corank_one: bool,
    pub is_positive: bool,
    pub transient_count: usize,
}

/// Verification of the `Gamma_l = {x : sum x_i = l}` decomposition.
#[derive(Clone, Debug)]
pub struct IndexProfile {
    /// Least level from which every computed level simplex is a single
    /// irreducible component; `None` if that never stabilises below `l_max`.
    pub q: Option<u32>,
    /// Least level from which every computed level has a corank-one master
    /// matrix (a mechanically computable kernel, possibly supported on a
    /// boundary class).
    pub kernel_floor: Option<u32>,
    pub per_level: Vec<LevelFlags>,
    /// Levels excluded from the component range, with what was found there.
    pub essential_caveats: Vec<String>,
}

/// Compute the index profile through `l_max`. Requires total-molecule-count
/// conservation; the simplex decomposition is undefined otherwise.
pub fn index_profile(net: &ReactionNetwork, l_max: usize) -> Result<IndexProfile, StateSpaceError> {
    if l_max < 2 {
        return Err(StateSpaceError::LevelBoundTooSmall(l_max));
    }
    if !structure::unit_conservative(net) {
        return Err(StateSpaceError::NotUnitConservative);
    }
    let mut per_level = Vec::new();
    for l in 1..=l_max {
        let a = analyze_level(net, l as u32)?;
        per_level.push(LevelFlags {
            level: l as u32,
            is_full_simplex_component: a.is_single_component,
            corank_one: a.corank_one,
            is_positive: a.is_positive,
            transient_count: a.transient.len(),
        });
    }
    let q = suffix_start(&per_level, |f| f.is_full_simplex_component);
    let kernel_floor = suffix_start(&per_level, |f| f.corank_one);
    let mut caveats = Vec::new();
    if let Some(q) = q {
        for f in &per_level {
            if f.level < q {
                caveats.push(format!(
                    "level {} is not a single irreducible component ({} transient state(s))",
                    f.level, f.transient_count
                ));
            }
        }
    } else {
        caveats.push(format!(
            "no level <= {l_max} starts an unbroken run of full-simplex components"
        ));
    }
    Ok(IndexProfile { q, kernel_floor, per_level, essential_caveats: caveats })
}

fn suffix_start(flags: &[LevelFlags], pred: impl Fn(&LevelFlags) -> bool) -> Option<u32> {
    let mut start = None;
    for f in flags {
        if pred(f) {
            if start.is_none() {
                start = Some(f.level);
            }
        } else {
            start = None;
        }
    }
    start
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_network, NetworkSource};

    fn net(text: &str) -> ReactionNetwork {
        parse_network(&NetworkSource::inline(text)).unwrap()
    }

    fn nw1() -> ReactionNetwork {
        net("S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]")
    }

    #[test]
    fn propensity_examples() {
        let n = nw1();
        // 2S2 -> 2S1 at (0,4): 4*3 = 12, symbol alpha.
        let (c, sym) = propensity(&n, 1, &State(vec![0, 4]));
        assert_eq!(c, 12);
        assert_eq!(n.symbols.name(sym), "alpha");
        // Indicator fails at (1,1).
        assert_eq!(propensity(&n, 1, &State(vec![1, 1])).0, 0);
        // S1 -> S2 at (2,2): falling factorial x1 = 2.
        let (c, sym) = propensity(&n, 0, &State(vec![2, 2]));
        assert_eq!(c, 2);
        assert_eq!(n.symbols.name(sym), "beta");
    }

    #[test]
    fn simplex_order_is_descending_lex() {
        let s = simplex_states(2, 2);
        assert_eq!(
            s,
            vec![State(vec![2, 0]), State(vec![1, 1]), State(vec![0, 2])]
        );
        assert_eq!(simplex_states(3, 1).len(), 3);
        assert_eq!(simplex_states(3, 6).len(), 28);
    }

    #[test]
    fn component_from_positive_seed() {
        let comp = enumerate_component(&nw1(), &State(vec![2, 0]))
            .unwrap()
            .unwrap();
        assert_eq!(comp.level, Some(2));
        assert_eq!(
            comp.states,
            vec![State(vec![2, 0]), State(vec![1, 1]), State(vec![0, 2])]
        );
        assert!(comp.flags.is_full_simplex);
        assert!(comp.flags.is_positive);
        assert!(comp.flags.theorem_hypothesis_met);
        // Coefficients recomputed from factorials agree with propensity.
        for e in &comp.transitions {
            let (c, _) = propensity(&nw1(), e.reaction, &comp.states[e.from]);
            assert_eq!(c, e.coeff);
        }
    }

    #[test]
    fn transient_seed_reports_absorbing_component() {
        let res = enumerate_component(&nw1(), &State(vec![1, 0])).unwrap();
        let not_in = res.unwrap_err();
        assert_eq!(not_in.absorbing.len(), 1);
        assert_eq!(not_in.absorbing[0].states, vec![State(vec![0, 1])]);
    }

    #[test]
    fn reversible_unary_level_is_one_component() {
        let w1 = net("S1 <-> S2 [a, b]");
        let comp = enumerate_component(&w1, &State(vec![3, 0])).unwrap().unwrap();
        assert_eq!(comp.len(), 4);
        assert_eq!(comp.level, Some(3));
    }

    #[test]
    fn non_conservative_is_rejected() {
        let grow = net("S1 -> 2 S1 [k]");
        assert!(matches!(
            enumerate_component(&grow, &State(vec![1])),
            Err(StateSpaceError::NonConservative)
        ));
    }

    #[test]
    fn index_profiles_match_component_structure() {
        // Level 1 of the two-species autocatalytic network splits into a
        // transient state and a trivial absorbing class.
        let p = index_profile(&nw1(), 6).unwrap();
        assert_eq!(p.q, Some(2));
        assert_eq!(p.kernel_floor, Some(1));
        assert!(!p.essential_caveats.is_empty());

        let w3 = net("S1 <-> S2 [a, b]; 2 S1 <-> 2 S2 [c, d]");
        assert_eq!(index_profile(&w3, 6).unwrap().q, Some(1));

        let nw4 = net("2 S1 -> S1 + S2 [l3]; 2 S1 <-> 2 S2 [l1, l2]");
        let p = index_profile(&nw4, 6).unwrap();
        assert_eq!(p.q, Some(3));
        // Level 1 has two absorbing singletons, so no kernel there.
        assert_eq!(p.kernel_floor, Some(2));
    }

    #[test]
    fn index_profile_monotone_in_l_max() {
        let p4 = index_profile(&nw1(), 4).unwrap();
        let p6 = index_profile(&nw1(), 6).unwrap();
        assert!(p6.q >= p4.q);
    }

    #[test]
    fn index_profile_requires_unit_conservation() {
        let mm = net("S + E <-> ES [k1, k2]; ES <-> P + E [k3, k4]");
        assert!(matches!(
            index_profile(&mm, 6),
            Err(StateSpaceError::NotUnitConservative)
        ));
        // Components are still enumerable under the general conservation law.
        let comp = enumerate_component(&mm, &State(vec![1, 1, 0, 0]))
            .unwrap()
            .unwrap();
        assert_eq!(comp.level, None);
        // (1,1,0,0) <-> (0,0,1,0) <-> (0,1,0,1)
        assert_eq!(comp.len(), 3);
    }
}
