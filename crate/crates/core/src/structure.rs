//! Structural analysis of a parsed network: stoichiometric subspace,
//! linkage classes, deficiency, conservativity, and reversibility class.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::linalg;
use crate::network::ReactionNetwork;
use crate::{Int, Rat};

/// Reversibility class of the reaction graph. `Reversible` implies
/// `WeaklyReversible` conceptually; the classifier reports the strongest
/// applicable label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reversibility {
    Reversible,
    WeaklyReversible,
    NonWeaklyReversible,
}

impl Reversibility {
    pub fn is_weakly_reversible(self) -> bool {
        !matches!(self, Reversibility::NonWeaklyReversible)
    }
}

/// Summary of the network-level structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureReport {
    pub stoich_dim: usize,
    pub linkage_count: usize,
    pub deficiency: usize,
    /// Some strictly positive conservation vector, when one exists.
    pub conservation: Option<Vec<Rat>>,
    /// Whether the all-ones vector conserves every reaction (total molecule
    /// count preserved); the simplex decomposition needs exactly this.
    pub unit_conservative: bool,
    pub reversibility: Reversibility,
}

/// Rank over the rationals of the matrix with rows `product - reactant`.
pub fn stoich_subspace_dim(net: &ReactionNetwork) -> usize {
    linalg::rank(&stoich_rows(net))
}

fn stoich_rows(net: &ReactionNetwork) -> Vec<Vec<Rat>> {
    net.reactions
        .iter()
        .map(|r| r.delta().into_iter().map(|d| Rat::from_integer(Int::from(d))).collect())
        .collect()
}

/// Partition of the complexes into connected components of the undirected
/// reaction graph, each class listing complex indices in ascending order.
pub fn linkage_classes(net: &ReactionNetwork) -> Vec<Vec<usize>> {
    let n = net.num_complexes();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for r in &net.reactions {
        let a = net.complex_index(&r.reactant).expect("reactant registered");
        let b = net.complex_index(&r.product).expect("product registered");
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut classes: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        classes.entry(root).or_default().push(i);
    }
    classes.into_values().collect()
}

/// Deficiency: complexes minus linkage classes minus stoichiometric dimension.
pub fn deficiency(net: &ReactionNetwork) -> usize {
    let c = net.num_complexes();
    let l = linkage_classes(net).len();
    let s = stoich_subspace_dim(net);
    c.checked_sub(l + s).expect("deficiency is nonnegative")
}

/// Search for a strictly positive rational `w` with `(product - reactant) . w = 0`
/// for every reaction. Exact: a rational nullspace basis of the stoichiometric
/// matrix followed by a Fourier-Motzkin feasibility pass for `w >= 1`
/// componentwise (any strictly positive solution rescales into that cone).
pub fn conservation_vector(net: &ReactionNetwork) -> Option<Vec<Rat>> {
    let n = net.num_species();
    if n == 0 {
        return None;
    }
    let basis = linalg::nullspace(&stoich_rows(net));
    if basis.is_empty() {
        return None;
    }
    // Constraints: for each species j, sum_i y_i * basis[i][j] >= 1.
    let system: Vec<(Vec<Rat>, Rat)> = (0..n)
        .map(|j| (basis.iter().map(|b| b[j].clone()).collect(), Rat::one()))
        .collect();
    let y = linalg::fourier_motzkin(&system, basis.len())?;
    let mut w = vec![Rat::zero(); n];
    for (yi, b) in y.iter().zip(&basis) {
        for (slot, bj) in w.iter_mut().zip(b) {
            *slot += yi * bj;
        }
    }
    debug_assert!(w.iter().all(|x| x.is_positive()));
    Some(scale_to_coprime_integers(&w))
}

/// Scale a positive rational vector to the smallest positive integer vector
/// on the same ray.
pub(crate) fn scale_to_coprime_integers(w: &[Rat]) -> Vec<Rat> {
    let mut lcm = Int::one();
    for x in w {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<Int> = w.iter().map(|x| x.numer() * &lcm / x.denom()).collect();
    let mut gcd = Int::zero();
    for v in &ints {
        gcd = gcd.gcd(v);
    }
    if gcd.is_zero() {
        gcd = Int::one();
    }
    ints.into_iter().map(|v| Rat::from_integer(v / &gcd)).collect()
}

/// Whether total molecule count is preserved by every reaction.
pub fn unit_conservative(net: &ReactionNetwork) -> bool {
    !net.reactions.is_empty()
        && net
            .reactions
            .iter()
            .all(|r| r.reactant.size() == r.product.size())
}

/// Strongly connected components of the directed reaction graph on complex
/// indices (Tarjan), in deterministic order.
pub fn complex_sccs(net: &ReactionNetwork) -> Vec<Vec<usize>> {
    let n = net.num_complexes();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in &net.reactions {
        let a = net.complex_index(&r.reactant).unwrap();
        let b = net.complex_index(&r.product).unwrap();
        adj[a].push(b);
    }
    tarjan_sccs(&adj)
}

/// Tarjan's algorithm, iterative to keep the stack shallow.
pub(crate) fn tarjan_sccs(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut sccs: Vec<Vec<usize>> = Vec::new();

    // Explicit DFS: (node, edge cursor).
    let mut call: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if index[start] != usize::MAX {
            continue;
        }
        call.push((start, 0));
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;
        while let Some(&mut (v, ref mut cursor)) = call.last_mut() {
            if *cursor < adj[v].len() {
                let w = adj[v][*cursor];
                *cursor += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    sccs.push(comp);
                }
            }
        }
    }
    sccs.sort_by(|a, b| a[0].cmp(&b[0]));
    sccs
}

/// Reversible if every reaction's reverse is present; else weakly reversible
/// if every linkage class is strongly connected; else non-weakly-reversible.
pub fn reversibility_class(net: &ReactionNetwork) -> Reversibility {
    let reversible = net.reactions.iter().all(|r| {
        net.reactions
            .iter()
            .any(|s| s.reactant == r.product && s.product == r.reactant)
    });
    if reversible {
        return Reversibility::Reversible;
    }
    let sccs = complex_sccs(net);
    let mut scc_of = vec![usize::MAX; net.num_complexes()];
    for (k, scc) in sccs.iter().enumerate() {
        for &v in scc {
            scc_of[v] = k;
        }
    }
    let weakly = net.reactions.iter().all(|r| {
        let a = net.complex_index(&r.reactant).unwrap();
        let b = net.complex_index(&r.product).unwrap();
        scc_of[a] == scc_of[b]
    });
    if weakly {
        Reversibility::WeaklyReversible
    } else {
        Reversibility::NonWeaklyReversible
    }
}

/// Full structure report for a well-formed network.
pub fn structure_report(net: &ReactionNetwork) -> StructureReport {
    StructureReport {
        stoich_dim: stoich_subspace_dim(net),
        linkage_count: linkage_classes(net).len(),
        deficiency: deficiency(net),
        conservation: conservation_vector(net),
        unit_conservative: unit_conservative(net),
        reversibility: reversibility_class(net),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_network, NetworkSource};

    fn net(text: &str) -> ReactionNetwork {
        parse_network(&NetworkSource::inline(text)).unwrap()
    }

    #[test]
    fn stoich_dim_examples() {
        // Both reaction vectors are multiples of (-1, 1).
        let nw1 = net("S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]");
        assert_eq!(stoich_subspace_dim(&nw1), 1);
        let w5 = net(
            "S1 <-> S2 [k1, k2]\nS2 <-> S3 [k3, k4]\n2 S1 <-> S1 + S2 [k5, k6]\n2 S3 <-> S2 + S3 [k7, k8]",
        );
        assert_eq!(stoich_subspace_dim(&w5), 2);
        let empty = net("");
        assert_eq!(stoich_subspace_dim(&empty), 0);
    }

    #[test]
    fn linkage_class_examples() {
        // Triangle on 2A, 2B, A+B: one class.
        let tri = net("2 A -> 2 B [alpha]; 2 B -> A + B [beta]; A + B -> 2 A [gamma]");
        assert_eq!(linkage_classes(&tri).len(), 1);
        let w3 = net("S1 <-> S2 [a, b]; 2 S1 <-> 2 S2 [c, d]");
        assert_eq!(linkage_classes(&w3).len(), 2);
        let nw1 = net("S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]");
        assert_eq!(linkage_classes(&nw1).len(), 2);
    }

    #[test]
    fn deficiency_examples() {
        let w1 = net("S1 <-> S2 [a, b]");
        assert_eq!(deficiency(&w1), 0);
        let w2 = net("S1 <-> S2 [a, b]; S1 + S2 <-> 2 S2 [c, d]");
        assert_eq!(deficiency(&w2), 1);
        let nw11 = net(
            "S1 <-> S2 [k12, k21]\nS2 <-> S3 [k23, k32]\nS1 + S2 -> 2 S1 [c1]\nS1 + S2 -> 2 S2 [c2]\nS2 + S3 -> 2 S2 [c3]\nS2 + S3 -> 2 S3 [c4]",
        );
        assert_eq!(deficiency(&nw11), 4);
    }

    #[test]
    fn conservation_examples() {
        let nw1 = net("S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]");
        let w = conservation_vector(&nw1).unwrap();
        assert_eq!(w, vec![Rat::one(), Rat::one()]);
        assert!(unit_conservative(&nw1));

        let mm = net("S + E <-> ES [k1, k2]; ES <-> P + E [k3, k4]");
        let w = conservation_vector(&mm).unwrap();
        // Exact re-verification: every reaction vector is orthogonal to w.
        for r in &mm.reactions {
            let dot: Rat = r
                .delta()
                .iter()
                .zip(&w)
                .map(|(d, wi)| Rat::from_integer(Int::from(*d)) * wi)
                .sum();
            assert!(dot.is_zero());
        }
        assert!(w.iter().all(|x| x.is_positive()));
        // Species order (S, E, ES, P); the deterministic search lands on (1,1,2,1).
        let expect: Vec<Rat> = [1, 1, 2, 1].iter().map(|&k| Rat::from_integer(Int::from(k))).collect();
        assert_eq!(w, expect);
        assert!(!unit_conservative(&mm));

        let grow = net("S1 -> 2 S1 [k]");
        assert!(conservation_vector(&grow).is_none());
    }

    #[test]
    fn reversibility_examples() {
        let w3 = net("S1 <-> S2 [a, b]; 2 S1 <-> 2 S2 [c, d]");
        assert_eq!(reversibility_class(&w3), Reversibility::Reversible);
        let nw1 = net("S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]");
        assert_eq!(reversibility_class(&nw1), Reversibility::NonWeaklyReversible);
        // 3-cycle class is strongly connected, the autocatalytic classes are not.
        let nw12 = net(
            "S1 -> S2 [k1]; S2 -> S3 [k2]; S3 -> S1 [k3]\nS1 + S2 -> 2 S2 [c1]; S2 + S3 -> 2 S3 [c2]; S1 + S3 -> 2 S1 [c3]",
        );
        assert_eq!(reversibility_class(&nw12), Reversibility::NonWeaklyReversible);
        // Triangle: weakly reversible but not reversible.
        let tri = net("2 A -> 2 B [alpha]; 2 B -> A + B [beta]; A + B -> 2 A [gamma]");
        assert_eq!(reversibility_class(&tri), Reversibility::WeaklyReversible);
    }
}
