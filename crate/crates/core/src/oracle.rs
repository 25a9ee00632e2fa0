//! Exact rational ground truth at concrete rates: stationary solves fully
//! independent of the symbolic kernel path, relation residuals, the
//! constructive product-form fit, and detection of the product-function
//! shape families.
//!
//! Everything here is exact; a nonzero residual is a certificate, never a
//! tolerance judgement.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::ideal::{instances_up_to, RelationInstance};
use crate::linalg;
use crate::network::ReactionNetwork;
use crate::poly::RateAssignment;
use crate::state::{analyze_level, IrreducibleComponent, State, StateSpaceError, TransitionEvent};
use crate::Rat;

#[derive(Clone, Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error("level {0} does not have a unique closed class; no stationary solve")]
    NotCorankOne(u32),
    #[error("stationary system is singular or inconsistent; construction bug")]
    SingularSystem,
    #[error("the constructive fit needs the component range to start at level 1, found {found:?}; use relation residuals instead")]
    ComponentRangeNotOne { found: Option<u32> },
    #[error("shape detection needs a fit consistent through level 4, got {0}")]
    FitTooShort(u32),
}

/// Exact stationary distribution on an ordered state list.
#[derive(Clone, Debug)]
pub struct LevelStationary {
    pub level: u32,
    pub states: Vec<State>,
    /// Exact probabilities, summing to one; zero exactly on the states
    /// outside the level's closed class.
    pub values: Vec<Rat>,
    /// The level simplex is one verified irreducible component.
    pub genuine: bool,
}

impl LevelStationary {
    pub fn value_for(&self, s: &State) -> Option<&Rat> {
        self.states.iter().position(|x| x == s).map(|i| &self.values[i])
    }
}

/// Solve the master equation `A(a) pi = 0`, `sum pi = 1` on the given states
/// by exact rational elimination. The transition list fixes the matrix; the
/// solve never touches the symbolic kernel machinery.
fn stationary_solve(
    net: &ReactionNetwork,
    states: &[State],
    transitions: &[TransitionEvent],
    a: &RateAssignment,
) -> Result<Vec<Rat>, OracleError> {
    let m = states.len();
    let mut matrix = vec![vec![Rat::zero(); m]; m];
    for e in transitions {
        let rate = a.get(net.reactions[e.reaction].rate);
        let intensity = rate * Rat::from_integer(e.coeff.into());
        matrix[e.to][e.from] += &intensity;
        matrix[e.from][e.from] -= &intensity;
    }
    // Uniqueness requires corank exactly one.
    if linalg::rank(&matrix) + 1 != m {
        return Err(OracleError::SingularSystem);
    }
    let mut sys = matrix;
    sys.push(vec![Rat::one(); m]);
    let mut rhs = vec![Rat::zero(); m];
    rhs.push(Rat::one());
    let pi = linalg::solve(&sys, &rhs).ok_or(OracleError::SingularSystem)?;
    debug_assert!(pi.iter().cloned().sum::<Rat>().is_one());
    Ok(pi)
}

/// Exact stationary distribution of the level-`l` simplex dynamics. The
/// level must have a unique closed class; states outside it get exact zero.
pub fn exact_stationary_level(
    net: &ReactionNetwork,
    a: &RateAssignment,
    level: u32,
) -> Result<LevelStationary, OracleError> {
    let analysis = analyze_level(net, level)?;
    if !analysis.corank_one {
        return Err(OracleError::NotCorankOne(level));
    }
    let values = stationary_solve(net, &analysis.states, &analysis.transitions, a)?;
    Ok(LevelStationary {
        level,
        states: analysis.states,
        values,
        genuine: analysis.is_single_component,
    })
}

/// Exact stationary distribution on a verified irreducible component; all
/// entries strictly positive.
pub fn exact_stationary_component(
    net: &ReactionNetwork,
    a: &RateAssignment,
    comp: &IrreducibleComponent,
) -> Result<Vec<Rat>, OracleError> {
    let pi = stationary_solve(net, &comp.states, &comp.transitions, a)?;
    debug_assert!(pi.iter().all(|v| v.is_positive()));
    Ok(pi)
}

/// Cached per-level solves for one `(network, rates)` pair.
pub struct StationarySolver<'a> {
    net: &'a ReactionNetwork,
    a: &'a RateAssignment,
    cache: BTreeMap<u32, LevelStationary>,
}

impl<'a> StationarySolver<'a> {
    pub fn new(net: &'a ReactionNetwork, a: &'a RateAssignment) -> Self {
        Self { net, a, cache: BTreeMap::new() }
    }

    pub fn level(&mut self, l: u32) -> Result<&LevelStationary, OracleError> {
        if !self.cache.contains_key(&l) {
            let solved = exact_stationary_level(self.net, self.a, l)?;
            self.cache.insert(l, solved);
        }
        Ok(&self.cache[&l])
    }

    fn product(&mut self, factors: &[(u32, State)]) -> Result<Rat, OracleError> {
        let mut acc = Rat::one();
        for (level, state) in factors {
            let pi = self.level(*level)?;
            let v = pi.value_for(state).expect("state inside its level simplex");
            if v.is_zero() {
                return Ok(Rat::zero());
            }
            acc *= v;
        }
        Ok(acc)
    }

    /// Exact residual of one relation instance at these rates.
    pub fn residual(&mut self, inst: &RelationInstance) -> Result<Rat, OracleError> {
        let (lhs, rhs) = inst.products();
        Ok(self.product(&lhs)? - self.product(&rhs)?)
    }
}

/// Residuals of every relation instance with levels inside `floor..=j`.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub residuals: Vec<(RelationInstance, Rat)>,
    pub first_violation: Option<usize>,
}

impl ResidualReport {
    pub fn all_zero(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn violation(&self) -> Option<&(RelationInstance, Rat)> {
        self.first_violation.map(|i| &self.residuals[i])
    }
}

pub fn relation_residuals(
    net: &ReactionNetwork,
    a: &RateAssignment,
    j: u32,
    floor: u32,
) -> Result<ResidualReport, OracleError> {
    let mut solver = StationarySolver::new(net, a);
    let mut residuals = Vec::new();
    let mut first_violation = None;
    for inst in instances_up_to(net.num_species(), floor, j) {
        let r = solver.residual(&inst)?;
        if !r.is_zero() && first_violation.is_none() {
            first_violation = Some(residuals.len());
        }
        residuals.push((inst, r));
    }
    Ok(ResidualReport { residuals, first_violation })
}

/// Where and how the constructive fit broke.
#[derive(Clone, Debug)]
pub struct FitFailure {
    pub level: u32,
    pub detail: String,
    pub residual: Rat,
}

/// Output of the constructive product-form recursion.
#[derive(Clone, Debug)]
pub struct FitResult {
    /// `f_tables[i][m]` is the fitted per-species function at count `m`;
    /// rows run through the last consistent level.
    pub f_tables: Vec<Vec<Rat>>,
    /// Normalising constants for levels `1..=consistent_through`.
    pub z_values: Vec<Rat>,
    pub consistent_through: u32,
    pub first_failure: Option<FitFailure>,
}

/// Run the constructive recursion: anchor the per-species functions at level
/// one, extend level by level, and verify at each level both the
/// well-definedness of the normalising constant across all admissible
/// choices and the exact reconstruction of the whole distribution.
///
/// Requires the component range to start at level 1 (the recursion anchors
/// on the level-one distribution); callers outside that case get an error
/// pointing at [`relation_residuals`].
pub fn product_form_fit(
    net: &ReactionNetwork,
    a: &RateAssignment,
    l_max: u32,
) -> Result<FitResult, OracleError> {
    let n = net.num_species();
    let profile = crate::state::index_profile(net, (l_max as usize).max(2))?;
    if profile.q != Some(1) {
        return Err(OracleError::ComponentRangeNotOne { found: profile.q });
    }
    let mut solver = StationarySolver::new(net, a);

    // Level-one anchor: f_i(0) = 1, f_i(1) = pi_1(e_i), Z_1 = 1.
    let mut f: Vec<Vec<Rat>> = vec![vec![Rat::one()]; n];
    {
        let pi1 = solver.level(1)?;
        for i in 0..n {
            let mut e = vec![0u32; n];
            e[i] = 1;
            f[i].push(pi1.value_for(&State(e)).unwrap().clone());
        }
    }
    let mut z = vec![Rat::one()];
    let mut consistent_through = 1u32;
    let mut first_failure = None;

    'levels: for l in 2..=l_max {
        let prev = solver.level(l - 1)?.clone();
        let cur = solver.level(l)?.clone();
        // Z_l = Z_{l-1} * (pi_{l-1}(x) / pi_l(x + e_k)) * (f_k(x_k+1) / f_k(x_k))
        // for every k and x in the previous level with x != (l-1) e_k.
        let mut z_l: Option<Rat> = None;
        let mut witness: Option<(usize, State)> = None;
        for k in 0..n {
            for x in &prev.states {
                if x.0[k] == l - 1 {
                    continue;
                }
                let mut up = x.0.clone();
                up[k] += 1;
                let pi_prev = prev.value_for(x).unwrap();
                let pi_up = cur.value_for(&State(up)).unwrap();
                let fk = &f[k];
                let candidate = &z[(l - 2) as usize] * pi_prev / pi_up
                    * &fk[(x.0[k] + 1) as usize]
                    / &fk[x.0[k] as usize];
                match &z_l {
                    None => {
                        z_l = Some(candidate);
                        witness = Some((k, x.clone()));
                    }
                    Some(existing) => {
                        if *existing != candidate {
                            let (wk, wx) = witness.clone().unwrap();
                            first_failure = Some(FitFailure {
                                level: l,
                                detail: format!(
                                    "normalising constant disagrees between choices (k={}, x={}) and (k={}, x={})",
                                    wk, wx, k, x
                                ),
                                residual: existing - &candidate,
                            });
                            break 'levels;
                        }
                    }
                }
            }
        }
        let z_l = z_l.expect("every level above one has admissible choices");
        // Extend the per-species tables: f_i(l) = Z_l * pi_l(l e_i).
        for (i, row) in f.iter_mut().enumerate() {
            let mut e = vec![0u32; n];
            e[i] = l;
            row.push(&z_l * cur.value_for(&State(e)).unwrap());
        }
        // Full reconstruction of the level: Z_l * pi_l(x) = prod_i f_i(x_i).
        for (x, pi) in cur.states.iter().zip(&cur.values) {
            let mut prod = Rat::one();
            for (i, row) in f.iter().enumerate() {
                prod *= &row[x.0[i] as usize];
            }
            let lhs = &z_l * pi;
            if lhs != prod {
                first_failure = Some(FitFailure {
                    level: l,
                    detail: format!("reconstruction mismatch at state {}", x),
                    residual: &lhs - &prod,
                });
                for row in &mut f {
                    row.pop();
                }
                break 'levels;
            }
        }
        z.push(z_l);
        consistent_through = l;
    }

    Ok(FitResult { f_tables: f, z_values: z, consistent_through, first_failure })
}

/// Shape family of one fitted per-species function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeFamily {
    /// `a0^m / m!`
    G1,
    /// ratio of two nonconstant linear factorials
    G2,
    /// constant numerator, nonconstant denominator
    G3,
    /// nonconstant numerator, constant denominator
    G4,
    Unknown,
}

/// A labeled shape with the fitted linear-fractional parameters
/// `rho(m) = (a + b(m-1)) / (c + d(m-1))`, where `rho(m) = m f(m)/f(m-1)`.
#[derive(Clone, Debug)]
pub struct ShapeLabel {
    pub family: ShapeFamily,
    /// `[a, b, c, d]`, sign-normalised; for G1 this is `[a0, 0, 1, 0]`.
    pub params: Vec<Rat>,
}

/// Classify every species of a successful fit. Needs at least three ratio
/// points to solve the linear-fractional form plus one to validate.
pub fn shape_classify(fit: &FitResult) -> Result<Vec<ShapeLabel>, OracleError> {
    if fit.consistent_through < 4 {
        return Err(OracleError::FitTooShort(fit.consistent_through));
    }
    let m_max = fit.consistent_through as usize;
    let mut out = Vec::new();
    for table in &fit.f_tables {
        let rho: Vec<Rat> = (1..=m_max)
            .map(|m| Rat::from_integer(crate::Int::from(m as i64)) * &table[m] / &table[m - 1])
            .collect();
        if rho.iter().all(|r| *r == rho[0]) {
            out.push(ShapeLabel {
                family: ShapeFamily::G1,
                params: vec![rho[0].clone(), Rat::zero(), Rat::one(), Rat::zero()],
            });
            continue;
        }
        // Solve a + b(m-1) = rho(m) (c + d(m-1)) from the first three points.
        let rows: Vec<Vec<Rat>> = (0..3)
            .map(|idx| {
                let m1 = Rat::from_integer(crate::Int::from(idx as i64)); // m-1
                vec![Rat::one(), m1.clone(), -rho[idx].clone(), -(&rho[idx] * &m1)]
            })
            .collect();
        let basis = linalg::nullspace(&rows);
        if basis.len() != 1 {
            out.push(ShapeLabel { family: ShapeFamily::Unknown, params: Vec::new() });
            continue;
        }
        let mut v = basis.into_iter().next().unwrap();
        // Validate on the remaining ratio points.
        let valid = (3..m_max).all(|idx| {
            let m1 = Rat::from_integer(crate::Int::from(idx as i64));
            let lhs = &v[0] + &v[1] * &m1;
            let rhs = &rho[idx] * (&v[2] + &v[3] * &m1);
            lhs == rhs
        });
        if !valid {
            out.push(ShapeLabel { family: ShapeFamily::Unknown, params: Vec::new() });
            continue;
        }
        // Sign-normalise: denominator positive at m = 1.
        if v[2].is_negative() || (v[2].is_zero() && v[3].is_negative()) {
            for x in &mut v {
                *x = -x.clone();
            }
        }
        let family = match (v[1].is_zero(), v[3].is_zero()) {
            (false, false) => ShapeFamily::G2,
            (true, false) => ShapeFamily::G3,
            (false, true) => ShapeFamily::G4,
            (true, true) => ShapeFamily::Unknown, // constant ratio; caught above
        };
        out.push(ShapeLabel { family, params: v });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_network, NetworkSource};
    use crate::rng::Rng;
    use crate::Int;

    fn net(text: &str) -> ReactionNetwork {
        parse_network(&NetworkSource::inline(text)).unwrap()
    }

    fn nw1() -> ReactionNetwork {
        net("S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]")
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(Int::from(n), Int::from(d))
    }

    #[test]
    fn stationary_matches_worked_values() {
        let n = nw1();
        // (beta, alpha) = (2, 1).
        let a = RateAssignment::new(vec![rat(2, 1), rat(1, 1)]).unwrap();
        let pi = exact_stationary_level(&n, &a, 2).unwrap();
        assert_eq!(pi.values, vec![rat(1, 5), rat(2, 5), rat(2, 5)]);

        let ones = RateAssignment::ones(2);
        let pi = exact_stationary_level(&n, &ones, 3).unwrap();
        assert_eq!(pi.values, vec![rat(1, 5), rat(9, 20), rat(3, 10), rat(1, 20)]);
    }

    #[test]
    fn stationary_on_single_state_component() {
        let n = nw1();
        let comp = crate::state::enumerate_component(&n, &State(vec![0, 1]))
            .unwrap()
            .unwrap();
        let ones = RateAssignment::ones(2);
        let pi = exact_stationary_component(&n, &ones, &comp).unwrap();
        assert_eq!(pi, vec![Rat::one()]);
    }

    #[test]
    fn oracle_agrees_with_symbolic_kernel() {
        let n = nw1();
        let kernels = crate::ideal::LevelKernels::compute(&n, 5).unwrap();
        let mut rng = Rng::new(7);
        for _ in 0..25 {
            let a = RateAssignment::new(rng.rationals(2, 20)).unwrap();
            for level in 1..=5 {
                let sym = crate::kernel::stationary_eval(kernels.get(level).unwrap(), &a);
                let num = exact_stationary_level(&n, &a, level).unwrap();
                assert_eq!(sym, num.values, "level {level}");
            }
        }
    }

    #[test]
    fn worked_relation_residual_rescales_to_minus_144() {
        // The level-4 worked instance evaluated through stationary values is
        // the raw -144 divided by the normalising constants Z2 Z3^2 Z4.
        let n = nw1();
        let ones = RateAssignment::ones(2);
        let inst = RelationInstance::B {
            base: 2,
            x: State(vec![0, 2]),
            j: 0,
            y: State(vec![0, 3]),
            z: State(vec![1, 1]),
            k: 0,
            w: State(vec![1, 2]),
        };
        let mut solver = StationarySolver::new(&n, &ones);
        let r = solver.residual(&inst).unwrap();
        assert!(r.is_negative());
        // At all-ones rates: Z2 = 4, Z3 = 20, Z4 = 128.
        let raw = r * rat(4, 1) * rat(20, 1) * rat(20, 1) * rat(128, 1);
        assert_eq!(raw, rat(-144, 1));
    }

    #[test]
    fn residuals_all_zero_for_reversible_unary_pair() {
        let w1 = net("S1 <-> S2 [a, b]");
        let mut rng = Rng::new(3);
        for _ in 0..5 {
            let a = RateAssignment::new(rng.rationals(2, 20)).unwrap();
            let rep = relation_residuals(&w1, &a, 5, 1).unwrap();
            assert!(rep.all_zero());
        }
    }

    #[test]
    fn fit_succeeds_on_type_i_and_matches_poisson_shape() {
        let w1 = net("S1 <-> S2 [a, b]");
        // (a, b) = (1, 2): complex-balance point c proportional to (b, a).
        let a = RateAssignment::new(vec![rat(1, 1), rat(2, 1)]).unwrap();
        let fit = product_form_fit(&w1, &a, 6).unwrap();
        assert_eq!(fit.consistent_through, 6);
        assert!(fit.first_failure.is_none());
        let shapes = shape_classify(&fit).unwrap();
        assert_eq!(shapes[0].family, ShapeFamily::G1);
        assert_eq!(shapes[1].family, ShapeFamily::G1);
        // Poisson point c = (2, 1) up to scale.
        assert_eq!(&shapes[0].params[0] / &shapes[1].params[0], rat(2, 1));
    }

    #[test]
    fn fit_fails_on_always_non_product_form_network() {
        let nw2 = net("S1 <-> S2 [alpha, beta]; 2 S1 -> 2 S2 [lambda1]");
        let mut rng = Rng::new(11);
        for _ in 0..5 {
            let a = RateAssignment::new(rng.rationals(3, 20)).unwrap();
            let fit = product_form_fit(&nw2, &a, 6).unwrap();
            assert!(fit.first_failure.is_some());
            assert!(fit.consistent_through <= 3);
            // Exact biconditional with the residual test, point by point.
            let rep = relation_residuals(&nw2, &a, 6, 1).unwrap();
            assert!(!rep.all_zero());
        }
    }

    #[test]
    fn fit_requires_component_range_from_level_one() {
        let n = nw1();
        let ones = RateAssignment::ones(2);
        assert!(matches!(
            product_form_fit(&n, &ones, 6),
            Err(OracleError::ComponentRangeNotOne { found: Some(2) })
        ));
    }

    #[test]
    fn synthetic_quadratic_ratio_is_unknown() {
        // rho(m) = m^2 is not linear-fractional.
        let mut f = vec![Rat::one()];
        for m in 1..=6i64 {
            let prev = f.last().unwrap().clone();
            f.push(prev * rat(m * m, 1) / rat(m, 1));
        }
        let fit = FitResult {
            f_tables: vec![f],
            z_values: vec![Rat::one(); 6],
            consistent_through: 6,
            first_failure: None,
        };
        let shapes = shape_classify(&fit).unwrap();
        assert_eq!(shapes[0].family, ShapeFamily::Unknown);
    }
}
