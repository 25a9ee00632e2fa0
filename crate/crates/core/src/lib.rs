//! Exact symbolic machinery for deciding whether a conservative stochastic
//! reaction network under mass-action kinetics has product-form stationary
//! distributions for all, none, or some positive reaction rates.
//!
//! The pipeline, bottom to top:
//! - [`poly`]: multivariate polynomials in the rate symbols over
//!   arbitrary-precision rationals, with GCD, evaluation and sign analysis
//! - [`parser`]: the `.crn` reaction-network DSL, diagnostics and rendering
//! - [`network`]: the structured network model (species, complexes, reactions)
//! - [`structure`]: stoichiometry, linkage classes, deficiency, conservativity
//!   and reversibility classification
//! - [`state`]: finite irreducible components of the mass-action chain and
//!   verification of the simplex decomposition hypotheses
//! - [`kernel`]: the symbolic master-equation matrix and its one-dimensional
//!   polynomial kernel (the unnormalised stationary distribution)
//! - [`ideal`]: product-form compatibility relations pushed into rate space,
//!   collected per level as generator sets
//! - [`oracle`]: exact rational ground truth at concrete rates (stationary
//!   solves, residuals, the constructive product-form fit, shape detection)
//! - [`classify`]: positivity certificates, complex-balance tests, witness
//!   searches, and the final all/none/some verdict with certificates
//! - [`report`]: JSON-serialisable report types shared with the CLI

pub mod classify;
pub mod ideal;
pub mod kernel;
pub mod linalg;
pub mod network;
pub mod oracle;
pub mod parser;
pub mod poly;
pub mod report;
pub mod rng;
pub mod state;
pub mod structure;
pub(crate) mod gth;
pub(crate) mod zpoly;


pub use classify::{classify, complex_balance, witness_check, Certainty, Certificate, ClassificationReport, ClassifyOptions, Verdict};
pub use network::{Complex, Reaction, ReactionNetwork};
pub use parser::{parse_network, render_network, NetworkSource, ParseDiagnostic};
pub use poly::{RateAssignment, RatePoly, SignSummary, SymbolTable};
pub use state::{IrreducibleComponent, State};
pub use structure::{structure_report, StructureReport};

/// Arbitrary-precision rational, the scalar type of every exact computation.
pub type Rat = num_rational::BigRational;
/// Arbitrary-precision integer.
pub type Int = num_bigint::BigInt;

/// Parse a rational from `p`, `-p`, or `p/q` notation.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let n: Int = num.trim().parse().ok()?;
            let d: Int = den.trim().parse().ok()?;
            if d == num_traits::Zero::zero() {
                None
            } else {
                Some(Rat::new(n, d))
            }
        }
        None => {
            let n: Int = s.parse().ok()?;
            Some(Rat::from_integer(n))
        }
    }
}

/// Render a rational as `p` or `p/q`, matching the report format.
pub fn rat_to_string(r: &Rat) -> String {
    if num_traits::One::is_one(r.denom()) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
