//! Structured reaction-network model produced by the parser.

use crate::poly::SymbolTable;

/// A complex: a vector of nonnegative stoichiometric coefficients over the
/// species, in species-declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Complex(pub Vec<u32>);

impl Complex {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeff(&self, species: usize) -> u32 {
        self.0[species]
    }

    pub fn is_empty_complex(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Total molecule count of the complex.
    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// A directed reaction with its rate symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate_symbol: String,
    /// Index of the rate symbol in the network's symbol table. Symbols are in
    /// bijection with reactions, so this doubles as the reaction index.
    pub rate: usize,
}

impl Reaction {
    /// Net species change `product - reactant`.
    pub fn delta(&self) -> Vec<i64> {
        self.reactant
            .0
            .iter()
            .zip(&self.product.0)
            .map(|(r, p)| *p as i64 - *r as i64)
            .collect()
    }
}

/// A well-formed reaction network: species in first-appearance order,
/// complexes in first-appearance order, one distinct rate symbol per
/// reaction, no reaction with equal reactant and product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReactionNetwork {
    pub species: Vec<String>,
    pub complexes: Vec<Complex>,
    pub reactions: Vec<Reaction>,
    pub symbols: SymbolTable,
}

impl ReactionNetwork {
    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn num_complexes(&self) -> usize {
        self.complexes.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn complex_index(&self, c: &Complex) -> Option<usize> {
        self.complexes.iter().position(|x| x == c)
    }
}
