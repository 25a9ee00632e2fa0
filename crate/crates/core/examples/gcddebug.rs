use prodform_core::poly::{poly_gcd, Monomial, RatePoly};
use prodform_core::{Int, Rat};

fn load(path: &str) -> RatePoly {
    let text = std::fs::read_to_string(path).unwrap();
    let mut nsyms = 0;
    let mut terms = Vec::new();
    for part in text.trim().split(';') {
        let (exps, coeff) = part.split_once(':').unwrap();
        let exps: Vec<u16> = exps.split(',').map(|x| x.parse().unwrap()).collect();
        nsyms = exps.len();
        let (n, d) = coeff.split_once('/').unwrap();
        terms.push((exps, Rat::new(n.parse::<Int>().unwrap(), d.parse::<Int>().unwrap())));
    }
    let mut p = RatePoly::zero(nsyms);
    for (e, c) in terms {
        p.add_term(Monomial::from_exps(e), c);
    }
    p
}

fn main() {
    let prev = load("/tmp/gcd_prev.txt");
    let next = load("/tmp/gcd_next.txt");
    println!("prev {} terms, next {} terms", prev.num_terms(), next.num_terms());
    let g = poly_gcd(&prev, &next);
    println!("gcd -> {} terms", g.num_terms());
    println!("g | prev: {}", prev.div_exact(&g).is_some());
    println!("g | next: {}", next.div_exact(&g).is_some());
    std::env::set_var("PRODFORM_NO_HEURISTIC_GCD", "1");
    let g2 = poly_gcd(&prev, &next);
    println!("prs gcd -> {} terms", g2.num_terms());
    println!("g2 | prev: {}", prev.div_exact(&g2).is_some());
    println!("g2 | next: {}", next.div_exact(&g2).is_some());
    println!("g == g2: {}", g == g2);
}
