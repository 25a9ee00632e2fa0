use prodform_core::poly::{Monomial, RatePoly};
use prodform_core::rng::Rng;
use prodform_core::{Int, Rat};

fn random_poly(rng: &mut Rng, nsyms: usize, terms: usize, maxexp: u16) -> RatePoly {
    let mut p = RatePoly::zero(nsyms);
    for _ in 0..terms {
        let exps: Vec<u16> = (0..nsyms).map(|_| (rng.next_u64() % (maxexp as u64 + 1)) as u16).collect();
        let c = rng.next_in(9) as i64 - 5;
        if c != 0 {
            p.add_term(Monomial::from_exps(exps), Rat::from_integer(Int::from(c)));
        }
    }
    p
}

fn main() {
    let mut rng = Rng::new(99);
    for round in 0..50000 {
        let nsyms = 3 + (rng.next_u64() % 5) as usize;
        let a = random_poly(&mut rng, nsyms, 6, 3);
        let d = random_poly(&mut rng, nsyms, 4, 3);
        if d.is_zero() {
            continue;
        }
        // product division must reconstruct
        if !a.is_zero() {
            let prod = a.mul(&d);
            let q = prod.div_exact(&d).expect("product divides");
            assert_eq!(q, a, "round {round}: wrong quotient");
        }
        // random division, if accepted, must verify
        let b = random_poly(&mut rng, nsyms, 6, 3);
        if let Some(q) = b.div_exact(&d) {
            assert_eq!(q.mul(&d), b, "round {round}: false positive");
        }
    }
    println!("div_exact ok over 50000 rounds");
}
