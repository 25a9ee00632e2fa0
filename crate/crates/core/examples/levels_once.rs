use prodform_core::ideal::LevelKernels;
use prodform_core::parser::{parse_network, NetworkSource};

fn main() {
    let name = std::env::args().nth(1).unwrap();
    let levels: u32 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let text = std::fs::read_to_string(format!("networks/{name}.crn")).unwrap();
    let net = parse_network(&NetworkSource::inline(text)).unwrap();
    let t0 = std::time::Instant::now();
    let k = LevelKernels::compute(&net, levels).unwrap();
    println!("{name} levels 1..={levels} in {:?}", t0.elapsed());
    for l in 1..=levels {
        if let Some(kv) = k.get(l) {
            let terms: usize = kv.entries.iter().map(|e| e.num_terms()).sum();
            println!("  level {l}: m={} degree={} total terms={}", kv.entries.len(), kv.degree, terms);
        }
    }
}
