use prodform_core::ideal::LevelKernels;
use prodform_core::parser::{parse_network, NetworkSource};

fn main() {
    let name = std::env::args().nth(1).unwrap();
    let levels: u32 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let text = std::fs::read_to_string(format!("networks/{name}.crn")).unwrap();
    let net = parse_network(&NetworkSource::inline(text)).unwrap();
    for l in 1..=levels {
        let t0 = std::time::Instant::now();
        match LevelKernels::compute(&net, l) {
            Ok(k) => {
                let kv = k.get(l);
                let terms: usize = kv.map(|k| k.entries.iter().map(|e| e.num_terms()).sum()).unwrap_or(0);
                println!("{name} level {l}: cumulative {:?}, kernel terms {terms}", t0.elapsed());
            }
            Err(e) => println!("{name} level {l}: ERROR {e}"),
        }
    }
}
