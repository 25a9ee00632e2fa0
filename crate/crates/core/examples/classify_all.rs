use prodform_core::classify::{classify, ClassifyOptions};
use prodform_core::parser::{parse_network, NetworkSource};

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "networks".into());
    let levels: u32 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let names = [
        "w1", "w2", "w3", "w4", "w5", "w6", "nw1", "nw2", "nw3", "nw4", "nw5", "nw6",
        "nw7", "nw8", "nw9", "nw10", "nw11", "nw12", "ex28", "mm",
    ];
    for name in names {
        let path = format!("{dir}/{name}.crn");
        let text = std::fs::read_to_string(&path).unwrap();
        let net = parse_network(&NetworkSource::new(text, path)).unwrap();
        let t0 = std::time::Instant::now();
        let opts = ClassifyOptions { levels, ..Default::default() };
        match classify(&net, &opts) {
            Ok(r) => println!(
                "{name:6} -> {:?} {:?} q={:?} def={} in {:?}  caveats={}",
                r.verdict,
                r.certainty,
                r.q,
                r.deficiency,
                t0.elapsed(),
                r.caveats.len(),
            ),
            Err(e) => println!("{name:6} -> ERROR {e}"),
        }
    }
}
