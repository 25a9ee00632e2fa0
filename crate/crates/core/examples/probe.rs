use prodform_core::kernel::{kernel_vector, master_matrix_on};
use prodform_core::parser::{parse_network, NetworkSource};
use prodform_core::state::analyze_level;

fn main() {
    let name = std::env::args().nth(1).unwrap();
    let level: u32 = std::env::args().nth(2).unwrap().parse().unwrap();
    let text = std::fs::read_to_string(format!("networks/{name}.crn")).unwrap();
    let net = parse_network(&NetworkSource::inline(text)).unwrap();
    let a = analyze_level(&net, level).unwrap();
    let m = master_matrix_on(&net, Some(level), &a.states, &a.transitions);
    let t0 = std::time::Instant::now();
    let k = kernel_vector(&m, a.is_single_component).unwrap();
    println!(
        "{name} L{level}: m={} kernel in {:?}, degree {}, terms {:?}",
        m.dim(),
        t0.elapsed(),
        k.degree,
        k.entries.iter().map(|e| e.num_terms()).collect::<Vec<_>>()
    );
}
