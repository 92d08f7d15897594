//! Print the commutator relation table at a given rank.
//!
//! `cargo run --release --example relation_table -- 3`

use formring::relations::{default_sample_rings, derive_relation_table};

fn main() {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let t = derive_relation_table(n, &default_sample_rings(), 40, 7);
    for r in &t.relations {
        let rhs: Vec<String> = r.rhs.iter().map(|l| format!("{}({})", l.shape, l.display)).collect();
        println!("{:<28} {:<10} {}", r.pattern.to_string(), format!("{:?}", r.status), rhs.join(" "));
    }
    println!("{:?}", t.summary());
}
