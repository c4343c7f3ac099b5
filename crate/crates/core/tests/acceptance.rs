//! One line per acceptance criterion. Pass criterion numbers to run a subset.

use sleepy::suite::Suite;

fn main() {
    let ids: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids = if ids.is_empty() { (1..=12).collect() } else { ids };
    let mut suite = Suite::new();
    let mut failed = 0;
    for id in ids {
        let o = suite.run(id);
        println!("{}", o.line());
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
