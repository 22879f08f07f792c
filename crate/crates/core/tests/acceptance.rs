//! One line per acceptance criterion; exits nonzero if any fails.

use steerlab::verify::{run_criterion, CRITERIA};

fn main() {
    let seed = 0;
    let mut failed = Vec::new();
    for id in CRITERIA {
        let r = run_criterion(id, seed).expect("known criterion");
        println!("criterion {r}");
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.count());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
