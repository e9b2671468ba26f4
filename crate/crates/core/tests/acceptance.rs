//! Acceptance suite: one line per criterion. Runs without the libtest
//! harness so the report is always printed; fails if the set of failing
//! criteria differs from the documented one.

use std::collections::BTreeSet;
use std::time::Instant;

use tateforge::acceptance::{run, KNOWN_FAILURES};

fn main() {
    let start = Instant::now();
    let outcomes = run(&[]);
    for o in &outcomes {
        println!("{} [{:.1}s]", o.line(), o.seconds);
    }
    assert_eq!(outcomes.len(), 14);
    let failed: BTreeSet<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let known: BTreeSet<u32> = KNOWN_FAILURES.into_iter().collect();
    println!(
        "{} of 14 passed in {:.1}s; failing {:?}, known {:?}",
        14 - failed.len(),
        start.elapsed().as_secs_f64(),
        failed,
        known
    );
    if failed != known {
        eprintln!("failing set differs from the known failures");
        std::process::exit(1);
    }
}
