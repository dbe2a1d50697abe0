//! One line per acceptance criterion. Set `KWLAB_ONLY=3,5` to run a subset.

use kwlab::selftest::{run_check, CHECKS};

fn main() {
    let only: Option<Vec<u32>> =
        std::env::var("KWLAB_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, _, _) in CHECKS {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let c = run_check(id).expect("known id");
        println!(
            "[{}] criterion {:2} {}: {} ({} ms)",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            c.detail,
            c.millis
        );
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
