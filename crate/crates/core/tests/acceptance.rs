//! End-to-end acceptance run: executes the full certification suite and
//! prints one pass/fail line per criterion (`--nocapture` shows them).

use kinetic_spectral::verify::{run_acceptance, AcceptanceConfig};

#[test]
fn acceptance_suite_passes() {
    let cache_dir = std::env::temp_dir().join("kinetic-spectral-acceptance-cache");
    let cfg = AcceptanceConfig {
        cache_dir: Some(cache_dir),
        tol: 1e-10,
    };
    let outcomes = run_acceptance(&cfg).expect("suite must run to completion");

    for outcome in &outcomes {
        println!("{}", outcome.display_line());
    }

    assert_eq!(outcomes.len(), 12);
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.display_line())
        .collect();
    assert!(
        failed.is_empty(),
        "{} criteria failed:\n{}",
        failed.len(),
        failed.join("\n")
    );
}
