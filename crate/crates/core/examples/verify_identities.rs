//! Closed forms checked against truncated series and adaptive quadrature.
//!
//! `cargo run --example verify_identities`

use branchdecay::analytic::{ErlangSpec, RateParams};
use branchdecay::oracle::{
    run_suite, survival_double_series, verify_pdf_normalization, verify_tau_series, Lattice,
    QUADRATURE_TOLERANCE, SERIES_TOLERANCE,
};

fn main() -> branchdecay::Result<()> {
    let tau = verify_tau_series(RateParams::new(1.0, 0.9)?, SERIES_TOLERANCE)?;
    println!("tau_A series at eps = 0.9: {} terms, error {:.2e}", tau.terms_used, tau.max_abs_error);

    let norm = verify_pdf_normalization(ErlangSpec::new(50, 1.0)?, QUADRATURE_TOLERANCE)?;
    println!("Erlang(50) density integrates to 1 within {:.2e}", norm.max_abs_error);

    let sums = survival_double_series(0.5, 3.0, 200);
    println!(
        "S_A double series at u = 3: rows {:.15}, columns {:.15}, exp(-1.5) {:.15}",
        sums.row_order,
        sums.column_order,
        (-1.5f64).exp()
    );

    let suite = run_suite(&Lattice::default(), SERIES_TOLERANCE, QUADRATURE_TOLERANCE)?;
    let worst = suite.reports.iter().max_by(|a, b| a.max_abs_error.total_cmp(&b.max_abs_error)).unwrap();
    println!(
        "full lattice: {} checks, all pass = {}, largest error {:.2e} ({})",
        suite.reports.len(),
        suite.all_pass(),
        worst.max_abs_error,
        worst.identity_name.as_str()
    );
    println!("{}", worst.to_json());
    Ok(())
}
