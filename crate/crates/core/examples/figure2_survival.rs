//! Per-branch survival curves S_1..S_5 against t/W, as printed by
//! `branchdecay figure2`.
//!
//! `cargo run --example figure2_survival`

use branchdecay::cli::figure2_rows;

fn main() -> branchdecay::Result<()> {
    let rows = figure2_rows(1.0, 6.0, 13)?;
    println!("{:>6} {:>9} {:>9} {:>9} {:>9} {:>9}", "t/W", "S1", "S2", "S3", "S4", "S5");
    for row in rows {
        println!(
            "{:>6.2} {:>9.6} {:>9.6} {:>9.6} {:>9.6} {:>9.6}",
            row[0], row[1], row[2], row[3], row[4], row[5]
        );
    }
    Ok(())
}
